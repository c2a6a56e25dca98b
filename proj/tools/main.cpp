#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qng/bounds.hpp"
#include "qng/errors.hpp"
#include "qng/fock_oracle.hpp"
#include "qng/gaussian_model.hpp"
#include "qng/rng.hpp"
#include "qng/source_sim.hpp"
#include "qng/stats.hpp"
#include "qng/timetag.hpp"
#include "qng/tolerances.hpp"
#include "qng/version.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;  // analysis or verification failure
constexpr int kExitInput = 2;    // bad input, format or configuration

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw qng::IoError("cannot open " + path + " for writing");
    return f;
}

void write_provenance(std::ostream& out, const std::string& config,
                      std::uint64_t seed) {
    out << "# qng " << QNG_VERSION_STRING << " config=" << std::hex
        << fnv1a(config) << std::dec << " seed=" << seed << "\n";
}

// ---------------------------------------------------------------- scan

struct ScanGrid {
    double alpha_max = 1.0;
    int alpha_points = 1000;
    double r_max = 1.0;
    int r_points = 501;
    double theta_max = 3.14159265358979323846;
    int theta_points = 21;
};

void run_scan_correlations(const ScanGrid& g, const std::string& out_path) {
    auto out = open_out(out_path);
    std::ostringstream cfg;
    cfg << "scan correlations " << g.alpha_max << ' ' << g.alpha_points << ' '
        << g.r_max << ' ' << g.r_points << ' ' << g.theta_max << ' ' << g.theta_points;
    write_provenance(out, cfg.str(), 0);
    out << "alpha,r,theta,g1,g2,g3\n";
    out.precision(17);
    for (int ia = 1; ia <= g.alpha_points; ++ia) {
        const double alpha = g.alpha_max * ia / g.alpha_points;
        for (int ir = 0; ir < g.r_points; ++ir) {
            const double r = g.r_points > 1 ? g.r_max * ir / (g.r_points - 1) : 0.0;
            for (int it = 0; it < g.theta_points; ++it) {
                const double th =
                    g.theta_points > 1 ? g.theta_max * it / (g.theta_points - 1) : 0.0;
                const auto m = qng::moments(qng::GaussianParams(alpha, r, th));
                const auto c = qng::correlations(m);
                out << alpha << ',' << r << ',' << th << ',' << m.g1 << ',' << c.g2
                    << ',' << c.g3 << '\n';
            }
        }
    }
}

void run_scan_boundary(const std::string& out_path) {
    auto out = open_out(out_path);
    write_provenance(out, "scan boundary", 0);
    out << "g2,g3_lower,g3_upper,tan_chi2_1,tan_chi2_3,tan_chi2_9,tan_chi2_28\n";
    out.precision(17);
    const auto lines = qng::linear_bounds_check({0.0, 0.0, {}, {}});
    for (int i = 0; i <= 1000; ++i) {
        const double g2 = i / 1000.0;
        out << g2 << ',' << qng::lower_boundary_g3(g2) << ','
            << qng::upper_boundary_g3(g2);
        for (const auto& l : lines) out << ',' << (l.chi1 - l.chi2 * g2);
        out << '\n';
    }
}

void run_scan_photon_number(const ScanGrid& g, const std::string& out_path) {
    auto out = open_out(out_path);
    std::ostringstream cfg;
    cfg << "scan photon-number " << g.alpha_max << ' ' << g.alpha_points << ' '
        << g.r_max << ' ' << g.r_points << ' ' << g.theta_max << ' ' << g.theta_points;
    write_provenance(out, cfg.str(), 0);
    out << "alpha,r,theta,g1,g2u\n";
    out.precision(17);
    for (int ia = 1; ia <= g.alpha_points; ++ia) {
        const double alpha = g.alpha_max * ia / g.alpha_points;
        for (int ir = 0; ir < g.r_points; ++ir) {
            const double r = g.r_points > 1 ? g.r_max * ir / (g.r_points - 1) : 0.0;
            for (int it = 0; it < g.theta_points; ++it) {
                const double th =
                    g.theta_points > 1 ? g.theta_max * it / (g.theta_points - 1) : 0.0;
                const auto m = qng::moments(qng::GaussianParams(alpha, r, th));
                out << alpha << ',' << r << ',' << th << ',' << m.g1 << ',' << m.g2u
                    << '\n';
            }
        }
    }
}

void run_scan_minimum_curve(double n_max, const std::string& out_path) {
    auto out = open_out(out_path);
    write_provenance(out, "scan minimum curve", 0);
    out << "n,g2u_min,g2_min\n";
    out.precision(17);
    for (int i = 1; i <= 2000; ++i) {
        const double n = n_max * i / 2000.0;
        const double gmin = qng::g2u_min_gaussian(n);
        out << n << ',' << gmin << ',' << gmin / (n * n) << '\n';
    }
}

// ---------------------------------------------------------------- verify

struct GroupResult {
    std::string name;
    bool pass;
    double max_dev;
    std::string note;
};

double rel_dev(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

GroupResult verify_wick(bool full, bool inject_g3_sign, std::optional<int> force_dim) {
    GroupResult g{"wick_oracle", true, 0.0, ""};
    const int astep = full ? 1 : 25;
    const int rstep = full ? 1 : 10;
    const int tstep = full ? 1 : 2;
    for (int ia = astep; ia <= 1000; ia += astep) {
        const double alpha = ia / 1000.0;
        for (int ir = 0; ir < 501; ir += rstep) {
            const double r = ir / 500.0;
            for (int it = 0; it < 21; it += tstep) {
                const double th = 3.14159265358979323846 * it / 20.0;
                const qng::GaussianParams p(alpha, r, th);
                auto closed = qng::moments(p);
                if (inject_g3_sign) closed.g3u = -closed.g3u;
                const auto state = force_dim
                                       ? qng::build_displaced_squeezed(p, *force_dim)
                                       : qng::build_displaced_squeezed(p);
                const auto oracle = qng::oracle_moments(state);
                g.max_dev = std::max({g.max_dev, rel_dev(closed.g1, oracle.g1),
                                      rel_dev(closed.g2u, oracle.g2u),
                                      rel_dev(closed.g3u, oracle.g3u)});
            }
        }
    }
    g.pass = g.max_dev < qng::kRelTol;
    return g;
}

GroupResult verify_containment() {
    GroupResult g{"boundary_containment", true, 0.0, ""};
    double worst = 0.0;
    for (int ia = 1; ia <= 1000; ++ia) {
        const double alpha = ia / 1000.0;
        for (int ir = 0; ir < 501; ++ir) {
            const double r = ir / 500.0;
            for (int it = 0; it < 21; ++it) {
                const double th = 3.14159265358979323846 * it / 20.0;
                const auto c = qng::correlations(qng::moments(qng::GaussianParams(alpha, r, th)));
                const double below = qng::lower_boundary_g3(c.g2) - c.g3;
                const double above = c.g3 - qng::upper_boundary_g3(c.g2);
                worst = std::max({worst, below, above});
            }
        }
    }
    g.max_dev = worst;
    g.pass = worst <= qng::kAbsTol;
    return g;
}

GroupResult verify_theta_minimum() {
    GroupResult g{"theta_minimum", true, 0.0, ""};
    const double chis[] = {-3.0, -1.0, 0.0, 5.0, 50.0};
    for (double alpha : {0.1, 0.4, 0.9, 1.5})
        for (double r : {0.02, 0.3, 0.8})
            for (double chi2 : chis) {
                const auto at = [&](double th) {
                    const auto m = qng::moments(qng::GaussianParams(alpha, r, th));
                    return m.g3u + chi2 * m.g2u * m.g1;
                };
                const double f0 = at(0.0);
                for (int i = 0; i < 64; ++i) {
                    const double th = 6.28318530717958647692 * i / 64.0;
                    const double viol = f0 - at(th);
                    g.max_dev = std::max(g.max_dev, viol);
                }
            }
    g.pass = g.max_dev <= 1e-10;
    return g;
}

GroupResult verify_phase_reduction() {
    GroupResult g{"phase_reduction", true, 0.0, ""};
    std::uint64_t s = 12345;
    for (int i = 0; i < 200; ++i) {
        auto u = [&] { return (double)(qng::splitmix64_step(s) >> 11) * 0x1.0p-53; };
        const double alpha = 2.0 * u(), r = 1.5 * u();
        const double th = 6.28318530717958647692 * u(), phi = 6.28318530717958647692 * u();
        const auto a = qng::moments(qng::GaussianParams(alpha, r, th, phi));
        const auto b = qng::moments(qng::GaussianParams(alpha, r, th - 2.0 * phi, 0.0));
        if (a.g1 != b.g1 || a.g2u != b.g2u || a.g3u != b.g3u) {
            g.pass = false;
            g.max_dev = std::max(
                {g.max_dev, rel_dev(a.g1, b.g1), rel_dev(a.g2u, b.g2u), rel_dev(a.g3u, b.g3u)});
        }
    }
    return g;
}

GroupResult verify_multimode() {
    GroupResult g{"multimode_composition", true, 0.0, ""};
    std::uint64_t s = 777;
    for (int trial = 0; trial < 40; ++trial) {
        auto u = [&] { return (double)(qng::splitmix64_step(s) >> 11) * 0x1.0p-53; };
        const int modes = 2 + (trial % 2);
        std::vector<qng::FockVector> states;
        std::vector<qng::MomentTriple> per_mode;
        for (int m = 0; m < modes; ++m) {
            const qng::GaussianParams p(0.8 * u(), 0.6 * u(), 6.28 * u());
            states.push_back(qng::build_displaced_squeezed(p));
            per_mode.push_back(qng::oracle_moments(states.back()));
        }
        const auto closed = qng::multimode_moments(per_mode);
        const auto oracle = qng::oracle_multimode_moments(states);
        g.max_dev = std::max({g.max_dev, rel_dev(closed.g1, oracle.g1),
                              rel_dev(closed.g2u, oracle.g2u),
                              rel_dev(closed.g3u, oracle.g3u)});
    }
    g.pass = g.max_dev < 1e-9;
    return g;
}

GroupResult verify_mixture_linearity() {
    GroupResult g{"mixture_linearity", true, 0.0, ""};
    const qng::GaussianParams pa(0.2, 0.01), pb(0.7, 0.3, 1.1), pc(0.05, 0.6, 2.2);
    // mixture of mixtures, flattened
    qng::MixtureSpec inner{{{0.5, pa}, {0.5, pb}}};
    const auto m_inner = qng::mixture_moments(inner);
    qng::MixtureSpec outer_flat{{{0.3, pa}, {0.3, pb}, {0.4, pc}}};
    const auto flat = qng::mixture_moments(outer_flat);
    qng::MomentTriple nested;
    {
        const auto mc = qng::moments(pc);
        nested.g1 = 0.6 * m_inner.g1 + 0.4 * mc.g1;
        nested.g2u = 0.6 * m_inner.g2u + 0.4 * mc.g2u;
        nested.g3u = 0.6 * m_inner.g3u + 0.4 * mc.g3u;
    }
    g.max_dev = std::max({rel_dev(nested.g1, flat.g1), rel_dev(nested.g2u, flat.g2u),
                          rel_dev(nested.g3u, flat.g3u)});
    g.pass = g.max_dev <= 1e-14;
    return g;
}

GroupResult verify_taylor() {
    GroupResult g{"taylor_consistency", true, 0.0, ""};
    // frozen stability constant for |expansion - exact| <= C r^3 / alpha^6
    const double kC = 25.0;
    for (double alpha = 0.2; alpha <= 1.51; alpha += 0.05)
        for (double r = 0.001; r <= 0.0101; r += 0.001) {
            const auto t = qng::taylor_g2_g3(alpha, r);
            const auto c = qng::correlations(qng::moments(qng::GaussianParams(alpha, r)));
            const double bound = kC * r * r * r / std::pow(alpha, 6.0);
            const double dev =
                std::max(std::abs(t.g2_2nd - c.g2), std::abs(t.g3_2nd - c.g3)) / bound;
            g.max_dev = std::max(g.max_dev, dev);
        }
    g.pass = g.max_dev <= 1.0;
    return g;
}

GroupResult verify_tangency() {
    GroupResult g{"tangent_family", true, 0.0, ""};
    for (int i = 1; i <= 40; ++i) {
        const double u0 = std::min(4.0 / 9.0, (4.0 / 9.0) * i / 40.0);
        const auto tl = qng::tangent_at(u0);
        double min_gap = 1e300, argmin = 0.0;
        for (int k = 0; k <= 44444; ++k) {
            const double u = (4.0 / 9.0) * k / 44444.0;
            const double gap = qng::lower_boundary_g3(u) - tl.value_at(u);
            if (gap < min_gap) {
                min_gap = gap;
                argmin = u;
            }
        }
        const double gap_at_touch = qng::lower_boundary_g3(u0) - tl.value_at(u0);
        min_gap = std::min(min_gap, gap_at_touch);
        if (min_gap < -1e-12 || std::abs(gap_at_touch) > 1e-12 ||
            std::abs(argmin - u0) > 2e-5)
            g.pass = false;
        g.max_dev = std::max(g.max_dev, std::abs(gap_at_touch));
    }
    return g;
}

GroupResult verify_quartic() {
    GroupResult g{"quartic_residual", true, 0.0, ""};
    for (int i = 0; i <= 1000; ++i) {
        const double n = i / 10.0;
        const double x = qng::quartic_x(n);
        const double resid = std::abs(1.0 + x * x * x * x - (4.0 * n + 2.0) * x);
        g.max_dev = std::max(g.max_dev, resid);
    }
    g.pass = g.max_dev < 1e-10;
    return g;
}

GroupResult verify_g2min_envelope() {
    GroupResult g{"g2min_envelope", true, 0.0, ""};
    for (int ia = 0; ia <= 60; ++ia)
        for (int ir = 1; ir <= 60; ++ir) {
            const double a2 = 4.0 * ia / 60.0;
            const double r = 1.5 * ir / 60.0;
            const qng::GaussianParams p(std::sqrt(a2), r);
            const auto m = qng::moments(p);
            const double floor_val = qng::g2u_min_gaussian(m.g1);
            const double viol = floor_val - m.g2u;  // must be <= 0
            g.max_dev = std::max(g.max_dev, viol);
        }
    g.pass = g.max_dev <= 1e-9;
    return g;
}

GroupResult verify_polynomial() {
    GroupResult g{"pure_state_polynomial", true, 0.0, ""};
    double min_val = 1e300;
    for (int ia = 0; ia < 200; ++ia)
        for (int ir = 1; ir <= 200; ++ir) {
            const double alpha = 3.0 * ia / 199.0;
            const double r = 3.0 * ir / 200.0;
            min_val = std::min(min_val, qng::pure_state_polynomial(alpha, r));
        }
    g.max_dev = min_val < 0.0 ? -min_val : 0.0;
    g.pass = min_val >= 0.0;
    return g;
}

GroupResult verify_g2min_convexity() {
    GroupResult g{"g2min_convexity", true, 0.0, ""};
    const double h = 0.05;
    for (double n = h; n <= 20.0; n += h) {
        const double second = qng::g2u_min_gaussian(n + h) - 2.0 * qng::g2u_min_gaussian(n) +
                              qng::g2u_min_gaussian(n - h >= 0.0 ? n - h : 0.0);
        g.max_dev = std::max(g.max_dev, -second);
    }
    g.pass = g.max_dev <= 1e-9;
    return g;
}

int run_verify(bool full, bool inject_g3_sign, std::optional<int> force_dim,
               const std::string& format) {
    std::vector<GroupResult> results;
    results.push_back(verify_wick(full, inject_g3_sign, force_dim));
    results.push_back(verify_containment());
    results.push_back(verify_theta_minimum());
    results.push_back(verify_phase_reduction());
    results.push_back(verify_multimode());
    results.push_back(verify_mixture_linearity());
    results.push_back(verify_taylor());
    results.push_back(verify_tangency());
    results.push_back(verify_quartic());
    results.push_back(verify_g2min_envelope());
    results.push_back(verify_polynomial());
    results.push_back(verify_g2min_convexity());

    bool all = true;
    if (format == "json") {
        json j = json::array();
        for (const auto& r : results) {
            j.push_back({{"group", r.name}, {"pass", r.pass}, {"max_dev", r.max_dev}});
            all = all && r.pass;
        }
        std::cout << json{{"pass", all}, {"groups", j}}.dump(2) << "\n";
    } else {
        for (const auto& r : results) {
            std::cout << (r.pass ? "PASS " : "FAIL ") << r.name
                      << "  max_dev=" << r.max_dev << "\n";
            all = all && r.pass;
        }
        std::cout << (all ? "verify: all groups passed\n" : "verify: FAILURES above\n");
    }
    return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------- analyze

qng::ClickStream load_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw qng::IoError("cannot open " + path);
    char magic[6] = {};
    in.read(magic, 6);
    in.clear();
    in.seekg(0);
    const bool is_gqtt = std::string_view(magic, 6) == "GQTT01";
    return qng::parse_stream(in, is_gqtt ? qng::StreamFormat::binary
                                         : qng::StreamFormat::csv);
}

json analysis_summary(const qng::CoincidenceSet& cs, const qng::AnalysisConfig& cfg) {
    const auto g2 = qng::estimate_g2(cs, cfg);
    const auto g3 = qng::estimate_g3(cs, cfg);
    qng::CorrelationPoint c{g2.value, g3.value, g2.sigma, g3.sigma};
    const auto verdict = qng::criterion(c);

    json j;
    j["g2"] = g2.value;
    j["g2_sigma"] = g2.sigma;
    j["g2_is_upper_limit"] = g2.is_upper_limit;
    j["g3"] = g3.value;
    j["g3_sigma_or_upper"] = g3.sigma;
    j["is_upper_limit"] = g3.is_upper_limit;
    j["criterion_value"] = verdict.criterion_value;
    j["non_gaussian"] = verdict.non_gaussian;
    if (verdict.sigma_distance) j["sigma_distance"] = *verdict.sigma_distance;
    j["n_shots"] = cs.n_shots();
    j["singles"] = cs.singles;
    j["pair_hist_zero"] = cs.pair_hist.count(0) ? cs.pair_hist.at(0) : 0;
    j["triple_same"] = cs.triple_same;
    j["triple_separate"] = cs.triple_separate;
    j["triple_separate_raw"] = cs.triple_separate_raw;
    json patterns;
    for (int i = 0; i < qng::kPairLagPatterns; ++i)
        patterns[qng::pairlag_pattern_name(i)] = cs.triple_pairlag[i];
    j["triple_pairlag"] = patterns;
    return j;
}

// ---------------------------------------------------------------- config file

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qng::IoError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

void apply_source_config(const std::map<std::string, std::string>& kv,
                         qng::SourceConfig& cfg, CLI::App* cmd) {
    auto not_set = [&](const std::string& flag) {
        const auto* opt = cmd->get_option_no_throw("--" + flag);
        return opt == nullptr || opt->count() == 0;
    };
    for (const auto& [key, val] : kv) {
        try {
            if (key == "n_pulses" && not_set("n-pulses"))
                cfg.n_pulses = std::stoull(val);
            else if (key == "period_ps" && not_set("period-ps"))
                cfg.period_ps = std::stoll(val);
            else if (key == "emit_prob" && not_set("emit-prob"))
                cfg.emit_prob = std::stod(val);
            else if (key == "two_photon_prob" && not_set("two-photon-prob"))
                cfg.two_photon_prob = std::stod(val);
            else if (key == "three_photon_prob" && not_set("three-photon-prob"))
                cfg.three_photon_prob = std::stod(val);
            else if (key == "lifetime_ps" && not_set("lifetime-ps"))
                cfg.lifetime_ps = std::stod(val);
            else if (key == "leak_prob" && not_set("leak-prob"))
                cfg.leak_prob = std::stod(val);
            else if (key == "leak_width_ps" && not_set("leak-width-ps"))
                cfg.leak_width_ps = std::stod(val);
            else if (key == "jitter_ps" && not_set("jitter-ps"))
                cfg.jitter_ps = std::stod(val);
            else if (key == "seed" && not_set("seed"))
                cfg.seed = std::stoull(val);
            else if (key == "split" && not_set("split")) {
                std::istringstream ss(val);
                std::string tok;
                for (int i = 0; i < 3 && std::getline(ss, tok, ','); ++i)
                    cfg.split[i] = std::stod(tok);
            } else if (key != "n_pulses" && key != "period_ps" && key != "emit_prob" &&
                       key != "two_photon_prob" && key != "three_photon_prob" &&
                       key != "lifetime_ps" && key != "leak_prob" &&
                       key != "leak_width_ps" && key != "jitter_ps" && key != "seed" &&
                       key != "split")
                throw qng::ConfigError("unknown config key: " + key);
        } catch (const std::invalid_argument&) {
            throw qng::ConfigError("bad value for config key " + key + ": " + val);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photon-correlation non-Gaussianity toolkit"};
    app.set_version_flag("--version", QNG_VERSION_STRING);
    app.require_subcommand(1);

    // scan
    auto* scan = app.add_subcommand("scan", "tabulate correlation scans and boundary curves");
    ScanGrid grid;
    std::string scan_kind = "correlations";
    std::string scan_out = "scan.csv";
    double scan_nmax = 10.0;
    scan->add_option("--kind", scan_kind, "correlations|photon-number")
        ->check(CLI::IsMember({"correlations", "photon-number"}));
    scan->add_option("--alpha-max", grid.alpha_max);
    scan->add_option("--alpha-points", grid.alpha_points)->check(CLI::PositiveNumber);
    scan->add_option("--r-max", grid.r_max);
    scan->add_option("--r-points", grid.r_points)->check(CLI::PositiveNumber);
    scan->add_option("--theta-max", grid.theta_max);
    scan->add_option("--theta-points", grid.theta_points)->check(CLI::PositiveNumber);
    scan->add_option("--n-max", scan_nmax, "mean photon range of the minimum curve");
    scan->add_option("--out", scan_out, "output CSV path");

    // verify
    auto* verify = app.add_subcommand("verify", "closed forms against the Fock oracle and property groups");
    bool verify_full = false, inject_g3 = false;
    std::optional<int> force_dim;
    std::string verify_format = "text";
    verify->add_flag("--full", verify_full, "full scatter grid instead of the strided sample");
    verify->add_flag("--inject-g3-sign", inject_g3,
                     "test hook: flip the closed-form G3 sign, must fail the Wick group");
    verify->add_option("--dim", force_dim, "force the oracle truncation dimension");
    verify->add_option("--format", verify_format)->check(CLI::IsMember({"text", "json"}));

    // analyze
    auto* analyze = app.add_subcommand("analyze", "extract g2/g3 and the criterion from a time-tag file");
    std::string in_path, jacobi_prefix, analyze_out;
    qng::AnalysisConfig acfg;
    bool with_pvalue = false;
    int n_chunks = 1;
    analyze->add_option("input", in_path, "GQTT or CSV time-tag file")->required();
    analyze->add_option("--period-ps", acfg.period_ps);
    analyze->add_option("--window-ps", acfg.window_ps);
    analyze->add_option("--norm-delay", acfg.norm_delay_pulses);
    analyze->add_option("--max-pulse-lag", acfg.max_pulse_lag);
    analyze->add_option("--jacobi-bin-ns", acfg.jacobi_bin_ns);
    analyze->add_option("--jacobi-out", jacobi_prefix,
                        "prefix for Jacobi and pair-histogram CSVs");
    analyze->add_option("--chunks", n_chunks, "parallel counting chunks");
    analyze->add_flag("--pvalue", with_pvalue, "add the boundary-null p-value");
    analyze->add_option("--out", analyze_out, "write the JSON summary here instead of stdout");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic click stream");
    qng::SourceConfig scfg;
    std::string sim_out = "stream.gqtt", sim_format = "gqtt", config_path;
    bool cascade = false;
    simulate->add_option("--n-pulses", scfg.n_pulses);
    simulate->add_option("--period-ps", scfg.period_ps);
    simulate->add_option("--emit-prob", scfg.emit_prob);
    simulate->add_option("--two-photon-prob", scfg.two_photon_prob);
    simulate->add_option("--three-photon-prob", scfg.three_photon_prob);
    simulate->add_option("--lifetime-ps", scfg.lifetime_ps);
    simulate->add_option("--leak-prob", scfg.leak_prob);
    simulate->add_option("--leak-width-ps", scfg.leak_width_ps);
    simulate->add_option("--jitter-ps", scfg.jitter_ps);
    simulate->add_option("--split", scfg.split, "routing probabilities, three values");
    simulate->add_flag("--cascade-split", cascade, "use the 0.5/0.25/0.25 splitter cascade");
    simulate->add_option("--seed", scfg.seed);
    simulate->add_option("--out", sim_out);
    simulate->add_option("--format", sim_format)->check(CLI::IsMember({"gqtt", "csv"}));
    simulate->add_option("--config", config_path, "key=value configuration file");

    // pvalue
    auto* pvalue = app.add_subcommand("pvalue", "Gaussian-boundary null hypothesis test");
    std::uint64_t pv_n2 = 0, pv_n3 = 0;
    double pv_n1 = 0.0, pv_nshots = 0.0;
    std::optional<double> pv_g2, pv_g3;
    std::string pv_out;
    pvalue->add_option("--n2", pv_n2, "observed 2-photon events")->required();
    pvalue->add_option("--n3", pv_n3, "observed 3-photon events")->required();
    pvalue->add_option("--n1", pv_n1, "single-photon events")->required();
    pvalue->add_option("--n-shots", pv_nshots, "excitation pulses")->required();
    pvalue->add_option("--g2", pv_g2, "evaluate p~ at this fixed g2 instead of maximizing");
    pvalue->add_option("--g3", pv_g3, "fixed g3 for the single-point evaluation");
    pvalue->add_option("--out", pv_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*scan) {
            namespace fs = std::filesystem;
            const fs::path main_path(scan_out);
            fs::path companion = main_path;
            companion.replace_filename(main_path.stem().string() +
                                       (scan_kind == "correlations" ? "_boundary" : "_minimum") +
                                       main_path.extension().string());
            if (scan_kind == "correlations") {
                run_scan_correlations(grid, main_path.string());
                run_scan_boundary(companion.string());
            } else {
                run_scan_photon_number(grid, main_path.string());
                run_scan_minimum_curve(scan_nmax, companion.string());
            }
            std::cout << json{{"rows", static_cast<long long>(grid.alpha_points) *
                                           grid.r_points * grid.theta_points},
                              {"out", main_path.string()},
                              {"companion", companion.string()}}
                             .dump()
                      << "\n";
            return kExitOk;
        }

        if (*verify) return run_verify(verify_full, inject_g3, force_dim, verify_format);

        if (*analyze) {
            acfg.validate();
            const auto stream = load_stream(in_path);
            if (stream.empty()) throw qng::NoNormalization("empty stream");
            const auto cs = n_chunks > 1
                                ? qng::count_coincidences_parallel(stream, acfg, n_chunks)
                                : qng::count_coincidences(stream, acfg);
            json j = analysis_summary(cs, acfg);

            if (with_pvalue) {
                // Effective rate coefficients from the per-channel singles:
                // lambda2 = g2 * sum_{i<j} S_i S_j / N, lambda3 = g3 * S0 S1 S2 / N^2.
                const double n = static_cast<double>(cs.n_shots());
                const double s0 = static_cast<double>(cs.singles[0]);
                const double s1 = static_cast<double>(cs.singles[1]);
                const double s2 = static_cast<double>(cs.singles[2]);
                const double n1_eff = std::sqrt(s0 * s1 + s0 * s2 + s1 * s2);
                const double n1_eff3 = std::cbrt(s0 * s1 * s2);
                const auto res = qng::max_p_over_boundary_rates(
                    cs.pair_hist.count(0) ? cs.pair_hist.at(0) : 0, cs.triple_same,
                    n1_eff * n1_eff / n, n1_eff3 * n1_eff3 * n1_eff3 / (n * n));
                j["pvalue"] = {{"log10_p", res.log10_p},
                               {"argmax_g2", res.argmax_g2},
                               {"argmax_g3", res.argmax_g3},
                               {"lambda2", res.lambdas.lambda2},
                               {"lambda3", res.lambdas.lambda3}};
            }

            if (!jacobi_prefix.empty()) {
                using qng::TripleSelection;
                const std::pair<TripleSelection, const char*> sels[] = {
                    {TripleSelection::same_pulse, "_jacobi_same.csv"},
                    {TripleSelection::pair_lag, "_jacobi_pairlag.csv"},
                    {TripleSelection::separate, "_jacobi_separate.csv"}};
                for (const auto& [sel, suffix] : sels) {
                    auto out = open_out(jacobi_prefix + suffix);
                    write_provenance(out, "jacobi", 0);
                    qng::write_histogram_csv(out, qng::jacobi_histogram(stream, acfg, sel));
                }
                auto out = open_out(jacobi_prefix + "_pair_hist.csv");
                write_provenance(out, "pair_hist", 0);
                qng::write_pair_hist_csv(out, cs);
            }

            if (analyze_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                open_out(analyze_out) << j.dump(2) << "\n";
            }
            return kExitOk;
        }

        if (*simulate) {
            if (!config_path.empty())
                apply_source_config(read_config_file(config_path), scfg, simulate);
            if (cascade) scfg.split = qng::SourceConfig::cascade_split();
            scfg.validate();

            std::array<std::uint64_t, 3> singles{};
            auto out = open_out(sim_out);
            if (sim_format == "gqtt") {
                // header first, then records as they stream out
                qng::write_gqtt(out, {});
                qng::simulate_stream(scfg, [&](const qng::ClickRecord& c) {
                    ++singles[c.channel];
                    char rec[9];
                    rec[0] = static_cast<char>(c.channel);
                    std::uint64_t t = c.t_ps;
                    for (int i = 0; i < 8; ++i) {
                        rec[1 + i] = static_cast<char>(t & 0xff);
                        t >>= 8;
                    }
                    out.write(rec, 9);
                });
            } else {
                out << "channel,t_ps\n";
                qng::simulate_stream(scfg, [&](const qng::ClickRecord& c) {
                    ++singles[c.channel];
                    out << static_cast<unsigned>(c.channel) << ',' << c.t_ps << '\n';
                });
            }
            if (!out) throw qng::IoError("failed writing " + sim_out);

            json j;
            j["out"] = sim_out;
            j["n_pulses"] = scfg.n_pulses;
            j["seed"] = scfg.seed;
            j["singles"] = singles;
            const auto im = scfg.intrinsic_moments();
            j["intrinsic_mean_photons"] = im.g1;
            if (im.g1 > 0.0) {
                const auto ic = scfg.intrinsic_correlations();
                j["intrinsic_g2"] = ic.g2;
                j["intrinsic_g3"] = ic.g3;
            }
            std::cout << j.dump(2) << "\n";
            return kExitOk;
        }

        if (*pvalue) {
            json j;
            j["inputs"] = {{"n2", pv_n2}, {"n3", pv_n3}, {"n1", pv_n1}, {"n_shots", pv_nshots}};
            if (pv_g2) {
                const double g3 = pv_g3 ? *pv_g3 : qng::lower_boundary_g3(*pv_g2);
                const auto pp = qng::expected_counts(*pv_g2, g3, pv_n1, pv_nshots);
                j["log10_p_tilde"] = qng::p_tilde_log10(pv_n2, pv_n3, pp);
                j["lambda2"] = pp.lambda2;
                j["lambda3"] = pp.lambda3;
                j["g2"] = *pv_g2;
                j["g3"] = g3;
            } else {
                const auto res = qng::max_p_over_boundary(pv_n2, pv_n3, pv_n1, pv_nshots);
                j["log10_p"] = res.log10_p;
                j["argmax_g2"] = res.argmax_g2;
                j["argmax_g3"] = res.argmax_g3;
                j["lambda2"] = res.lambdas.lambda2;
                j["lambda3"] = res.lambdas.lambda3;
            }
            if (pv_out.empty())
                std::cout << j.dump(2) << "\n";
            else
                open_out(pv_out) << j.dump(2) << "\n";
            return kExitOk;
        }
    } catch (const qng::FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::OrderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::ChannelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::TruncationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qng::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
