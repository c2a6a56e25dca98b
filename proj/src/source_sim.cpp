#include "qng/source_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qng/errors.hpp"
#include "qng/rng.hpp"

namespace qng {

void SourceConfig::validate() const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0) || !(p <= 1.0))
            throw ConfigError(std::string(what) + " must lie in [0, 1]");
    };
    prob(emit_prob, "emit_prob");
    prob(two_photon_prob, "two_photon_prob");
    prob(three_photon_prob, "three_photon_prob");
    if (!(leak_prob >= 0.0) || !std::isfinite(leak_prob))
        throw ConfigError("leak_prob must be finite and >= 0");
    if (emit_prob + two_photon_prob + three_photon_prob > 1.0)
        throw ConfigError("photon-number probabilities exceed 1");
    if (period_ps <= 0) throw ConfigError("period_ps must be positive");
    if (!(lifetime_ps > 0.0)) throw ConfigError("lifetime_ps must be positive");
    if (!(leak_width_ps >= 0.0)) throw ConfigError("leak_width_ps must be >= 0");
    if (!(jitter_ps >= 0.0)) throw ConfigError("jitter_ps must be >= 0");
    double ssum = 0.0;
    for (double s : split) {
        if (!(s >= 0.0)) throw ConfigError("split entries must be >= 0");
        ssum += s;
    }
    if (std::abs(ssum - 1.0) > 1e-12)
        throw ConfigError("split must sum to 1 within 1e-12");
}

MomentTriple SourceConfig::intrinsic_moments() const {
    const double p1 = emit_prob, p2 = two_photon_prob, p3 = three_photon_prob;
    // source photons alone
    const double g1s = p1 + 2.0 * p2 + 3.0 * p3;
    const double g2s = 2.0 * p2 + 6.0 * p3;
    const double g3s = 6.0 * p3;
    // adding the independent Poissonian leakage field (factorial moments
    // of Poisson(l) are l^k)
    const double l = leak_prob;
    return {g1s + l, g2s + 2.0 * g1s * l + l * l,
            g3s + 3.0 * g2s * l + 3.0 * g1s * l * l + l * l * l};
}

CorrelationPoint SourceConfig::intrinsic_correlations() const {
    return correlations(intrinsic_moments());
}

namespace {

constexpr std::uint64_t kThinStreamSalt = 0x7468696e6e696e67ULL;  // "thinning"

struct PendingClick {
    std::uint64_t t_ps;
    std::uint8_t channel;
    bool operator<(const PendingClick& o) const {
        return t_ps != o.t_ps ? t_ps < o.t_ps : channel < o.channel;
    }
};

}  // namespace

void simulate_stream(const SourceConfig& cfg,
                     const std::function<void(const ClickRecord&)>& sink) {
    cfg.validate();

    const double p3 = cfg.three_photon_prob;
    const double p23 = p3 + cfg.two_photon_prob;
    const double p123 = p23 + cfg.emit_prob;
    const double period = static_cast<double>(cfg.period_ps);

    constexpr std::uint64_t kBlock = 1 << 18;
    std::vector<PendingClick> pool;

    for (std::uint64_t k0 = 0; k0 < cfg.n_pulses; k0 += kBlock) {
        const std::uint64_t k1 = std::min(cfg.n_pulses, k0 + kBlock);
        for (std::uint64_t k = k0; k < k1; ++k) {
            SubstreamRng rng(cfg.seed, k);

            int n_source = 0;
            const double u = rng.uniform();
            if (u < p3)
                n_source = 3;
            else if (u < p23)
                n_source = 2;
            else if (u < p123)
                n_source = 1;

            // leakage photon count is Poissonian (Knuth product draw)
            int n_leak = 0;
            if (cfg.leak_prob > 0.0) {
                const double limit = std::exp(-cfg.leak_prob);
                double prod = rng.uniform();
                while (prod > limit) {
                    ++n_leak;
                    prod *= rng.uniform();
                }
            }

            // earliest click per detector in this pulse
            double best[3];
            bool hit[3] = {false, false, false};
            auto detect = [&](double offset) {
                const double v = rng.uniform();
                const int d = v < cfg.split[0] ? 0 : (v < cfg.split[0] + cfg.split[1] ? 1 : 2);
                if (cfg.jitter_ps > 0.0) offset += rng.gauss() * cfg.jitter_ps;
                if (!hit[d] || offset < best[d]) {
                    best[d] = offset;
                    hit[d] = true;
                }
            };
            for (int i = 0; i < n_source; ++i) detect(rng.exponential(cfg.lifetime_ps));
            for (int i = 0; i < n_leak; ++i) detect(rng.gauss() * cfg.leak_width_ps);

            const double center = static_cast<double>(k + 1) * period;
            for (int d = 0; d < 3; ++d) {
                if (!hit[d]) continue;
                const double t = center + best[d];
                pool.push_back({t <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(t)),
                                static_cast<std::uint8_t>(d)});
            }
        }

        // Flush everything that can no longer be preceded: future pulses
        // start at (k1 + 1) * period and offsets reach at most one period
        // into the past.
        const std::uint64_t safe =
            k1 < cfg.n_pulses ? k1 * static_cast<std::uint64_t>(cfg.period_ps) : ~0ULL;
        std::sort(pool.begin(), pool.end());
        std::size_t keep = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool[i].t_ps >= safe) {
                keep = i;
                break;
            }
        for (std::size_t i = 0; i < keep; ++i) sink({pool[i].channel, pool[i].t_ps});
        pool.erase(pool.begin(), pool.begin() + keep);
    }

    std::sort(pool.begin(), pool.end());
    for (const auto& c : pool) sink({c.channel, c.t_ps});
}

ClickStream simulate(const SourceConfig& cfg) {
    ClickStream out;
    simulate_stream(cfg, [&](const ClickRecord& c) { out.push_back(c); });
    return out;
}

ClickStream leakage_scenario(const SourceConfig& cfg) {
    if (!(cfg.leak_prob > 0.0))
        throw ConfigError("leakage_scenario: requires leak_prob > 0");
    return simulate(cfg);
}

ClickStream thin_stream(const ClickStream& stream, double eta, std::uint64_t seed) {
    if (!(eta >= 0.0) || !(eta <= 1.0))
        throw ConfigError("thin_stream: eta must lie in [0, 1]");
    ClickStream out;
    SubstreamRng rng(seed, kThinStreamSalt);
    for (const auto& c : stream)
        if (rng.uniform() < eta) out.push_back(c);
    return out;
}

}  // namespace qng
