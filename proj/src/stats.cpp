#include "qng/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "qng/bounds.hpp"
#include "qng/errors.hpp"

namespace qng {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLn10 = 2.302585092994045684017991;

// Streaming log-sum-exp accumulator.
class LogSum {
public:
    void add(double t) {
        if (t == kNegInf) return;
        if (max_ == kNegInf) {
            max_ = t;
            sum_ = 1.0;
        } else if (t <= max_) {
            sum_ += std::exp(t - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - t) + 1.0;
            max_ = t;
        }
    }
    bool empty() const { return max_ == kNegInf; }
    double log() const { return empty() ? kNegInf : max_ + std::log(sum_); }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
};

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    if (a < b) std::swap(a, b);
    return a + std::log1p(std::exp(b - a));
}

// lgamma(n + 1) cache so repeated boundary evaluations share the work.
class LgammaCache {
public:
    double get(std::uint64_t n) {
        while (table_.size() <= n)
            table_.push_back(std::lgamma(static_cast<double>(table_.size()) + 1.0));
        return table_[n];
    }

private:
    std::vector<double> table_;
};

// Must match log_poisson_pmf bit for bit; the tie comparison against the
// observed log-probability relies on identical rounding.
inline double lp_term(double n, double ln_lambda, double lambda, double lgam_np1) {
    return n * ln_lambda - lambda - lgam_np1;
}

void check_lambda(double lambda, const char* what) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw DomainError(std::string(what) + " must be finite and >= 0");
}

double p_tilde_log10_impl(std::uint64_t n2m, std::uint64_t n3m, const PoissonPair& pp,
                          LgammaCache& lg) {
    check_lambda(pp.lambda2, "lambda2");
    check_lambda(pp.lambda3, "lambda3");
    const double l2 = pp.lambda2;
    const double l3 = pp.lambda3;
    const double ln_l2 = l2 > 0.0 ? std::log(l2) : 0.0;
    const double ln_l3 = l3 > 0.0 ? std::log(l3) : 0.0;

    auto lp2_of = [&](std::uint64_t n) {
        if (l2 == 0.0) return n == 0 ? 0.0 : kNegInf;
        return lp_term(static_cast<double>(n), ln_l2, l2, lg.get(n));
    };
    auto lp3_of = [&](std::uint64_t n) {
        if (l3 == 0.0) return n == 0 ? 0.0 : kNegInf;
        return lp_term(static_cast<double>(n), ln_l3, l3, lg.get(n));
    };

    const double t_obs = lp2_of(n2m) + lp3_of(n3m);
    if (t_obs == kNegInf) return kNegInf;  // impossible observation, empty region

    const std::uint64_t mode2 = l2 > 0.0 ? static_cast<std::uint64_t>(l2) : 0;
    const std::uint64_t mode3 = l3 > 0.0 ? static_cast<std::uint64_t>(l3) : 0;
    const double lp2_max = lp2_of(mode2);
    const double theta_min = t_obs - lp2_max;  // lowest n3 threshold ever used

    // n3 table: log pmf values out to where they can neither enter an
    // exclusion interval nor matter for tail masses (150 nats of margin).
    std::vector<double> lp3v;
    lp3v.reserve(mode3 + 64);
    for (std::uint64_t n = 0;; ++n) {
        lp3v.push_back(lp3_of(n));
        if (n > mode3 && (lp3v.back() < theta_min - 150.0 || lp3v.back() == kNegInf))
            break;
        if (l3 == 0.0) break;
    }
    const std::uint64_t b_end = lp3v.size() - 1;

    // Geometric closure of the neglected upper tail beyond the table.
    double remainder = kNegInf;
    if (l3 > 0.0 && lp3v[b_end] != kNegInf) {
        const double q = l3 / static_cast<double>(b_end + 1);
        if (q < 1.0) remainder = lp3v[b_end] + std::log(q / (1.0 - q));
    }

    std::vector<double> prefix(lp3v.size()), suffix(lp3v.size());
    {
        LogSum acc;
        for (std::size_t i = 0; i < lp3v.size(); ++i) {
            acc.add(lp3v[i]);
            prefix[i] = acc.log();
        }
        double tail = remainder;
        for (std::size_t i = lp3v.size(); i-- > 0;) {
            tail = log_add(tail, lp3v[i]);
            suffix[i] = tail;
        }
    }
    const double full_mass = log_add(prefix[b_end], remainder);

    LogSum total;

    // One outward pass per direction. The exclusion interval [a, b] is the
    // contiguous n3 range with log P >= observed; it only shrinks as lp2
    // drops, so two pointers carry it along.
    auto run_direction = [&](std::uint64_t start, std::int64_t step) {
        std::int64_t a = 0, b = -1;
        bool first = true;
        std::uint64_t n2 = start;
        while (true) {
            const double lp2 = lp2_of(n2);
            if (lp2 == kNegInf) break;
            if (!total.empty() && lp2 < total.log() - 60.0 * kLn10) break;

            auto excl = [&](std::int64_t n3) { return lp2 + lp3v[n3] >= t_obs; };
            if (first) {
                first = false;
                if (excl(static_cast<std::int64_t>(mode3))) {
                    a = b = static_cast<std::int64_t>(mode3);
                    while (a > 0 && excl(a - 1)) --a;
                    while (b + 1 <= static_cast<std::int64_t>(b_end) && excl(b + 1)) ++b;
                }
            } else {
                while (a <= b && !excl(a)) ++a;
                while (a <= b && !excl(b)) --b;
            }

            double tail;
            if (a > b) {
                tail = full_mass;
            } else {
                tail = a > 0 ? prefix[a - 1] : kNegInf;
                if (b < static_cast<std::int64_t>(b_end))
                    tail = log_add(tail, suffix[b + 1]);
                else
                    tail = log_add(tail, remainder);
            }
            total.add(lp2 + tail);

            if (step < 0) {
                if (n2 == 0) break;
                --n2;
            } else {
                ++n2;
            }
        }
    };

    run_direction(mode2, -1);
    if (l2 > 0.0) run_direction(mode2 + 1, +1);

    if (total.empty()) return kNegInf;
    return std::min(0.0, total.log() / kLn10);
}

}  // namespace

PoissonPair expected_counts(double g2, double g3, double n1, double n_shots) {
    if (!(g2 >= 0.0) || !(g3 >= 0.0) || !(n1 >= 0.0))
        throw DomainError("expected_counts: g2, g3, n1 must be >= 0");
    if (!(n_shots > 0.0)) throw DomainError("expected_counts: n_shots must be > 0");
    return {g2 * n1 * n1 / n_shots, g3 * n1 * n1 * n1 / (n_shots * n_shots)};
}

double log_poisson_pmf(std::uint64_t n, double lambda) {
    check_lambda(lambda, "lambda");
    if (lambda == 0.0) return n == 0 ? 0.0 : kNegInf;
    return lp_term(static_cast<double>(n), std::log(lambda), lambda,
                   std::lgamma(static_cast<double>(n) + 1.0));
}

double log_joint_prob(std::uint64_t n2, std::uint64_t n3, const PoissonPair& pp) {
    return log_poisson_pmf(n2, pp.lambda2) + log_poisson_pmf(n3, pp.lambda3);
}

double p_tilde_log10(std::uint64_t n2_m, std::uint64_t n3_m, const PoissonPair& pp) {
    LgammaCache lg;
    return p_tilde_log10_impl(n2_m, n3_m, pp, lg);
}

PValueResult max_p_over_boundary_rates(std::uint64_t n2_m, std::uint64_t n3_m,
                                       double rate2, double rate3) {
    if (!(rate2 >= 0.0) || !(rate3 >= 0.0))
        throw DomainError("max_p_over_boundary_rates: rates must be >= 0");

    LgammaCache lg;
    auto lambdas_at = [&](double g2) {
        return PoissonPair{g2 * rate2, lower_boundary_g3(g2) * rate3};
    };
    auto eval = [&](double g2) {
        return p_tilde_log10_impl(n2_m, n3_m, lambdas_at(g2), lg);
    };

    // Coarse scan in sqrt(g2), uniform over the boundary arc.
    constexpr int kGrid = 200;
    constexpr double kSMax = 2.0 / 3.0;
    double best_g2 = 0.0;
    double best_val = kNegInf;
    std::vector<double> grid_g2(kGrid);
    for (int i = 0; i < kGrid; ++i) {
        const double s = kSMax * static_cast<double>(i) / (kGrid - 1);
        grid_g2[i] = s * s;
        const double v = eval(grid_g2[i]);
        if (v > best_val) {
            best_val = v;
            best_g2 = grid_g2[i];
        }
    }

    // Golden-section refinement around the best grid point.
    {
        int bi = 0;
        for (int i = 0; i < kGrid; ++i)
            if (grid_g2[i] == best_g2) bi = i;
        double lo = grid_g2[std::max(0, bi - 1)];
        double hi = grid_g2[std::min(kGrid - 1, bi + 1)];
        constexpr double kInvPhi = 0.6180339887498948482;
        double x1 = hi - kInvPhi * (hi - lo);
        double x2 = lo + kInvPhi * (hi - lo);
        double f1 = eval(x1), f2 = eval(x2);
        while (hi - lo > 1e-6) {
            if (f1 < f2) {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + kInvPhi * (hi - lo);
                f2 = eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - kInvPhi * (hi - lo);
                f1 = eval(x1);
            }
        }
        const double xm = 0.5 * (lo + hi);
        const double fm = eval(xm);
        if (fm > best_val) {
            best_val = fm;
            best_g2 = xm;
        }
        if (f1 > best_val) {
            best_val = f1;
            best_g2 = x1;
        }
        if (f2 > best_val) {
            best_val = f2;
            best_g2 = x2;
        }
    }

    const double best_g3 = lower_boundary_g3(best_g2);
    return {best_val, best_g2, best_g3, lambdas_at(best_g2)};
}

PValueResult max_p_over_boundary(std::uint64_t n2_m, std::uint64_t n3_m, double n1,
                                 double n_shots) {
    if (!(n1 >= 0.0) || !(n_shots > 0.0))
        throw DomainError("max_p_over_boundary: requires n1 >= 0 and n_shots > 0");
    return max_p_over_boundary_rates(n2_m, n3_m, n1 * n1 / n_shots,
                                     n1 * n1 * n1 / (n_shots * n_shots));
}

}  // namespace qng
