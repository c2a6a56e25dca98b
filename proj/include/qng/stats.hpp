#pragma once

#include <cstdint>

namespace qng {

/// Expected 2- and 3-photon event counts under a Gaussian-boundary null.
struct PoissonPair {
    double lambda2 = 0.0;
    double lambda3 = 0.0;
};

struct PValueResult {
    double log10_p;    ///< log10 of the maximized p-value, <= 0
    double argmax_g2;  ///< boundary point attaining the maximum
    double argmax_g3;
    PoissonPair lambdas;  ///< expected counts at the maximizing point
};

/// lambda2 = g2 N1^2 / N_shots, lambda3 = g3 N1^3 / N_shots^2.
PoissonPair expected_counts(double g2, double g3, double n1, double n_shots);

/// log Pois(n | lambda), computed with log-factorials. Returns 0 for
/// (n=0, lambda=0) and -infinity for (n>0, lambda=0).
double log_poisson_pmf(std::uint64_t n, double lambda);

/// log P(n2, n3) = log Pois(n2|lambda2) + log Pois(n3|lambda3).
double log_joint_prob(std::uint64_t n2, std::uint64_t n3, const PoissonPair& pp);

/**
 * log10 of the cumulative probability of outcomes strictly less probable
 * than the observation:
 *   p~ = sum over { (n2, n3) : log P(n2, n3) < log P(n2_m, n3_m) }.
 *
 * The sum runs entirely in the log domain. n2 is iterated outward from the
 * Poisson mode in both directions, each stopping once its largest possible
 * remaining term falls 60 decades below the running total; for each n2 the
 * n3 contribution is the two-sided tail mass outside the interval where
 * log P >= the observed log-probability, taken from precomputed prefix and
 * suffix log-sums. Values like 1e-113402 are routine here, hence no linear
 * domain anywhere.
 */
double p_tilde_log10(std::uint64_t n2_m, std::uint64_t n3_m, const PoissonPair& pp);

/**
 * Maximizes p~ over the boundary g3 = (2 - 3 sqrt(g2))^2, g2 in [0, 4/9]:
 * a 200-point coarse grid in sqrt(g2) followed by golden-section refinement
 * to better than 1e-6 in g2. The result is the reportable p-value of the
 * Gaussian null hypothesis.
 */
PValueResult max_p_over_boundary(std::uint64_t n2_m, std::uint64_t n3_m, double n1,
                                 double n_shots);

/// Same maximization with the expected counts parameterized directly as
/// lambda2 = g2 * rate2, lambda3 = g3 * rate3; used when the effective
/// rates come from per-channel singles rather than one N1.
PValueResult max_p_over_boundary_rates(std::uint64_t n2_m, std::uint64_t n3_m,
                                       double rate2, double rate3);

}  // namespace qng
