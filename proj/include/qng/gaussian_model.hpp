#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace qng {

/**
 * Parameters of a displaced squeezed state D(alpha) S(xi) |0>, with
 * displacement alpha = |alpha| e^{i phi} and squeezing xi = r e^{i theta}.
 *
 * Photon-number moments depend only on the relative angle theta - 2 phi,
 * so the constructor canonicalizes: phi is folded into theta and set to 0.
 * All phases are reduced mod 2 pi.
 */
struct GaussianParams {
    double alpha_mag = 0.0;  ///< displacement magnitude, >= 0
    double phi = 0.0;        ///< displacement phase, always 0 after canonicalization
    double r = 0.0;          ///< squeezing strength, >= 0
    double theta = 0.0;      ///< squeezing angle relative to displacement, in [0, 2 pi)

    GaussianParams() = default;
    GaussianParams(double alpha_mag, double r, double theta = 0.0, double phi = 0.0);
};

/// Un-normalized photon moments G(n) = <(a^dag)^n a^n> of a state or mixture.
struct MomentTriple {
    double g1 = 0.0;   ///< <a^dag a>
    double g2u = 0.0;  ///< <a^dag a^dag a a>
    double g3u = 0.0;  ///< <a^dag a^dag a^dag a a a>
};

/// Normalized correlation pair with optional 1-sigma errors. When a value is
/// exactly zero, its sigma field is interpreted as a one-sided upper limit.
struct CorrelationPoint {
    double g2 = 0.0;
    double g3 = 0.0;
    std::optional<double> g2_sigma;
    std::optional<double> g3_sigma;
};

struct MixtureComponent {
    double weight = 0.0;  ///< in (0, 1]
    GaussianParams params;
};

/// Statistical mixture of displaced squeezed states. Weights must sum to 1
/// within 1e-12 and the component list must be non-empty.
struct MixtureSpec {
    std::vector<MixtureComponent> components;

    void validate() const;  // throws DomainError on violation
};

struct FirstOrderExpectations {
    std::complex<double> mean_a;   ///< <a> = alpha
    std::complex<double> mean_aa;  ///< <a a> = alpha^2 - e^{i theta} cosh(r) sinh(r)
    double mean_n;                 ///< <a^dag a> = |alpha|^2 + sinh^2(r)
};

FirstOrderExpectations first_order_expectations(const GaussianParams& p);

/**
 * Exact moments of a displaced squeezed state via the Wick expansion:
 *   G1 = <n>
 *   G2 = 2 <n>^2 + |<aa>|^2 - 2 |<a>|^4
 *   G3 = 6 <n>^3 + 9 |<aa>|^2 <n> + 16 |<a>|^6 - 18 |<a>|^4 <n>
 *        - 12 |<a>|^2 Re{ <aa> conj(<a>)^2 }
 */
MomentTriple moments(const GaussianParams& p);

/// g2 = G2/G1^2, g3 = G3/G1^3. Throws ZeroIntensity when G1 = 0.
CorrelationPoint correlations(const MomentTriple& m);

/// Component-wise weighted sum of the component moments.
MomentTriple mixture_moments(const MixtureSpec& mix);

/**
 * Moments of the total photon number of M independent modes:
 *   G1 = sum_i G1_i
 *   G2 = sum_i G2_i + 2 sum_{i<j} G1_i G1_j
 *   G3 = sum_i G3_i + 3 sum_{i<j} (G2_i G1_j + G1_i G2_j)
 *        + 6 sum_{i<j<k} G1_i G1_j G1_k
 *
 * A list of coherent-mode triples composes to g2 = g3 = 1 exactly.
 */
MomentTriple multimode_moments(std::span<const MomentTriple> per_mode);

struct TaylorPair {
    double g2_2nd;
    double g3_2nd;
};

/**
 * Second-order expansions in r around r = 0 at theta = 0:
 *   g2 = 1 - 2 r / a^2 + (1 + 2 a^2) r^2 / a^4
 *   g3 = 1 - 6 r / a^2 + 3 (3 + 2 a^2) r^2 / a^4
 * with a^2 = alpha^2. Throws DomainError when alpha <= 0.
 */
TaylorPair taylor_g2_g3(double alpha, double r);

struct Alpha2Roots {
    double plus;
    double minus;
};

/**
 * The two alpha^2 roots of the truncated second-order g2 expansion:
 *   alpha^2 = (r^2 - r +- sqrt(g2 r^2 - 2 r^3 + r^4)) / (g2 - 1)
 * Throws DomainError when g2 = 1 or the discriminant is negative.
 */
Alpha2Roots alpha2_boundary(double g2, double r);

}  // namespace qng
