#pragma once

#include <complex>
#include <span>
#include <vector>

#include "qng/gaussian_model.hpp"

namespace qng {

/// State vector in a truncated number basis, amplitudes[n] = <n|psi>.
struct FockVector {
    int dim = 0;
    std::vector<std::complex<double>> amplitudes;

    double norm_sq() const;
};

struct DensityTerm {
    double weight;
    FockVector state;
};

/// Incoherent mixture of number-basis state vectors; weights sum to 1.
struct DensityMixture {
    std::vector<DensityTerm> terms;

    void validate() const;
};

/// Smallest truncation dimension whose neglected tail is irrelevant at
/// relative 1e-12 for the moments of the given state. Accounts for the
/// geometric squeezing tail, which decays only like tanh(r)^n.
int default_dim(const GaussianParams& p);

/**
 * Builds D(alpha) S(xi) |0> in the number basis with the stable three-term
 * recurrence
 *   sqrt(n+1) c_{n+1} = alpha (1 + t) c_n - t sqrt(n) c_{n-1},
 *   t = e^{i theta} tanh(r),
 * seeded by the exact vacuum overlap
 *   c_0 = exp(-alpha^2/2 - t alpha^2/2) / sqrt(cosh r).
 *
 * Throws TruncationError when the norm deficit or the last amplitude
 * exceeds tail_tol at the requested dimension.
 */
FockVector build_displaced_squeezed(const GaussianParams& p, int dim,
                                    double tail_tol = 1e-10);

/// As above with dim = default_dim(p).
FockVector build_displaced_squeezed(const GaussianParams& p);

/// Moments from the diagonal number-basis form
/// G(k) = sum_n n (n-1) ... (n-k+1) |c_n|^2.
MomentTriple oracle_moments(const FockVector& state);
MomentTriple oracle_moments(const DensityMixture& mixture);

/// Photon-number distribution p(n) = |c_n|^2.
std::vector<double> photon_number_distribution(const FockVector& state);

/**
 * Moments of the total photon number of a product of independent modes,
 * computed by convolving the per-mode number distributions. Memory stays
 * O(M N); the tensor-product vector is never materialized.
 */
MomentTriple oracle_multimode_moments(std::span<const FockVector> states);

}  // namespace qng
