#include "qng/fock_oracle.hpp"

#include <cmath>
#include <string>

#include "qng/errors.hpp"

namespace qng {

double FockVector::norm_sq() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s;
}

void DensityMixture::validate() const {
    if (terms.empty()) throw DomainError("DensityMixture: empty term list");
    double wsum = 0.0;
    for (const auto& t : terms) {
        if (!(t.weight > 0.0)) throw DomainError("DensityMixture: weights must be positive");
        wsum += t.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw DomainError("DensityMixture: weights sum to " + std::to_string(wsum));
}

int default_dim(const GaussianParams& p) {
    const double nbar = p.alpha_mag * p.alpha_mag + std::sinh(p.r) * std::sinh(p.r);
    int n = static_cast<int>(std::ceil(8.0 * nbar + 30.0));

    // Squeezing gives |c_n|^2 ~ tanh(r)^n, so G3's tail only dies once
    // n^3 tanh(r)^n is negligible against the moment scale.
    const double t = std::tanh(p.r);
    const double log_t2 = 2.0 * std::log(t);
    if (t > 1e-8) {
        const double budget = std::log(1e-16 * std::max(1.0, nbar * nbar * nbar));
        while (0.5 * n * log_t2 + 3.0 * std::log(static_cast<double>(n)) > budget)
            n += std::max(8, n / 8);
    }
    return n;
}

FockVector build_displaced_squeezed(const GaussianParams& p, int dim, double tail_tol) {
    if (dim < 2) throw DomainError("build_displaced_squeezed: dim must be >= 2");

    const double alpha = p.alpha_mag;
    const std::complex<double> t = std::polar(std::tanh(p.r), p.theta);
    const std::complex<double> drive = alpha * (1.0 + t);

    FockVector out;
    out.dim = dim;
    out.amplitudes.resize(dim);
    auto& c = out.amplitudes;

    c[0] = std::exp(-0.5 * alpha * alpha * (1.0 + t)) / std::sqrt(std::cosh(p.r));
    c[1] = drive * c[0];
    for (int n = 1; n + 1 < dim; ++n)
        c[n + 1] = (drive * c[n] - t * std::sqrt(static_cast<double>(n)) * c[n - 1]) /
                   std::sqrt(static_cast<double>(n + 1));

    const double deficit = 1.0 - out.norm_sq();
    if (deficit > tail_tol || std::norm(c[dim - 1]) > tail_tol)
        throw TruncationError("build_displaced_squeezed: tail budget exceeded at dim " +
                              std::to_string(dim));
    return out;
}

FockVector build_displaced_squeezed(const GaussianParams& p) {
    return build_displaced_squeezed(p, default_dim(p));
}

MomentTriple oracle_moments(const FockVector& state) {
    MomentTriple m;
    for (int n = 0; n < state.dim; ++n) {
        const double w = std::norm(state.amplitudes[n]);
        const double nn = static_cast<double>(n);
        m.g1 += nn * w;
        m.g2u += nn * (nn - 1.0) * w;
        m.g3u += nn * (nn - 1.0) * (nn - 2.0) * w;
    }
    return m;
}

MomentTriple oracle_moments(const DensityMixture& mixture) {
    mixture.validate();
    MomentTriple m;
    for (const auto& t : mixture.terms) {
        const MomentTriple mi = oracle_moments(t.state);
        m.g1 += t.weight * mi.g1;
        m.g2u += t.weight * mi.g2u;
        m.g3u += t.weight * mi.g3u;
    }
    return m;
}

std::vector<double> photon_number_distribution(const FockVector& state) {
    std::vector<double> p(state.dim);
    for (int n = 0; n < state.dim; ++n) p[n] = std::norm(state.amplitudes[n]);
    return p;
}

MomentTriple oracle_multimode_moments(std::span<const FockVector> states) {
    if (states.empty()) throw DomainError("oracle_multimode_moments: empty mode list");

    std::vector<double> dist = photon_number_distribution(states[0]);
    for (std::size_t k = 1; k < states.size(); ++k) {
        const std::vector<double> next = photon_number_distribution(states[k]);
        std::vector<double> conv(dist.size() + next.size() - 1, 0.0);
        for (std::size_t i = 0; i < dist.size(); ++i)
            for (std::size_t j = 0; j < next.size(); ++j) conv[i + j] += dist[i] * next[j];
        dist = std::move(conv);
    }

    MomentTriple m;
    for (std::size_t n = 0; n < dist.size(); ++n) {
        const double nn = static_cast<double>(n);
        m.g1 += nn * dist[n];
        m.g2u += nn * (nn - 1.0) * dist[n];
        m.g3u += nn * (nn - 1.0) * (nn - 2.0) * dist[n];
    }
    return m;
}

}  // namespace qng
