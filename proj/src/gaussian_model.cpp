#include "qng/gaussian_model.hpp"

#include <cmath>
#include <string>

#include "qng/errors.hpp"

namespace qng {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

double wrap_angle(double a) {
    double w = std::fmod(a, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    return w;
}

}  // namespace

GaussianParams::GaussianParams(double alpha_mag_, double r_, double theta_, double phi_)
    : alpha_mag(alpha_mag_), phi(0.0), r(r_) {
    if (!(alpha_mag_ >= 0.0) || !std::isfinite(alpha_mag_))
        throw DomainError("GaussianParams: alpha_mag must be finite and >= 0");
    if (!(r_ >= 0.0) || !std::isfinite(r_))
        throw DomainError("GaussianParams: r must be finite and >= 0");
    if (!std::isfinite(theta_) || !std::isfinite(phi_))
        throw DomainError("GaussianParams: phases must be finite");
    // Only the relative angle theta - 2 phi enters the moments; fold phi away.
    theta = wrap_angle(theta_ - 2.0 * phi_);
}

void MixtureSpec::validate() const {
    if (components.empty()) throw DomainError("MixtureSpec: empty component list");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (!(c.weight > 0.0) || c.weight > 1.0)
            throw DomainError("MixtureSpec: weights must lie in (0, 1]");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw DomainError("MixtureSpec: weights sum to " + std::to_string(wsum) +
                          ", expected 1 within 1e-12");
}

FirstOrderExpectations first_order_expectations(const GaussianParams& p) {
    const std::complex<double> mean_a{p.alpha_mag, 0.0};
    const std::complex<double> mean_aa =
        mean_a * mean_a - std::polar(std::cosh(p.r) * std::sinh(p.r), p.theta);
    const double mean_n = p.alpha_mag * p.alpha_mag + std::sinh(p.r) * std::sinh(p.r);
    return {mean_a, mean_aa, mean_n};
}

MomentTriple moments(const GaussianParams& p) {
    const auto e = first_order_expectations(p);
    const double n = e.mean_n;
    const double a2 = std::norm(e.mean_a);    // |<a>|^2
    const double aa2 = std::norm(e.mean_aa);  // |<aa>|^2
    const double re = std::real(e.mean_aa * std::conj(e.mean_a) * std::conj(e.mean_a));

    const double g1 = n;
    const double g2 = 2.0 * n * n + aa2 - 2.0 * a2 * a2;
    const double g3 = 6.0 * n * n * n + 9.0 * aa2 * n + 16.0 * a2 * a2 * a2 -
                      18.0 * a2 * a2 * n - 12.0 * a2 * re;
    return {g1, g2, g3};
}

CorrelationPoint correlations(const MomentTriple& m) {
    if (m.g1 < 0.0 || m.g2u < 0.0 || m.g3u < 0.0)
        throw DomainError("correlations: moments must be nonnegative");
    if (m.g1 == 0.0) throw ZeroIntensity("correlations: undefined at <a^dag a> = 0");
    return {m.g2u / (m.g1 * m.g1), m.g3u / (m.g1 * m.g1 * m.g1), {}, {}};
}

MomentTriple mixture_moments(const MixtureSpec& mix) {
    mix.validate();
    MomentTriple out;
    for (const auto& c : mix.components) {
        const MomentTriple m = moments(c.params);
        out.g1 += c.weight * m.g1;
        out.g2u += c.weight * m.g2u;
        out.g3u += c.weight * m.g3u;
    }
    return out;
}

MomentTriple multimode_moments(std::span<const MomentTriple> per_mode) {
    if (per_mode.empty()) throw DomainError("multimode_moments: empty mode list");
    if (per_mode.size() == 1) return per_mode[0];

    double s1 = 0.0, s2 = 0.0, s3 = 0.0;  // power sums of the G1_i
    double g2s = 0.0, g3s = 0.0, g2g1 = 0.0;
    for (const auto& m : per_mode) {
        if (m.g1 < 0.0 || m.g2u < 0.0 || m.g3u < 0.0)
            throw DomainError("multimode_moments: moments must be nonnegative");
        s1 += m.g1;
        s2 += m.g1 * m.g1;
        s3 += (m.g1 * m.g1) * m.g1;
        g2s += m.g2u;
        g3s += m.g3u;
        g2g1 += m.g2u * m.g1;
    }

    // Grouped so that for coherent modes (G2 = G1^2, G3 = G1^3) every bracket
    // cancels bit-exactly and the result reduces to (s1, s1^2, s1^3).
    const double g2mm = (g2s - s2) + s1 * s1;
    const double g3mm =
        (g3s - g2g1) + 2.0 * (s3 - g2g1) + 3.0 * s1 * (g2s - s2) + (s1 * s1) * s1;
    return {s1, g2mm, g3mm};
}

TaylorPair taylor_g2_g3(double alpha, double r) {
    if (!(alpha > 0.0)) throw DomainError("taylor_g2_g3: requires alpha > 0");
    const double a2 = alpha * alpha;
    const double a4 = a2 * a2;
    const double g2 = 1.0 - 2.0 * r / a2 + (1.0 + 2.0 * a2) * r * r / a4;
    const double g3 = 1.0 - 6.0 * r / a2 + 3.0 * (3.0 + 2.0 * a2) * r * r / a4;
    return {g2, g3};
}

Alpha2Roots alpha2_boundary(double g2, double r) {
    if (g2 == 1.0) throw DomainError("alpha2_boundary: singular at g2 = 1");
    const double disc = g2 * r * r - 2.0 * r * r * r + r * r * r * r;
    if (disc < 0.0) throw DomainError("alpha2_boundary: negative discriminant");
    const double s = std::sqrt(disc);
    const double denom = g2 - 1.0;
    return {(r * r - r + s) / denom, (r * r - r - s) / denom};
}

}  // namespace qng
