#include "qng/bounds.hpp"

#include <cmath>

#include "qng/errors.hpp"

namespace qng {

double lower_boundary_g3(double g2) {
    if (!(g2 >= 0.0)) throw DomainError("lower_boundary_g3: requires g2 >= 0");
    const double t = 2.0 - 3.0 * std::sqrt(g2);
    return t * t;
}

double upper_boundary_g3(double g2) {
    if (!(g2 >= 0.0)) throw DomainError("upper_boundary_g3: requires g2 >= 0");
    const double t = 2.0 + 3.0 * std::sqrt(g2);
    return t * t;
}

Verdict criterion(const CorrelationPoint& c) {
    if (!(c.g2 >= 0.0) || !(c.g3 >= 0.0))
        throw DomainError("criterion: requires g2, g3 >= 0");

    Verdict v;
    v.criterion_value = std::sqrt(c.g3) + 3.0 * std::sqrt(c.g2);
    v.non_gaussian = v.criterion_value < 2.0;

    if (c.g2_sigma || c.g3_sigma) {
        double var = 0.0;
        if (c.g2_sigma) {
            const double s = *c.g2_sigma;
            if (c.g2 > 0.0) {
                const double t = 1.5 / std::sqrt(c.g2) * s;
                var += t * t;
            } else {
                var += 9.0 * s;  // s is the one-sided upper limit on g2
            }
        }
        if (c.g3_sigma) {
            const double s = *c.g3_sigma;
            if (c.g3 > 0.0) {
                const double t = 0.5 / std::sqrt(c.g3) * s;
                var += t * t;
            } else {
                var += s;  // s is the one-sided upper limit on g3
            }
        }
        if (var > 0.0)
            v.sigma_distance = (2.0 - v.criterion_value) / std::sqrt(var);
    }
    return v;
}

double pure_state_polynomial(double alpha, double r) {
    if (!(alpha >= 0.0)) throw DomainError("pure_state_polynomial: alpha must be >= 0");
    if (!(r > 0.0)) throw DomainError("pure_state_polynomial: requires r > 0");
    const double a2 = alpha * alpha;
    const double a4 = a2 * a2;
    const double a6 = a4 * a2;
    const double ch = std::cosh(r);
    const double sh = std::sinh(r);
    const double ch2 = ch * ch;
    const double sh2 = sh * sh;
    const double sh3 = sh2 * sh;
    const double sh4 = sh2 * sh2;
    const double sh5 = sh4 * sh;
    const double sh6 = sh4 * sh2;
    const double sh8 = sh4 * sh4;
    return 36.0 * a6 * ch2 - 36.0 * a6 * ch * sh + 12.0 * a6 * sh2 +
           54.0 * a4 * ch2 * sh2 - 48.0 * a4 * ch * sh3 + 21.0 * a4 * sh4 +
           36.0 * a2 * ch2 * sh4 - 18.0 * a2 * ch * sh5 + 12.0 * a2 * sh6 +
           9.0 * ch2 * sh6 + 2.0 * sh8;
}

TangentLine tangent_at(double g2) {
    if (!(g2 > 0.0) || !(g2 <= 4.0 / 9.0))
        throw DomainError("tangent_at: requires g2 in (0, 4/9]");
    const double s = std::sqrt(g2);
    return {4.0 - 6.0 * s, 6.0 / s - 9.0, g2};
}

std::array<LinearBoundCheck, 4> linear_bounds_check(const CorrelationPoint& c) {
    constexpr double kChi2[4] = {1.0, 3.0, 9.0, 28.0};
    constexpr double kChi1[4] = {0.4, 1.0, 2.0, 3.0};
    std::array<LinearBoundCheck, 4> out{};
    for (int i = 0; i < 4; ++i)
        out[i] = {kChi2[i], kChi1[i], c.g3 + kChi2[i] * c.g2 < kChi1[i]};
    return out;
}

double joint_cumulant_g3(const CorrelationPoint& c) { return c.g3 - 3.0 * c.g2 + 2.0; }

namespace {

// 1 + x^4 - (4n + 2) x and its derivative.
inline double quartic_f(double x, double a) { return 1.0 + x * x * x * x - a * x; }
inline double quartic_df(double x, double a) { return 4.0 * x * x * x - a; }

double newton_polish(double x, double a) {
    for (int i = 0; i < 4; ++i) {
        const double d = quartic_df(x, a);
        if (d == 0.0) break;
        x -= quartic_f(x, a) / d;
    }
    return x;
}

// Bracketed bisection on [1, cbrt(a) + 1]; the root is unique there because
// f(1) <= 0 and f is increasing once past its stationary point.
double bisect_root(double a) {
    double lo = 1.0, hi = std::cbrt(a) + 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (quartic_f(mid, a) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double quartic_x(double n) {
    if (!(n >= 0.0)) throw DomainError("quartic_x: requires n >= 0");
    if (n == 0.0) return 1.0;

    const double a = 4.0 * n + 2.0;

    // Ferrari resolvent: y^3 - 4 y - a^2 = 0 solved by radicals, then the
    // quartic factorizes as x = (sqrt(y) + sqrt(2a/sqrt(y) - y)) / 2.
    const double a2 = a * a;
    const double c3 = 9.0 * a2 + std::sqrt(3.0 * (27.0 * a2 * a2 - 256.0));
    const double c = std::cbrt(c3);
    const double y = c / std::cbrt(18.0) + 4.0 * std::cbrt(2.0 / 3.0) / c;
    const double sy = std::sqrt(y);
    const double inner = 2.0 * a / sy - y;

    double x;
    if (inner > 0.0 && sy > 0.0) {
        x = newton_polish(0.5 * (sy + std::sqrt(inner)), a);
    } else {
        x = newton_polish(bisect_root(a), a);
    }
    // The radical form loses digits through cancellation for some n;
    // the quartic itself is the ground truth, so fall back when it degrades.
    if (!(std::abs(quartic_f(x, a)) < 1e-10)) x = newton_polish(bisect_root(a), a);
    return x;
}

double g2u_min_gaussian(double n) {
    if (!(n >= 0.0)) throw DomainError("g2u_min_gaussian: requires n >= 0");
    if (n == 0.0) return 0.0;
    const double x = quartic_x(n);
    const double x2 = x * x;
    return (x2 * x2 + x2 * (8.0 * n * n - 8.0 * n - 4.0) + x * (8.0 * n + 4.0) - 1.0) /
           (8.0 * x2);
}

double g2_min_gaussian(double n) {
    if (!(n > 0.0)) throw DomainError("g2_min_gaussian: requires n > 0");
    return g2u_min_gaussian(n) / (n * n);
}

bool mean_photon_criterion(double n, double g2) {
    if (!(n > 0.0)) throw DomainError("mean_photon_criterion: requires n > 0");
    if (!(g2 >= 0.0)) throw DomainError("mean_photon_criterion: requires g2 >= 0");
    return g2 < g2_min_gaussian(n);
}

}  // namespace qng
