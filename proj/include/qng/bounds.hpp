#pragma once

#include <array>
#include <optional>

#include "qng/gaussian_model.hpp"

namespace qng {

/**
 * Linear bound g3 + chi2 * g2 >= chi1, tangent to the lower Gaussian
 * boundary curve at touch_g2. chi2 >= -3 always holds for this family,
 * which is what makes the theta = 0 minimum argument applicable.
 */
struct TangentLine {
    double chi1;      ///< intercept
    double chi2;      ///< minus the slope
    double touch_g2;  ///< tangency abscissa in (0, 4/9]

    double value_at(double g2) const { return chi1 - chi2 * g2; }
};

/// Outcome of the certification criterion sqrt(g3) + 3 sqrt(g2) >= 2.
struct Verdict {
    double criterion_value = 0.0;  ///< sqrt(g3) + 3 sqrt(g2)
    bool non_gaussian = false;     ///< true iff criterion_value < 2
    std::optional<double> sigma_distance;  ///< (2 - value) / sigma_value when errors given
};

/// Lower boundary (2 - 3 sqrt(g2))^2. It bounds Gaussian states from below
/// only for g2 <= 4/9; the closed form is evaluated for any g2 >= 0.
double lower_boundary_g3(double g2);

/// Upper boundary (2 + 3 sqrt(g2))^2 for Gaussian pure states.
double upper_boundary_g3(double g2);

/**
 * Evaluates the certification criterion. A value below 2 is impossible for
 * any statistical mixture of Gaussian states, so non_gaussian = true is a
 * proof of quantum non-Gaussianity.
 *
 * Error propagation (first order):
 *   sigma^2 = (3/(2 sqrt(g2)) sigma_g2)^2 + (1/(2 sqrt(g3)) sigma_g3)^2
 * When g2 or g3 is exactly zero its sigma field is treated as a one-sided
 * upper limit and the corresponding term becomes (3 sqrt(lim))^2 resp.
 * (sqrt(lim))^2.
 */
Verdict criterion(const CorrelationPoint& c);

/**
 * The pure-state boundary inequality reduced to an explicitly nonnegative
 * polynomial in (alpha, cosh r, sinh r); the value is the inequality LHS
 * after division by 4 sinh^4(r). Nonnegative for every alpha >= 0, r > 0.
 * Throws DomainError when r = 0.
 */
double pure_state_polynomial(double alpha, double r);

/// Tangent line to lower_boundary_g3 at g2 in (0, 4/9]:
///   chi2 = 6/sqrt(g2) - 9,  chi1 = 4 - 6 sqrt(g2).
TangentLine tangent_at(double g2);

struct LinearBoundCheck {
    double chi2;
    double chi1;
    bool satisfied;  ///< g3 + chi2 * g2 < chi1; true implies non-Gaussianity
};

/// The four ready-made linear bounds g3 + {1,3,9,28} g2 < {2/5, 1, 2, 3}.
std::array<LinearBoundCheck, 4> linear_bounds_check(const CorrelationPoint& c);

/// Joint cumulant (connected part) g3_c = g3 - 3 g2 + 2. Negative values
/// certify non-Gaussianity for pure states only.
double joint_cumulant_g3(const CorrelationPoint& c);

/**
 * The real root x >= 1 of 1 + x^4 - (4n + 2) x = 0 (x = e^{2r} of the
 * moment-minimizing squeezing at mean photon number n). Uses the closed
 * radical form with a guarded bracketed-Newton fallback, polished so that
 * the quartic residual stays below 1e-10.
 */
double quartic_x(double n);

/// Minimum of <a^dag a^dag a a> over Gaussian pure states with
/// <a^dag a> = n, evaluated from quartic_x(n).
double g2u_min_gaussian(double n);

/// g2u_min_gaussian(n) / n^2, the g2 threshold at mean photon number n > 0.
double g2_min_gaussian(double n);

/// True (certified non-Gaussian) iff g2 < g2_min_gaussian(n).
/// Not attenuation-resistant: n must be the mean photon number at the source.
bool mean_photon_criterion(double n, double g2);

}  // namespace qng
