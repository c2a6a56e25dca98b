#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qng/errors.hpp"
#include "qng/gaussian_model.hpp"
#include "qng/rng.hpp"
#include "reference_forms.hpp"

using namespace qng;
using testref::rel_dev;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("parameter canonicalization folds phi into theta") {
    const GaussianParams p(0.3, 0.7, 1.0, 0.4);
    CHECK(p.phi == 0.0);
    CHECK(p.theta == doctest::Approx(1.0 - 0.8).epsilon(1e-15));

    const GaussianParams wrapped(0.1, 0.1, -0.5);
    CHECK(wrapped.theta == doctest::Approx(2.0 * kPi - 0.5).epsilon(1e-15));

    CHECK_THROWS_AS(GaussianParams(-0.1, 0.0), DomainError);
    CHECK_THROWS_AS(GaussianParams(0.1, -1.0), DomainError);
}

TEST_CASE("first-order expectations") {
    SUBCASE("vacuum") {
        const auto e = first_order_expectations(GaussianParams(0.0, 0.0));
        CHECK(e.mean_a == std::complex<double>(0.0, 0.0));
        CHECK(e.mean_aa == std::complex<double>(0.0, 0.0));
        CHECK(e.mean_n == 0.0);
    }
    SUBCASE("coherent alpha = 0.5") {
        const auto e = first_order_expectations(GaussianParams(0.5, 0.0));
        CHECK(e.mean_a.real() == 0.5);
        CHECK(e.mean_aa.real() == 0.25);
        CHECK(e.mean_n == 0.25);
    }
    SUBCASE("weakly squeezed, displaced") {
        // reference values from a 50-digit evaluation of the closed forms
        const auto e = first_order_expectations(GaussianParams(0.2, 0.01));
        CHECK(e.mean_a.real() == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(e.mean_aa.real() == doctest::Approx(0.029999333319999873).epsilon(1e-14));
        CHECK(e.mean_aa.imag() == 0.0);
        CHECK(e.mean_n == doctest::Approx(0.040100003333377778).epsilon(1e-15));
    }
}

TEST_CASE("moments of reference states") {
    SUBCASE("coherent state has unit correlations") {
        const auto m = moments(GaussianParams(1.0, 0.0));
        CHECK(m.g1 == 1.0);
        CHECK(m.g2u == 1.0);
        CHECK(m.g3u == 1.0);
        const auto c = correlations(m);
        CHECK(c.g2 == 1.0);
        CHECK(c.g3 == 1.0);
    }
    SUBCASE("squeezed vacuum r = 0.5") {
        const auto m = moments(GaussianParams(0.0, 0.5, 1.234));  // theta irrelevant at alpha=0
        const double sh2 = std::sinh(0.5) * std::sinh(0.5);
        const double ch2 = std::cosh(0.5) * std::cosh(0.5);
        CHECK(m.g1 == doctest::Approx(sh2).epsilon(1e-15));
        CHECK(m.g2u == doctest::Approx(ch2 * sh2 + 2.0 * sh2 * sh2).epsilon(1e-14));
        const auto c = correlations(m);
        CHECK(c.g2 == doctest::Approx(3.0 + 1.0 / sh2).epsilon(1e-14));
    }
    SUBCASE("near-boundary state (0.2, 0.01)") {
        const auto m = moments(GaussianParams(0.2, 0.01));
        CHECK(m.g1 == doctest::Approx(0.040100003333377778).epsilon(1e-14));
        CHECK(m.g2u == doctest::Approx(0.00091598053431827243).epsilon(1e-13));
        CHECK(m.g3u == doctest::Approx(4.8155976074605087e-6).epsilon(1e-13));
        const auto c = correlations(m);
        CHECK(c.g2 == doctest::Approx(0.56963599855320886).epsilon(1e-13));
        CHECK(c.g3 == doctest::Approx(0.074682176074039584).epsilon(1e-13));
    }
}

TEST_CASE("correlations edge cases") {
    CHECK(correlations({1.0, 0.0, 0.0}).g2 == 0.0);  // ideal single photon
    CHECK(correlations({1.0, 0.0, 0.0}).g3 == 0.0);
    CHECK_THROWS_AS(correlations({0.0, 0.0, 0.0}), ZeroIntensity);
    CHECK_THROWS_AS(correlations({-1.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("closed form agrees with the expanded trigonometric route") {
    double worst = 0.0;
    for (double alpha : {0.0, 0.05, 0.3, 0.8, 1.3, 2.0})
        for (double r : {0.0, 0.01, 0.2, 0.9, 1.5})
            for (int it = 0; it < 9; ++it) {
                const double theta = 2.0 * kPi * it / 9.0;
                const auto a = moments(GaussianParams(alpha, r, theta));
                const auto b = testref::moments_expanded(alpha, r, theta);
                worst = std::max({worst, rel_dev(a.g1, b.g1), rel_dev(a.g2u, b.g2u),
                                  rel_dev(a.g3u, b.g3u)});
            }
    CHECK(worst < 1e-12);
}

TEST_CASE("phase reduction is an exact identity") {
    std::uint64_t s = 99;
    auto u = [&] { return static_cast<double>(splitmix64_step(s) >> 11) * 0x1.0p-53; };
    for (int i = 0; i < 500; ++i) {
        const double alpha = 2.0 * u(), r = 1.5 * u();
        const double theta = 2.0 * kPi * u(), phi = 2.0 * kPi * u();
        const auto a = moments(GaussianParams(alpha, r, theta, phi));
        const auto b = moments(GaussianParams(alpha, r, theta - 2.0 * phi, 0.0));
        CHECK(a.g1 == b.g1);
        CHECK(a.g2u == b.g2u);
        CHECK(a.g3u == b.g3u);
    }
}

TEST_CASE("G3 + chi2 G2 G1 is minimized at theta = 0 for chi2 >= -3") {
    for (double alpha : {0.15, 0.5, 1.1})
        for (double r : {0.05, 0.4, 1.0})
            for (double chi2 : {-3.0, -2.0, 0.0, 7.0, 100.0}) {
                const auto at = [&](double th) {
                    const auto m = moments(GaussianParams(alpha, r, th));
                    return m.g3u + chi2 * m.g2u * m.g1;
                };
                const double f0 = at(0.0);
                for (int i = 1; i < 48; ++i) {
                    const double th = 2.0 * kPi * i / 48.0;
                    CHECK(at(th) >= f0 - 1e-12 * std::abs(f0));
                }
            }
}

TEST_CASE("mixture moments") {
    SUBCASE("single component is the identity") {
        const GaussianParams p(0.7, 0.2, 0.3);
        const auto direct = moments(p);
        const auto mixed = mixture_moments({{{1.0, p}}});
        CHECK(mixed.g1 == direct.g1);
        CHECK(mixed.g2u == direct.g2u);
        CHECK(mixed.g3u == direct.g3u);
    }
    SUBCASE("75/25 mix of the near-boundary state with vacuum") {
        const MixtureSpec mix{{{0.75, GaussianParams(0.2, 0.01)}, {0.25, GaussianParams(0.0, 0.0)}}};
        const auto m = mixture_moments(mix);
        CHECK(m.g1 == doctest::Approx(0.030075002500033334).epsilon(1e-14));
        const auto c = correlations(m);
        CHECK(c.g2 == doctest::Approx(0.75951466473761181).epsilon(1e-13));
        CHECK(c.g3 == doctest::Approx(0.13276831302051482).epsilon(1e-13));
    }
    SUBCASE("half coherent, half vacuum doubles g2 and quadruples g3") {
        const MixtureSpec mix{{{0.5, GaussianParams(1.0, 0.0)}, {0.5, GaussianParams(0.0, 0.0)}}};
        const auto c = correlations(mixture_moments(mix));
        CHECK(c.g2 == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(c.g3 == doctest::Approx(4.0).epsilon(1e-15));
    }
    SUBCASE("mixture of mixtures equals the flattened mixture") {
        const GaussianParams pa(0.2, 0.01), pb(0.7, 0.3, 1.1), pc(0.05, 0.6, 2.2);
        const auto inner = mixture_moments({{{0.5, pa}, {0.5, pb}}});
        const auto flat = mixture_moments({{{0.3, pa}, {0.3, pb}, {0.4, pc}}});
        const auto mc = moments(pc);
        CHECK(rel_dev(0.6 * inner.g1 + 0.4 * mc.g1, flat.g1) <= 1e-14);
        CHECK(rel_dev(0.6 * inner.g2u + 0.4 * mc.g2u, flat.g2u) <= 1e-14);
        CHECK(rel_dev(0.6 * inner.g3u + 0.4 * mc.g3u, flat.g3u) <= 1e-14);
    }
    SUBCASE("invalid specs") {
        CHECK_THROWS_AS(mixture_moments({}), DomainError);
        CHECK_THROWS_AS(mixture_moments({{{0.5, GaussianParams(0.1, 0.0)}}}), DomainError);
    }
}

TEST_CASE("multi-mode composition") {
    SUBCASE("single mode unchanged") {
        const MomentTriple m{0.3, 0.02, 0.001};
        const MomentTriple out = multimode_moments({{m}});
        CHECK(out.g1 == m.g1);
        CHECK(out.g2u == m.g2u);
        CHECK(out.g3u == m.g3u);
    }
    SUBCASE("two coherent modes") {
        const MomentTriple coh{1.0, 1.0, 1.0};
        const MomentTriple out = multimode_moments({{coh, coh}});
        CHECK(out.g1 == 2.0);
        CHECK(out.g2u == 4.0);
        CHECK(out.g3u == 8.0);
        const auto c = correlations(out);
        CHECK(c.g2 == 1.0);
        CHECK(c.g3 == 1.0);
    }
    SUBCASE("two ideal single photons") {
        const MomentTriple one{1.0, 0.0, 0.0};
        const MomentTriple out = multimode_moments({{one, one}});
        CHECK(out.g1 == 2.0);
        CHECK(out.g2u == 2.0);
        CHECK(out.g3u == 0.0);
        const auto c = correlations(out);
        CHECK(c.g2 == 0.5);
        CHECK(c.g3 == 0.0);
    }
    SUBCASE("coherent closure is exact for any mode count") {
        std::uint64_t s = 4242;
        auto u = [&] { return static_cast<double>(splitmix64_step(s) >> 11) * 0x1.0p-53; };
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<MomentTriple> modes;
            const int m = 1 + trial % 6;
            for (int i = 0; i < m; ++i) {
                const double x = 0.01 + 3.0 * u();
                modes.push_back({x, x * x, (x * x) * x});
            }
            const auto c = correlations(multimode_moments(modes));
            CHECK(c.g2 == 1.0);
            CHECK(c.g3 == 1.0);
        }
    }
}

TEST_CASE("second-order expansion in r") {
    SUBCASE("coherent limit") {
        const auto t = taylor_g2_g3(1.0, 0.0);
        CHECK(t.g2_2nd == 1.0);
        CHECK(t.g3_2nd == 1.0);
    }
    SUBCASE("reference points") {
        const auto t1 = taylor_g2_g3(1.0, 0.01);
        CHECK(t1.g2_2nd == doctest::Approx(0.98030).epsilon(1e-12));
        CHECK(t1.g3_2nd == doctest::Approx(0.94150).epsilon(1e-12));
        const auto t2 = taylor_g2_g3(0.5, 0.001);
        CHECK(t2.g2_2nd == doctest::Approx(0.992024).epsilon(1e-12));
        CHECK(t2.g3_2nd == doctest::Approx(0.976168).epsilon(1e-12));
    }
    SUBCASE("domain") { CHECK_THROWS_AS(taylor_g2_g3(0.0, 0.01), DomainError); }
    SUBCASE("matches the exact correlations to third order") {
        // stability constant fitted once from a high-precision sweep
        const double kC = 25.0;
        for (double alpha = 0.2; alpha <= 1.5; alpha += 0.1)
            for (double r = 0.002; r <= 0.0101; r += 0.002) {
                const auto t = taylor_g2_g3(alpha, r);
                const auto c = correlations(moments(GaussianParams(alpha, r)));
                const double bound = kC * r * r * r / std::pow(alpha, 6.0);
                CHECK(std::abs(t.g2_2nd - c.g2) <= bound);
                CHECK(std::abs(t.g3_2nd - c.g3) <= bound);
            }
    }
}

TEST_CASE("alpha^2 roots of the truncated expansion") {
    SUBCASE("reference roots at (g2 = 0.25, r = 0.01)") {
        const auto roots = alpha2_boundary(0.25, 0.01);
        CHECK(roots.plus == doctest::Approx(0.0068041680238872233).epsilon(1e-13));
        CHECK(roots.minus == doctest::Approx(0.019595831976112777).epsilon(1e-13));
        // substituting back into the truncated expansion reproduces g2
        for (double a2 : {roots.plus, roots.minus}) {
            const double r = 0.01;
            const double resid =
                1.0 - 2.0 * r / a2 + (1.0 + 2.0 * a2) * r * r / (a2 * a2) - 0.25;
            CHECK(std::abs(resid) < 1e-12);
        }
    }
    SUBCASE("singular at g2 = 1") {
        CHECK_THROWS_AS(alpha2_boundary(1.0, 0.01), DomainError);
    }
    SUBCASE("negative discriminant") {
        // g2 r^2 - 2 r^3 + r^4 < 0 for g2 < 2r - r^2
        CHECK_THROWS_AS(alpha2_boundary(0.01, 0.5), DomainError);
    }
    SUBCASE("minus root at g2 = 4/9 reconstructs states heading to g3 = 0") {
        double prev = 1.0;
        for (double r : {1e-2, 1e-3, 1e-4, 1e-5}) {
            const auto roots = alpha2_boundary(4.0 / 9.0, r);
            const auto c = correlations(moments(GaussianParams(std::sqrt(roots.minus), r)));
            CHECK(c.g3 < prev);
            prev = c.g3;
        }
        CHECK(prev < 2e-5);  // 1.33e-5 at r = 1e-5 in the reference run
    }
}
