#include <cmath>

#include <gtest/gtest.h>

#include "illiq/validation.hpp"

using namespace illiq;

namespace {

ValueCurve curve_on(double z_max, double delta = 0.02, int n = 400) {
    MarketParams p;
    p.delta = delta;
    return solve_stationary(p, 0.2, ZGrid::log_uniform(1e-2, z_max, n, 4, 2));
}

}  // namespace

TEST(Validation, MertonLimitPassesOnFullGrid) {
    const auto [c, pi] = check_merton_limit(curve_on(1e4));
    EXPECT_TRUE(c.passed) << c.context;
    EXPECT_TRUE(pi.passed) << pi.context;
}

TEST(Validation, MertonLimitFailsOnTruncatedGrid) {
    const auto [c, pi] = check_merton_limit(curve_on(10.0, 0.02, 200));
    EXPECT_FALSE(c.passed);
    EXPECT_FALSE(pi.passed);
    EXPECT_GT(c.measured, 0.01);
    EXPECT_NE(c.context.find("grid ends below"), std::string::npos);
}

TEST(Validation, MertonLimitExactWithoutDividend) {
    const auto [c, pi] = check_merton_limit(curve_on(1e4, 0.0));
    EXPECT_TRUE(c.passed);
    EXPECT_LT(c.measured, 1e-8);
    EXPECT_LT(pi.measured, 1e-8);
}

TEST(Validation, ValueBounds) {
    const auto r = check_value_bounds(curve_on(1e4));
    EXPECT_TRUE(r.passed) << r.context;
    EXPECT_EQ(r.measured, 0.0);
}

TEST(Validation, UpperBoundStability) {
    EXPECT_TRUE(check_upper_bound_stability(10.0, 10.5).passed);
    EXPECT_FALSE(check_upper_bound_stability(10.0, 12.0).passed);
}

TEST(Validation, PsiOdes) {
    const MarketParams p;
    for (LiquidationLaw law : {LiquidationLaw{Exponential{0.2}}, LiquidationLaw{Weibull{2, 2}}}) {
        const auto r = check_psi_odes(law, p);
        EXPECT_TRUE(r[0].passed) << law_name(law) << ": " << r[0].context;
        EXPECT_TRUE(r[1].passed) << law_name(law) << ": " << r[1].context;
        EXPECT_TRUE(std::isinf(r[2].threshold));
    }
    // exact exponential closed forms agree with quadrature
    EXPECT_LT(check_psi_odes(Exponential{0.2}, p)[2].measured, 1e-8);
}

TEST(Validation, IncompleteGammaOracle) {
    const auto r = check_gamma();
    EXPECT_TRUE(r.passed) << r.context;
    EXPECT_NEAR(incomplete_gamma_quadrature(1.0, 3.0), std::exp(-3.0), 1e-14);
    EXPECT_NEAR(incomplete_gamma_quadrature(0.5, 0.0), std::sqrt(M_PI), 1e-12);
}

TEST(Validation, Psi1GammaForm) {
    for (double k : {1.0, 1.5, 2.0, 3.0}) {
        const auto r = check_psi1_gamma_form(Weibull{2, k});
        EXPECT_TRUE(r.passed) << "k=" << k << ": " << r.context;
    }
}

TEST(Validation, Homotheticity) {
    const auto r = check_homotheticity(curve_on(1e4));
    EXPECT_TRUE(r.passed) << r.context;
}

TEST(Validation, ReportsNonFiniteAsFailure) {
    const auto r = detail::make_report("x", NAN, 1.0, "");
    EXPECT_FALSE(r.passed);
}
