#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "illiq/exponential_solver.hpp"

using namespace illiq;

namespace {

const ValueCurve& reference_curve() {
    static const ValueCurve c = solve_stationary(MarketParams{}, 0.2, ZGrid::log_uniform(1e-2, 1e4, 2000, 4, 2));
    return c;
}

const ValueCurve& coarse_curve(double delta) {
    static std::map<double, ValueCurve> cache;
    auto it = cache.find(delta);
    if (it != cache.end()) return it->second;
    MarketParams p;
    p.delta = delta;
    return cache.emplace(delta, solve_stationary(p, 0.2, ZGrid::log_uniform(1e-2, 1e4, 400, 4, 2))).first->second;
}

}  // namespace

TEST(ExponentialSolver, ReferenceSolveConverges) {
    const auto& c = reference_curve();
    EXPECT_LE(c.max_residual, 1e-6);
    // the lowest buffer node carries the state constraint (v'' = 0 there)
    for (int i = 1; i < c.size(); ++i) {
        ASSERT_GT(c.vz[i], 0) << "node " << i;
        ASSERT_LT(c.vzz[i], 0) << "node " << i;
    }
}

// Locked after the first verified run of the 2000-node reference solve.
TEST(ExponentialSolver, GoldenPolicyAtHalf) {
    const Policy pol = policies(reference_curve(), 0.5, 1.0);
    EXPECT_NEAR(pol.pi, 0.065013439414904756, 1e-8);
    EXPECT_NEAR(pol.c, 0.15394983005076027, 1e-8);
}

TEST(ExponentialSolver, DerivativesMatchFiniteDifferences) {
    const auto& c = reference_curve();
    const auto& g = c.grid;
    for (int i = g.report_begin() + 1; i < g.report_end() - 1; ++i) {
        const double fd = (c.v[i + 1] - c.v[i - 1]) / (g.z[i + 1] - g.z[i - 1]);
        ASSERT_NEAR(fd, c.vz[i], 1e-4 * c.vz[i]) << "z=" << g.z[i];
    }
}

TEST(ExponentialSolver, NoDividendIsMerton) {
    const auto& c = coarse_curve(0.0);
    const MarketParams p = c.params;
    double worst = 0;
    for (int i = c.grid.report_begin(); i < c.grid.report_end(); ++i)
        worst = std::max(worst, std::abs(c.v[i] - merton_curve(c.grid.z[i], p, 0.2)));
    EXPECT_LT(worst, 1e-6);
    for (double z : {0.05, 1.0, 30.0, 5000.0}) {
        const Policy pol = policies(c, z, 1.0);
        EXPECT_NEAR(pol.c / z, 0.2, 1e-6);
        EXPECT_NEAR(pol.pi / z, 0.16, 1e-6);
    }
    EXPECT_EQ(fit_upper_bound_constant(c), 0.0);
}

TEST(ExponentialSolver, SecondOrderInSpace) {
    // Differences at common nodes shrink by about 4 per halving of dx.
    MarketParams p;
    std::vector<ValueCurve> cs;
    for (int n : {201, 401, 801}) cs.push_back(solve_stationary(p, 0.2, ZGrid::log_uniform(1e-1, 1e3, n, 4, 2)));
    auto diff = [](const ValueCurve& a, const ValueCurve& b) {
        double d = 0;
        for (int i = 0; i < a.grid.n; ++i)
            d = std::max(d, std::abs(a.v[a.grid.report_begin() + i] - b.v[b.grid.report_begin() + 2 * i]));
        return d;
    };
    const double d1 = diff(cs[0], cs[1]), d2 = diff(cs[1], cs[2]);
    EXPECT_GT(d1 / d2, 3.0) << d1 << " " << d2;
}

TEST(ExponentialSolver, QuadraticRootSatisfiesEquation) {
    const MarketParams p;
    for (double z : {0.01, 0.3, 1.0, 50.0, 1e4})
        for (double vz : {0.1, 1.0, 7.0}) {
            const double v = -3.0 + std::log(z);
            const double vzz = second_derivative_root(v, vz, z, p, 0.2);
            EXPECT_LT(vzz, 0);
            EXPECT_LT(std::abs(stationary_residual(v, vz, vzz, z, p, 0.2)), 1e-12 * (1 + std::abs(v)));
        }
    // Merton regime v' = 1/(kappa z): z^2 v'' -> -1/kappa
    const double z = 1e8;
    const double vzz = second_derivative_root(merton_curve(z, p, 0.2), 1 / (0.2 * z), z, p, 0.2);
    EXPECT_NEAR(z * z * vzz, -1 / 0.2, 1e-4);
    MarketParams flat;
    flat.alpha = flat.r;
    flat.rho = 0;
    EXPECT_THROW(second_derivative_root(0.0, 1.0, 1.0, flat, 0.2), DomainError);
}

TEST(ExponentialSolver, ReconstructValue) {
    const auto& c = reference_curve();
    const double K = reduction_constant(c.params, 0.2);
    const int i = c.grid.report_begin() + 700;
    EXPECT_NEAR(reconstruct_value(0, c.grid.z[i], 1, c), c.v[i] + K, 1e-12);
    for (double t : {0.0, 1.0, 7.5})
        EXPECT_NEAR(reconstruct_value(t, 2.0, 4.0, c) - reconstruct_value(t, 1.0, 2.0, c),
                    std::exp(-0.2 * t) * std::log(2.0) / 0.2, 1e-10);
    EXPECT_THROW(reconstruct_value(0, 1e9, 1, c), DomainError);
    EXPECT_THROW(reconstruct_value(0, -1, 1, c), DomainError);
}

TEST(ExponentialSolver, ValueBracket) {
    const auto& c = reference_curve();
    EXPECT_GE(lower_bound_slack(c), 0.0);
    const double c1 = fit_upper_bound_constant(c);
    ASSERT_TRUE(std::isfinite(c1));
    const double M = merton_constant(c.params, 0.2);
    for (double l : {0.01, 0.4, 3.0, 900.0}) {
        const double V = reconstruct_value(0, l, 1, c);
        EXPECT_LE(M + std::log(0.2 * l) / 0.2, V);
        EXPECT_LE(V, M + std::log(0.2 * (l + c1 * c.params.delta)) / 0.2 + 1e-9);
    }
}

TEST(ExponentialSolver, BracketCollapsesAsDividendVanishes) {
    double prev = INFINITY;
    for (double d : {0.02, 0.005, 0.001}) {
        const double c1d = fit_upper_bound_constant(coarse_curve(d)) * d;
        EXPECT_LT(c1d, prev);
        prev = c1d;
    }
}

TEST(ExponentialSolver, RejectsInvalidInput) {
    EXPECT_THROW(solve_stationary(MarketParams{}, 0.0, ZGrid::log_uniform(1e-2, 1e4, 50)), DomainError);
    MarketParams p;
    p.sigma = -1;
    EXPECT_THROW(solve_stationary(p, 0.2, ZGrid::log_uniform(1e-2, 1e4, 50)), DomainError);
    EXPECT_THROW(ZGrid::log_uniform(1.0, 0.5, 50), DomainError);
}
