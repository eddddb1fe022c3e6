#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "illiq/liquidation.hpp"
#include "illiq/special.hpp"

using namespace illiq;

TEST(Liquidation, SurvivalBasics) {
    for (LiquidationLaw law : {LiquidationLaw{Exponential{0.2}}, LiquidationLaw{Weibull{2, 2}}})
        EXPECT_EQ(survival(law, 0.0), 1.0);
    EXPECT_NEAR(survival(Exponential{0.2}, 5.0), std::exp(-1.0), 1e-15);
    EXPECT_THROW(survival(Exponential{0.2}, -1.0), DomainError);
    double prev = 1;
    for (double t = 0; t < 20; t += 0.1) {
        const double s = survival(Weibull{2, 3}, t);
        EXPECT_LE(s, prev);
        prev = s;
    }
}

TEST(Liquidation, WeibullShapeOneIsExponential) {
    const Weibull w{2, 1};
    const Exponential e{0.5};
    for (double t : {0.0, 0.3, 1.0, 4.0, 17.0}) {
        EXPECT_NEAR(survival(w, t), survival(e, t), 1e-12);
        EXPECT_NEAR(pdf(w, t), pdf(e, t), 1e-12);
        EXPECT_NEAR(psi1(w, t), psi1(e, t), 1e-12);
    }
}

TEST(Liquidation, Density) {
    EXPECT_NEAR(pdf(Weibull{2, 1}, 0.0), 0.5, 1e-15);
    EXPECT_EQ(pdf(Weibull{2, 2}, 0.0), 0.0);
    const double h = 1e-4;
    for (LiquidationLaw law : {LiquidationLaw{Exponential{0.2}}, LiquidationLaw{Weibull{2, 2}},
                               LiquidationLaw{Weibull{2, 1.5}}}) {
        for (int i = 1; i <= 100; ++i) {
            const double t = 0.08 * i;
            const double fd = -(survival(law, t + h) - survival(law, t - h)) / (2 * h);
            EXPECT_NEAR(fd, pdf(law, t), 1e-6) << law_name(law) << " t=" << t;
        }
    }
}

TEST(Liquidation, RejectsBadLaws) {
    EXPECT_THROW(validate_law(Exponential{0.0}), DomainError);
    EXPECT_THROW(validate_law(Weibull{-1, 2}), DomainError);
    EXPECT_THROW(validate_law(Weibull{2, 0.5}), DomainError);
}

TEST(SpecialFunctions, IncompleteGammaAgainstBoost) {
    EXPECT_NEAR(upper_incomplete_gamma(0.5, 0.0), std::sqrt(M_PI), 1e-14);
    for (double x : {0.0, 0.3, 2.0, 11.0}) EXPECT_NEAR(upper_incomplete_gamma(1.0, x), std::exp(-x), 1e-15);
    for (double a : {0.1, 0.5, 1.0 / 1.5, 1.7, 3.0, 5.0})
        for (double x : {0.0, 1e-3, 0.5, 1.0, 2.5, 7.0, 30.0, 50.0}) {
            const double ref = boost::math::tgamma(a, x);
            EXPECT_NEAR(upper_incomplete_gamma(a, x), ref, 1e-10 * ref) << "a=" << a << " x=" << x;
        }
    EXPECT_THROW(upper_incomplete_gamma(0.0, 1.0), DomainError);
    EXPECT_THROW(upper_incomplete_gamma(1.0, -1.0), DomainError);
}

TEST(SpecialFunctions, LogIncompleteGammaDeepTail) {
    const double a = 0.5, x = 900;
    // asymptotically Gamma(a, x) ~ x^{a-1} e^{-x}
    EXPECT_NEAR(log_upper_incomplete_gamma(a, x), (a - 1) * std::log(x) - x, 1e-3);
}

TEST(Liquidation, Psi1) {
    EXPECT_DOUBLE_EQ(psi1(Exponential{0.2}, 0.0), 5.0);
    EXPECT_NEAR(psi1(Weibull{2, 1}, 0.0), 2.0, 1e-14);
    const Weibull w{2, 2};
    double err = 0;
    const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double s) { return survival(w, s); }, 1.0, 40.0, 15, 1e-14, &err);
    EXPECT_NEAR(psi1(w, 1.0), q, 1e-8 * q);
    EXPECT_NEAR(mean_time(w), std::sqrt(M_PI), 1e-13);
}

TEST(Liquidation, ExponentialAuxiliariesMatchClosedForms) {
    const MarketParams p;
    const double k = 0.2;
    const double m = p.mu - p.delta - 0.5 * p.eta * p.eta;
    const double R = p.r + (p.alpha - p.r) * (p.alpha - p.r) / (2 * p.sigma * p.sigma);
    for (double t : {0.0, 0.5, 3.0, 20.0}) {
        const double e = std::exp(-k * t);
        EXPECT_NEAR(psi2(Exponential{k}, t, p), e * (m / (k * k) - 2 / k - t), 1e-9);
        EXPECT_NEAR(theta(Exponential{k}, t, p), e * (R / (k * k) - (1 - std::log(k)) / k), 1e-9);
    }
}

TEST(Liquidation, AuxiliariesVanishBeyondCutoff) {
    const MarketParams p;
    for (LiquidationLaw law : {LiquidationLaw{Exponential{0.2}}, LiquidationLaw{Weibull{2, 2}}}) {
        const double T = t_cut(law) * 1.01;
        EXPECT_LT(std::abs(psi1(law, T)), 1e-10);
        EXPECT_LT(std::abs(psi2(law, T, p)), 1e-10);
        EXPECT_LT(std::abs(theta(law, T, p)), 1e-10);
    }
}

TEST(Liquidation, AsymptoticPsi1) {
    const Weibull w{2, 2};
    EXPECT_NEAR(asymptotic_psi(w, 10.0).psi1, 0.2 * std::exp(-25.0), 1e-25);
    double prev = INFINITY;
    for (double t = 8; t <= 16; t += 1) {
        const double rel = std::abs(psi1(w, t) - asymptotic_psi(w, t).psi1) / psi1(w, t);
        EXPECT_LT(rel, prev);
        prev = rel;
    }
    const double t = 8;
    EXPECT_LT(std::abs(psi1(w, t) - asymptotic_psi(w, t).psi1) / psi1(w, t), std::pow(t / w.lambda, -w.k));
    EXPECT_THROW(asymptotic_psi(Weibull{2, 1}, 10.0), DomainError);
}
