#pragma once

#include <cmath>
#include <limits>

#include "market_model.hpp"

namespace illiq {

namespace detail {

// Series for the lower incomplete gamma, returned without the e^{-x} x^a prefactor.
inline double gamma_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int n = 0; n < 1000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum;
}

// Modified Lentz evaluation of the continued fraction for Gamma(a,x) e^{x} x^{-a}.
inline double gamma_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h;
}

}  // namespace detail

// Gamma(a, x) = int_x^inf s^{a-1} e^{-s} ds
inline double upper_incomplete_gamma(double a, double x) {
    if (!(a > 0)) throw DomainError("upper_incomplete_gamma: a must be > 0");
    if (!(x >= 0)) throw DomainError("upper_incomplete_gamma: x must be >= 0");
    if (x == 0) return std::tgamma(a);
    if (x < a + 1.0) return std::tgamma(a) - std::exp(-x + a * std::log(x)) * detail::gamma_series(a, x);
    return std::exp(-x + a * std::log(x)) * detail::gamma_cf(a, x);
}

// log Gamma(a, x), usable far past the point where Gamma(a, x) underflows.
inline double log_upper_incomplete_gamma(double a, double x) {
    if (!(a > 0)) throw DomainError("log_upper_incomplete_gamma: a must be > 0");
    if (!(x >= 0)) throw DomainError("log_upper_incomplete_gamma: x must be >= 0");
    if (x < a + 1.0) return std::log(upper_incomplete_gamma(a, x));
    return -x + a * std::log(x) + std::log(detail::gamma_cf(a, x));
}

}  // namespace illiq
