#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace dynattack {

inline double log_poisson_pmf(std::int64_t y, double rate) {
    if (y < 0) return -std::numeric_limits<double>::infinity();
    if (rate <= 0.0) return y == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    if (!std::isfinite(rate)) return -std::numeric_limits<double>::infinity();
    const double yd = static_cast<double>(y);
    return yd * std::log(rate) - rate - std::lgamma(yd + 1.0);
}

inline double poisson_pmf(std::int64_t y, double rate) { return std::exp(log_poisson_pmf(y, rate)); }

/// Negative binomial with real size r and success probability p:
/// pmf(y) = Gamma(y + r) / (Gamma(r) y!) p^r (1 - p)^y, mean r(1-p)/p.
inline double log_negbin_pmf(std::int64_t y, double size, double prob) {
    if (y < 0) return -std::numeric_limits<double>::infinity();
    const double yd = static_cast<double>(y);
    return std::lgamma(yd + size) - std::lgamma(size) - std::lgamma(yd + 1.0) + size * std::log(prob) +
           yd * std::log1p(-prob);
}

inline double negbin_pmf(std::int64_t y, double size, double prob) { return std::exp(log_negbin_pmf(y, size, prob)); }

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace dynattack
