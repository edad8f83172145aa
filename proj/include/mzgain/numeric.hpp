#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace mzgain::numeric {

inline constexpr double kPi = 3.14159265358979323846;

// Below this many factors a falling factorial is multiplied out directly.
// The product stays far from overflow and avoids the cancellation that a
// difference of two large lgamma values suffers at m ~ 1e5.
inline constexpr std::size_t kDirectFallingLimit = 16;

inline double log_factorial(std::size_t n) {
    return std::lgamma(static_cast<double>(n) + 1.0);
}

/// log(m! / (m - q)!), requires q <= m.
inline double log_falling(std::size_t m, std::size_t q) {
    if (q == 0) return 0.0;
    if (q <= kDirectFallingLimit) {
        double prod = 1.0;
        for (std::size_t i = 0; i < q; ++i) prod *= static_cast<double>(m - i);
        return std::log(prod);
    }
    return log_factorial(m) - log_factorial(m - q);
}

/// m! / (m - q)! as a plain double; only for small q.
inline double falling(std::size_t m, std::size_t q) {
    if (q > kDirectFallingLimit) return std::exp(log_falling(m, q));
    double prod = 1.0;
    for (std::size_t i = 0; i < q; ++i) prod *= static_cast<double>(m - i);
    return prod;
}

inline double log_choose(std::size_t n, std::size_t k) {
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

inline double log_cosh(double s) {
    const double a = std::abs(s);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

/// k * log(x) with the convention 0 * log(0) = 0.
inline double k_log(std::size_t k, double x) {
    if (k == 0) return 0.0;
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(k) * std::log(x);
}

inline double log_sum_exp(std::span<const double> logs) {
    if (logs.empty()) return -std::numeric_limits<double>::infinity();
    const double top = *std::max_element(logs.begin(), logs.end());
    if (!std::isfinite(top)) return top;
    double acc = 0.0;
    for (double v : logs) acc += std::exp(v - top);
    return top + std::log(acc);
}

inline double db_from_ratio(double ratio) { return -10.0 * std::log10(ratio); }

}  // namespace mzgain::numeric
