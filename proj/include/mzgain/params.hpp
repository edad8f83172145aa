#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "mzgain/errors.hpp"

namespace mzgain {

// 20 / ln 10: dB per unit of squeezing amplitude, from S = -10 log10(exp(-2s)).
inline constexpr double kDbPerNeper = 8.6858896380650365;

/// Single-mode squeezing expressed three equivalent ways: amplitude s,
/// level in dB, and the series parameter y = tanh(s) / 2 in [0, 0.5).
/// Stored as s; the other two are derived on demand.
class SqueezingSpec {
public:
    static SqueezingSpec from_s(double s) {
        if (!(s >= 0.0) || !std::isfinite(s))
            throw DomainError("squeezing amplitude must be finite and >= 0, got " + std::to_string(s));
        return SqueezingSpec(s);
    }

    static SqueezingSpec from_db(double s_db) {
        if (!(s_db >= 0.0) || !std::isfinite(s_db))
            throw DomainError("squeezing in dB must be finite and >= 0, got " + std::to_string(s_db));
        return SqueezingSpec(s_db / kDbPerNeper);
    }

    static SqueezingSpec from_y(double y) {
        if (!(y >= 0.0)) throw DomainError("series parameter y must be >= 0");
        if (y >= 0.5) throw DivergentSqueezingError(y);
        return SqueezingSpec(std::atanh(2.0 * y));
    }

    double s() const noexcept { return s_; }
    double db() const noexcept { return kDbPerNeper * s_; }
    double y() const noexcept { return 0.5 * std::tanh(s_); }
    /// Mean photon number of the squeezed vacuum, sinh^2 s.
    double mean_photon() const noexcept { return std::sinh(s_) * std::sinh(s_); }

private:
    explicit SqueezingSpec(double s) : s_(s) {}
    double s_;
};

/// Coherent state |i alpha> fed into the second interferometer port.
struct CoherentSpec {
    double alpha = 0.0;

    std::complex<double> amplitude() const noexcept { return {0.0, alpha}; }
    double mean_photon() const noexcept { return alpha * alpha; }
};

/// Photon subtraction by a beam splitter of amplitude transmissivity t with
/// n photons counted in the reflected arm.
class SubtractionSpec {
public:
    SubtractionSpec(int n, double t) : n_(n), t_(t) {
        if (n < 0) throw DomainError("subtracted photon number must be >= 0");
        if (!(t > 0.0 && t <= 1.0))
            throw DomainError("beam splitter transmissivity must lie in (0, 1], got " + std::to_string(t));
    }

    int n() const noexcept { return n_; }
    double t() const noexcept { return t_; }
    double r() const noexcept { return std::sqrt((1.0 - t_) * (1.0 + t_)); }
    double y1(const SqueezingSpec& sq) const noexcept { return sq.y() * t_ * t_; }

private:
    int n_;
    double t_;
};

}  // namespace mzgain
