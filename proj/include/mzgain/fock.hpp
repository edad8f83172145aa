#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mzgain/errors.hpp"
#include "mzgain/numeric.hpp"
#include "mzgain/params.hpp"

namespace mzgain {

inline constexpr double kDefaultTailTol = 1e-12;
inline constexpr double kDefaultParityTol = 1e-10;
// Extra Fock levels kept above the level where the tail bound is met.
inline constexpr std::size_t kCutoffMargin = 4;

/// Pure single-mode state truncated to photon numbers 0..cutoff.
class FockState {
public:
    using Amplitude = std::complex<double>;

    explicit FockState(std::vector<Amplitude> amplitudes) : amps_(std::move(amplitudes)) {
        if (amps_.empty()) throw DomainError("FockState needs at least one amplitude");
    }

    static FockState number(std::size_t k, std::size_t cutoff) {
        if (cutoff < k) cutoff = k;
        std::vector<Amplitude> amps(cutoff + 1);
        amps[k] = 1.0;
        return FockState(std::move(amps));
    }
    static FockState number(std::size_t k) { return number(k, k); }
    static FockState vacuum() { return number(0); }

    std::size_t cutoff() const noexcept { return amps_.size() - 1; }
    std::size_t size() const noexcept { return amps_.size(); }
    std::span<const Amplitude> amplitudes() const noexcept { return amps_; }
    const Amplitude& operator[](std::size_t m) const { return amps_.at(m); }
    /// Amplitude at level m, zero above the cutoff.
    Amplitude at_or_zero(std::size_t m) const noexcept { return m < amps_.size() ? amps_[m] : Amplitude{}; }

    double norm_squared() const noexcept {
        double acc = 0.0;
        for (const auto& c : amps_) acc += std::norm(c);
        return acc;
    }

    /// Same state with `extra` vacuum-amplitude levels appended.
    FockState padded(std::size_t extra) const {
        auto amps = amps_;
        amps.resize(amps.size() + extra);
        return FockState(std::move(amps));
    }

private:
    std::vector<Amplitude> amps_;
};

inline FockState normalize(const FockState& state) {
    const double n2 = state.norm_squared();
    if (!(n2 > 0.0)) throw ZeroStateError();
    const double scale = 1.0 / std::sqrt(n2);
    std::vector<FockState::Amplitude> amps(state.amplitudes().begin(), state.amplitudes().end());
    for (auto& c : amps) c *= scale;
    return FockState(std::move(amps));
}

namespace detail {

inline void require_normalized(const FockState& state) {
    const double n2 = state.norm_squared();
    if (std::abs(n2 - 1.0) > 1e-9)
        throw DomainError("state is not normalized (norm^2 = " + std::to_string(n2) + ")");
}

}  // namespace detail

/// <a^dag^p a^q> of a normalized state. Terms that would land above the
/// cutoff are dropped.
inline std::complex<double> mode_moment(const FockState& state, std::size_t p, std::size_t q) {
    detail::require_normalized(state);
    const auto c = state.amplitudes();
    const std::size_t top = state.cutoff();
    std::complex<double> acc{};
    for (std::size_t m = q; m <= top; ++m) {
        const std::size_t j = m - q + p;
        if (j > top) break;
        if (c[m] == 0.0 || c[j] == 0.0) continue;
        double weight;
        if (p <= numeric::kDirectFallingLimit && q <= numeric::kDirectFallingLimit) {
            weight = std::sqrt(numeric::falling(m, q) * numeric::falling(j, p));
        } else {
            weight = std::exp(0.5 * (numeric::log_falling(m, q) + numeric::log_falling(j, p)));
        }
        acc += std::conj(c[j]) * c[m] * weight;
    }
    return acc;
}

inline double mean_photon(const FockState& state) { return mode_moment(state, 1, 1).real(); }

inline double photon_variance(const FockState& state) {
    const double mean = mean_photon(state);
    return mode_moment(state, 2, 2).real() + mean - mean * mean;
}

enum class Parity { Even, Odd, Mixed };

inline const char* to_string(Parity p) {
    switch (p) {
        case Parity::Even: return "even";
        case Parity::Odd: return "odd";
        case Parity::Mixed: return "mixed";
    }
    return "?";
}

inline Parity parity_of(const FockState& state, double tolerance = kDefaultParityTol) {
    double even = 0.0;
    double odd = 0.0;
    const auto c = state.amplitudes();
    for (std::size_t m = 0; m < c.size(); ++m) (m % 2 == 0 ? even : odd) += std::norm(c[m]);
    if (odd < tolerance) return Parity::Even;
    if (even < tolerance) return Parity::Odd;
    return Parity::Mixed;
}

/// |<a|b>|^2; the shorter state is treated as zero-padded.
inline double fidelity(const FockState& a, const FockState& b) {
    const std::size_t n = std::min(a.size(), b.size());
    std::complex<double> overlap{};
    for (std::size_t m = 0; m < n; ++m) overlap += std::conj(a[m]) * b[m];
    return std::norm(overlap);
}

// Tail mass is weighted by (level + 1)^kTailWeightPower when deciding where to
// truncate, so moments up to fourth order converge along with the norm.
inline constexpr int kTailWeightPower = 4;

/// Last index l (same parity as n) such that the family of weights
///   w_l = y^l ((l+n)!)^2 / (((l+n)/2)!^2 l!)
/// has a relative tail below tail_tol beyond l, with each weight counted
/// as w_l (l+1)^4. For n = 0 this is the photon-number distribution of
/// squeezed vacuum, for n > 0 that of the state left after counting n photons.
///
/// The ratio w_{l+2}/w_l = 4y^2 (l+n+1)^2 / ((l+1)(l+2)) is decreasing in l
/// for n >= 1 and increases toward 4y^2 for n = 0, so max(ratio, 4y^2) bounds
/// every later ratio. The weight factor ((l+3)/(l+1))^4 only shrinks, hence
/// the weighted tail is bounded by a geometric series.
inline std::size_t series_cutoff(double y, std::size_t n, double tail_tol) {
    if (!(tail_tol > 0.0)) throw DomainError("tail tolerance must be positive");
    if (!(y >= 0.0)) throw DomainError("series parameter y must be >= 0");
    if (y >= 0.5) throw DivergentSqueezingError(y);
    std::size_t l = n % 2;
    if (y == 0.0) return l;

    const double log_tol = std::log(tail_tol);
    const double floor_ratio = 4.0 * y * y;
    const double dn = static_cast<double>(n);
    constexpr std::size_t kMaxLevel = 200'000'000;
    // logs of weighted terms, relative to the first one
    double log_v = 0.0;
    double log_total = 0.0;
    for (; l < kMaxLevel; l += 2) {
        const double dl = static_cast<double>(l);
        const double log_ratio = 2.0 * std::log(2.0 * y * (dl + dn + 1.0)) - std::log((dl + 1.0) * (dl + 2.0));
        const double log_growth = kTailWeightPower * std::log((dl + 3.0) / (dl + 1.0));
        const double bound = std::max(std::exp(log_ratio), floor_ratio) * std::exp(log_growth);
        if (bound < 1.0) {
            const double log_tail = log_v + std::log(bound / (1.0 - bound));
            if (log_tail - log_total < log_tol) return l;
        }
        log_v += log_ratio + log_growth;
        const double hi = std::max(log_total, log_v);
        log_total = hi + std::log(std::exp(log_total - hi) + std::exp(log_v - hi));
    }
    throw DivergentSqueezingError(y);
}

/// Even Fock cutoff for a squeezed vacuum that still leaves the state
/// conditioned on n_subtract counted photons with tail mass below tail_tol.
inline std::size_t choose_cutoff(const SqueezingSpec& spec, std::size_t n_subtract,
                                 double tail_tol = kDefaultTailTol) {
    const std::size_t l = series_cutoff(spec.y(), n_subtract, tail_tol);
    std::size_t m = l + n_subtract + kCutoffMargin;
    if (m % 2 != 0) ++m;
    return m;
}

/// Coherent state |beta> truncated where the Poisson tail, weighted like
/// series_cutoff, falls below tail_tol.
inline FockState truncated_coherent(std::complex<double> beta, double tail_tol = 1e-14) {
    if (!(tail_tol > 0.0)) throw DomainError("tail tolerance must be positive");
    const double mean = std::norm(beta);
    if (mean == 0.0) return FockState::vacuum();
    if (mean > 1e4) throw DomainError("coherent amplitude too large to truncate");

    const double log_abs = std::log(std::abs(beta));
    const double phase = std::arg(beta);
    const double log_tol = std::log(tail_tol);
    std::vector<FockState::Amplitude> amps;
    double log_v = 0.0;  // weighted Poisson term relative to m = 0
    double log_total = 0.0;
    for (std::size_t m = 0;; ++m) {
        const double dm = static_cast<double>(m);
        const double log_mag = -0.5 * mean + dm * log_abs - 0.5 * numeric::log_factorial(m);
        amps.push_back(std::polar(std::exp(log_mag), dm * phase));
        // term ratio mean/(m+1) and the weight factor both decrease with m
        const double log_step = std::log(mean / (dm + 1.0)) + kTailWeightPower * std::log((dm + 2.0) / (dm + 1.0));
        const double bound = std::exp(log_step);
        if (bound < 1.0 && log_v + std::log(bound / (1.0 - bound)) - log_total < log_tol) break;
        log_v += log_step;
        const double hi = std::max(log_total, log_v);
        log_total = hi + std::log(std::exp(log_total - hi) + std::exp(log_v - hi));
    }
    return normalize(FockState(std::move(amps)));
}

/// Debug dump: [[re, im], ...] indexed by photon number.
inline nlohmann::json to_json(const FockState& state) {
    auto out = nlohmann::json::array();
    for (const auto& c : state.amplitudes()) out.push_back({c.real(), c.imag()});
    return out;
}

}  // namespace mzgain
