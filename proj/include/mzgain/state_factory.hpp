#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstddef>
#include <optional>
#include <vector>

#include "mzgain/errors.hpp"
#include "mzgain/fock.hpp"
#include "mzgain/numeric.hpp"
#include "mzgain/params.hpp"

namespace mzgain {

// Conditioning on an outcome less likely than this is treated as an error.
inline constexpr double kMinBranchProbability = 1e-300;

namespace detail {

inline NegligibleBranchError negligible_branch(std::size_t n, double log10_prob) {
    char buf[96];
    if (std::isfinite(log10_prob)) {
        std::snprintf(buf, sizeof buf, "detection of %zu photons has probability 1e%.1f", n, log10_prob);
    } else {
        std::snprintf(buf, sizeof buf, "detection of %zu photons has probability 0", n);
    }
    return NegligibleBranchError(buf);
}

}  // namespace detail

struct CutoffPolicy {
    double tail_tol = kDefaultTailTol;
    // Lower bound on the cutoff; the tail rule may still pick a larger one.
    std::size_t min_cutoff = 0;
};

struct SubtractedState {
    FockState state;
    double success_probability;
    std::optional<SqueezingSpec> squeezing;  // empty when the input was an arbitrary state
    SubtractionSpec subtraction;
};

/// Unnormalized squeezed-vacuum series truncated at `cutoff`; its norm falls
/// short of one by the discarded tail mass.
inline FockState smsv_series(const SqueezingSpec& spec, std::size_t cutoff) {
    std::vector<FockState::Amplitude> amps(cutoff + 1);
    const double y = spec.y();
    if (y >= 0.5) throw DivergentSqueezingError(y);
    double log_c = -0.5 * numeric::log_cosh(spec.s());
    amps[0] = std::exp(log_c);
    if (y == 0.0) return FockState(std::move(amps));
    const double log_y = std::log(y);
    for (std::size_t k = 0; 2 * k + 2 <= cutoff; ++k) {
        const double dk = static_cast<double>(k);
        log_c += log_y + 0.5 * std::log((2.0 * dk + 1.0) * (2.0 * dk + 2.0)) - std::log(dk + 1.0);
        amps[2 * k + 2] = std::exp(log_c);
    }
    return FockState(std::move(amps));
}

/// Single-mode squeezed vacuum with real positive amplitudes on even levels.
inline FockState make_smsv(const SqueezingSpec& spec, const CutoffPolicy& policy = {}) {
    const std::size_t cutoff = std::max(choose_cutoff(spec, 0, policy.tail_tol), policy.min_cutoff);
    return normalize(smsv_series(spec, cutoff));
}

/// <b^dag^p b^q> for the coherent state |i alpha>, exact.
inline std::complex<double> coherent_moment(const CoherentSpec& spec, std::size_t p, std::size_t q) {
    if (p + q == 0) return 1.0;
    if (spec.alpha == 0.0) return 0.0;
    // conj(i a)^p (i a)^q = a^(p+q) i^(q-p)
    static constexpr std::complex<double> kUnitPowers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const long shift = ((static_cast<long>(q) - static_cast<long>(p)) % 4 + 4) % 4;
    return std::pow(spec.alpha, static_cast<double>(p + q)) * kUnitPowers[shift];
}

/// Reference route for photon subtraction: scatter every |k>|0> through the
/// beam splitter
///   |k>|0> -> sum_j sqrt(C(k,j)) t^(k-j) (-r)^j |k-j>|j>,
/// keep the full two-mode output, then project the reflected mode onto
/// |n_detect>. Quadratic in the cutoff in time and memory.
inline SubtractedState bs_split_condition(const FockState& input, double t, int n_detect) {
    const SubtractionSpec sub(n_detect, t);
    const double r = sub.r();
    const std::size_t top = input.cutoff();
    const auto n = static_cast<std::size_t>(n_detect);
    if (n > top) {
        throw NegligibleBranchError("cannot detect " + std::to_string(n) + " photons from a state truncated at " +
                                    std::to_string(top));
    }

    const std::size_t dim = top + 1;
    std::vector<std::complex<double>> joint(dim * dim);  // index: transmitted * dim + reflected
    const auto c = input.amplitudes();
    for (std::size_t k = 0; k <= top; ++k) {
        if (c[k] == 0.0) continue;
        for (std::size_t j = 0; j <= k; ++j) {
            const double log_mag = 0.5 * numeric::log_choose(k, j) + numeric::k_log(k - j, t) + numeric::k_log(j, r);
            const double sign = (j % 2 == 0) ? 1.0 : -1.0;
            joint[(k - j) * dim + j] += c[k] * (sign * std::exp(log_mag));
        }
    }

    std::vector<FockState::Amplitude> branch(top - n + 1);
    double prob = 0.0;
    for (std::size_t l = 0; l < branch.size(); ++l) {
        branch[l] = joint[l * dim + n];
        prob += std::norm(branch[l]);
    }
    if (!(prob >= kMinBranchProbability)) {
        throw detail::negligible_branch(n, std::log10(prob));
    }
    return {normalize(FockState(std::move(branch))), prob, std::nullopt, sub};
}

/// Fast route for squeezed vacuum: after counting n photons the transmitted
/// mode carries amplitudes on levels l with l = n (mod 2),
///   c_l ~ y1^(l/2) (l+n)! / (((l+n)/2)! sqrt(l! n!)),   y1 = y t^2,
/// and the outcome probability is r^(2n) y^n / cosh(s) * sum_l |c_l|^2.
inline SubtractedState subtracted_closed_form(const SqueezingSpec& sq, const SubtractionSpec& sub,
                                              const CutoffPolicy& policy = {}) {
    const auto n = static_cast<std::size_t>(sub.n());
    const double y = sq.y();
    const double y1 = sub.y1(sq);
    if (y >= 0.5) throw DivergentSqueezingError(y);

    // transparent splitter, nothing counted: the input itself
    if (n == 0 && sub.t() == 1.0) return {make_smsv(sq, policy), 1.0, sq, sub};

    if (y1 == 0.0) {
        if (n > 0) throw NegligibleBranchError("no photons to subtract from the vacuum");
        return {FockState::number(0, std::max<std::size_t>(policy.min_cutoff, kCutoffMargin)), 1.0, sq, sub};
    }

    const std::size_t last = series_cutoff(y1, n, policy.tail_tol);
    const std::size_t cutoff = std::max(last + kCutoffMargin, policy.min_cutoff);
    const std::size_t l0 = n % 2;

    std::vector<double> log_u;
    log_u.reserve(last / 2 + 1);
    const double dn = static_cast<double>(n);
    double lu = 0.5 * static_cast<double>(l0) * std::log(y1) + numeric::log_factorial(l0 + n) -
                std::lgamma(0.5 * static_cast<double>(l0 + n) + 1.0) -
                0.5 * (numeric::log_factorial(l0) + numeric::log_factorial(n));
    for (std::size_t l = l0; l <= last; l += 2) {
        log_u.push_back(lu);
        const double dl = static_cast<double>(l);
        lu += std::log(2.0 * y1 * (dl + dn + 1.0)) - 0.5 * std::log((dl + 1.0) * (dl + 2.0));
    }

    std::vector<double> log_w(log_u.size());
    std::transform(log_u.begin(), log_u.end(), log_w.begin(), [](double v) { return 2.0 * v; });
    const double log_norm = numeric::log_sum_exp(log_w);

    const double log_prob = numeric::k_log(n, (1.0 - sub.t()) * (1.0 + sub.t())) + numeric::k_log(n, y) -
                            numeric::log_cosh(sq.s()) + log_norm;
    const double prob = std::exp(log_prob);
    if (!(prob >= kMinBranchProbability)) {
        throw detail::negligible_branch(static_cast<std::size_t>(sub.n()), log_prob / std::log(10.0));
    }

    std::vector<FockState::Amplitude> amps(cutoff + 1);
    for (std::size_t i = 0; i < log_u.size(); ++i) amps[l0 + 2 * i] = std::exp(log_u[i] - 0.5 * log_norm);
    return {FockState(std::move(amps)), prob, sq, sub};
}

/// Ideal n-fold annihilation a^n |psi>, renormalized.
inline FockState pure_annihilation(const FockState& input, int n) {
    if (n < 0) throw DomainError("annihilation count must be >= 0");
    const auto k = static_cast<std::size_t>(n);
    if (k == 0) return normalize(input);
    if (k > input.cutoff()) throw ZeroStateError("annihilating " + std::to_string(k) + " photons leaves nothing");

    const auto c = input.amplitudes();
    const std::size_t out = input.cutoff() - k + 1;
    std::vector<double> log_mag(out, -std::numeric_limits<double>::infinity());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < out; ++m) {
        if (c[m + k] == 0.0) continue;
        log_mag[m] = std::log(std::abs(c[m + k])) + 0.5 * numeric::log_falling(m + k, k);
        top = std::max(top, log_mag[m]);
    }
    if (!std::isfinite(top)) throw ZeroStateError("input has no support above level " + std::to_string(k - 1));

    std::vector<FockState::Amplitude> amps(out);
    for (std::size_t m = 0; m < out; ++m) {
        if (!std::isfinite(log_mag[m])) continue;
        amps[m] = std::polar(std::exp(log_mag[m] - top), std::arg(c[m + k]));
    }
    return normalize(FockState(std::move(amps)));
}

}  // namespace mzgain
