#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstddef>
#include <map>

#include "mzgain/numeric.hpp"

namespace mzgain {

/// Exponents (p, q, r, s) of the normal-ordered monomial a^dag^p a^q b^dag^r b^s.
using MonomialKey = std::array<std::size_t, 4>;

/// Polynomial in two commuting bosonic modes, kept normal ordered in each
/// mode. Products re-normal-order with
///   a^q a^dag^p = sum_k k! C(q,k) C(p,k) a^dag^(p-k) a^(q-k).
class TwoModePoly {
public:
    using Coeff = std::complex<double>;

    TwoModePoly() = default;

    static TwoModePoly monomial(std::size_t p, std::size_t q, std::size_t r, std::size_t s, Coeff c = 1.0) {
        TwoModePoly out;
        out.terms_[{p, q, r, s}] = c;
        return out;
    }

    const std::map<MonomialKey, Coeff>& terms() const noexcept { return terms_; }

    TwoModePoly& operator+=(const TwoModePoly& rhs) {
        for (const auto& [k, c] : rhs.terms_) terms_[k] += c;
        return *this;
    }
    TwoModePoly& operator*=(Coeff c) {
        for (auto& [k, v] : terms_) v *= c;
        return *this;
    }
    friend TwoModePoly operator+(TwoModePoly a, const TwoModePoly& b) { return a += b; }
    friend TwoModePoly operator-(TwoModePoly a, TwoModePoly b) { return a += (b *= -1.0); }
    friend TwoModePoly operator*(Coeff c, TwoModePoly a) { return a *= c; }

    friend TwoModePoly operator*(const TwoModePoly& lhs, const TwoModePoly& rhs) {
        TwoModePoly out;
        for (const auto& [kl, cl] : lhs.terms_) {
            for (const auto& [kr, cr] : rhs.terms_) {
                // mode a: a^dag^kl0 a^kl1 a^dag^kr0 a^kr1, mode b likewise
                for (std::size_t i = 0; i <= std::min(kl[1], kr[0]); ++i) {
                    const double wa = contraction_weight(kl[1], kr[0], i);
                    for (std::size_t j = 0; j <= std::min(kl[3], kr[2]); ++j) {
                        const double wb = contraction_weight(kl[3], kr[2], j);
                        const MonomialKey key{kl[0] + kr[0] - i, kl[1] + kr[1] - i, kl[2] + kr[2] - j,
                                              kl[3] + kr[3] - j};
                        out.terms_[key] += cl * cr * (wa * wb);
                    }
                }
            }
        }
        return out;
    }

    /// Expectation on a product state given each mode's normal-ordered moments.
    template <typename ModeA, typename ModeB>
    Coeff expectation(ModeA&& moment_a, ModeB&& moment_b) const {
        Coeff acc{};
        for (const auto& [k, c] : terms_) {
            if (c == 0.0) continue;
            acc += c * moment_a(k[0], k[1]) * moment_b(k[2], k[3]);
        }
        return acc;
    }

private:
    // k! C(q,k) C(p,k)
    // = q!/(q-k)! * p!/(p-k)! / k!, exact in double for the low orders used here
    static double contraction_weight(std::size_t q, std::size_t p, std::size_t k) {
        double w = numeric::falling(q, k) * numeric::falling(p, k);
        for (std::size_t i = 2; i <= k; ++i) w /= static_cast<double>(i);
        return w;
    }

    std::map<MonomialKey, Coeff> terms_;
};

namespace schwinger {

/// J_x = (a^dag b + a b^dag) / 2
inline TwoModePoly jx() {
    return 0.5 * (TwoModePoly::monomial(1, 0, 0, 1) + TwoModePoly::monomial(0, 1, 1, 0));
}

/// J_y = (a^dag b - a b^dag) / (2i)
inline TwoModePoly jy() {
    const std::complex<double> half_over_i{0.0, -0.5};
    return half_over_i * (TwoModePoly::monomial(1, 0, 0, 1) - TwoModePoly::monomial(0, 1, 1, 0));
}

/// J_z = (a^dag a - b^dag b) / 2
inline TwoModePoly jz() {
    return 0.5 * (TwoModePoly::monomial(1, 1, 0, 0) - TwoModePoly::monomial(0, 0, 1, 1));
}

}  // namespace schwinger

}  // namespace mzgain
