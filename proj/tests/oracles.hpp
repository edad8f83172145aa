#pragma once

// Test-only reference computations. Nothing here calls into the moment
// algebra of the library; states are handled as explicit two-mode vectors.

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "mzgain/fock.hpp"

namespace mzgain::oracle {

using cplx = std::complex<double>;

/// Two-mode state psi[m1 * dim2 + m2] with room to raise either mode once.
struct JointState {
    std::size_t dim1 = 0;
    std::size_t dim2 = 0;
    std::vector<cplx> amp;

    cplx& at(std::size_t m1, std::size_t m2) { return amp[m1 * dim2 + m2]; }
    cplx at(std::size_t m1, std::size_t m2) const { return amp[m1 * dim2 + m2]; }
};

inline JointState product(const FockState& mode1, const FockState& mode2) {
    JointState js{mode1.size() + 2, mode2.size() + 2, {}};
    js.amp.assign(js.dim1 * js.dim2, 0.0);
    for (std::size_t i = 0; i < mode1.size(); ++i)
        for (std::size_t j = 0; j < mode2.size(); ++j) js.at(i, j) = mode1[i] * mode2[j];
    return js;
}

enum class Op { Jx, Jy, Jz };

/// J psi computed term by term from the ladder-operator matrix elements.
inline JointState apply(Op op, const JointState& in) {
    JointState out{in.dim1, in.dim2, std::vector<cplx>(in.amp.size())};
    const cplx i_unit{0.0, 1.0};
    for (std::size_t m1 = 0; m1 < in.dim1; ++m1) {
        for (std::size_t m2 = 0; m2 < in.dim2; ++m2) {
            const cplx c = in.at(m1, m2);
            if (c == 0.0) continue;
            if (op == Op::Jz) {
                out.at(m1, m2) += 0.5 * (double(m1) - double(m2)) * c;
                continue;
            }
            // a^dag b |m1, m2> = sqrt((m1+1) m2) |m1+1, m2-1>
            // a b^dag |m1, m2> = sqrt(m1 (m2+1)) |m1-1, m2+1>
            cplx up{};
            cplx down{};
            if (m2 > 0 && m1 + 1 < in.dim1) up = std::sqrt(double(m1 + 1) * double(m2)) * c;
            if (m1 > 0 && m2 + 1 < in.dim2) down = std::sqrt(double(m1) * double(m2 + 1)) * c;
            if (op == Op::Jx) {
                if (m2 > 0 && m1 + 1 < in.dim1) out.at(m1 + 1, m2 - 1) += 0.5 * up;
                if (m1 > 0 && m2 + 1 < in.dim2) out.at(m1 - 1, m2 + 1) += 0.5 * down;
            } else {
                if (m2 > 0 && m1 + 1 < in.dim1) out.at(m1 + 1, m2 - 1) += up / (2.0 * i_unit);
                if (m1 > 0 && m2 + 1 < in.dim2) out.at(m1 - 1, m2 + 1) -= down / (2.0 * i_unit);
            }
        }
    }
    return out;
}

inline cplx inner(const JointState& a, const JointState& b) {
    cplx acc{};
    for (std::size_t k = 0; k < a.amp.size(); ++k) acc += std::conj(a.amp[k]) * b.amp[k];
    return acc;
}

struct ObservableStats {
    double mean;
    double variance;
};

/// Mean and variance of cos(phi) J_z - sin(phi) J_x.
inline ObservableStats rotated_jz(const JointState& psi, double phi) {
    const auto jz = apply(Op::Jz, psi);
    const auto jx = apply(Op::Jx, psi);
    JointState o{psi.dim1, psi.dim2, std::vector<cplx>(psi.amp.size())};
    for (std::size_t k = 0; k < o.amp.size(); ++k) o.amp[k] = std::cos(phi) * jz.amp[k] - std::sin(phi) * jx.amp[k];
    const double mean = inner(psi, o).real();
    const double second = inner(o, o).real();
    return {mean, second - mean * mean};
}

inline double variance(Op op, const JointState& psi) {
    const auto j = apply(op, psi);
    const double mean = inner(psi, j).real();
    return inner(j, j).real() - mean * mean;
}

/// Random normalized state with complex amplitudes on 0..cutoff.
inline FockState random_state(std::mt19937& rng, std::size_t cutoff) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> amps(cutoff + 1);
    for (auto& c : amps) c = {g(rng), g(rng)};
    return normalize(FockState(std::move(amps)));
}

}  // namespace mzgain::oracle
