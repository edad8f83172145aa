#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "mzgain/errors.hpp"
#include "mzgain/fock.hpp"
#include "mzgain/normal_order.hpp"
#include "mzgain/numeric.hpp"
#include "mzgain/params.hpp"
#include "mzgain/state_factory.hpp"

namespace mzgain {

/// Product probe |cv>_1 |i alpha>_2 entering the interferometer.
struct ProbeSpec {
    ProbeSpec(FockState cv, CoherentSpec coh) : cv_state(std::move(cv)), coherent(coh) {
        detail::require_normalized(cv_state);
        if (!(coherent.alpha >= 0.0)) throw DomainError("coherent amplitude must be >= 0");
    }

    FockState cv_state;
    CoherentSpec coherent;
};

enum class Axis : std::size_t { X = 0, Y = 1, Z = 2 };

/// First moments of J_x, J_y, J_z and the symmetrized second moments
/// <J_i J_j + J_j J_i> / 2 (the diagonal is <J_i^2>).
struct SchwingerMoments {
    std::array<double, 3> mean{};
    std::array<std::array<double, 3>, 3> second{};
    // Largest |Im| / max(1, |Re|) seen while assembling; zero up to rounding.
    double imag_residue = 0.0;

    double first(Axis a) const { return mean[idx(a)]; }
    double second_sym(Axis a, Axis b) const { return second[idx(a)][idx(b)]; }
    double var(Axis a) const { return second[idx(a)][idx(a)] - mean[idx(a)] * mean[idx(a)]; }
    double cov_sym(Axis a, Axis b) const { return second[idx(a)][idx(b)] - mean[idx(a)] * mean[idx(b)]; }

private:
    static std::size_t idx(Axis a) { return static_cast<std::size_t>(a); }
};

namespace detail {

struct SchwingerAlgebra {
    std::array<TwoModePoly, 3> ops;
    std::array<std::array<TwoModePoly, 3>, 3> sym_products;

    static const SchwingerAlgebra& get() {
        static const SchwingerAlgebra algebra = [] {
            SchwingerAlgebra a;
            a.ops = {schwinger::jx(), schwinger::jy(), schwinger::jz()};
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j)
                    a.sym_products[i][j] = 0.5 * (a.ops[i] * a.ops[j] + a.ops[j] * a.ops[i]);
            return a;
        }();
        return algebra;
    }
};

}  // namespace detail

/// Two-mode expectations of the product probe, reduced to single-mode
/// moments of the CV state times exact coherent eigen-moments.
inline SchwingerMoments schwinger_moments(const ProbeSpec& probe) {
    const auto& algebra = detail::SchwingerAlgebra::get();
    std::map<std::pair<std::size_t, std::size_t>, std::complex<double>> cache;
    auto moment_a = [&](std::size_t p, std::size_t q) {
        auto [it, fresh] = cache.try_emplace({p, q});
        if (fresh) it->second = mode_moment(probe.cv_state, p, q);
        return it->second;
    };
    auto moment_b = [&](std::size_t r, std::size_t s) { return coherent_moment(probe.coherent, r, s); };

    SchwingerMoments out;
    auto take_real = [&](std::complex<double> v) {
        out.imag_residue = std::max(out.imag_residue, std::abs(v.imag()) / std::max(1.0, std::abs(v.real())));
        return v.real();
    };
    for (std::size_t i = 0; i < 3; ++i) {
        out.mean[i] = take_real(algebra.ops[i].expectation(moment_a, moment_b));
        for (std::size_t j = 0; j < 3; ++j)
            out.second[i][j] = take_real(algebra.sym_products[i][j].expectation(moment_a, moment_b));
    }
    return out;
}

/// Quantum Fisher information of a pure probe under the generator J_y.
inline double qfi_from_moments(const SchwingerMoments& m) { return std::max(0.0, 4.0 * m.var(Axis::Y)); }

inline double qfi_product(const ProbeSpec& probe) { return qfi_from_moments(schwinger_moments(probe)); }

inline double qcr_bound(double fisher) {
    if (!(fisher > 0.0) || !std::isfinite(fisher))
        throw NoInformationError("Fisher information " + std::to_string(fisher) + " carries no phase information");
    return 1.0 / std::sqrt(fisher);
}

/// Closed-form QFI of the subtracted probe,
///   F = 2(1 + 2 y1) <n> alpha^2 + (1 + 4 y1 (n + 1)) alpha^2 + <n>.
/// Reported next to the moment-based value, never substituted for it.
inline double qfi_closed_subtracted(double y1, int n, double mean_n, double alpha) {
    const double a2 = alpha * alpha;
    return 2.0 * (1.0 + 2.0 * y1) * mean_n * a2 + (1.0 + 4.0 * y1 * (n + 1.0)) * a2 + mean_n;
}

inline double qfi_closed_subtracted(const SqueezingSpec& sq, const SubtractionSpec& sub, double mean_n,
                                    double alpha) {
    return qfi_closed_subtracted(sub.y1(sq), sub.n(), mean_n, alpha);
}

/// Gain in dB of a probe over the baseline; positive when the probe is better.
inline double gain_db(double dphi_probe, double dphi_baseline) {
    if (!(dphi_probe > 0.0) || !(dphi_baseline > 0.0) || !std::isfinite(dphi_probe) ||
        !std::isfinite(dphi_baseline))
        throw DomainError("gain needs finite positive uncertainties");
    return numeric::db_from_ratio(dphi_probe / dphi_baseline);
}

struct ReferenceBounds {
    double hl;
    double sql;
};

inline ReferenceBounds hl_sql(double mean_n_cv, double alpha) {
    if (!(mean_n_cv >= 0.0) || !(alpha >= 0.0)) throw DomainError("photon numbers must be >= 0");
    const double total = mean_n_cv + alpha * alpha;
    if (!(total > 0.0)) throw DomainError("reference bounds undefined for zero photons");
    return {1.0 / total, 1.0 / std::sqrt(total)};
}

struct JzStats {
    double mean;
    double variance;
};

/// Output J_z after the interferometer, J_z^out = cos(phi) J_z - sin(phi) J_x.
/// At phi = pi/2 the detected quadrature is the squeezed one for |i alpha>.
inline JzStats mz_jz_stats(const SchwingerMoments& m, double phi) {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double mean = c * m.first(Axis::Z) - s * m.first(Axis::X);
    const double var = c * c * m.var(Axis::Z) + s * s * m.var(Axis::X) - 2.0 * s * c * m.cov_sym(Axis::Z, Axis::X);
    return {mean, std::max(0.0, var)};
}

inline JzStats mz_jz_stats(const ProbeSpec& probe, double phi) { return mz_jz_stats(schwinger_moments(probe), phi); }

/// Error-propagation phase uncertainty of the output intensity difference,
/// Delta J_z^out / |d<J_z^out>/dphi|. For definite-parity CV states <J_x> = 0
/// and the slope is |sin(phi) <J_z>|.
inline double phase_uncertainty_intensity(const SchwingerMoments& m, double phi) {
    const auto stats = mz_jz_stats(m, phi);
    const double slope = std::abs(std::sin(phi) * m.first(Axis::Z) + std::cos(phi) * m.first(Axis::X));
    const double scale = 1.0 + std::sqrt(std::abs(m.second_sym(Axis::Z, Axis::Z)) + std::abs(m.second_sym(Axis::X, Axis::X)));
    if (!(slope > 1e-14 * scale)) {
        throw UndefinedSlopeError("intensity signal has zero slope at phi = " + std::to_string(phi) +
                                  " (blind working point)");
    }
    return std::sqrt(stats.variance) / slope;
}

inline double phase_uncertainty_intensity(const ProbeSpec& probe, double phi) {
    return phase_uncertainty_intensity(schwinger_moments(probe), phi);
}

/// Everything derived from a single probe.
struct ProbeMetrics {
    double fisher = 0.0;
    double dphi_qcr = 0.0;
    std::optional<double> dphi_intensity;
    std::string intensity_error;
    double mean_n_cv = 0.0;
    double n_total = 0.0;
    ReferenceBounds bounds{};
};

inline ProbeMetrics evaluate_probe(const ProbeSpec& probe, double phi) {
    const auto moments = schwinger_moments(probe);
    ProbeMetrics out;
    out.fisher = qfi_from_moments(moments);
    out.dphi_qcr = qcr_bound(out.fisher);
    out.mean_n_cv = mean_photon(probe.cv_state);
    out.n_total = out.mean_n_cv + probe.coherent.mean_photon();
    out.bounds = hl_sql(out.mean_n_cv, probe.coherent.alpha);
    try {
        out.dphi_intensity = phase_uncertainty_intensity(moments, phi);
    } catch (const UndefinedSlopeError& e) {
        out.intensity_error = e.what();
    }
    return out;
}

/// One grid point: squeezing, subtraction and coherent amplitude.
struct PointSpec {
    double s_db = 0.0;
    int n = 0;
    double t = 1.0;
    double alpha = 1.0;
    double phi = numeric::kPi / 2.0;
    double tail_tol = kDefaultTailTol;
};

struct SensitivityReport {
    PointSpec point;
    double s = 0.0;
    double y = 0.0;
    double y1 = 0.0;
    double success_probability = 0.0;
    double mean_n_cv = 0.0;
    double n_total = 0.0;
    double fisher = 0.0;
    double fisher_eq6 = 0.0;
    double eq6_rel_dev = 0.0;
    double dphi_qcr = 0.0;
    double dphi_intensity = 0.0;  // NaN when the intensity estimator is blind
    double g_qcr_db = 0.0;
    double g_intensity_db = 0.0;  // NaN when either side is blind
    double hl = 0.0;
    double sql = 0.0;
    std::string note;
};

/// Baseline probe: unsubtracted squeezed vacuum at the same S and alpha.
inline ProbeMetrics evaluate_baseline(const SqueezingSpec& sq, double alpha, double phi, double tail_tol) {
    return evaluate_probe(ProbeSpec(make_smsv(sq, {tail_tol}), CoherentSpec{alpha}), phi);
}

inline SensitivityReport assemble_report(const PointSpec& point, const SubtractedState& conditioned,
                                         const ProbeMetrics& probe, const ProbeMetrics& baseline) {
    const auto sq = SqueezingSpec::from_db(point.s_db);
    const SubtractionSpec sub(point.n, point.t);
    SensitivityReport rep;
    rep.point = point;
    rep.s = sq.s();
    rep.y = sq.y();
    rep.y1 = sub.y1(sq);
    rep.success_probability = conditioned.success_probability;
    rep.mean_n_cv = probe.mean_n_cv;
    rep.n_total = probe.n_total;
    rep.fisher = probe.fisher;
    rep.fisher_eq6 = qfi_closed_subtracted(sq, sub, probe.mean_n_cv, point.alpha);
    rep.eq6_rel_dev = std::abs(rep.fisher_eq6 - probe.fisher) / probe.fisher;
    rep.dphi_qcr = probe.dphi_qcr;
    rep.g_qcr_db = gain_db(probe.dphi_qcr, baseline.dphi_qcr);
    rep.hl = probe.bounds.hl;
    rep.sql = probe.bounds.sql;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.dphi_intensity = probe.dphi_intensity.value_or(nan);
    if (probe.dphi_intensity && baseline.dphi_intensity) {
        rep.g_intensity_db = gain_db(*probe.dphi_intensity, *baseline.dphi_intensity);
    } else {
        rep.g_intensity_db = nan;
        rep.note = !probe.intensity_error.empty() ? probe.intensity_error
                                                  : "baseline: " + baseline.intensity_error;
    }
    return rep;
}

/// Conditioned CV state for a grid point; n = 0, t = 1 is the baseline itself.
inline SubtractedState conditioned_state(const PointSpec& point) {
    const auto sq = SqueezingSpec::from_db(point.s_db);
    return subtracted_closed_form(sq, SubtractionSpec(point.n, point.t), {point.tail_tol});
}

inline SensitivityReport evaluate_point(const PointSpec& point) {
    const auto sq = SqueezingSpec::from_db(point.s_db);
    const auto conditioned = conditioned_state(point);
    const auto probe = evaluate_probe(ProbeSpec(conditioned.state, CoherentSpec{point.alpha}), point.phi);
    const auto baseline = evaluate_baseline(sq, point.alpha, point.phi, point.tail_tol);
    return assemble_report(point, conditioned, probe, baseline);
}

/// QCR gain of the subtracted probe over squeezed vacuum at squeezing s_db.
inline double qcr_gain_db(double s_db, int n, double alpha, double t, double tail_tol = kDefaultTailTol) {
    const auto sq = SqueezingSpec::from_db(s_db);
    const auto conditioned = subtracted_closed_form(sq, SubtractionSpec(n, t), {tail_tol});
    const double f_probe = qfi_product(ProbeSpec(conditioned.state, CoherentSpec{alpha}));
    const double f_base = qfi_product(ProbeSpec(make_smsv(sq, {tail_tol}), CoherentSpec{alpha}));
    return gain_db(qcr_bound(f_probe), qcr_bound(f_base));
}

struct CrossingSearch {
    double s_lo_db = 10.0;
    double s_hi_db = 45.0;
    double scan_step_db = 0.5;
    double tol_db = 1e-4;
    double tail_tol = kDefaultTailTol;
};

/// Squeezing S2 (dB) where the QCR bound of the subtracted probe meets the
/// squeezed-vacuum baseline. The first sign change of the gain on a coarse
/// scan is bracketed and then bisected.
inline double find_crossing_s2(int n, double alpha, double t, const CrossingSearch& search = {}) {
    if (!(search.s_hi_db > search.s_lo_db) || !(search.scan_step_db > 0.0) || !(search.tol_db > 0.0))
        throw DomainError("crossing search needs s_lo < s_hi and positive step and tolerance");
    auto gain = [&](double s_db) { return qcr_gain_db(s_db, n, alpha, t, search.tail_tol); };

    double lo = search.s_lo_db;
    double g_lo = gain(lo);
    std::optional<double> hi;
    while (lo < search.s_hi_db) {
        const double next = std::min(lo + search.scan_step_db, search.s_hi_db);
        const double g_next = gain(next);
        if ((g_lo > 0.0) != (g_next > 0.0)) {
            hi = next;
            break;
        }
        lo = next;
        g_lo = g_next;
    }
    if (!hi) {
        throw NoCrossingError("gain keeps one sign over [" + std::to_string(search.s_lo_db) + ", " +
                              std::to_string(search.s_hi_db) + "] dB");
    }

    const bool lo_positive = g_lo > 0.0;
    double upper = *hi;
    while (upper - lo > search.tol_db) {
        const double mid = 0.5 * (lo + upper);
        if ((gain(mid) > 0.0) == lo_positive) {
            lo = mid;
        } else {
            upper = mid;
        }
    }
    return 0.5 * (lo + upper);
}

}  // namespace mzgain
