#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mzgain/errors.hpp"
#include "mzgain/metrology.hpp"
#include "mzgain/numeric.hpp"

namespace mzgain {

enum class SweepMode { QcrVsS, GainVsS, IntensityDphiVsS, SinglePoint, CrossingS2 };
enum class TableFormat { Csv, Json };

inline const char* to_string(SweepMode m) {
    switch (m) {
        case SweepMode::QcrVsS: return "qcr_vs_S";
        case SweepMode::GainVsS: return "gain_vs_S";
        case SweepMode::IntensityDphiVsS: return "intensity_dphi_vs_S";
        case SweepMode::SinglePoint: return "single_point";
        case SweepMode::CrossingS2: return "crossing_s2";
    }
    return "?";
}

inline SweepMode parse_mode(const std::string& text) {
    for (auto m : {SweepMode::QcrVsS, SweepMode::GainVsS, SweepMode::IntensityDphiVsS, SweepMode::SinglePoint,
                   SweepMode::CrossingS2}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError("mode", "unknown mode '" + text + "'");
}

inline TableFormat parse_format(const std::string& text) {
    if (text == "csv") return TableFormat::Csv;
    if (text == "json") return TableFormat::Json;
    throw ConfigError("format", "expected csv or json, got '" + text + "'");
}

struct SweepConfig {
    SweepMode mode = SweepMode::SinglePoint;
    std::vector<double> s_db{0.0};
    std::vector<int> n{0};
    std::vector<double> alpha{1.0};
    std::vector<double> t{1.0};
    double phi = numeric::kPi / 2.0;
    double tail_tol = kDefaultTailTol;
    // crossing_s2 only: coarse scan step before bisection
    double scan_step_db = 0.5;
    std::string output;
    TableFormat format = TableFormat::Csv;

    void validate() const {
        if (s_db.empty()) throw ConfigError("S_dB", "grid is empty");
        if (n.empty()) throw ConfigError("n", "grid is empty");
        if (alpha.empty()) throw ConfigError("alpha", "grid is empty");
        if (t.empty()) throw ConfigError("t", "grid is empty");
        for (double v : s_db)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("S_dB", "values must be finite and >= 0");
        for (int v : n)
            if (v < 0) throw ConfigError("n", "values must be >= 0");
        for (double v : alpha)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("alpha", "values must be finite and >= 0");
        for (double v : t)
            if (!(v > 0.0 && v <= 1.0)) throw ConfigError("t", "values must lie in (0, 1]");
        if (!std::isfinite(phi)) throw ConfigError("phi", "must be finite");
        if (!(tail_tol > 0.0 && tail_tol < 1.0)) throw ConfigError("tail_tol", "must lie in (0, 1)");
        if (!(scan_step_db > 0.0)) throw ConfigError("scan_step_db", "must be positive");
        if (mode == SweepMode::SinglePoint && (s_db.size() != 1 || n.size() != 1 || alpha.size() != 1 || t.size() != 1))
            throw ConfigError("mode", "single_point needs exactly one value per grid");
        if (mode == SweepMode::CrossingS2 && s_db.size() < 2)
            throw ConfigError("S_dB", "crossing_s2 needs a range (at least two values)");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& field, const std::string& raw) {
    const std::string text = trim(raw);
    // "pi", "pi/2", "2pi" style shorthands for phases
    if (auto pos = text.find("pi"); pos != std::string::npos) {
        double factor = 1.0;
        if (pos > 0) factor = parse_number(field, text.substr(0, pos));
        const std::string rest = trim(text.substr(pos + 2));
        if (rest.empty()) return factor * numeric::kPi;
        if (rest[0] == '/') return factor * numeric::kPi / parse_number(field, rest.substr(1));
        throw ConfigError(field, "cannot parse '" + text + "'");
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(field, "cannot parse '" + text + "' as a number");
    }
}

/// "a, b, c" or an inclusive range "start:stop:step".
inline std::vector<double> parse_grid(const std::string& field, const std::string& raw) {
    const std::string text = trim(raw);
    if (text.empty()) throw ConfigError(field, "empty value");
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
        if (parts.size() != 3) throw ConfigError(field, "range must be start:stop:step");
        const double start = parse_number(field, parts[0]);
        const double stop = parse_number(field, parts[1]);
        const double step = parse_number(field, parts[2]);
        if (!(step > 0.0) || stop < start) throw ConfigError(field, "range needs step > 0 and stop >= start");
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        if (count > 10'000'000) throw ConfigError(field, "range too long");
        for (std::size_t i = 0; i < count; ++i) {
            // snap to 1e-9 so 0.1-dB grids print as short decimals
            out.push_back(std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9);
        }
        return out;
    }
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) out.push_back(parse_number(field, part));
    return out;
}

inline std::vector<int> to_int_grid(const std::string& field, const std::vector<double>& values) {
    std::vector<int> out;
    for (double v : values) {
        if (v != std::floor(v) || std::abs(v) > 1e6) throw ConfigError(field, "values must be integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

inline void apply_setting(SweepConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "mode") {
        cfg.mode = parse_mode(trim(value));
    } else if (key == "S_dB") {
        cfg.s_db = parse_grid(key, value);
    } else if (key == "n") {
        cfg.n = to_int_grid(key, parse_grid(key, value));
    } else if (key == "alpha") {
        cfg.alpha = parse_grid(key, value);
    } else if (key == "t") {
        cfg.t = parse_grid(key, value);
    } else if (key == "phi") {
        cfg.phi = parse_number(key, value);
    } else if (key == "tail_tol") {
        cfg.tail_tol = parse_number(key, value);
    } else if (key == "scan_step_db") {
        cfg.scan_step_db = parse_number(key, value);
    } else if (key == "output") {
        cfg.output = trim(value);
    } else if (key == "format") {
        cfg.format = parse_format(trim(value));
    } else {
        throw ConfigError(key, "unknown key");
    }
}

inline std::string json_value_text(const std::string& key, const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    if (v.is_array()) {
        std::string joined;
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(key, "array entries must be numbers");
            if (!joined.empty()) joined += ",";
            joined += json_value_text(key, e);
        }
        return joined;
    }
    throw ConfigError(key, "unsupported JSON value");
}

}  // namespace detail

/// Parses either a flat "key = value" file (with # comments) or a JSON
/// object carrying the same keys. Unset keys keep their defaults.
inline SweepConfig parse_config(const std::string& text, SweepConfig cfg = {}) {
    const std::string body = detail::trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("<json>", e.what());
        }
        for (const auto& [key, value] : doc.items()) detail::apply_setting(cfg, key, detail::json_value_text(key, value));
    } else {
        std::istringstream in(text);
        int lineno = 0;
        for (std::string line; std::getline(in, line);) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = detail::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(lineno), "expected key = value");
            detail::apply_setting(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
        }
    }
    cfg.validate();
    return cfg;
}

inline SweepConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Named configurations that regenerate the figures and headline numbers.
inline std::map<std::string, SweepConfig> presets() {
    std::map<std::string, SweepConfig> out;
    const auto s_grid = detail::parse_grid("S_dB", "0.1:20:0.1");

    auto make = [&](SweepMode mode, std::vector<int> n, std::vector<double> alpha, std::vector<double> t,
                    const std::string& name) {
        SweepConfig c;
        c.mode = mode;
        c.s_db = s_grid;
        c.n = std::move(n);
        c.alpha = std::move(alpha);
        c.t = std::move(t);
        c.output = name + ".csv";
        return c;
    };

    // n = 80 rows carry the HL/SQL reference curves
    const std::vector<int> fig2_n{1, 2, 3, 4, 6, 10, 80};
    out["fig2a"] = make(SweepMode::QcrVsS, fig2_n, {1.0}, {0.9}, "fig2a");
    out["fig2b"] = make(SweepMode::QcrVsS, fig2_n, {1.0}, {0.99}, "fig2b");
    out["fig2c"] = make(SweepMode::QcrVsS, fig2_n, {100.0}, {0.9}, "fig2c");
    out["fig2d"] = make(SweepMode::QcrVsS, fig2_n, {100.0}, {0.99}, "fig2d");

    const std::vector<int> fig3_n{2, 4, 6, 10, 20, 40, 80, 100, 120};
    for (double t : {0.9, 0.99}) {
        for (double a : {1.0, 100.0}) {
            std::ostringstream name;
            name << "fig3-t" << t << "-alpha" << a;
            out[name.str()] = make(SweepMode::GainVsS, fig3_n, {a}, {t}, name.str());
        }
    }

    out["fig4"] = make(SweepMode::IntensityDphiVsS, {2, 3, 4, 6}, {1.0, 100.0}, {0.9, 0.99}, "fig4");

    auto headline = make(SweepMode::IntensityDphiVsS, {4, 6}, {100.0}, {0.9, 0.99}, "headline");
    headline.s_db = {1.02, 1.53};
    out["headline"] = headline;

    auto crossing = make(SweepMode::CrossingS2, {2, 4, 6, 10}, {1.0, 100.0}, {0.9, 0.99}, "crossing");
    crossing.s_db = {10.0, 45.0};
    out["crossing"] = crossing;
    return out;
}

inline SweepConfig preset(const std::string& name) {
    const auto all = presets();
    const auto it = all.find(name);
    if (it == all.end()) throw ConfigError("preset", "unknown preset '" + name + "'");
    return it->second;
}

/// One grid point of a sweep. Numeric failures land in the note instead of
/// aborting the sweep.
struct SweepRow {
    SensitivityReport report;
    std::string error_note;
};

struct CrossingRow {
    int n = 0;
    double alpha = 0.0;
    double t = 1.0;
    double s2_db = std::numeric_limits<double>::quiet_NaN();
    std::string error_note;
};

struct SweepTable {
    SweepMode mode = SweepMode::SinglePoint;
    std::vector<SweepRow> rows;
    std::vector<CrossingRow> crossings;

    bool empty() const noexcept { return rows.empty() && crossings.empty(); }
    bool partial() const {
        return std::any_of(rows.begin(), rows.end(), [](const auto& r) { return !r.error_note.empty(); }) ||
               std::any_of(crossings.begin(), crossings.end(), [](const auto& r) { return !r.error_note.empty(); });
    }
};

/// Worker count: hardware concurrency, capped by MZGAIN_THREADS when set.
inline unsigned sweep_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MZGAIN_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
}

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline void flag_non_finite(SweepRow& row) {
    if (!row.error_note.empty()) return;
    const auto& r = row.report;
    const std::pair<const char*, double> fields[] = {
        {"mean_n_cv", r.mean_n_cv}, {"success_prob", r.success_probability}, {"F_numeric", r.fisher},
        {"F_eq6", r.fisher_eq6},   {"eq6_rel_dev", r.eq6_rel_dev},         {"dphi_qcr", r.dphi_qcr},
        {"dphi_intensity", r.dphi_intensity}, {"g_qcr_db", r.g_qcr_db},    {"g_intensity_db", r.g_intensity_db},
        {"hl", r.hl},              {"sql", r.sql}};
    for (const auto& [name, v] : fields) {
        if (!std::isfinite(v)) {
            row.error_note = std::string("non-finite ") + name;
            return;
        }
    }
}

inline SweepRow failed_row(const PointSpec& point, const std::string& why) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    SweepRow row;
    auto& r = row.report;
    r.point = point;
    try {
        const auto sq = SqueezingSpec::from_db(point.s_db);
        r.s = sq.s();
        r.y = sq.y();
        r.y1 = sq.y() * point.t * point.t;
    } catch (const Error&) {
        r.s = r.y = r.y1 = nan;
    }
    r.success_probability = r.mean_n_cv = r.n_total = r.fisher = r.fisher_eq6 = r.eq6_rel_dev = nan;
    r.dphi_qcr = r.dphi_intensity = r.g_qcr_db = r.g_intensity_db = r.hl = r.sql = nan;
    row.error_note = why;
    return row;
}

inline SweepTable run_crossings(const SweepConfig& cfg, unsigned threads) {
    const auto ns = sorted_unique(cfg.n);
    const auto alphas = sorted_unique(cfg.alpha);
    const auto ts = sorted_unique(cfg.t);
    const auto range = std::minmax_element(cfg.s_db.begin(), cfg.s_db.end());

    SweepTable table;
    table.mode = cfg.mode;
    for (int n : ns)
        for (double a : alphas)
            for (double t : ts) table.crossings.push_back({n, a, t, std::numeric_limits<double>::quiet_NaN(), {}});

    CrossingSearch search;
    search.s_lo_db = *range.first;
    search.s_hi_db = *range.second;
    search.scan_step_db = cfg.scan_step_db;
    search.tail_tol = cfg.tail_tol;
    parallel_for(table.crossings.size(), threads, [&](std::size_t i) {
        auto& row = table.crossings[i];
        try {
            row.s2_db = find_crossing_s2(row.n, row.alpha, row.t, search);
        } catch (const Error& e) {
            row.error_note = e.what();
        }
    });
    return table;
}

}  // namespace detail

/// Evaluates every grid point. Grid modes add one baseline row (n = 0, t = 1)
/// per (S, alpha); rows are ordered by (S_dB, alpha, n, t) regardless of the
/// number of workers.
inline SweepTable run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    const unsigned threads = sweep_threads();
    if (cfg.mode == SweepMode::CrossingS2) return detail::run_crossings(cfg, threads);

    const auto s_grid = detail::sorted_unique(cfg.s_db);
    const auto alphas = detail::sorted_unique(cfg.alpha);
    auto ns = cfg.n;
    auto ts = cfg.t;
    const bool with_baseline = cfg.mode != SweepMode::SinglePoint;

    using Key = std::tuple<double, double, int, double>;
    std::set<Key> keys;
    for (double s : s_grid) {
        for (double a : alphas) {
            if (with_baseline) keys.insert({s, a, 0, 1.0});
            for (int n : ns)
                for (double t : ts) keys.insert({s, a, n, t});
        }
    }
    std::vector<Key> points(keys.begin(), keys.end());

    // baseline metrics once per (S, alpha), reused by every row sharing them
    std::vector<std::pair<double, double>> base_keys;
    for (double s : s_grid)
        for (double a : alphas) base_keys.emplace_back(s, a);
    std::vector<std::optional<ProbeMetrics>> base(base_keys.size());
    std::vector<std::string> base_error(base_keys.size());
    detail::parallel_for(base_keys.size(), threads, [&](std::size_t i) {
        try {
            base[i] = evaluate_baseline(SqueezingSpec::from_db(base_keys[i].first), base_keys[i].second, cfg.phi,
                                        cfg.tail_tol);
        } catch (const Error& e) {
            base_error[i] = std::string("baseline: ") + e.what();
        }
    });
    auto base_index = [&](double s, double a) {
        const auto it = std::lower_bound(base_keys.begin(), base_keys.end(), std::make_pair(s, a));
        return static_cast<std::size_t>(it - base_keys.begin());
    };

    SweepTable table;
    table.mode = cfg.mode;
    table.rows.resize(points.size());
    detail::parallel_for(points.size(), threads, [&](std::size_t i) {
        const auto& [s, a, n, t] = points[i];
        const PointSpec point{s, n, t, a, cfg.phi, cfg.tail_tol};
        const std::size_t bi = base_index(s, a);
        SweepRow row;
        try {
            if (!base[bi]) throw Error(base_error[bi]);
            const auto conditioned = conditioned_state(point);
            const bool is_baseline = n == 0 && t == 1.0;
            const auto metrics = is_baseline
                                     ? *base[bi]
                                     : evaluate_probe(ProbeSpec(conditioned.state, CoherentSpec{a}), cfg.phi);
            row.report = assemble_report(point, conditioned, metrics, *base[bi]);
            row.error_note = row.report.note;
        } catch (const Error& e) {
            row = detail::failed_row(point, e.what());
        }
        detail::flag_non_finite(row);
        table.rows[i] = std::move(row);
    });
    return table;
}

}  // namespace mzgain
