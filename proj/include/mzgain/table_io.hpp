#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mzgain/errors.hpp"
#include "mzgain/sweep.hpp"

namespace mzgain {

inline constexpr std::array<std::string_view, 20> kSweepColumns = {
    "S_dB",     "s",        "y",           "n",        "t",              "y1",       "alpha",
    "phi",      "mean_n_cv", "success_prob", "F_numeric", "F_eq6",       "eq6_rel_dev", "dphi_qcr",
    "dphi_intensity", "g_qcr_db", "g_intensity_db", "hl", "sql", "error_note"};

inline constexpr std::array<std::string_view, 5> kCrossingColumns = {"n", "alpha", "t", "S2_dB", "error_note"};

inline constexpr std::string_view kUnitsLine =
    "# units: S_dB, S2_dB, g_qcr_db, g_intensity_db in dB; phi, dphi_qcr, dphi_intensity, hl, sql in radians; "
    "others dimensionless";

namespace detail {

inline std::string fmt_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";  // no "-0"
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.13g", v);
    return buf;
}

// Notes never contain the separator, so CSV needs no quoting.
inline std::string sanitize_note(std::string note) {
    for (char& c : note)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return note;
}

inline std::vector<double> row_numbers(const SweepRow& row) {
    const auto& r = row.report;
    const auto& p = r.point;
    return {p.s_db, r.s, r.y, static_cast<double>(p.n), p.t, r.y1, p.alpha, p.phi, r.mean_n_cv,
            r.success_probability, r.fisher, r.fisher_eq6, r.eq6_rel_dev, r.dphi_qcr, r.dphi_intensity,
            r.g_qcr_db, r.g_intensity_db, r.hl, r.sql};
}

inline nlohmann::json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

}  // namespace detail

inline std::string to_csv(const SweepTable& table) {
    if (table.empty()) throw EmptyTableError();
    std::ostringstream os;
    os << kUnitsLine << '\n';
    if (table.mode == SweepMode::CrossingS2) {
        for (std::size_t i = 0; i < kCrossingColumns.size(); ++i) os << (i ? "," : "") << kCrossingColumns[i];
        os << '\n';
        for (const auto& c : table.crossings) {
            os << c.n << ',' << detail::fmt_real(c.alpha) << ',' << detail::fmt_real(c.t) << ','
               << detail::fmt_real(c.s2_db) << ',' << detail::sanitize_note(c.error_note) << '\n';
        }
        return os.str();
    }
    for (std::size_t i = 0; i < kSweepColumns.size(); ++i) os << (i ? "," : "") << kSweepColumns[i];
    os << '\n';
    for (const auto& row : table.rows) {
        const auto nums = detail::row_numbers(row);
        for (std::size_t i = 0; i < nums.size(); ++i) {
            if (i) os << ',';
            if (i == 3) {
                os << row.report.point.n;
            } else {
                os << detail::fmt_real(nums[i]);
            }
        }
        os << ',' << detail::sanitize_note(row.error_note) << '\n';
    }
    return os.str();
}

inline nlohmann::json to_json(const SweepTable& table) {
    if (table.empty()) throw EmptyTableError();
    auto out = nlohmann::json::array();
    if (table.mode == SweepMode::CrossingS2) {
        for (const auto& c : table.crossings) {
            out.push_back({{"n", c.n},
                           {"alpha", c.alpha},
                           {"t", c.t},
                           {"S2_dB", detail::json_number(c.s2_db)},
                           {"error_note", c.error_note}});
        }
        return out;
    }
    for (const auto& row : table.rows) {
        const auto nums = detail::row_numbers(row);
        nlohmann::json obj = nlohmann::json::object();
        for (std::size_t i = 0; i < nums.size(); ++i) {
            const std::string key(kSweepColumns[i]);
            if (i == 3) {
                obj[key] = row.report.point.n;
            } else {
                obj[key] = detail::json_number(nums[i]);
            }
        }
        obj["error_note"] = row.error_note;
        out.push_back(std::move(obj));
    }
    return out;
}

inline std::string emit(const SweepTable& table, TableFormat format) {
    if (format == TableFormat::Json) return to_json(table).dump(2) + "\n";
    return to_csv(table);
}

/// Writes via a sibling temporary file and a rename, so readers never see a
/// half-written table.
inline void write_table(const SweepTable& table, const std::string& path, TableFormat format) {
    const std::string text = emit(table, format);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp, "cannot open for writing");
        out << text;
        out.flush();
        if (!out) throw IoError(tmp, "write failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(path, "cannot move table into place");
    }
}

/// Reads back a sweep table written by to_csv (grid modes only).
inline std::vector<SweepRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    std::vector<SweepRow> rows;
    auto parse_real = [](const std::string& s) {
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        return std::stod(s);
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != kSweepColumns.size()) throw DomainError("CSV row has wrong column count");
        if (!header_seen) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] != kSweepColumns[i]) throw DomainError("unexpected CSV header " + cells[i]);
            header_seen = true;
            continue;
        }
        SweepRow row;
        auto& r = row.report;
        auto& p = r.point;
        p.s_db = parse_real(cells[0]);
        r.s = parse_real(cells[1]);
        r.y = parse_real(cells[2]);
        p.n = std::stoi(cells[3]);
        p.t = parse_real(cells[4]);
        r.y1 = parse_real(cells[5]);
        p.alpha = parse_real(cells[6]);
        p.phi = parse_real(cells[7]);
        r.mean_n_cv = parse_real(cells[8]);
        r.success_probability = parse_real(cells[9]);
        r.fisher = parse_real(cells[10]);
        r.fisher_eq6 = parse_real(cells[11]);
        r.eq6_rel_dev = parse_real(cells[12]);
        r.dphi_qcr = parse_real(cells[13]);
        r.dphi_intensity = parse_real(cells[14]);
        r.g_qcr_db = parse_real(cells[15]);
        r.g_intensity_db = parse_real(cells[16]);
        r.hl = parse_real(cells[17]);
        r.sql = parse_real(cells[18]);
        row.error_note = cells[19];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mzgain
