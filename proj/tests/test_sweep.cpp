#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mzgain/sweep.hpp"
#include "mzgain/table_io.hpp"

using namespace mzgain;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    auto dir = fs::temp_directory_path() / ("mzgain_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

// Runs fn with MZGAIN_THREADS set to `value`, restoring the previous setting.
template <typename Fn>
auto with_threads(const char* value, Fn&& fn) {
    const char* old = std::getenv("MZGAIN_THREADS");
    const std::string saved = old ? old : "";
    ::setenv("MZGAIN_THREADS", value, 1);
    auto result = fn();
    if (old) {
        ::setenv("MZGAIN_THREADS", saved.c_str(), 1);
    } else {
        ::unsetenv("MZGAIN_THREADS");
    }
    return result;
}

std::string config_error_field(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<no error>";
}

SweepConfig small_gain_config() {
    return parse_config(
        "mode = gain_vs_S\n"
        "S_dB = 0.5:6:0.5\n"
        "n = 2, 3, 6\n"
        "alpha = 1, 100\n"
        "t = 0.9, 0.99\n");
}

// Just enough JSON Schema (draft-07 subset) for the shipped schema files.
bool type_matches(const nlohmann::json& v, const std::string& type) {
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "string") return v.is_string();
    if (type == "null") return v.is_null();
    if (type == "array") return v.is_array();
    if (type == "object") return v.is_object();
    if (type == "boolean") return v.is_boolean();
    return false;
}

void validate(const nlohmann::json& schema, const nlohmann::json& v, const std::string& where,
              std::vector<std::string>& problems) {
    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_string()) ok = type_matches(v, t.get<std::string>());
        for (const auto& alt : t.is_array() ? t : nlohmann::json::array()) ok = ok || type_matches(v, alt.get<std::string>());
        if (!ok) {
            problems.push_back(where + ": wrong type");
            return;
        }
    }
    if (schema.contains("minimum") && v.is_number() && v.get<double>() < schema["minimum"].get<double>())
        problems.push_back(where + ": below minimum");
    if (v.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) validate(schema["items"], v[i], where + "[" + std::to_string(i) + "]", problems);
    }
    if (v.is_object()) {
        for (const auto& key : schema.value("required", nlohmann::json::array()))
            if (!v.contains(key.get<std::string>())) problems.push_back(where + ": missing " + key.get<std::string>());
        const auto props = schema.value("properties", nlohmann::json::object());
        for (const auto& [key, value] : v.items()) {
            if (props.contains(key)) {
                validate(props[key], value, where + "." + key, problems);
            } else if (schema.value("additionalProperties", true) == false) {
                problems.push_back(where + ": unexpected " + key);
            }
        }
    }
}

std::vector<std::string> validate_against(const std::string& schema_file, const nlohmann::json& doc) {
    const auto schema = nlohmann::json::parse(slurp(fs::path(MZGAIN_SOURCE_DIR) / "schema" / schema_file));
    std::vector<std::string> problems;
    validate(schema, doc, "$", problems);
    return problems;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + MZGAIN_CLI + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ConfigParsing, FlatFileWithRangesAndComments) {
    const auto cfg = parse_config(
        "# a comment\n"
        "mode = qcr_vs_S   # trailing comment\n"
        "S_dB = 0:1:0.25\n"
        "n = 1, 2,3\n"
        "alpha = 100\n"
        "t = 0.9\n"
        "phi = pi/2\n"
        "output = out.csv\n"
        "format = json\n");
    EXPECT_EQ(cfg.mode, SweepMode::QcrVsS);
    EXPECT_EQ(cfg.s_db, (std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}));
    EXPECT_EQ(cfg.n, (std::vector<int>{1, 2, 3}));
    EXPECT_DOUBLE_EQ(cfg.phi, numeric::kPi / 2.0);
    EXPECT_EQ(cfg.output, "out.csv");
    EXPECT_EQ(cfg.format, TableFormat::Json);
}

TEST(ConfigParsing, TenthDbGridIsExact) {
    const auto g = detail::parse_grid("S_dB", "0:20:0.1");
    ASSERT_EQ(g.size(), 201u);
    EXPECT_EQ(g[53], 5.3);
    EXPECT_EQ(g.back(), 20.0);
}

TEST(ConfigParsing, JsonAlternativeMatchesFlatFile) {
    const auto a = parse_config("mode = gain_vs_S\nS_dB = 1, 2\nn = 4\nalpha = 1, 100\nt = 0.99\nphi = 2pi\n");
    const auto b = parse_config(R"({"mode": "gain_vs_S", "S_dB": [1, 2], "n": 4, "alpha": [1, 100], "t": 0.99, "phi": "2pi"})");
    EXPECT_EQ(a.s_db, b.s_db);
    EXPECT_EQ(a.n, b.n);
    EXPECT_EQ(a.alpha, b.alpha);
    EXPECT_EQ(a.t, b.t);
    EXPECT_DOUBLE_EQ(a.phi, b.phi);
    EXPECT_NEAR(a.phi, 2.0 * numeric::kPi, 1e-15);
}

TEST(ConfigParsing, ErrorsNameTheField) {
    EXPECT_EQ(config_error_field("t = 1.5\n"), "t");
    EXPECT_EQ(config_error_field("t = 0\n"), "t");
    EXPECT_EQ(config_error_field("S_dB = -1\n"), "S_dB");
    EXPECT_EQ(config_error_field("n = -2\n"), "n");
    EXPECT_EQ(config_error_field("n = 1.5\n"), "n");
    EXPECT_EQ(config_error_field("alpha = abc\n"), "alpha");
    EXPECT_EQ(config_error_field("colour = red\n"), "colour");
    EXPECT_EQ(config_error_field("mode = plot\n"), "mode");
    EXPECT_EQ(config_error_field("format = xml\n"), "format");
    EXPECT_EQ(config_error_field("tail_tol = 0\n"), "tail_tol");
    EXPECT_EQ(config_error_field("S_dB = 5:1:1\n"), "S_dB");
    EXPECT_EQ(config_error_field("mode = single_point\nn = 1, 2\n"), "mode");
    EXPECT_EQ(config_error_field("mode = crossing_s2\nS_dB = 10\n"), "S_dB");
    EXPECT_EQ(config_error_field("just words\n"), "line 1");
    EXPECT_EQ(config_error_field("{\"t\": \n"), "<json>");
}

TEST(ConfigParsing, MissingFileIsIoError) {
    EXPECT_THROW(load_config("/nonexistent/dir/cfg.conf"), IoError);
}

TEST(ConfigParsing, ShippedConfigsLoad) {
    for (const auto& entry : fs::directory_iterator(fs::path(MZGAIN_SOURCE_DIR) / "configs")) {
        EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
    }
}

TEST(Presets, ShipTheFigureConfigurations) {
    const auto all = presets();
    for (const char* name : {"fig2a", "fig2b", "fig2c", "fig2d", "fig3-t0.9-alpha1", "fig3-t0.9-alpha100",
                             "fig3-t0.99-alpha1", "fig3-t0.99-alpha100", "fig4", "headline", "crossing"}) {
        ASSERT_TRUE(all.count(name)) << name;
        EXPECT_NO_THROW(all.at(name).validate()) << name;
    }
    EXPECT_THROW(preset("fig9"), ConfigError);

    const std::map<std::string, std::pair<double, double>> fig2{
        {"fig2a", {0.9, 1.0}}, {"fig2b", {0.99, 1.0}}, {"fig2c", {0.9, 100.0}}, {"fig2d", {0.99, 100.0}}};
    for (const auto& [name, ta] : fig2) {
        const auto& c = all.at(name);
        EXPECT_EQ(c.mode, SweepMode::QcrVsS);
        EXPECT_EQ(c.t, std::vector<double>{ta.first});
        EXPECT_EQ(c.alpha, std::vector<double>{ta.second});
        // reference HL/SQL curves come from the n = 80 rows
        EXPECT_NE(std::find(c.n.begin(), c.n.end(), 80), c.n.end()) << name;
    }

    const auto& f4 = all.at("fig4");
    EXPECT_EQ(f4.mode, SweepMode::IntensityDphiVsS);
    EXPECT_DOUBLE_EQ(f4.phi, numeric::kPi / 2.0);
    EXPECT_EQ(f4.n, (std::vector<int>{2, 3, 4, 6}));
    EXPECT_EQ(f4.alpha, (std::vector<double>{1.0, 100.0}));

    const auto& h = all.at("headline");
    EXPECT_EQ(h.alpha, std::vector<double>{100.0});
    EXPECT_EQ(h.t, (std::vector<double>{0.9, 0.99}));
    EXPECT_NE(std::find(h.s_db.begin(), h.s_db.end(), 1.53), h.s_db.end());
    EXPECT_NE(std::find(h.s_db.begin(), h.s_db.end(), 1.02), h.s_db.end());
    EXPECT_EQ(h.n, (std::vector<int>{4, 6}));
}

TEST(RunSweep, SinglePointAtZeroSqueezing) {
    const auto table = run_sweep(parse_config("mode = single_point\nS_dB = 0\nn = 0\nalpha = 1\nt = 1\n"));
    ASSERT_EQ(table.rows.size(), 1u);
    const auto& r = table.rows[0].report;
    EXPECT_NEAR(r.dphi_qcr, 1.0, 1e-14);
    EXPECT_NEAR(r.g_qcr_db, 0.0, 1e-12);
    EXPECT_TRUE(table.rows[0].error_note.empty());
}

TEST(RunSweep, RowsAreSortedAndIncludeBaselines) {
    const auto cfg = small_gain_config();
    const auto table = run_sweep(cfg);
    // 12 S values x 2 alphas x (3 n x 2 t + 1 baseline)
    ASSERT_EQ(table.rows.size(), 12u * 2u * 7u);
    auto key = [](const SweepRow& row) {
        const auto& p = row.report.point;
        return std::make_tuple(p.s_db, p.alpha, p.n, p.t);
    };
    for (std::size_t i = 1; i < table.rows.size(); ++i) EXPECT_LT(key(table.rows[i - 1]), key(table.rows[i]));
}

TEST(RunSweep, BaselineConsistency) {
    const auto table = run_sweep(small_gain_config());
    std::map<std::pair<double, double>, const SweepRow*> baseline;
    for (const auto& row : table.rows) {
        const auto& p = row.report.point;
        if (p.n == 0 && p.t == 1.0) baseline[{p.s_db, p.alpha}] = &row;
    }
    ASSERT_EQ(baseline.size(), 24u);
    for (const auto& row : table.rows) {
        ASSERT_TRUE(row.error_note.empty()) << row.error_note;
        const auto& r = row.report;
        const auto& b = baseline.at({r.point.s_db, r.point.alpha})->report;
        EXPECT_NEAR(gain_db(r.dphi_qcr, b.dphi_qcr), r.g_qcr_db, 1e-12);
        EXPECT_NEAR(gain_db(r.dphi_intensity, b.dphi_intensity), r.g_intensity_db, 1e-12);
        const double sq = SqueezingSpec::from_db(r.point.s_db).s();
        const double exact = r.point.alpha * r.point.alpha * std::exp(2.0 * sq) + std::sinh(sq) * std::sinh(sq);
        EXPECT_NEAR(b.fisher, exact, 1e-9 * exact);
    }
}

TEST(RunSweep, NumericFailuresAnnotateRowsInsteadOfAborting) {
    // 150 photons out of a 0.1 dB squeezed vacuum: probability far below 1e-300
    const auto table = run_sweep(parse_config("mode = gain_vs_S\nS_dB = 0.1, 5\nn = 150\nalpha = 100\nt = 0.9\n"));
    ASSERT_EQ(table.rows.size(), 4u);
    EXPECT_TRUE(table.partial());
    int annotated = 0;
    for (const auto& row : table.rows) {
        if (row.error_note.empty()) continue;
        ++annotated;
        EXPECT_EQ(row.report.point.n, 150);
        EXPECT_TRUE(std::isnan(row.report.dphi_qcr));
    }
    EXPECT_EQ(annotated, 1);
}

TEST(RunSweep, BlindIntensityEstimatorIsAnnotated) {
    // alpha^2 = sinh^2 s makes <J_z> vanish for the baseline probe
    const double s = std::asinh(1.0);
    const double s_db = SqueezingSpec::from_s(s).db();
    std::ostringstream text;
    text.precision(17);
    text << "mode = intensity_dphi_vs_S\nS_dB = " << s_db << "\nn = 2\nalpha = 1\nt = 0.9\n";
    const auto table = run_sweep(parse_config(text.str()));
    for (const auto& row : table.rows) {
        if (row.report.point.n != 0) continue;
        EXPECT_FALSE(row.error_note.empty());
        EXPECT_TRUE(std::isnan(row.report.dphi_intensity));
    }
}

TEST(RunSweep, NoSilentNonFiniteValues) {
    const auto table = run_sweep(preset("fig4"));
    for (const auto& row : table.rows) {
        if (!row.error_note.empty()) continue;
        for (double v : detail::row_numbers(row)) EXPECT_TRUE(std::isfinite(v));
    }
}

TEST(RunSweep, GainPeaksNearFiveDb) {
    const auto table = run_sweep(preset("fig3-t0.9-alpha100"));
    std::map<int, std::pair<double, double>> best;  // n -> (g, S)
    for (const auto& row : table.rows) {
        const auto& r = row.report;
        if (r.point.n == 0 || !row.error_note.empty()) continue;
        auto& b = best.try_emplace(r.point.n, -1e300, 0.0).first->second;
        if (r.g_qcr_db > b.first) b = {r.g_qcr_db, r.point.s_db};
    }
    for (const auto& [n, gs] : best) {
        // peaks sit between 6.0 and 6.3 dB on this grid
        EXPECT_NEAR(gs.second, 5.0, 1.5) << "n = " << n;
        EXPECT_GT(gs.first, 0.0);
    }
}

TEST(Determinism, ByteIdenticalAcrossReruns) {
    const auto cfg = preset("fig2b");
    const auto a = with_threads("1", [&] { return emit(run_sweep(cfg), TableFormat::Csv); });
    const auto b = with_threads("7", [&] { return emit(run_sweep(cfg), TableFormat::Csv); });
    const auto c = emit(run_sweep(cfg), TableFormat::Csv);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);

    const auto dir = scratch_dir();
    write_table(run_sweep(cfg), (dir / "x.json").string(), TableFormat::Json);
    write_table(run_sweep(cfg), (dir / "y.json").string(), TableFormat::Json);
    EXPECT_EQ(slurp(dir / "x.json"), slurp(dir / "y.json"));
    EXPECT_FALSE(fs::exists(dir / "x.json.tmp"));
    fs::remove_all(dir);
}

TEST(Determinism, CrossingTableIndependentOfThreads) {
    const auto cfg = parse_config("mode = crossing_s2\nS_dB = 10, 30\nn = 1, 2\nalpha = 1\nt = 0.9\nscan_step_db = 1\n");
    const auto a = with_threads("1", [&] { return emit(run_sweep(cfg), TableFormat::Csv); });
    const auto b = with_threads("4", [&] { return emit(run_sweep(cfg), TableFormat::Csv); });
    EXPECT_EQ(a, b);
}

TEST(Emit, EmptyTableThrows) {
    SweepTable empty;
    EXPECT_THROW(emit(empty, TableFormat::Csv), EmptyTableError);
    EXPECT_THROW(emit(empty, TableFormat::Json), EmptyTableError);
}

TEST(Emit, CsvHeaderAndUnits) {
    const auto csv = emit(run_sweep(parse_config("mode = single_point\nS_dB = 3\nn = 2\nalpha = 1\nt = 0.9\n")), TableFormat::Csv);
    std::istringstream in(csv);
    std::string units;
    std::string header;
    std::getline(in, units);
    std::getline(in, header);
    EXPECT_EQ(units.rfind("# units:", 0), 0u);
    EXPECT_NE(units.find("dB"), std::string::npos);
    EXPECT_NE(units.find("radians"), std::string::npos);
    EXPECT_EQ(header,
              "S_dB,s,y,n,t,y1,alpha,phi,mean_n_cv,success_prob,F_numeric,F_eq6,eq6_rel_dev,dphi_qcr,"
              "dphi_intensity,g_qcr_db,g_intensity_db,hl,sql,error_note");
}

TEST(Emit, CsvRoundTrip) {
    const auto table = run_sweep(small_gain_config());
    const auto back = parse_csv(to_csv(table));
    ASSERT_EQ(back.size(), table.rows.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto want = detail::row_numbers(table.rows[i]);
        const auto got = detail::row_numbers(back[i]);
        for (std::size_t k = 0; k < want.size(); ++k) {
            if (std::isnan(want[k])) {
                EXPECT_TRUE(std::isnan(got[k]));
            } else {
                EXPECT_LE(std::abs(got[k] - want[k]), 1e-12 * std::max(1.0, std::abs(want[k]))) << i << " " << k;
            }
        }
        EXPECT_EQ(back[i].error_note, table.rows[i].error_note);
    }
}

TEST(Emit, NotesNeverBreakCsv) {
    SweepTable t;
    t.mode = SweepMode::GainVsS;
    SweepRow row = detail::failed_row(PointSpec{}, "bad, worse\nworst \"quoted\"");
    t.rows.push_back(row);
    const auto back = parse_csv(to_csv(t));
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].error_note.find(','), std::string::npos);
}

TEST(Emit, JsonMatchesShippedSchema) {
    const auto table = run_sweep(parse_config("mode = gain_vs_S\nS_dB = 0.1, 3\nn = 2, 150\nalpha = 100\nt = 0.9\n"));
    EXPECT_TRUE(table.partial());
    const auto doc = nlohmann::json::parse(emit(table, TableFormat::Json));
    EXPECT_EQ(validate_against("sweep_row.schema.json", doc), std::vector<std::string>{});
    // the schema really rejects things
    auto broken = doc;
    broken[0].erase("g_qcr_db");
    broken[1]["n"] = "two";
    EXPECT_EQ(validate_against("sweep_row.schema.json", broken).size(), 2u);

    const auto crossing =
        run_sweep(parse_config("mode = crossing_s2\nS_dB = 10, 30\nn = 2\nalpha = 1\nt = 0.9\nscan_step_db = 1\n"));
    EXPECT_EQ(validate_against("crossing_row.schema.json", to_json(crossing)), std::vector<std::string>{});
}

TEST(Emit, UnwritablePathIsIoError) {
    const auto table = run_sweep(parse_config("mode = single_point\nS_dB = 3\nn = 2\nalpha = 1\nt = 0.9\n"));
    try {
        write_table(table, "/nonexistent/dir/out.csv", TableFormat::Csv);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir"), std::string::npos);
    }
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir();
    EXPECT_EQ(run_cli("presets"), 0);
    EXPECT_EQ(run_cli("point --s-db 1.53 --n 4 --alpha 100 --t 0.9"), 0);
    EXPECT_EQ(run_cli("point --s-db 1.53 --n 4 --alpha 100 --t 1.5"), 2);
    EXPECT_EQ(run_cli("bogus"), 2);
    EXPECT_EQ(run_cli("sweep"), 2);
    EXPECT_EQ(run_cli("sweep --preset nope --out x.csv"), 2);

    const auto good = dir / "good.conf";
    std::ofstream(good) << "mode = gain_vs_S\nS_dB = 1, 2\nn = 2\nalpha = 100\nt = 0.9\n";
    const auto out = dir / "good.csv";
    EXPECT_EQ(run_cli("sweep --config " + good.string() + " --out " + out.string()), 0);
    EXPECT_TRUE(fs::exists(out));
    EXPECT_EQ(run_cli("sweep --config " + good.string() + " --out /nonexistent/dir/x.csv"), 4);

    const auto bad = dir / "bad.conf";
    std::ofstream(bad) << "t = 7\n";
    EXPECT_EQ(run_cli("sweep --config " + bad.string() + " --out " + (dir / "bad.csv").string()), 2);

    const auto partial = dir / "partial.conf";
    std::ofstream(partial) << "mode = gain_vs_S\nS_dB = 0.1, 5\nn = 150\nalpha = 100\nt = 0.9\n";
    EXPECT_EQ(run_cli("sweep --config " + partial.string() + " --out " + (dir / "partial.json").string() +
                      " --format json"),
              3);
    EXPECT_TRUE(fs::exists(dir / "partial.json"));
    fs::remove_all(dir);
}
