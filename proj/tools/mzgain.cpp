// mzgain: sweeps and single-point evaluations of interferometric phase
// sensitivity with photon-subtracted squeezed vacuum plus a coherent state.
//
// Exit codes: 0 success, 2 configuration error, 3 partial (annotated rows),
// 4 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mzgain/mzgain.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;
constexpr int kExitIo = 4;

void print_report(const mzgain::SensitivityReport& r) {
    auto line = [](const char* key, double v) { std::printf("%-16s %s\n", key, mzgain::detail::fmt_real(v).c_str()); };
    line("S_dB", r.point.s_db);
    line("s", r.s);
    line("y", r.y);
    std::printf("%-16s %d\n", "n", r.point.n);
    line("t", r.point.t);
    line("y1", r.y1);
    line("alpha", r.point.alpha);
    line("phi", r.point.phi);
    line("mean_n_cv", r.mean_n_cv);
    line("n_total", r.n_total);
    line("success_prob", r.success_probability);
    line("F_numeric", r.fisher);
    line("F_eq6", r.fisher_eq6);
    line("eq6_rel_dev", r.eq6_rel_dev);
    line("dphi_qcr", r.dphi_qcr);
    line("dphi_intensity", r.dphi_intensity);
    line("g_qcr_db", r.g_qcr_db);
    line("g_intensity_db", r.g_intensity_db);
    line("hl", r.hl);
    line("sql", r.sql);
    if (!r.note.empty()) std::printf("%-16s %s\n", "note", r.note.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase sensitivity of a Mach-Zehnder interferometer fed with photon-subtracted squeezed vacuum"};
    app.require_subcommand(1);

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write a table");
    std::string config_path;
    std::string preset_name;
    std::string out_path;
    std::string format_name;
    std::optional<double> tail_tol;
    sweep->add_option("--config", config_path, "flat key = value or JSON config file");
    sweep->add_option("--preset", preset_name, "named preset (see `mzgain presets`)");
    sweep->add_option("--out", out_path, "output path (overrides the config)");
    sweep->add_option("--format", format_name, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sweep->add_option("--tail-tol", tail_tol, "Fock truncation tail tolerance");

    auto* point = app.add_subcommand("point", "evaluate a single parameter point");
    mzgain::PointSpec spec;
    point->add_option("--s-db", spec.s_db, "initial squeezing in dB")->required();
    point->add_option("--n", spec.n, "photons subtracted")->required();
    point->add_option("--alpha", spec.alpha, "coherent amplitude")->required();
    point->add_option("--t", spec.t, "beam splitter amplitude transmissivity")->required();
    point->add_option("--phi", spec.phi, "working phase in radians (default pi/2)");

    auto* list = app.add_subcommand("presets", "list preset names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (list->parsed()) {
            for (const auto& [name, cfg] : mzgain::presets())
                std::printf("%-22s %s\n", name.c_str(), mzgain::to_string(cfg.mode));
            return kExitOk;
        }

        if (point->parsed()) {
            print_report(mzgain::evaluate_point(spec));
            return kExitOk;
        }

        if (config_path.empty() == preset_name.empty()) {
            std::cerr << "error: give exactly one of --config or --preset\n";
            return kExitConfig;
        }
        auto cfg = config_path.empty() ? mzgain::preset(preset_name) : mzgain::load_config(config_path);
        if (!out_path.empty()) cfg.output = out_path;
        if (!format_name.empty()) cfg.format = mzgain::parse_format(format_name);
        if (tail_tol) cfg.tail_tol = *tail_tol;
        if (cfg.output.empty()) throw mzgain::ConfigError("output", "no output path given");
        cfg.validate();

        const auto table = mzgain::run_sweep(cfg);
        mzgain::write_table(table, cfg.output, cfg.format);
        const std::size_t count = table.rows.size() + table.crossings.size();
        std::fprintf(stderr, "wrote %zu rows to %s\n", count, cfg.output.c_str());
        return table.partial() ? kExitPartial : kExitOk;
    } catch (const mzgain::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mzgain::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const mzgain::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitConfig;
    } catch (const mzgain::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPartial;
    }
}
