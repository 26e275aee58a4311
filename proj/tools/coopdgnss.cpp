#include "coopdgnss/errors.hpp"
#include "coopdgnss/experiments.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace coopdgnss;

enum Exit { kOk = 0, kConfig = 2, kUnsolvable = 3, kNumerical = 4 };

// The preset is the starting document; sections present in --config replace it section by section.
SweepConfig load(const std::string& config_path, const std::string& preset) {
    nlohmann::json doc = nlohmann::json::object();
    std::string base_dir = ".";
    if (!preset.empty()) doc = preset_json(preset);
    if (!config_path.empty()) {
        const auto user = load_config_json(config_path);
        if (!user.is_object()) throw ConfigError("config: expected an object");
        for (const auto& [key, value] : user.items()) doc[key] = value;
        base_dir = std::filesystem::absolute(config_path).parent_path().string();
    }
    return parse_config(doc, base_dir);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

int cmd_bounds(const SweepConfig& cfg, const std::string& out) {
    const auto geo = resolve_geometry(cfg);
    const Scenario sc(cfg.base, geo, cfg.mode, cfg.ils_method, cfg.max_search_nodes);
    if (!sc.solvable()) {
        std::cerr << "bounds: network is not solvable\n";
        return kUnsolvable;
    }
    emit_bounds_csv(sc.bound_report(), cfg.base.N_c, out);
    return kOk;
}

int cmd_sweep(const SweepConfig& cfg, const std::string& out, const std::string& dump_path) {
    ObservationDump dump;
    const SweepResult res = run_sweep(cfg, dump_path.empty() ? nullptr : &dump);
    bool any = false;
    for (std::size_t f = 0; f < res.tables.size(); ++f) {
        for (const auto& row : res.tables[f]) {
            any = any || row.solvable;
            if (!row.solvable)
                std::cerr << "sweep: " << row.swept_param << "=" << format_number(row.swept_value)
                          << " is not solvable\n";
        }
        emit_csv(res.tables[f], family_path(out, res.family, res.family_values[f]));
    }
    if (!dump_path.empty()) write_text(dump_path, observations_csv(dump.sets));
    return any ? kOk : kUnsolvable;
}

int cmd_simulate(SweepConfig cfg, int trials, std::uint64_t seed, const std::string& out) {
    cfg.trials = trials;
    cfg.master_seed = seed;
    const auto geo = resolve_geometry(cfg);
    const Scenario probe(cfg.base, geo, cfg.mode, cfg.ils_method, cfg.max_search_nodes);
    if (!probe.solvable()) {
        std::cerr << "simulate: network is not solvable\n";
        return kUnsolvable;
    }
    write_text(out, runs_csv(run_simulation(cfg)));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cooperative DGNSS/RTK bounds and Monte Carlo sweeps"};
    app.require_subcommand(1);
    std::string config, out, preset, dump;
    int threads = -1;
    int trials = 0;
    std::uint64_t seed = 0;

    auto* bounds = app.add_subcommand("bounds", "per-user CRB and benchmarks for the base network");
    bounds->add_option("--config", config, "config JSON")->required();
    bounds->add_option("--out", out, "output CSV")->required();

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep against the bounds");
    sweep->add_option("--config", config, "config JSON (sections override the preset)");
    sweep->add_option("--preset", preset, "built-in experiment")->check(CLI::IsMember(preset_names()));
    sweep->add_option("--out", out, "output CSV (one file per family value)")->required();
    sweep->add_option("--dump-obs", dump, "observations of the first trial as CSV");
    sweep->add_option("--threads", threads, "worker threads (0: all cores)");

    auto* simulate = app.add_subcommand("simulate", "per-trial errors for the base network");
    simulate->add_option("--config", config, "config JSON")->required();
    simulate->add_option("--trials", trials, "Monte Carlo trials")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", seed, "master seed")->required();
    simulate->add_option("--out", out, "output CSV")->required();
    simulate->add_option("--threads", threads, "worker threads (0: all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (sweep->parsed() && config.empty() && preset.empty()) throw ConfigError("sweep: give --config or --preset");
        SweepConfig cfg = load(config, sweep->parsed() ? preset : "");
        if (threads >= 0) cfg.threads = threads;
        if (bounds->parsed()) return cmd_bounds(cfg, out);
        if (sweep->parsed()) return cmd_sweep(cfg, out, dump);
        return cmd_simulate(cfg, trials, seed, out);
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kConfig;
    } catch (const NumericalError& ex) {
        std::cerr << "numerical failure: " << ex.what() << '\n';
        return kNumerical;
    } catch (const DimensionError& ex) {
        std::cerr << "config error: " << ex.what() << '\n';
        return kConfig;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
