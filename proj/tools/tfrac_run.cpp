// Command-line driver: run a named experiment, optionally swept over
// parameters, and write iteration logs, field dumps and a summary table.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <tfrac/experiment.hpp>

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
    return out;
}

// Config files split values at commas; glue "key=a", "b" back into "key=a,b".
std::vector<std::string> rejoin(const std::vector<std::string>& parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) {
        if (p.find('=') == std::string::npos && !out.empty()) out.back() += "," + p;
        else out.push_back(p);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coefficient identification for time-fractional diffusion from boundary flux"};
    app.set_config("--config", "", "key = value configuration file (INI or TOML)");

    tfrac::RunConfig cfg;
    std::vector<std::string> sweeps;
    std::vector<std::string> sets;
    std::string out_dir = cfg.out_dir.string();
    std::string data_file, export_data, dump_mesh;

    app.add_option("--experiment", cfg.experiment, "smooth, jump or pwsmooth")->capture_default_str();
    app.add_option("--sweep", sweeps, "key=v1,v2,... (repeatable; Cartesian product)")->take_all();
    app.add_option("--seed", cfg.seed, "base seed of the noise draw")->capture_default_str();
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--data", data_file, "invert these measurements instead of synthetic data");
    app.add_option("--set", sets, "key=value override (repeatable)")->take_all();
    app.add_flag("--compare-penalties", cfg.compare, "run L2 only, BV only and L2+BV on shared data");
    app.add_option("--export-data", export_data, "also write the noisy measurements here");
    app.add_option("--dump-mesh", dump_mesh, "write the mesh table here");
    app.add_flag("--wall-time", cfg.wall_time, "record elapsed seconds in iteration logs");
    app.add_option("--jobs", cfg.jobs, "sweep points run concurrently (0 = all cores)")->capture_default_str();

    // every setting can also be given directly, which is what config files use
    const std::vector<std::string> keys{"alpha",      "beta",  "gamma",  "delta",  "N",      "nx",
                                        "ny",         "dt",    "steps",  "times",  "region", "refine_data",
                                        "noise",      "smooth_eps", "kle_modes", "kle_energy", "blocks", "strips",
                                        "lower",      "upper", "tau",    "eps",    "max_iter", "workers"};
    std::map<std::string, std::vector<std::string>> direct;
    for (const auto& k : keys) app.add_option("--" + k, direct[k], "override " + k)->group("Settings")->take_all();

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& k : keys) {
            if (app.count("--" + k) > 0) cfg.overrides.emplace_back(k, join(direct[k]));
        }
        for (const auto& s : rejoin(sets)) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
            cfg.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        for (const auto& s : rejoin(sweeps)) cfg.sweeps.push_back(tfrac::parse_sweep(s));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    cfg.out_dir = out_dir;
    if (!data_file.empty()) cfg.data_file = data_file;
    if (!export_data.empty()) cfg.export_data = export_data;
    if (!dump_mesh.empty()) cfg.dump_mesh = dump_mesh;

    return tfrac::run_cli(cfg, std::cerr);
}
