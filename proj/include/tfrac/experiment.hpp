#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "invert.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "synth.hpp"

namespace tfrac {

using Setting = std::pair<std::string, std::string>;
using SweepPoint = std::vector<Setting>;

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

/// "key=v1,v2,..."
inline SweepAxis parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
        throw std::invalid_argument("sweep must look like key=v1,v2,... (got '" + text + "')");
    }
    SweepAxis axis{text.substr(0, eq), {}};
    std::stringstream ss(text.substr(eq + 1));
    for (std::string v; std::getline(ss, v, ',');) {
        if (v.empty()) throw std::invalid_argument("empty value in sweep '" + text + "'");
        axis.values.push_back(v);
    }
    return axis;
}

/// Cartesian product, first axis varying slowest. No axes -> one empty point.
inline std::vector<SweepPoint> expand_sweeps(const std::vector<SweepAxis>& axes) {
    std::vector<SweepPoint> points{{}};
    for (const auto& axis : axes) {
        std::vector<SweepPoint> next;
        for (const auto& p : points) {
            for (const auto& v : axis.values) {
                SweepPoint q = p;
                q.emplace_back(axis.key, v);
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

/// Solver knobs that are not part of the experiment itself.
struct LmSettings {
    double tau = 0.5;
    double eps = 1e-4;
    int max_iterations = 50;
    int workers = 1;
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("setting '" + key + "' expects a number, got '" + v + "'");
    }
}

inline long long to_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw std::invalid_argument("setting '" + key + "' expects an integer, got '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("setting '" + key + "' expects a boolean, got '" + v + "'");
}

/// times as "61,71,81" or "first:stride:last"
inline std::vector<int> to_times(const std::string& key, const std::string& v) {
    std::vector<int> out;
    if (v.find(':') != std::string::npos) {
        std::stringstream ss(v);
        std::string a, b, c;
        std::getline(ss, a, ':');
        std::getline(ss, b, ':');
        std::getline(ss, c, ':');
        return step_range(static_cast<int>(to_integer(key, a)), static_cast<int>(to_integer(key, b)),
                          static_cast<int>(to_integer(key, c)));
    }
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(static_cast<int>(to_integer(key, item)));
    return out;
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

/// Apply one key=value setting. Returns false for unknown keys.
inline bool apply_setting(ExperimentSpec& spec, LmSettings& lm, std::uint64_t& seed, const std::string& key,
                          const std::string& v) {
    using namespace detail;
    if (key == "alpha") spec.alpha = to_double(key, v);
    else if (key == "beta") spec.beta = to_double(key, v);
    else if (key == "gamma") spec.gamma = to_double(key, v);
    else if (key == "delta") spec.delta = to_double(key, v);
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_integer(key, v));
    else if (key == "N" || key == "experiments") spec.experiments = static_cast<int>(to_integer(key, v));
    else if (key == "nx") spec.nx = static_cast<int>(to_integer(key, v));
    else if (key == "ny") spec.ny = static_cast<int>(to_integer(key, v));
    else if (key == "dt") spec.dt = to_double(key, v);
    else if (key == "steps") spec.steps = static_cast<int>(to_integer(key, v));
    else if (key == "times") spec.times = to_times(key, v);
    else if (key == "region") spec.region = v;
    else if (key == "refine_data") spec.refine_data = to_bool(key, v);
    else if (key == "noise") {
        if (v == "relative") spec.noise_mode = NoiseMode::relative;
        else if (v == "absolute") spec.noise_mode = NoiseMode::absolute;
        else throw std::invalid_argument("noise must be relative or absolute");
    }
    else if (key == "smooth_eps") spec.smooth_eps = to_double(key, v);
    else if (key == "kle_modes") spec.kle.modes = static_cast<int>(to_integer(key, v));
    else if (key == "kle_energy") spec.kle.energy_fraction = to_double(key, v);
    else if (key == "blocks") spec.blocks_x = spec.blocks_y = static_cast<int>(to_integer(key, v));
    else if (key == "strips") spec.strips = static_cast<int>(to_integer(key, v));
    else if (key == "lower") spec.bounds.lower = to_double(key, v);
    else if (key == "upper") spec.bounds.upper = to_double(key, v);
    else if (key == "tau") lm.tau = to_double(key, v);
    else if (key == "eps") lm.eps = to_double(key, v);
    else if (key == "max_iter" || key == "R") lm.max_iterations = static_cast<int>(to_integer(key, v));
    else if (key == "workers") lm.workers = static_cast<int>(to_integer(key, v));
    else return false;
    return true;
}

/// Seed of the noise draw: the base seed mixed with everything that shapes
/// the clean data. Regularization settings are excluded, so runs that differ
/// only in beta or gamma invert identical data.
inline std::uint64_t data_seed(const ExperimentSpec& spec, std::uint64_t base_seed) {
    std::ostringstream key;
    key << to_string(spec.truth) << '|' << spec.nx << 'x' << spec.ny << '|' << io::format_double(spec.alpha) << '|'
        << io::format_double(spec.dt) << '|' << spec.steps << '|' << spec.experiments << '|'
        << io::format_double(spec.delta) << '|' << (spec.noise_mode == NoiseMode::relative ? 'r' : 'a') << '|'
        << spec.region << '|' << spec.refine_data << '|';
    for (int t : spec.times) key << t << ',';
    return detail::fnv1a(key.str(), detail::fnv1a(std::to_string(base_seed)));
}

struct PointResult {
    std::string tag;
    ExperimentSpec spec;
    std::uint64_t base_seed = 0;
    std::uint64_t noise_seed = 0;
    SyntheticData data;
    InversionRun run;
    Eigen::VectorXd q_final;
    Eigen::VectorXd q_true;
    io::SummaryRow row;
};

/// Generate (or adopt) data, invert, and collect everything a report needs.
inline PointResult run_point(const ExperimentSpec& spec, const LmSettings& lm, std::uint64_t base_seed,
                             const std::optional<Eigen::VectorXd>& external_data = std::nullopt,
                             std::string tag = {}) {
    if (spec.kind == ParamKind::strip && spec.beta == 0.0 && spec.gamma == 0.0) {
        throw std::invalid_argument("strip parametrization needs beta > 0 or gamma > 0");
    }
    const Problem problem = Problem::build(spec);
    PointResult r;
    r.tag = tag.empty() ? spec.name : std::move(tag);
    r.spec = spec;
    r.base_seed = base_seed;
    r.noise_seed = data_seed(spec, base_seed);
    if (external_data) {
        if (external_data->size() != static_cast<Eigen::Index>(problem.data_size())) {
            throw std::invalid_argument("external data has " + std::to_string(external_data->size()) +
                                        " values, the problem expects " + std::to_string(problem.data_size()));
        }
        r.data.noisy = *external_data;
        r.data.clean = *external_data;
    } else {
        r.data = make_data(problem, r.noise_seed);
    }

    LmConfig config = default_lm_config(problem);
    config.tau = lm.tau;
    config.eps = lm.eps;
    config.max_iterations = lm.max_iterations;
    config.workers = lm.workers;
    r.run = run(config, problem, r.data.noisy);
    r.q_final = problem.param.realize(r.run.final_iterate());
    r.q_true = problem.q_true;

    r.row.name = r.tag;
    r.row.alpha = spec.alpha;
    r.row.beta = spec.beta;
    r.row.gamma = spec.gamma;
    r.row.delta = spec.delta;
    r.row.seed = base_seed;
    r.row.experiments = spec.experiments;
    r.row.iterations = r.run.iterations();
    r.row.final_epsilon = r.run.final_error();
    return r;
}

/// L2 only, BV only and L2+BV on one shared data set.
inline std::vector<PointResult> compare_penalties(const ExperimentSpec& spec, const LmSettings& lm,
                                                  std::uint64_t base_seed,
                                                  const std::optional<Eigen::VectorXd>& external_data = std::nullopt) {
    const Problem problem = Problem::build(spec);
    const Eigen::VectorXd data =
        external_data ? *external_data : make_data(problem, data_seed(spec, base_seed)).noisy;
    struct Variant {
        std::string suffix;
        double beta, gamma;
    };
    const std::vector<Variant> variants{
        {"-L2", spec.beta, 0.0}, {"-BV", 0.0, spec.gamma}, {"-L2+BV", spec.beta, spec.gamma}};
    std::vector<PointResult> out;
    for (const auto& v : variants) {
        ExperimentSpec s = spec;
        s.beta = v.beta;
        s.gamma = v.gamma;
        PointResult r = run_point(s, lm, base_seed, data, spec.name + v.suffix);
        r.noise_seed = data_seed(spec, base_seed);
        out.push_back(std::move(r));
    }
    return out;
}

/// `<tag>.iter`, `<tag>.field` and `<tag>.truth` in `dir`.
inline void write_point_outputs(const std::filesystem::path& dir, const PointResult& r, bool with_time) {
    std::filesystem::create_directories(dir);
    const Mesh mesh(r.spec.nx, r.spec.ny);
    io::Metadata meta{{"experiment", r.tag},
                      {"base_seed", std::to_string(r.base_seed)},
                      {"noise_seed", std::to_string(r.noise_seed)},
                      {"alpha", io::format_double(r.spec.alpha)},
                      {"beta", io::format_double(r.spec.beta)},
                      {"gamma", io::format_double(r.spec.gamma)},
                      {"delta", io::format_double(r.spec.delta)},
                      {"N", std::to_string(r.spec.experiments)},
                      {"termination", std::string(to_string(r.run.termination))}};
    if (!r.run.failure.empty()) meta.emplace_back("failure", r.run.failure);

    auto open = [&](const std::string& name) {
        std::ofstream os(dir / name);
        if (!os) throw std::runtime_error("cannot write " + (dir / name).string());
        return os;
    };
    {
        auto os = open(r.tag + ".iter");
        io::write_iteration_log(os, iteration_log(r.run, meta, with_time));
    }
    {
        auto os = open(r.tag + ".field");
        io::write_cell_field(os, io::make_cell_field(mesh, r.q_final, "q_value", meta));
    }
    {
        auto os = open(r.tag + ".truth");
        io::write_cell_field(os, io::make_cell_field(mesh, r.q_true, "q_value", {{"truth", std::string(to_string(r.spec.truth))}}));
    }
}

/// Merge rows into `<dir>/summary.txt`, replacing rows of the same sweep point.
inline void update_summary(const std::filesystem::path& dir, const std::vector<io::SummaryRow>& rows) {
    std::filesystem::create_directories(dir);
    const auto path = dir / "summary.txt";
    std::vector<io::SummaryRow> all;
    if (std::ifstream is(path); is) all = io::read_summary(is);
    for (const auto& r : rows) io::merge_summary_row(all, r);
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    io::write_summary(os, all);
}

inline std::string point_tag(const std::string& name, const SweepPoint& point) {
    std::string tag = name;
    for (const auto& [k, v] : point) tag += "_" + k + "-" + v;
    return tag;
}

/// Everything the command line can ask for.
struct RunConfig {
    std::string experiment = "jump";
    std::vector<Setting> overrides;
    std::vector<SweepAxis> sweeps;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir = "tfrac_out";
    std::optional<std::filesystem::path> data_file;
    std::optional<std::filesystem::path> export_data;
    std::optional<std::filesystem::path> dump_mesh;
    bool compare = false;
    bool wall_time = false;
    /// sweep points run concurrently
    int jobs = 1;
};

/// Execute a configuration; returns the process exit status. Diagnostics go
/// to `log`. Outputs of points finished before a failure are kept.
inline int run_cli(const RunConfig& cfg, std::ostream& log) {
    ExperimentSpec base_spec;
    LmSettings base_lm;
    std::uint64_t base_seed = cfg.seed;
    try {
        base_spec = named_spec(cfg.experiment);
        for (const auto& [k, v] : cfg.overrides) {
            if (!apply_setting(base_spec, base_lm, base_seed, k, v)) throw std::invalid_argument("unknown setting '" + k + "'");
        }
        for (const auto& axis : cfg.sweeps) {
            ExperimentSpec s;
            LmSettings l;
            std::uint64_t sd = 0;
            if (!apply_setting(s, l, sd, axis.key, axis.values.front())) {
                throw std::invalid_argument("unknown sweep key '" + axis.key + "'");
            }
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 2;
    }

    std::optional<Eigen::VectorXd> external;
    if (cfg.data_file) {
        try {
            std::ifstream is(*cfg.data_file);
            if (!is) throw std::runtime_error("cannot open " + cfg.data_file->string());
            const io::Measurements m = io::read_measurements(is);
            base_spec = adopt_layout(base_spec, m);
            external = m.values;
        } catch (const std::exception& e) {
            log << "error: " << e.what() << '\n';
            return 2;
        }
    }

    if (cfg.dump_mesh) {
        std::ofstream os(*cfg.dump_mesh);
        if (!os) {
            log << "error: cannot write " << cfg.dump_mesh->string() << '\n';
            return 2;
        }
        io::write_mesh_table(os, Mesh(base_spec.nx, base_spec.ny));
    }

    const auto points = expand_sweeps(cfg.sweeps);
    std::vector<std::vector<io::SummaryRow>> rows(points.size());
    std::vector<std::string> errors(points.size());
    std::mutex log_mutex;

    parallel_for(points.size(), cfg.jobs, [&](std::size_t i) {
        ExperimentSpec spec = base_spec;
        LmSettings lm = base_lm;
        std::uint64_t seed = base_seed;
        try {
            for (const auto& [k, v] : points[i]) apply_setting(spec, lm, seed, k, v);
            const std::string tag = point_tag(spec.name, points[i]);
            if (cfg.export_data) {
                const Problem problem = Problem::build(spec);
                const SyntheticData data = make_data(problem, data_seed(spec, seed));
                const auto path = points.size() == 1 ? *cfg.export_data
                                                     : cfg.export_data->parent_path() /
                                                           (cfg.export_data->stem().string() + "_" + tag +
                                                            cfg.export_data->extension().string());
                std::ofstream os(path);
                if (!os) throw std::runtime_error("cannot write " + path.string());
                io::write_measurements(os, to_measurements(problem, data.noisy,
                                                           {{"experiment", tag},
                                                            {"base_seed", std::to_string(seed)},
                                                            {"noise_seed", std::to_string(data_seed(spec, seed))}}));
            }
            std::vector<PointResult> results;
            if (cfg.compare) {
                results = compare_penalties(spec, lm, seed, external);
                for (auto& r : results) r.tag = point_tag(r.tag, points[i]);
            } else {
                results.push_back(run_point(spec, lm, seed, external, tag));
            }
            for (auto& r : results) {
                r.row.name = r.tag;
                write_point_outputs(cfg.out_dir, r, cfg.wall_time);
                rows[i].push_back(r.row);
                std::scoped_lock lock(log_mutex);
                log << io::format_summary_row(r.row) << "  [" << to_string(r.run.termination) << "]\n";
                if (r.run.termination == Termination::failed) errors[i] = r.tag + ": " + r.run.failure;
            }
        } catch (const std::exception& e) {
            errors[i] = point_tag(spec.name, points[i]) + ": " + e.what();
        }
    });

    std::vector<io::SummaryRow> flat;
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    try {
        if (!flat.empty()) update_summary(cfg.out_dir, flat);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return 1;
    }
    int status = 0;
    for (const auto& e : errors) {
        if (e.empty()) continue;
        log << "error: " << e << '\n';
        status = 1;
    }
    return status;
}

}  // namespace tfrac
