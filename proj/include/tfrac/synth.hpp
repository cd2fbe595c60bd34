#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "caputo.hpp"
#include "forward.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "param.hpp"
#include "regpen.hpp"

namespace tfrac {

/// Wave numbers (k1, k2) of the excitations g = sin(k1 pi x) cos(k2 pi y),
/// in the order experiments draw them.
inline const std::vector<std::pair<int, int>>& excitation_wave_numbers() {
    static const std::vector<std::pair<int, int>> set{{1, 1}, {1, 2}, {2, 1}, {2, 2}, {1, 3}};
    return set;
}

enum class NoiseMode { relative, absolute };

struct KleSettings {
    double rho2 = 0.01;
    double l1 = 0.3;
    double l2 = 0.3;
    /// retained modes; 0 selects by energy fraction
    int modes = 8;
    double energy_fraction = 0.95;
};

/// Everything needed to generate one synthetic data set and invert it.
struct ExperimentSpec {
    std::string name = "custom";
    TruthCase truth = TruthCase::jump;
    ParamKind kind = ParamKind::subregion;
    int nx = 18;
    int ny = 18;
    double alpha = 0.4;
    double dt = 0.01;
    /// number of time steps; must reach the last measurement index
    int steps = 101;
    std::vector<int> times{61, 71, 81, 91, 101};
    int experiments = 1;
    /// relative (fraction of the clean-data RMS) or absolute noise std
    double delta = 0.01;
    NoiseMode noise_mode = NoiseMode::relative;
    std::uint64_t seed = 1;
    std::string region = "whole";
    /// generate data on the once-refined grid instead of the inversion grid
    bool refine_data = false;

    double beta = 0.0;
    double gamma = 5e-3;
    double smooth_eps = 1e-4;

    KleSettings kle;
    int blocks_x = 3;
    int blocks_y = 3;
    int strips = 20;
    Bounds bounds;

    void validate() const {
        if (nx < 1 || ny < 1) throw std::invalid_argument("mesh size must be positive");
        if (experiments < 1 || static_cast<std::size_t>(experiments) > excitation_wave_numbers().size()) {
            throw std::invalid_argument("number of experiments must lie in 1.." +
                                        std::to_string(excitation_wave_numbers().size()));
        }
        if (times.empty()) throw std::invalid_argument("no measurement times");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (times[i] < 1 || times[i] > steps) {
                throw std::invalid_argument("measurement step " + std::to_string(times[i]) + " outside 1.." +
                                            std::to_string(steps));
            }
            if (i > 0 && times[i] <= times[i - 1]) throw std::invalid_argument("measurement steps must increase");
        }
        if (!(delta >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
        Penalty{beta, gamma, smooth_eps, {}}.validate();
    }

    std::vector<Excitation> excitations() const {
        std::vector<Excitation> out;
        for (int i = 0; i < experiments; ++i) {
            const auto [k1, k2] = excitation_wave_numbers()[static_cast<std::size_t>(i)];
            out.push_back(Excitation::sine_cosine(k1, k2));
        }
        return out;
    }
};

/// Steps t = first, first+stride, ..., <= last.
inline std::vector<int> step_range(int first, int stride, int last) {
    std::vector<int> out;
    for (int n = first; n <= last; n += stride) out.push_back(n);
    return out;
}

/// The three reproduction set-ups: `smooth` (KLE, L2 penalty), `jump`
/// (3x3 subregions, BV penalty) and `pwsmooth` (20 strips, L2+BV).
inline std::map<std::string, ExperimentSpec> named_specs() {
    std::map<std::string, ExperimentSpec> out;

    ExperimentSpec smooth;
    smooth.name = "smooth";
    smooth.truth = TruthCase::smooth;
    smooth.kind = ParamKind::kle;
    smooth.nx = smooth.ny = 20;
    smooth.times = step_range(61, 10, 101);
    smooth.steps = 101;
    smooth.beta = 5e-4;
    smooth.gamma = 0.0;
    smooth.kle = KleSettings{0.01, 0.3, 0.3, 8, 0.95};
    out.emplace(smooth.name, smooth);

    ExperimentSpec jump;
    jump.name = "jump";
    jump.truth = TruthCase::jump;
    jump.kind = ParamKind::subregion;
    jump.nx = jump.ny = 18;
    jump.times = step_range(61, 10, 101);
    jump.steps = 101;
    jump.beta = 0.0;
    jump.gamma = 5e-3;
    out.emplace(jump.name, jump);

    ExperimentSpec pw;
    pw.name = "pwsmooth";
    pw.truth = TruthCase::piecewise_smooth;
    pw.kind = ParamKind::strip;
    pw.nx = pw.ny = 20;
    pw.strips = 20;
    pw.times = step_range(21, 2, 99);
    pw.steps = 100;
    pw.beta = 5.005e-3;
    pw.gamma = 1.005e-6;
    out.emplace(pw.name, pw);

    return out;
}

inline ExperimentSpec named_spec(const std::string& name) {
    const auto specs = named_specs();
    const auto it = specs.find(name);
    if (it == specs.end()) throw std::invalid_argument("unknown experiment '" + name + "'");
    return it->second;
}

inline CoefficientParam build_param(const ExperimentSpec& spec, const Mesh& mesh) {
    switch (spec.kind) {
        case ParamKind::kle: {
            const auto& k = spec.kle;
            const KleBasis basis = k.modes > 0 ? build_kle_modes(mesh, k.rho2, k.l1, k.l2, k.modes)
                                               : build_kle(mesh, k.rho2, k.l1, k.l2, k.energy_fraction);
            return CoefficientParam::kle(basis, spec.bounds);
        }
        case ParamKind::subregion: return CoefficientParam::subregions(mesh, spec.blocks_x, spec.blocks_y, spec.bounds);
        case ParamKind::strip: return CoefficientParam::strips(mesh, spec.strips, spec.bounds);
    }
    throw std::logic_error("unhandled parametrization");
}

/// Assembled forward model, parametrization and truth for one spec.
struct Problem {
    ExperimentSpec spec;
    ForwardModel model;
    CoefficientParam param;
    Eigen::VectorXd q_true;
    std::vector<Excitation> excitations;
    BoundaryRegion region;

    static Problem build(const ExperimentSpec& spec) {
        spec.validate();
        Mesh mesh(spec.nx, spec.ny);
        CaputoScheme scheme(spec.alpha, spec.dt, spec.steps);
        CoefficientParam param = build_param(spec, mesh);
        Eigen::VectorXd q_true = project_truth(mesh, spec.truth);
        return Problem{spec,
                       ForwardModel(std::move(mesh), std::move(scheme)),
                       std::move(param),
                       std::move(q_true),
                       spec.excitations(),
                       BoundaryRegion::parse(spec.region)};
    }

    const Mesh& mesh() const { return model.mesh(); }

    Penalty penalty() const { return Penalty{spec.beta, spec.gamma, spec.smooth_eps, param.graph()}; }

    std::vector<int> measured_edges() const {
        std::vector<int> out;
        for (const auto& be : boundary_restriction(mesh(), region)) out.push_back(be.edge);
        return out;
    }

    std::size_t data_size() const {
        return excitations.size() * spec.times.size() * boundary_restriction(mesh(), region).size();
    }

    /// Stacked noiseless measurements for a cellwise field.
    Eigen::VectorXd measure(const Eigen::VectorXd& q, int workers = 1) const {
        return model.dirichlet_to_neumann(q, excitations, region, spec.times, workers);
    }
};

struct SyntheticData {
    Eigen::VectorXd clean;
    Eigen::VectorXd noisy;
    /// standard deviation of the injected noise
    double noise_std = 0.0;
};

namespace detail {

/// Clean data computed on the (2nx, 2ny) grid and averaged onto the coarse
/// boundary edges: each coarse edge's normal flux is the mean of its two halves.
inline Eigen::VectorXd refined_clean_data(const Problem& coarse) {
    const Mesh& cm = coarse.mesh();
    Mesh fine(2 * cm.nx(), 2 * cm.ny());
    const Eigen::VectorXd q_fine = project_truth(fine, coarse.spec.truth);
    ForwardModel model(fine, coarse.model.scheme());
    const FactorizedOperator op = model.factorize(q_fine);

    const auto coarse_edges = boundary_restriction(cm, coarse.region);
    // children of every coarse boundary edge, each with its outward sign
    std::vector<std::array<BoundaryEdge, 2>> children;
    for (const auto& be : coarse_edges) {
        const Edge& e = cm.edge(static_cast<std::size_t>(be.edge));
        std::array<BoundaryEdge, 2> kids{};
        int found = 0;
        for (const auto& fb : fine.boundary_edges()) {
            const Point m = fine.edge(static_cast<std::size_t>(fb.edge)).midpoint();
            const bool inside = e.orientation == EdgeOrientation::vertical
                                    ? std::abs(m.x - e.a.x) < 1e-12 && m.y > e.a.y && m.y < e.b.y
                                    : std::abs(m.y - e.a.y) < 1e-12 && m.x > e.a.x && m.x < e.b.x;
            if (inside && found < 2) kids[static_cast<std::size_t>(found++)] = fb;
        }
        if (found != 2) throw std::logic_error("refined boundary edge lookup failed");
        children.push_back(kids);
    }

    Eigen::VectorXd out(static_cast<Eigen::Index>(coarse.excitations.size() * coarse.spec.times.size() *
                                                  coarse_edges.size()));
    Eigen::Index pos = 0;
    for (const auto& exc : coarse.excitations) {
        const ForwardSolution sol = op.solve(exc);
        for (int n : coarse.spec.times) {
            const Eigen::VectorXd& sigma = sol.sigma[static_cast<std::size_t>(n)];
            for (const auto& kids : children) {
                out[pos++] = -0.5 * (kids[0].sign * sigma[kids[0].edge] + kids[1].sign * sigma[kids[1].edge]);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Noise-free and noisy measurements for the problem's truth field.
/// The noise is i.i.d. Gaussian with std delta * RMS(clean) (relative mode)
/// or delta (absolute mode), drawn from a generator seeded with `seed`.
inline SyntheticData make_data(const Problem& problem, std::uint64_t seed) {
    const ExperimentSpec& spec = problem.spec;
    if (spec.delta < 0.0) throw std::invalid_argument("noise level must be nonnegative");
    SyntheticData data;
    data.clean = spec.refine_data ? detail::refined_clean_data(problem) : problem.measure(problem.q_true);
    data.noisy = data.clean;
    if (spec.delta > 0.0) {
        const double rms = std::sqrt(data.clean.squaredNorm() / static_cast<double>(data.clean.size()));
        data.noise_std = spec.noise_mode == NoiseMode::relative ? spec.delta * rms : spec.delta;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, data.noise_std);
        for (Eigen::Index i = 0; i < data.noisy.size(); ++i) data.noisy[i] += normal(rng);
    }
    return data;
}

inline SyntheticData make_data(const Problem& problem) { return make_data(problem, problem.spec.seed); }

/// Layout-annotated measurement set ready for export.
inline io::Measurements to_measurements(const Problem& problem, const Eigen::VectorXd& values, io::Metadata meta = {}) {
    io::Measurements m;
    m.meta = std::move(meta);
    m.experiments = static_cast<int>(problem.excitations.size());
    m.times = problem.spec.times;
    m.edges = problem.measured_edges();
    m.values = values;
    if (m.values.size() != static_cast<Eigen::Index>(m.expected_size())) {
        throw std::invalid_argument("measurement vector does not match the problem layout");
    }
    return m;
}

/// Adopt the layout of externally supplied measurements: the measurement
/// steps, the experiment count and the measured edge set.
inline ExperimentSpec adopt_layout(ExperimentSpec spec, const io::Measurements& m) {
    spec.times = m.times;
    spec.experiments = m.experiments;
    spec.steps = std::max(spec.steps, m.times.back());
    const Mesh mesh(spec.nx, spec.ny);
    std::vector<int> all;
    for (const auto& be : boundary_restriction(mesh, BoundaryRegion::whole())) all.push_back(be.edge);
    if (m.edges == all) {
        spec.region = "whole";
    } else {
        std::string region = "edges:";
        for (std::size_t i = 0; i < m.edges.size(); ++i) region += (i ? "," : "") + std::to_string(m.edges[i]);
        (void)boundary_restriction(mesh, BoundaryRegion::parse(region));
        spec.region = std::move(region);
    }
    return spec;
}

}  // namespace tfrac
