#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "forward.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "regpen.hpp"
#include "synth.hpp"

namespace tfrac {

/// The pieces the Levenberg-Marquardt driver needs, independent of how the
/// forward map is computed.
struct InverseProblem {
    int dim = 0;
    /// stacked measurements predicted at parameter a
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
    /// maps an iterate back into the admissible set; identity when empty
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;
    /// relative error against a known truth; optional
    std::function<double(const Eigen::VectorXd&)> error;
};

struct LmConfig {
    /// forward-difference step
    double tau = 0.5;
    /// stop once ||h_k||_2 < eps
    double eps = 1e-4;
    int max_iterations = 50;
    Penalty penalty;
    /// initial iterate; the parametrization's neutral start when empty
    std::optional<Eigen::VectorXd> start;
    /// threads for Jacobian columns (0 = hardware concurrency)
    int workers = 1;

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
        if (!(eps > 0.0)) throw std::invalid_argument("stopping threshold must be positive");
        if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
        penalty.validate();
    }
};

enum class Termination { step_small, max_iterations, failed };

inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::step_small: return "step-small";
        case Termination::max_iterations: return "max-iterations";
        case Termination::failed: return "failed";
    }
    return "?";
}

/// Iterates a_0..a_K with the residual norm and relative error at each, the
/// norm of the step taken from each (NaN for the last), and elapsed seconds.
struct InversionRun {
    std::vector<Eigen::VectorXd> iterates;
    std::vector<double> residual_norms;
    std::vector<double> step_norms;
    std::vector<double> relative_errors;
    std::vector<double> seconds;
    Termination termination = Termination::max_iterations;
    std::string failure;

    /// steps taken
    int iterations() const { return static_cast<int>(iterates.size()) - 1; }
    const Eigen::VectorXd& final_iterate() const { return iterates.back(); }
    double final_error() const { return relative_errors.empty() ? std::nan("") : relative_errors.back(); }
};

/// F_k = data - forward(a)
inline Eigen::VectorXd residual(const InverseProblem& problem, const Eigen::VectorXd& a, const Eigen::VectorXd& data) {
    Eigen::VectorXd predicted = problem.forward(a);
    if (predicted.size() != data.size()) {
        throw std::invalid_argument("forward map returned " + std::to_string(predicted.size()) +
                                    " values for a data vector of " + std::to_string(data.size()));
    }
    return data - predicted;
}

/// Forward-difference Jacobian of the forward map (not of the residual):
/// column j is (forward(a + tau e_j) - forward(a)) / tau. `base` is forward(a).
inline Eigen::MatrixXd fd_jacobian(const InverseProblem& problem, const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& base, double tau, int workers = 1) {
    if (!(tau > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    Eigen::MatrixXd J(base.size(), a.size());
    parallel_for(static_cast<std::size_t>(a.size()), workers, [&](std::size_t j) {
        Eigen::VectorXd shifted = a;
        shifted[static_cast<Eigen::Index>(j)] += tau;
        J.col(static_cast<Eigen::Index>(j)) = (problem.forward(shifted) - base) / tau;
    });
    return J;
}

inline Eigen::MatrixXd fd_jacobian(const InverseProblem& problem, const Eigen::VectorXd& a, double tau,
                                   int workers = 1) {
    return fd_jacobian(problem, a, problem.forward(a), tau, workers);
}

/// Solves (G^T G + beta I + gamma (L1 + L2)) h = G^T F with L1, L2 lagged at a.
/// G is the Jacobian of the forward map and F = data - forward(a), so a + h
/// moves toward the data.
inline Eigen::VectorXd lm_step(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& residual_vec,
                               const Penalty& penalty, const Eigen::VectorXd& a) {
    if (jacobian.rows() != residual_vec.size() || jacobian.cols() != a.size()) {
        throw std::invalid_argument("Jacobian shape does not match residual and parameter sizes");
    }
    const Eigen::Index n = a.size();
    Eigen::MatrixXd normal = jacobian.transpose() * jacobian;
    normal.diagonal().array() += penalty.beta;
    if (penalty.gamma != 0.0) {
        const PenaltyMatrices L = penalty_matrices(penalty, a);
        normal += penalty.gamma * (L.L1 + L.L2);
    }
    const Eigen::VectorXd rhs = jacobian.transpose() * residual_vec;
    Eigen::LLT<Eigen::MatrixXd> llt(normal);
    if (llt.info() != Eigen::Success) {
        throw SolverError("damped normal matrix is not positive definite");
    }
    // reject numerically singular systems that LLT still accepts
    const Eigen::VectorXd d = llt.matrixLLT().diagonal();
    const double scale = normal.diagonal().cwiseAbs().maxCoeff();
    if (n > 0 && (d.minCoeff() <= 0.0 || d.minCoeff() * d.minCoeff() <= 1e-14 * scale)) {
        throw SolverError("damped normal matrix is singular");
    }
    return llt.solve(rhs);
}

/// Levenberg-Marquardt iteration a_{k+1} = project(a_k + h_k), stopping when
/// ||h_k|| < eps or after max_iterations steps. A failing forward solve ends
/// the run with the history recorded so far.
inline InversionRun run_lm(const LmConfig& config, const InverseProblem& problem, const Eigen::VectorXd& data,
                           const Eigen::VectorXd& start) {
    config.validate();
    if (start.size() != problem.dim) throw std::invalid_argument("initial iterate has the wrong dimension");
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    auto project = [&](const Eigen::VectorXd& a) { return problem.project ? problem.project(a) : a; };
    auto error = [&](const Eigen::VectorXd& a) { return problem.error ? problem.error(a) : std::nan(""); };

    InversionRun run;
    Eigen::VectorXd a = project(start);
    try {
        Eigen::VectorXd predicted = problem.forward(a);
        for (int k = 0;; ++k) {
            const Eigen::VectorXd F = data - predicted;
            run.iterates.push_back(a);
            run.residual_norms.push_back(F.norm());
            run.relative_errors.push_back(error(a));
            if (k == config.max_iterations) {
                run.step_norms.push_back(std::nan(""));
                run.seconds.push_back(elapsed());
                run.termination = Termination::max_iterations;
                break;
            }
            const Eigen::MatrixXd G = fd_jacobian(problem, a, predicted, config.tau, config.workers);
            const Eigen::VectorXd h = lm_step(G, F, config.penalty, a);
            run.step_norms.push_back(h.norm());
            run.seconds.push_back(elapsed());

            a = project(a + h);
            predicted = problem.forward(a);
            if (h.norm() < config.eps) {
                const Eigen::VectorXd F_last = data - predicted;
                run.iterates.push_back(a);
                run.residual_norms.push_back(F_last.norm());
                run.relative_errors.push_back(error(a));
                run.step_norms.push_back(std::nan(""));
                run.seconds.push_back(elapsed());
                run.termination = Termination::step_small;
                break;
            }
        }
    } catch (const std::exception& e) {
        run.termination = Termination::failed;
        run.failure = e.what();
        while (run.step_norms.size() < run.iterates.size()) run.step_norms.push_back(std::nan(""));
        while (run.seconds.size() < run.iterates.size()) run.seconds.push_back(elapsed());
    }
    return run;
}

/// ||q_inv - q_true||_{L2} / ||q_true||_{L2} with cell-area weights.
inline double relative_error(const Mesh& mesh, const Eigen::VectorXd& q_inv, const Eigen::VectorXd& q_true) {
    const auto m = static_cast<Eigen::Index>(mesh.num_cells());
    if (q_inv.size() != m || q_true.size() != m) throw std::invalid_argument("fields do not match the mesh");
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
        const double w = mesh.cell(static_cast<std::size_t>(k)).area();
        num += w * (q_inv[k] - q_true[k]) * (q_inv[k] - q_true[k]);
        den += w * q_true[k] * q_true[k];
    }
    if (!(den > 0.0)) throw std::invalid_argument("reference field has zero norm");
    return std::sqrt(num / den);
}

/// Wraps an assembled problem: a -> realize -> stacked boundary fluxes.
inline InverseProblem make_inverse_problem(const Problem& problem, int inner_workers = 1) {
    InverseProblem ip;
    ip.dim = problem.param.dim();
    ip.forward = [&problem, inner_workers](const Eigen::VectorXd& a) {
        return problem.measure(problem.param.realize(a), inner_workers);
    };
    ip.project = [&problem](const Eigen::VectorXd& a) { return problem.param.clamp_parameters(a); };
    ip.error = [&problem](const Eigen::VectorXd& a) {
        return relative_error(problem.mesh(), problem.param.realize(a), problem.q_true);
    };
    return ip;
}

inline LmConfig default_lm_config(const Problem& problem) {
    LmConfig config;
    config.penalty = problem.penalty();
    return config;
}

/// Run the inversion of `data` for an assembled problem.
inline InversionRun run(const LmConfig& config, const Problem& problem, const Eigen::VectorXd& data) {
    const InverseProblem ip = make_inverse_problem(problem);
    return run_lm(config, ip, data, config.start.value_or(problem.param.default_start()));
}

/// One row per iterate; seconds are reported only when `with_time` is set,
/// so logs of identical runs are byte-identical by default.
inline io::IterationLog iteration_log(const InversionRun& run, io::Metadata meta = {}, bool with_time = false) {
    io::IterationLog log;
    log.meta = std::move(meta);
    for (std::size_t k = 0; k < run.iterates.size(); ++k) {
        log.rows.push_back({static_cast<int>(k), run.residual_norms[k], run.step_norms[k], run.relative_errors[k],
                            with_time ? run.seconds[k] : 0.0});
    }
    return log;
}

}  // namespace tfrac
