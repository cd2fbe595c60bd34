#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "caputo.hpp"
#include "mesh.hpp"
#include "parallel.hpp"

namespace tfrac {

/// Thrown when the block system cannot be factorized or solved.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dirichlet excitation u = lambda(t) g(x) on the boundary.
struct Excitation {
    std::function<double(double, double)> g;
    std::function<double(double)> lambda;
    std::string label;

    /// g = sin(k1 pi x) cos(k2 pi y), lambda = t^2.
    static Excitation sine_cosine(int k1, int k2) {
        Excitation e;
        e.g = [k1, k2](double x, double y) {
            return std::sin(k1 * std::numbers::pi * x) * std::cos(k2 * std::numbers::pi * y);
        };
        e.lambda = [](double t) { return t * t; };
        e.label = "sincos(" + std::to_string(k1) + "," + std::to_string(k2) + ")";
        return e;
    }

    /// Same time amplitude, boundary profile multiplied by `factor`.
    Excitation scaled(double factor) const {
        Excitation e = *this;
        e.g = [inner = g, factor](double x, double y) { return factor * inner(x, y); };
        e.label = label + "*" + std::to_string(factor);
        return e;
    }
};

/// The q-independent part of the mixed system: A (negated RT0 mass, I x I),
/// B (divergence coupling, I x J) and the diagonal of C (cell areas).
struct StaticMatrices {
    Eigen::SparseMatrix<double> A;
    Eigen::SparseMatrix<double> B;
    Eigen::VectorXd C;
};

inline StaticMatrices assemble_static(const Mesh& mesh) {
    const auto n_edges = static_cast<Eigen::Index>(mesh.num_edges());
    const auto n_cells = static_cast<Eigen::Index>(mesh.num_cells());
    std::vector<Eigen::Triplet<double>> a_entries;
    std::vector<Eigen::Triplet<double>> b_entries;
    a_entries.reserve(mesh.num_cells() * 8);
    b_entries.reserve(mesh.num_cells() * 4);

    StaticMatrices m;
    m.C.resize(n_cells);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const Cell& c = mesh.cell(k);
        const double area = c.area();
        m.C[static_cast<Eigen::Index>(k)] = area;
        // On a rectangle the two x-directed shape functions are linear in x:
        // int psi_L^2 = int psi_R^2 = area/3, int psi_L psi_R = area/6.
        const double diag = area / 3.0;
        const double off = area / 6.0;
        const auto [left, right, bottom, top] = c.edges;
        for (auto [p, q] : {std::pair{left, right}, std::pair{bottom, top}}) {
            a_entries.emplace_back(p, p, -diag);
            a_entries.emplace_back(q, q, -diag);
            a_entries.emplace_back(p, q, -off);
            a_entries.emplace_back(q, p, -off);
        }
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& edge = mesh.edge(e);
        // the fixed normal points out of cells[0] and into cells[1]
        if (edge.cells[0] >= 0) b_entries.emplace_back(static_cast<int>(e), edge.cells[0], edge.length);
        if (edge.cells[1] >= 0) b_entries.emplace_back(static_cast<int>(e), edge.cells[1], -edge.length);
    }
    m.A.resize(n_edges, n_edges);
    m.A.setFromTriplets(a_entries.begin(), a_entries.end());
    m.B.resize(n_edges, n_cells);
    m.B.setFromTriplets(b_entries.begin(), b_entries.end());
    return m;
}

/// Diagonal of D(q): q_cell * cell area.
inline Eigen::VectorXd assemble_reaction(const Mesh& mesh, const Eigen::VectorXd& q) {
    if (q.size() != static_cast<Eigen::Index>(mesh.num_cells())) {
        throw std::invalid_argument("reaction field has " + std::to_string(q.size()) + " values for " +
                                    std::to_string(mesh.num_cells()) + " cells");
    }
    Eigen::VectorXd d(q.size());
    for (Eigen::Index k = 0; k < q.size(); ++k) {
        if (!std::isfinite(q[k]) || q[k] <= 0.0) {
            throw std::invalid_argument("reaction coefficient must be finite and positive, cell " +
                                        std::to_string(k) + " has " + std::to_string(q[k]));
        }
        d[k] = q[k] * mesh.cell(static_cast<std::size_t>(k)).area();
    }
    return d;
}

/// int_{edge} g(x) (psi_e . nu) ds for every edge; zero off the boundary.
/// Three-point Gauss rule per boundary edge.
inline Eigen::VectorXd boundary_load_profile(const Mesh& mesh, const std::function<double(double, double)>& g) {
    static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_edges()));
    for (const BoundaryEdge& be : mesh.boundary_edges()) {
        const Edge& e = mesh.edge(static_cast<std::size_t>(be.edge));
        const Point mid = e.midpoint();
        const double hx = 0.5 * (e.b.x - e.a.x);
        const double hy = 0.5 * (e.b.y - e.a.y);
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += kWeights[k] * g(mid.x + kNodes[k] * hx, mid.y + kNodes[k] * hy);
        out[be.edge] = be.sign * 0.5 * e.length * sum;
    }
    return out;
}

/// G with G(:, n-1) = lambda(t_n) * boundary_load_profile(g), n = 1..steps.
inline Eigen::MatrixXd assemble_boundary_load(const Mesh& mesh, const Excitation& exc, const CaputoScheme& scheme) {
    const Eigen::VectorXd profile = boundary_load_profile(mesh, exc.g);
    Eigen::MatrixXd G(profile.size(), scheme.steps());
    for (int n = 1; n <= scheme.steps(); ++n) G.col(n - 1) = exc.lambda(scheme.time(n)) * profile;
    return G;
}

/// Flux dofs and cell values at every time level. Index n holds step n;
/// index 0 is the zero initial state.
struct ForwardSolution {
    std::vector<Eigen::VectorXd> sigma;
    std::vector<Eigen::VectorXd> beta;
    std::shared_ptr<const Mesh> mesh;
    std::shared_ptr<const CaputoScheme> scheme;

    int steps() const { return static_cast<int>(sigma.size()) - 1; }
};

/// The block operator [A B; sB^T C+sD(q)] factorized for one reaction field.
/// Immutable after construction; solve() may be called concurrently.
class FactorizedOperator {
public:
    FactorizedOperator(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const CaputoScheme> scheme,
                       const StaticMatrices& statics, const Eigen::VectorXd& q)
        : mesh_(std::move(mesh)), scheme_(std::move(scheme)), C_(statics.C) {
        const Eigen::VectorXd D = assemble_reaction(*mesh_, q);
        const double s = scheme_->s();
        const Eigen::Index ne = statics.A.rows();
        const Eigen::Index nc = statics.B.cols();
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<std::size_t>(statics.A.nonZeros() + 2 * statics.B.nonZeros() + nc));
        for (int k = 0; k < statics.A.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(statics.A, k); it; ++it) {
                entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
            }
        }
        for (int k = 0; k < statics.B.outerSize(); ++k) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(statics.B, k); it; ++it) {
                const auto e = static_cast<int>(it.row());
                const auto c = static_cast<int>(ne + it.col());
                entries.emplace_back(e, c, it.value());
                entries.emplace_back(c, e, s * it.value());
            }
        }
        for (Eigen::Index c = 0; c < nc; ++c) {
            entries.emplace_back(static_cast<int>(ne + c), static_cast<int>(ne + c), C_[c] + s * D[c]);
        }
        system_.resize(ne + nc, ne + nc);
        system_.setFromTriplets(entries.begin(), entries.end());
        system_.makeCompressed();

        lu_.analyzePattern(system_);
        lu_.factorize(system_);
        if (lu_.info() != Eigen::Success) {
            throw SolverError("block system factorization failed: " + lu_.lastErrorMessage());
        }
    }

    const Eigen::SparseMatrix<double>& system() const { return system_; }
    Eigen::Index num_flux_dofs() const { return system_.rows() - C_.size(); }
    Eigen::Index num_cell_dofs() const { return C_.size(); }

    ForwardSolution solve(const Excitation& exc) const {
        const int steps = scheme_->steps();
        const Eigen::Index ne = num_flux_dofs();
        const Eigen::Index nc = num_cell_dofs();
        const Eigen::VectorXd profile = boundary_load_profile(*mesh_, exc.g);

        ForwardSolution sol;
        sol.mesh = mesh_;
        sol.scheme = scheme_;
        sol.sigma.assign(static_cast<std::size_t>(steps) + 1, Eigen::VectorXd::Zero(ne));
        sol.beta.assign(static_cast<std::size_t>(steps) + 1, Eigen::VectorXd::Zero(nc));

        Eigen::VectorXd rhs(ne + nc);
        for (int n = 1; n <= steps; ++n) {
            rhs.head(ne) = exc.lambda(scheme_->time(n)) * profile;
            rhs.tail(nc) = C_.cwiseProduct(history_combination(
                *scheme_, n, std::span<const Eigen::VectorXd>(sol.beta.data(), static_cast<std::size_t>(n))));
            Eigen::VectorXd x = lu_.solve(rhs);
            if (lu_.info() != Eigen::Success || !x.allFinite()) {
                throw SolverError("block system solve failed at step " + std::to_string(n));
            }
            sol.sigma[static_cast<std::size_t>(n)] = x.head(ne);
            sol.beta[static_cast<std::size_t>(n)] = x.tail(nc);
        }
        return sol;
    }

    /// Max-norm residual of the step-n block system for a computed solution.
    double step_residual(const ForwardSolution& sol, const Excitation& exc, int n) const {
        const Eigen::Index ne = num_flux_dofs();
        const Eigen::Index nc = num_cell_dofs();
        Eigen::VectorXd x(ne + nc);
        x << sol.sigma.at(static_cast<std::size_t>(n)), sol.beta.at(static_cast<std::size_t>(n));
        Eigen::VectorXd rhs(ne + nc);
        rhs.head(ne) = exc.lambda(scheme_->time(n)) * boundary_load_profile(*mesh_, exc.g);
        rhs.tail(nc) = C_.cwiseProduct(history_combination(
            *scheme_, n, std::span<const Eigen::VectorXd>(sol.beta.data(), static_cast<std::size_t>(n))));
        return (system_ * x - rhs).lpNorm<Eigen::Infinity>();
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    std::shared_ptr<const CaputoScheme> scheme_;
    Eigen::VectorXd C_;
    Eigen::SparseMatrix<double> system_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

/// Outward normal derivative du/dnu on the region's edges at the requested
/// steps, time-major. Since omega = -grad u and the RT0 dof is the normal
/// component along the fixed edge normal, du/dnu = -sign * sigma_e.
inline Eigen::VectorXd extract_flux(const ForwardSolution& sol, const BoundaryRegion& region,
                                    std::span<const int> times) {
    const auto edges = boundary_restriction(*sol.mesh, region);
    Eigen::VectorXd out(static_cast<Eigen::Index>(edges.size() * times.size()));
    Eigen::Index pos = 0;
    for (int n : times) {
        if (n < 1 || n > sol.steps()) {
            throw std::out_of_range("measurement step " + std::to_string(n) + " outside 1.." +
                                    std::to_string(sol.steps()));
        }
        const Eigen::VectorXd& sigma = sol.sigma[static_cast<std::size_t>(n)];
        for (const BoundaryEdge& be : edges) out[pos++] = -be.sign * sigma[be.edge];
    }
    return out;
}

/// Mesh, time scheme and static matrices shared by every forward solve.
class ForwardModel {
public:
    ForwardModel(Mesh mesh, CaputoScheme scheme)
        : mesh_(std::make_shared<const Mesh>(std::move(mesh))),
          scheme_(std::make_shared<const CaputoScheme>(std::move(scheme))),
          statics_(std::make_shared<const StaticMatrices>(assemble_static(*mesh_))) {}

    const Mesh& mesh() const { return *mesh_; }
    const CaputoScheme& scheme() const { return *scheme_; }
    const StaticMatrices& statics() const { return *statics_; }

    FactorizedOperator factorize(const Eigen::VectorXd& q) const {
        return FactorizedOperator(mesh_, scheme_, *statics_, q);
    }

    ForwardSolution solve(const Eigen::VectorXd& q, const Excitation& exc) const { return factorize(q).solve(exc); }

    /// Stacked boundary measurements [F(q,g_1); ...; F(q,g_N)]: one
    /// factorization shared by all excitations.
    Eigen::VectorXd dirichlet_to_neumann(const Eigen::VectorXd& q, std::span<const Excitation> excitations,
                                         const BoundaryRegion& region, std::span<const int> times,
                                         int workers = 1) const {
        if (excitations.empty()) throw std::invalid_argument("need at least one excitation");
        const FactorizedOperator op = factorize(q);
        std::vector<Eigen::VectorXd> blocks(excitations.size());
        parallel_for(excitations.size(), workers,
                     [&](std::size_t i) { blocks[i] = extract_flux(op.solve(excitations[i]), region, times); });
        Eigen::Index total = 0;
        for (const auto& b : blocks) total += b.size();
        Eigen::VectorXd out(total);
        Eigen::Index pos = 0;
        for (const auto& b : blocks) {
            out.segment(pos, b.size()) = b;
            pos += b.size();
        }
        return out;
    }

private:
    std::shared_ptr<const Mesh> mesh_;
    std::shared_ptr<const CaputoScheme> scheme_;
    std::shared_ptr<const StaticMatrices> statics_;
};

inline ForwardSolution solve_forward(const Mesh& mesh, const Eigen::VectorXd& q, const Excitation& exc,
                                     const CaputoScheme& scheme) {
    return ForwardModel(mesh, scheme).solve(q, exc);
}

inline Eigen::VectorXd dirichlet_to_neumann(const Mesh& mesh, const Eigen::VectorXd& q,
                                            std::span<const Excitation> excitations, const CaputoScheme& scheme,
                                            const BoundaryRegion& region, std::span<const int> times) {
    return ForwardModel(mesh, scheme).dirichlet_to_neumann(q, excitations, region, times);
}

}  // namespace tfrac
