#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mesh.hpp"

namespace tfrac {

/// Truncated Karhunen-Loeve basis of a zero-mean Gaussian field with squared
/// exponential covariance rho2 * exp(-dx^2/(2 l1^2) - dy^2/(2 l2^2)),
/// discretized by a Nystrom rule at cell centres with cell-area weights.
struct KleBasis {
    double rho2 = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double energy_fraction = 1.0;
    /// every eigenvalue, descending, tiny negatives clipped to zero
    Eigen::VectorXd eigenvalues;
    /// retained eigenfunctions at cell centres, orthonormal in the weighted inner product
    Eigen::MatrixXd eigenfunctions;
    /// columns sqrt(lambda_i) * phi_i; the matrix H in q = exp(H a)
    Eigen::MatrixXd modes;

    int n_q() const { return static_cast<int>(modes.cols()); }
    double retained_energy() const {
        const double total = eigenvalues.sum();
        return total > 0.0 ? eigenvalues.head(n_q()).sum() / total : 1.0;
    }
};

namespace detail {

struct KleSpectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenfunctions;
};

inline KleSpectrum kle_spectrum(const Mesh& mesh, double rho2, double l1, double l2) {
    if (!(rho2 > 0.0) || !(l1 > 0.0) || !(l2 > 0.0)) {
        throw std::invalid_argument("covariance variance and correlation lengths must be positive");
    }
    const auto m = static_cast<Eigen::Index>(mesh.num_cells());
    Eigen::VectorXd sqrt_w(m);
    std::vector<Point> centres(mesh.num_cells());
    for (Eigen::Index k = 0; k < m; ++k) {
        const Cell& c = mesh.cell(static_cast<std::size_t>(k));
        centres[static_cast<std::size_t>(k)] = c.center();
        sqrt_w[k] = std::sqrt(c.area());
    }
    Eigen::MatrixXd K(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Point& a = centres[static_cast<std::size_t>(i)];
            const Point& b = centres[static_cast<std::size_t>(j)];
            const double ddx = a.x - b.x;
            const double ddy = a.y - b.y;
            const double v = rho2 * std::exp(-ddx * ddx / (2 * l1 * l1) - ddy * ddy / (2 * l2 * l2));
            K(i, j) = K(j, i) = sqrt_w[i] * v * sqrt_w[j];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
    if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");

    KleSpectrum out;
    out.eigenvalues = eig.eigenvalues().reverse();
    out.eigenfunctions = eig.eigenvectors().rowwise().reverse();
    for (Eigen::Index i = 0; i < m; ++i) {
        if (out.eigenvalues[i] < 0.0) {
            if (out.eigenvalues[i] < -1e-12) throw std::runtime_error("covariance matrix is not positive semidefinite");
            out.eigenvalues[i] = 0.0;
        }
        auto col = out.eigenfunctions.col(i);
        col = col.cwiseQuotient(sqrt_w);
        // fix the sign: first clearly nonzero entry positive
        const double scale = col.cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < m; ++k) {
            if (std::abs(col[k]) > 1e-6 * scale) {
                if (col[k] < 0.0) col = -col;
                break;
            }
        }
    }
    return out;
}

inline KleBasis truncate(KleSpectrum spec, double rho2, double l1, double l2, int n_q, double fraction) {
    KleBasis basis;
    basis.rho2 = rho2;
    basis.l1 = l1;
    basis.l2 = l2;
    basis.energy_fraction = fraction;
    basis.eigenvalues = std::move(spec.eigenvalues);
    basis.eigenfunctions = spec.eigenfunctions.leftCols(n_q);
    basis.modes = basis.eigenfunctions * basis.eigenvalues.head(n_q).cwiseSqrt().asDiagonal();
    return basis;
}

}  // namespace detail

/// Retain the smallest number of modes whose eigenvalues carry at least
/// `energy_fraction` of the total.
inline KleBasis build_kle(const Mesh& mesh, double rho2, double l1, double l2, double energy_fraction) {
    if (!(energy_fraction > 0.0 && energy_fraction <= 1.0)) {
        throw std::invalid_argument("energy fraction must lie in (0,1]");
    }
    auto spec = detail::kle_spectrum(mesh, rho2, l1, l2);
    const double total = spec.eigenvalues.sum();
    double acc = 0.0;
    int n_q = 0;
    const auto m = static_cast<int>(spec.eigenvalues.size());
    // relative slack so that a fraction of exactly 1 is reachable despite rounding
    while (n_q < m && acc < energy_fraction * total * (1.0 - 1e-14)) acc += spec.eigenvalues[n_q++];
    return detail::truncate(std::move(spec), rho2, l1, l2, std::max(n_q, 1), energy_fraction);
}

/// Retain exactly `n_modes` modes.
inline KleBasis build_kle_modes(const Mesh& mesh, double rho2, double l1, double l2, int n_modes) {
    if (n_modes < 1 || static_cast<std::size_t>(n_modes) > mesh.num_cells()) {
        throw std::invalid_argument("mode count must lie in 1..number of cells");
    }
    auto spec = detail::kle_spectrum(mesh, rho2, l1, l2);
    const double total = spec.eigenvalues.sum();
    const double fraction = total > 0.0 ? spec.eigenvalues.head(n_modes).sum() / total : 1.0;
    return detail::truncate(std::move(spec), rho2, l1, l2, n_modes, fraction);
}

enum class ParamKind { kle, subregion, strip };

inline std::string_view to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::kle: return "kle";
        case ParamKind::subregion: return "subregion";
        case ParamKind::strip: return "strip";
    }
    return "?";
}

/// Admissible interval for q.
struct Bounds {
    double lower = 1e-3;
    double upper = 100.0;
};

/// Low-dimensional description a -> q(x) of the reaction coefficient.
///
/// KLE: q = exp(H a). SUBREGION: bx-by-by blocks, numbered with the y block
/// index running fastest (block (ix, iy) has index ix*by + iy). STRIP: full
/// height vertical strips numbered left to right. Indicator kinds carry a
/// neighbour graph used by the total-variation penalty.
class CoefficientParam {
public:
    static CoefficientParam kle(const KleBasis& basis, Bounds bounds = {}) {
        CoefficientParam p(ParamKind::kle, basis.n_q(), bounds);
        p.H_ = basis.modes;
        return p;
    }

    static CoefficientParam subregions(const Mesh& mesh, int bx, int by, Bounds bounds = {}) {
        if (bx < 1 || by < 1 || mesh.nx() % bx != 0 || mesh.ny() % by != 0) {
            throw std::invalid_argument("subregion partition " + std::to_string(bx) + "x" + std::to_string(by) +
                                        " does not align with a " + std::to_string(mesh.nx()) + "x" +
                                        std::to_string(mesh.ny()) + " mesh");
        }
        CoefficientParam p(ParamKind::subregion, bx * by, bounds);
        const int wx = mesh.nx() / bx;
        const int wy = mesh.ny() / by;
        p.region_.resize(mesh.num_cells());
        for (int j = 0; j < mesh.ny(); ++j) {
            for (int i = 0; i < mesh.nx(); ++i) p.region_[mesh.cell_index(i, j)] = (i / wx) * by + (j / wy);
        }
        for (int ix = 0; ix < bx; ++ix) {
            for (int iy = 0; iy < by; ++iy) {
                const int r = ix * by + iy;
                if (iy + 1 < by) p.graph_.emplace_back(r, r + 1);
                if (ix + 1 < bx) p.graph_.emplace_back(r, r + by);
            }
        }
        return p;
    }

    static CoefficientParam strips(const Mesh& mesh, int count, Bounds bounds = {}) {
        if (count < 1 || mesh.nx() % count != 0) {
            throw std::invalid_argument(std::to_string(count) + " strips do not align with " +
                                        std::to_string(mesh.nx()) + " cell columns");
        }
        CoefficientParam p(ParamKind::strip, count, bounds);
        const int w = mesh.nx() / count;
        p.region_.resize(mesh.num_cells());
        for (int j = 0; j < mesh.ny(); ++j) {
            for (int i = 0; i < mesh.nx(); ++i) p.region_[mesh.cell_index(i, j)] = i / w;
        }
        for (int r = 0; r + 1 < count; ++r) p.graph_.emplace_back(r, r + 1);
        return p;
    }

    ParamKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const Bounds& bounds() const { return bounds_; }
    /// Undirected neighbour pairs (i < j); empty for KLE.
    const std::vector<std::pair<int, int>>& graph() const { return graph_; }
    const std::vector<int>& region_of_cell() const { return region_; }
    const Eigen::MatrixXd& kle_modes() const { return H_; }

    /// Cellwise field for parameter vector a, clamped into the admissible bounds.
    Eigen::VectorXd realize(const Eigen::VectorXd& a) const {
        if (a.size() != dim_) {
            throw std::invalid_argument("parameter vector has " + std::to_string(a.size()) + " entries, expected " +
                                        std::to_string(dim_));
        }
        if (!a.allFinite()) throw std::invalid_argument("parameter vector has non-finite entries");
        Eigen::VectorXd q;
        if (kind_ == ParamKind::kle) {
            q = (H_ * a).array().exp().matrix();
        } else {
            q.resize(static_cast<Eigen::Index>(region_.size()));
            for (std::size_t k = 0; k < region_.size(); ++k) q[static_cast<Eigen::Index>(k)] = a[region_[k]];
        }
        return clamp_field(q);
    }

    Eigen::VectorXd clamp_field(const Eigen::VectorXd& q) const {
        return q.cwiseMax(bounds_.lower).cwiseMin(bounds_.upper);
    }

    /// Keeps iterates admissible: indicator coefficients are q itself and get
    /// clamped; KLE coordinates are unconstrained.
    Eigen::VectorXd clamp_parameters(const Eigen::VectorXd& a) const {
        if (kind_ == ParamKind::kle) return a;
        return a.cwiseMax(bounds_.lower).cwiseMin(bounds_.upper);
    }

    /// Mean of q over each region (indicator kinds only).
    Eigen::VectorXd region_average(const Mesh& mesh, const Eigen::VectorXd& q) const {
        if (kind_ == ParamKind::kle) throw std::logic_error("region averaging needs an indicator parametrization");
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_);
        Eigen::VectorXd area = Eigen::VectorXd::Zero(dim_);
        for (std::size_t k = 0; k < region_.size(); ++k) {
            const double w = mesh.cell(k).area();
            sum[region_[k]] += w * q[static_cast<Eigen::Index>(k)];
            area[region_[k]] += w;
        }
        return sum.cwiseQuotient(area);
    }

    /// Neutral start: q = 1 everywhere.
    Eigen::VectorXd default_start() const {
        return kind_ == ParamKind::kle ? Eigen::VectorXd::Zero(dim_) : Eigen::VectorXd::Ones(dim_);
    }

private:
    CoefficientParam(ParamKind kind, int dim, Bounds bounds) : kind_(kind), dim_(dim), bounds_(bounds) {
        if (!(bounds.lower > 0.0 && bounds.lower < bounds.upper)) {
            throw std::invalid_argument("admissible bounds need 0 < lower < upper");
        }
    }

    ParamKind kind_;
    int dim_;
    Bounds bounds_;
    Eigen::MatrixXd H_;
    std::vector<int> region_;
    std::vector<std::pair<int, int>> graph_;
};

inline Eigen::VectorXd realize(const CoefficientParam& param, const Eigen::VectorXd& a) { return param.realize(a); }

enum class TruthCase { smooth, jump, piecewise_smooth };

inline std::string_view to_string(TruthCase c) {
    switch (c) {
        case TruthCase::smooth: return "smooth";
        case TruthCase::jump: return "jump";
        case TruthCase::piecewise_smooth: return "pwsmooth";
    }
    return "?";
}

inline TruthCase parse_truth_case(std::string_view name) {
    if (name == "smooth") return TruthCase::smooth;
    if (name == "jump") return TruthCase::jump;
    if (name == "pwsmooth" || name == "piecewise-smooth" || name == "piecewise_smooth") {
        return TruthCase::piecewise_smooth;
    }
    throw std::invalid_argument("unknown truth case '" + std::string(name) + "'");
}

inline double truth_value(TruthCase c, double x, double y) {
    switch (c) {
        case TruthCase::smooth: return std::cos(std::numbers::pi * x) * std::sin(std::numbers::pi * y) + 1.5;
        case TruthCase::jump: return (x <= 2.0 / 3.0 && y <= 1.0 / 3.0) ? 10.0 : 1.0;
        case TruthCase::piecewise_smooth:
            if (x < 0.25) return 1.0;
            if (x < 0.5) return 12.0 * x - 2.0;
            if (x < 0.75) return 4.0;
            return -12.0 * x + 13.0;
    }
    return 0.0;
}

/// Truth field evaluated at cell centres.
inline Eigen::VectorXd project_truth(const Mesh& mesh, TruthCase c) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(mesh.num_cells()));
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const Point p = mesh.cell(k).center();
        q[static_cast<Eigen::Index>(k)] = truth_value(c, p.x, p.y);
    }
    return q;
}

}  // namespace tfrac
