#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tfrac {

/// beta * ||a||_2^2 + gamma * (||a||_1 + TV_graph(a)) on the reduced parameter.
struct Penalty {
    double beta = 0.0;
    double gamma = 0.0;
    /// smoothing of |.| inside the lagged-diffusivity matrices
    double smooth_eps = 1e-4;
    /// undirected neighbour pairs over parameter indices
    std::vector<std::pair<int, int>> graph;

    void validate() const {
        if (!(beta >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("penalty weights must be nonnegative");
        if (!(smooth_eps > 0.0)) throw std::invalid_argument("smoothing parameter must be positive");
    }
};

inline double total_variation(const std::vector<std::pair<int, int>>& graph, const Eigen::VectorXd& a) {
    double tv = 0.0;
    for (const auto& [i, j] : graph) tv += std::abs(a[i] - a[j]);
    return tv;
}

inline double penalty_value(const Penalty& p, const Eigen::VectorXd& a) {
    p.validate();
    double value = p.beta * a.squaredNorm();
    if (p.gamma != 0.0) value += p.gamma * (a.lpNorm<1>() + total_variation(p.graph, a));
    return value;
}

struct PenaltyMatrices {
    /// diag(1 / sqrt(a_i^2 + eps^2))
    Eigen::MatrixXd L1;
    /// graph Laplacian with edge weights 1 / sqrt((a_i - a_j)^2 + eps^2)
    Eigen::MatrixXd L2;
};

/// Lagged-diffusivity forms of the L1 norm and total variation at a_current.
inline PenaltyMatrices penalty_matrices(const Penalty& p, const Eigen::VectorXd& a) {
    p.validate();
    const Eigen::Index n = a.size();
    const double eps2 = p.smooth_eps * p.smooth_eps;
    PenaltyMatrices m;
    m.L1 = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m.L1(i, i) = 1.0 / std::sqrt(a[i] * a[i] + eps2);
    m.L2 = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : p.graph) {
        if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw std::invalid_argument("penalty graph edge out of range");
        const double d = a[i] - a[j];
        const double w = 1.0 / std::sqrt(d * d + eps2);
        m.L2(i, i) += w;
        m.L2(j, j) += w;
        m.L2(i, j) -= w;
        m.L2(j, i) -= w;
    }
    return m;
}

}  // namespace tfrac
