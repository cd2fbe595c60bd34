#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <tfrac/regpen.hpp>

using namespace tfrac;

namespace {

std::vector<std::pair<int, int>> chain(int n) {
    std::vector<std::pair<int, int>> g;
    for (int i = 0; i + 1 < n; ++i) g.emplace_back(i, i + 1);
    return g;
}

std::vector<std::pair<int, int>> grid3() {
    std::vector<std::pair<int, int>> g;
    for (int ix = 0; ix < 3; ++ix) {
        for (int iy = 0; iy < 3; ++iy) {
            const int r = ix * 3 + iy;
            if (iy < 2) g.emplace_back(r, r + 1);
            if (ix < 2) g.emplace_back(r, r + 3);
        }
    }
    return g;
}

}  // namespace

TEST(Penalty, ValueCombinesTerms) {
    Penalty p{0.5, 2.0, 1e-4, chain(3)};
    Eigen::VectorXd a(3);
    a << 1.0, -2.0, 4.0;
    // 0.5*21 + 2*(7 + 3 + 6)
    EXPECT_DOUBLE_EQ(penalty_value(p, a), 10.5 + 32.0);
    p.graph.clear();
    EXPECT_DOUBLE_EQ(penalty_value(p, a), 10.5 + 14.0);
    EXPECT_DOUBLE_EQ(total_variation(chain(3), a), 9.0);
}

TEST(Penalty, RejectsInvalidWeights) {
    EXPECT_THROW(penalty_value(Penalty{-1.0, 0.0}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    EXPECT_THROW(penalty_value(Penalty{0.0, 0.0, 0.0}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
    EXPECT_THROW(penalty_matrices(Penalty{0.0, 1.0, 1e-4, {{0, 5}}}, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

TEST(PenaltyMatrices, TwoNodeChainWithUnitSmoothing) {
    const Penalty p{0.0, 1.0, 1.0, chain(2)};
    const auto m = penalty_matrices(p, Eigen::Vector2d(0.0, 1.0));
    const double w = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(m.L2(0, 0), w, 1e-15);
    EXPECT_NEAR(m.L2(0, 1), -w, 1e-15);
    EXPECT_NEAR(m.L2(1, 0), -w, 1e-15);
    EXPECT_NEAR(m.L2(1, 1), w, 1e-15);
    EXPECT_NEAR(m.L1(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(m.L1(1, 1), w, 1e-15);
}

TEST(PenaltyMatrices, SymmetricPsdWithConstantKernel) {
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    for (const auto& graph : {chain(20), grid3(), std::vector<std::pair<int, int>>{}}) {
        const int n = graph.empty() ? 8 : (graph == grid3() ? 9 : 20);
        for (int trial = 0; trial < 5; ++trial) {
            Eigen::VectorXd a(n);
            for (auto& v : a) v = nd(rng);
            const auto m = penalty_matrices(Penalty{0.0, 1.0, 1e-3, graph}, a);
            EXPECT_LT((m.L2 - m.L2.transpose()).cwiseAbs().maxCoeff(), 1e-15);
            EXPECT_LT((m.L2 * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff(), 1e-9);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.L2);
            EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-9 * std::max(1.0, eig.eigenvalues().maxCoeff()));
            EXPECT_GT(m.L1.diagonal().minCoeff(), 0.0);
        }
    }
}

TEST(PenaltyMatrices, QuadraticFormsApproachTheNorms) {
    const std::vector<Eigen::VectorXd> cases{Eigen::Vector3d(1.0, -2.0, 0.5), Eigen::Vector3d(3.0, 3.5, -1.0),
                                             Eigen::Vector3d(-0.2, 0.7, 2.0)};
    for (const auto& a : cases) {
        double prev_l1 = 1e300, prev_tv = 1e300;
        for (double eps : {1e-2, 1e-4, 1e-6}) {
            const auto m = penalty_matrices(Penalty{0.0, 1.0, eps, chain(3)}, a);
            const double e1 = std::abs(a.dot(m.L1 * a) - a.lpNorm<1>());
            const double e2 = std::abs(a.dot(m.L2 * a) - total_variation(chain(3), a));
            EXPECT_LE(e1, prev_l1);
            EXPECT_LE(e2, prev_tv);
            prev_l1 = e1;
            prev_tv = e2;
        }
        EXPECT_LT(prev_l1, 1e-10);
        EXPECT_LT(prev_tv, 1e-10);
    }
}
