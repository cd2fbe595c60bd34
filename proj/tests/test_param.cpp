#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <tfrac/param.hpp>

using namespace tfrac;

// Separable kernel: the 2-D spectrum is the outer product of the 1-D Nystrom
// spectra. Reference values from an independent dense computation.
TEST(Kle, FrozenSpectrumOnTwentyByTwenty) {
    const Mesh mesh(20, 20);
    const KleBasis kle = build_kle_modes(mesh, 0.01, 0.3, 0.3, 10);
    const double lambda[10] = {0.00348551274494906, 0.00171454237734471, 0.00171454237734471, 0.00084339257343723,
                               0.00055377884940755, 0.00055377884940755, 0.00027240678042631, 0.00027240678042631,
                               0.00012548837277432, 0.00012548837277432};
    const double cumulative[10] = {0.3485512744949057, 0.5200055122293763, 0.6914597499638468, 0.7757990073075696,
                                   0.8311768922483249, 0.8865547771890803, 0.9137954552317112, 0.9410361332743422,
                                   0.9535849705517743, 0.9661338078292062};
    EXPECT_NEAR(kle.eigenvalues.sum(), 0.01, 1e-15);
    double acc = 0.0;
    for (int i = 0; i < 10; ++i) {
        EXPECT_NEAR(kle.eigenvalues[i], lambda[i], 1e-14);
        acc += kle.eigenvalues[i];
        EXPECT_NEAR(acc / kle.eigenvalues.sum(), cumulative[i], 1e-12);
    }
    EXPECT_NEAR(kle.retained_energy(), cumulative[9], 1e-12);
}

TEST(Kle, EnergyThresholdPicksSmallestSufficientCount) {
    const Mesh mesh(20, 20);
    EXPECT_EQ(build_kle(mesh, 0.01, 0.3, 0.3, 0.90).n_q(), 7);
    EXPECT_EQ(build_kle(mesh, 0.01, 0.3, 0.3, 0.94).n_q(), 8);
    EXPECT_EQ(build_kle(mesh, 0.01, 0.3, 0.3, 0.95).n_q(), 9);
    const KleBasis full = build_kle(mesh, 0.01, 0.3, 0.3, 1.0);
    EXPECT_GE(full.retained_energy(), 1.0 - 1e-13);
    EXPECT_LT(build_kle_modes(mesh, 0.01, 0.3, 0.3, full.n_q() - 1).retained_energy(), 1.0);
    EXPECT_THROW(build_kle(mesh, 0.01, 0.3, 0.3, 0.0), std::invalid_argument);
    EXPECT_THROW(build_kle(mesh, -1.0, 0.3, 0.3, 0.9), std::invalid_argument);
}

TEST(Kle, ModesAreWeightedOrthogonal) {
    const Mesh mesh(12, 10);
    const KleBasis kle = build_kle(mesh, 0.5, 0.2, 0.4, 0.99);
    const double w = mesh.cell(0).area();
    const Eigen::MatrixXd gram = w * kle.eigenfunctions.transpose() * kle.eigenfunctions;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(kle.n_q(), kle.n_q())).cwiseAbs().maxCoeff(), 1e-10);
    // modes carry sqrt(lambda): H^T W H = diag(lambda)
    const Eigen::MatrixXd hh = w * kle.modes.transpose() * kle.modes;
    for (int i = 0; i < kle.n_q(); ++i) EXPECT_NEAR(hh(i, i), kle.eigenvalues[i], 1e-12);
    for (int i = 1; i < kle.eigenvalues.size(); ++i) EXPECT_LE(kle.eigenvalues[i], kle.eigenvalues[i - 1]);
}

TEST(Kle, SignConventionIsDeterministic) {
    const Mesh mesh(10, 10);
    const KleBasis a = build_kle_modes(mesh, 0.01, 0.3, 0.3, 6);
    const KleBasis b = build_kle_modes(mesh, 0.01, 0.3, 0.3, 6);
    EXPECT_EQ(a.modes, b.modes);
    for (int i = 0; i < 6; ++i) {
        const auto col = a.eigenfunctions.col(i);
        const double scale = col.cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < col.size(); ++k) {
            if (std::abs(col[k]) > 1e-6 * scale) {
                EXPECT_GT(col[k], 0.0);
                break;
            }
        }
    }
}

TEST(Param, KleRealizeIsExponentialOfModes) {
    const Mesh mesh(8, 8);
    const auto param = CoefficientParam::kle(build_kle_modes(mesh, 0.01, 0.3, 0.3, 4));
    EXPECT_EQ(param.dim(), 4);
    EXPECT_TRUE(param.graph().empty());
    EXPECT_EQ(param.realize(Eigen::VectorXd::Zero(4)), Eigen::VectorXd::Ones(64));
    Eigen::VectorXd a(4);
    a << 1.0, -2.0, 0.5, 3.0;
    const Eigen::VectorXd q = param.realize(a);
    EXPECT_LT((q.array().log().matrix() - param.kle_modes() * a).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(param.clamp_parameters(a * 1e6), a * 1e6);
    EXPECT_THROW(param.realize(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST(Param, SubregionLayoutAndGraph) {
    const Mesh mesh(18, 18);
    const auto param = CoefficientParam::subregions(mesh, 3, 3);
    EXPECT_EQ(param.dim(), 9);
    EXPECT_EQ(param.graph().size(), 12u);
    // block (ix, iy) -> ix*3 + iy
    EXPECT_EQ(param.region_of_cell()[mesh.cell_index(0, 0)], 0);
    EXPECT_EQ(param.region_of_cell()[mesh.cell_index(0, 17)], 2);
    EXPECT_EQ(param.region_of_cell()[mesh.cell_index(6, 0)], 3);
    EXPECT_EQ(param.region_of_cell()[mesh.cell_index(17, 17)], 8);
    // the jump truth is an exact member of this family
    const Eigen::VectorXd q = project_truth(mesh, TruthCase::jump);
    const Eigen::VectorXd a = param.region_average(mesh, q);
    Eigen::VectorXd expect = Eigen::VectorXd::Ones(9);
    expect[0] = expect[3] = 10.0;
    EXPECT_LT((a - expect).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((param.realize(a) - q).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(CoefficientParam::subregions(mesh, 4, 3), std::invalid_argument);
}

TEST(Param, StripsAndClamping) {
    const Mesh mesh(20, 20);
    const auto param = CoefficientParam::strips(mesh, 20, {0.5, 8.0});
    EXPECT_EQ(param.dim(), 20);
    EXPECT_EQ(param.graph().size(), 19u);
    Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(20, -1.0, 10.0);
    const Eigen::VectorXd q = param.realize(a);
    EXPECT_DOUBLE_EQ(q.minCoeff(), 0.5);
    EXPECT_DOUBLE_EQ(q.maxCoeff(), 8.0);
    EXPECT_EQ(param.clamp_parameters(a).minCoeff(), 0.5);
    EXPECT_EQ(param.default_start(), Eigen::VectorXd::Ones(20));
    EXPECT_THROW(CoefficientParam::strips(mesh, 3), std::invalid_argument);
    EXPECT_THROW(CoefficientParam::strips(mesh, 4, {2.0, 1.0}), std::invalid_argument);
}

TEST(Truth, FrozenValues) {
    EXPECT_NEAR(truth_value(TruthCase::smooth, 0.025, 0.025), 1.5782172325201154, 1e-15);
    EXPECT_NEAR(truth_value(TruthCase::smooth, 0.5, 0.5), 1.5, 1e-15);
    EXPECT_EQ(truth_value(TruthCase::jump, 0.5, 0.2), 10.0);
    EXPECT_EQ(truth_value(TruthCase::jump, 0.7, 0.2), 1.0);
    EXPECT_EQ(truth_value(TruthCase::piecewise_smooth, 0.1, 0.9), 1.0);
    EXPECT_NEAR(truth_value(TruthCase::piecewise_smooth, 0.375, 0.0), 2.5, 1e-15);
    EXPECT_EQ(truth_value(TruthCase::piecewise_smooth, 0.6, 0.3), 4.0);
    EXPECT_NEAR(truth_value(TruthCase::piecewise_smooth, 0.875, 0.3), 2.5, 1e-15);
}

TEST(Truth, PiecewiseSmoothIsContinuous) {
    for (double x : {0.25, 0.5, 0.75}) {
        EXPECT_NEAR(truth_value(TruthCase::piecewise_smooth, x - 1e-12, 0.5),
                    truth_value(TruthCase::piecewise_smooth, x + 1e-12, 0.5), 1e-9);
    }
}

TEST(Truth, NamesRoundTrip) {
    for (auto c : {TruthCase::smooth, TruthCase::jump, TruthCase::piecewise_smooth}) {
        EXPECT_EQ(parse_truth_case(to_string(c)), c);
    }
    EXPECT_THROW(parse_truth_case("wavy"), std::invalid_argument);
}
