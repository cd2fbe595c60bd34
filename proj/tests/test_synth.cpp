#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <tfrac/synth.hpp>

using namespace tfrac;

namespace {

ExperimentSpec small_spec() {
    ExperimentSpec s = named_spec("jump");
    s.nx = s.ny = 6;
    s.steps = 30;
    s.times = step_range(10, 10, 30);
    return s;
}

}  // namespace

TEST(Specs, NamedSetUps) {
    const auto smooth = named_spec("smooth");
    EXPECT_EQ(smooth.kind, ParamKind::kle);
    EXPECT_EQ(smooth.nx, 20);
    EXPECT_EQ(smooth.kle.modes, 8);
    EXPECT_EQ(smooth.gamma, 0.0);
    EXPECT_EQ(smooth.times, (std::vector<int>{61, 71, 81, 91, 101}));
    const auto jump = named_spec("jump");
    EXPECT_EQ(jump.nx, 18);
    EXPECT_EQ(jump.beta, 0.0);
    EXPECT_EQ(jump.gamma, 5e-3);
    const auto pw = named_spec("pwsmooth");
    EXPECT_EQ(pw.kind, ParamKind::strip);
    EXPECT_EQ(pw.times.size(), 40u);
    EXPECT_EQ(pw.times.front(), 21);
    EXPECT_EQ(pw.times.back(), 99);
    EXPECT_THROW(named_spec("nope"), std::invalid_argument);
}

TEST(Specs, Validation) {
    ExperimentSpec s = small_spec();
    s.times = {10, 40};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = small_spec();
    s.times = {20, 10};
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = small_spec();
    s.experiments = 6;
    EXPECT_THROW(s.validate(), std::invalid_argument);
    s = small_spec();
    s.delta = -0.1;
    EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Specs, ExcitationsFollowTheFixedOrder) {
    ExperimentSpec s = small_spec();
    s.experiments = 5;
    const auto ex = s.excitations();
    ASSERT_EQ(ex.size(), 5u);
    const double x = 0.3, y = 0.2;
    const double pi = std::acos(-1.0);
    EXPECT_NEAR(ex[1].g(x, y), std::sin(pi * x) * std::cos(2 * pi * y), 1e-15);
    EXPECT_NEAR(ex[4].g(x, y), std::sin(pi * x) * std::cos(3 * pi * y), 1e-15);
    EXPECT_DOUBLE_EQ(ex[0].lambda(0.5), 0.25);
}

TEST(Data, NoiseLevelAndDeterminism) {
    ExperimentSpec s = small_spec();
    s.delta = 0.05;
    const Problem p = Problem::build(s);
    const auto a = make_data(p, 42);
    const auto b = make_data(p, 42);
    const auto c = make_data(p, 43);
    EXPECT_EQ(a.noisy, b.noisy);
    EXPECT_NE(a.noisy, c.noisy);
    EXPECT_EQ(a.clean, c.clean);
    const double rms = std::sqrt(a.clean.squaredNorm() / static_cast<double>(a.clean.size()));
    EXPECT_NEAR(a.noise_std, 0.05 * rms, 1e-15);
    // empirical std within sampling error
    const Eigen::VectorXd e = a.noisy - a.clean;
    const double sample = std::sqrt(e.squaredNorm() / static_cast<double>(e.size()));
    EXPECT_NEAR(sample / a.noise_std, 1.0, 0.2);
    EXPECT_EQ(static_cast<std::size_t>(a.clean.size()), p.data_size());

    s.delta = 0.0;
    const auto clean = make_data(Problem::build(s), 42);
    EXPECT_EQ(clean.noisy, clean.clean);

    s.delta = 0.01;
    s.noise_mode = NoiseMode::absolute;
    EXPECT_DOUBLE_EQ(make_data(Problem::build(s), 1).noise_std, 0.01);
}

TEST(Data, RefinedGridDataIsCloseToCoarseData) {
    ExperimentSpec s = small_spec();
    s.delta = 0.0;
    const Problem p = Problem::build(s);
    const auto coarse = make_data(p, 1).clean;
    s.refine_data = true;
    const auto fine = make_data(Problem::build(s), 1).clean;
    ASSERT_EQ(fine.size(), coarse.size());
    const double rel = (fine - coarse).norm() / coarse.norm();
    EXPECT_GT(rel, 0.0);
    EXPECT_LT(rel, 0.1);
}

TEST(Data, MeasurementsRoundTripAndAdoptLayout) {
    ExperimentSpec s = small_spec();
    s.experiments = 2;
    s.region = "left";
    const Problem p = Problem::build(s);
    const auto d = make_data(p, 5);
    const io::Measurements m = to_measurements(p, d.noisy, {{"experiment", "x"}});
    std::stringstream ss;
    io::write_measurements(ss, m);
    const io::Measurements back = io::read_measurements(ss);
    EXPECT_EQ(back, m);

    ExperimentSpec fresh = small_spec();
    fresh.times = {1};
    const ExperimentSpec adopted = adopt_layout(fresh, back);
    EXPECT_EQ(adopted.times, s.times);
    EXPECT_EQ(adopted.experiments, 2);
    const Problem q = Problem::build(adopted);
    EXPECT_EQ(q.measured_edges(), p.measured_edges());
    EXPECT_EQ(q.measure(q.q_true), p.measure(p.q_true));

    ExperimentSpec whole = small_spec();
    const Problem pw = Problem::build(whole);
    EXPECT_EQ(adopt_layout(fresh, to_measurements(pw, make_data(pw, 1).noisy)).region, "whole");
    EXPECT_THROW(to_measurements(p, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}
