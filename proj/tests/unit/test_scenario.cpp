#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "voi/scenario.hpp"

using namespace voi;

TEST(BuildNcv, UnitInterval) {
    const NcvModel m = build_ncv(1.0);
    Matrix<4> A;
    A << 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1;
    EXPECT_EQ(m.A, A);
    EXPECT_NEAR(m.Q(0, 0), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.Q(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(m.Q(1, 1), 1.0, 1e-15);
    EXPECT_NEAR(m.Q(2, 3), 0.5, 1e-15);
    EXPECT_DOUBLE_EQ(m.Q(0, 2), 0.0);
}

TEST(BuildNcv, BlockDeterminantAndInverse) {
    for (double d : {1e-3, 0.1, 1.0, 7.5}) {
        const NcvModel m = build_ncv(d, 2.0);
        const double det = m.Q.block<2, 2>(0, 0).determinant() / 4.0;
        EXPECT_NEAR(det, std::pow(d, 4) / 12.0, 1e-12 * std::max(1.0, std::pow(d, 4)));
        const Matrix<4> inv = m.A.inverse();
        EXPECT_DOUBLE_EQ(inv(0, 1), -d);
        EXPECT_DOUBLE_EQ(inv(2, 3), -d);
    }
    EXPECT_THROW(build_ncv(0.0), std::invalid_argument);
    EXPECT_THROW(build_ncv(-1.0), std::invalid_argument);
}

TEST(SimulateTruth, NoiselessIsLinear) {
    ScenarioConfig c;
    c.horizon = 50;
    const NcvModel m = build_ncv(1.0, 0.0);
    Rng rng = make_rng(1);
    const auto traj = simulate_truth(m, c, rng);
    ASSERT_EQ(traj.size(), 50u);
    Matrix<4> Ak = Matrix<4>::Identity();
    for (const auto& x : traj) {
        EXPECT_LT((x - Ak * c.initial_state).norm(), 1e-9);
        Ak = m.A * Ak;
    }
}

TEST(SimulateTruth, ManeuverOverridesVelocity) {
    ScenarioConfig c;
    c.horizon = 3000;
    c.maneuvers = {{1500, -8.0, 0.1}};
    Rng rng = make_rng(1);
    const auto traj = simulate_truth(build_ncv(1.0, 0.0), c, rng);
    EXPECT_DOUBLE_EQ(traj[1499](1), 8.0);
    EXPECT_DOUBLE_EQ(traj[1500](1), -8.0);
    EXPECT_DOUBLE_EQ(traj[1500](3), 0.1);
    EXPECT_DOUBLE_EQ(traj[1501](0), traj[1500](0) - 8.0);
}

TEST(SimulateTruth, ReproducibleAndNoiseMatchesQ) {
    ScenarioConfig c;
    c.horizon = 100001;
    c.initial_state.setZero();
    const NcvModel m = build_ncv(0.5, 3.0);
    Rng a = make_rng(5), b = make_rng(5);
    const auto t1 = simulate_truth(m, c, a);
    const auto t2 = simulate_truth(m, c, b);
    EXPECT_EQ(t1, t2);
    Matrix<4> S = Matrix<4>::Zero();
    for (std::size_t k = 0; k + 1 < t1.size(); ++k) {
        const Vector<4> w = t1[k + 1] - m.A * t1[k];
        S += w * w.transpose();
    }
    S /= static_cast<double>(t1.size() - 1);
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (m.Q(i, j) != 0.0) EXPECT_NEAR(S(i, j), m.Q(i, j), 0.05 * std::abs(m.Q(i, j)));
        }
    }
}

TEST(Deploy, SeededAndBounded) {
    RandomDeployment d;
    d.count = 10;
    d.toa_fraction = 0.3;
    const auto a = deploy(d);
    const auto b = deploy(d);
    ASSERT_EQ(a.size(), 10u);
    int toa = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].position, b[i].position);
        EXPECT_GE(a[i].position.x(), d.x_min);
        EXPECT_LE(a[i].position.y(), d.y_max);
        toa += a[i].kind == SensorKind::toa;
    }
    EXPECT_EQ(toa, 3);
    d.count = 0;
    EXPECT_THROW(deploy(d), ConfigError);
}

TEST(ScenarioConfig, Validation) {
    ScenarioConfig c;
    EXPECT_THROW(c.validate(), ConfigError);  // no nodes
    SensorSpec s;
    s.kind = SensorKind::toa;
    c.nodes = {s};
    EXPECT_NO_THROW(c.validate());
    c.maneuvers = {{5000, 0, 0}};
    EXPECT_THROW(c.validate(), ConfigError);
    c.maneuvers.clear();
    c.delta = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.delta = 1.0;
    c.nodes[0].kind = SensorKind::none;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SeedSet, StreamsAreDistinct) {
    SeedSet s{3};
    EXPECT_NE(s.process(), s.links());
    EXPECT_NE(s.sensor(0), s.sensor(1));
    EXPECT_EQ(s.sensor(4), SeedSet{3}.sensor(4));
    EXPECT_NE(s.sensor(4), SeedSet{4}.sensor(4));
}
