#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "voi/config_io.hpp"
#include "voi/harness.hpp"

using namespace voi;

namespace {

ScenarioConfig small_scenario(int horizon = 200) {
    ScenarioConfig c;
    c.delta = 0.1;
    c.horizon = horizon;
    c.q_scale = 10.0;
    c.truth_q_scale = 0.01;
    c.prior_eps = 1e-6;
    c.maneuvers = {{horizon / 2, -8.0, 0.1}};
    const double xs[] = {1400, 1700, 1500, 1900, 1200};
    const double ys[] = {900, 1100, 1400, 1300, 1200};
    for (int i = 0; i < 5; ++i) {
        SensorSpec s;
        s.kind = i == 4 ? SensorKind::doa : SensorKind::toa;
        s.noise_std = i == 4 ? 2.0 * std::numbers::pi / 180.0 : 1.5;
        s.position = {xs[i], ys[i]};
        c.nodes.push_back(s);
    }
    return c;
}

}  // namespace

TEST(ComputeMetrics, HandFixture) {
    const std::vector<StepRecord> r{{0, 0, true, 0.1, 124, 1.0, 0.0},
                                    {0, 1, false, 0.0, 0, 2.0, 0.0},
                                    {0, 2, false, 0.0, 0, 2.0, 0.0}};
    const auto s = compute_metrics(r, {1.0, 0.0});
    EXPECT_EQ(s.num_nodes, 3);
    EXPECT_EQ(s.horizon, 1);
    EXPECT_NEAR(s.network_rmse[0], std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(s.medium_access[0], 1.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(s.best_error[0], 1.0);
    EXPECT_DOUBLE_EQ(s.worst_error[0], 2.0);
    EXPECT_EQ(s.total_bytes, 124u);
    EXPECT_NEAR(s.kbps, 124.0 * 8.0 / 1.0 / 1000.0, 1e-15);
}

TEST(ComputeMetrics, MediumAccessAndPerfectNodes) {
    std::vector<StepRecord> r;
    for (int i = 0; i < 10; ++i) r.push_back({0, i, i < 2, 0.0, i < 2 ? 124u : 0u, 0.0, 0.0});
    const auto s = compute_metrics(r);
    EXPECT_DOUBLE_EQ(s.medium_access[0], 0.2);
    EXPECT_DOUBLE_EQ(s.network_rmse[0], 0.0);
    EXPECT_DOUBLE_EQ(s.asymptotic_rmse, 0.0);
    EXPECT_THROW(compute_metrics(std::vector<StepRecord>{}), std::invalid_argument);
}

TEST(ComputeMetrics, BurnInAndRunningAverage) {
    std::vector<StepRecord> r;
    for (int k = 0; k < 10; ++k) r.push_back({k, 0, false, 0.0, 0, k < 2 ? 100.0 : 1.0, 0.0});
    const auto s = compute_metrics(r, {0.5, 0.2});
    EXPECT_DOUBLE_EQ(s.asymptotic_rmse, 1.0);
    EXPECT_DOUBLE_EQ(s.running_rmse[1], 100.0);
    EXPECT_NEAR(s.running_rmse[9], (200.0 + 8.0) / 10.0, 1e-12);
}

TEST(RunExperiment, GammaZeroAlwaysTransmits) {
    auto c = small_scenario();
    c.gamma = 0.0;
    const auto r = run_experiment(c);
    for (double ma : r.summary.medium_access) EXPECT_DOUBLE_EQ(ma, 1.0);
    EXPECT_EQ(r.summary.total_bytes, 124u * 5u * 200u);
}

TEST(RunExperiment, InfiniteGammaSendsNothing) {
    auto c = small_scenario();
    c.gamma = std::numeric_limits<double>::infinity();
    for (auto f : {FilterKind::voi, FilterKind::voi_nocov, FilterKind::diffusion}) {
        const auto r = run_experiment(c, f);
        EXPECT_EQ(r.summary.total_bytes, 0u) << to_string(f);
    }
}

TEST(RunExperiment, BytesAreConserved) {
    auto c = small_scenario();
    c.gamma = 0.3;
    for (auto f : {FilterKind::voi, FilterKind::diffusion}) {
        const auto r = run_experiment(c, f);
        std::size_t sum = 0, tx = 0;
        for (const auto& rec : r.records) {
            sum += rec.bytes_sent;
            tx += rec.transmitted;
        }
        EXPECT_EQ(sum, r.summary.total_bytes);
        EXPECT_EQ(sum, tx * (f == FilterKind::diffusion ? 44u : 124u));
        EXPECT_EQ(r.records.size(), 5u * 200u);
    }
}

TEST(RunExperiment, PerfectLinksGammaZeroAgreeAfterFusion) {
    // With everyone hearing everyone, all nodes pool the same message set, so
    // the relay-only nodes hold the same estimate (up to summation order).
    auto c = small_scenario(50);
    c.gamma = 0.0;
    c.link.connectivity_floor = 1.0;
    for (auto& n : c.nodes) n.kind = SensorKind::none;
    c.nodes[0].kind = SensorKind::toa;
    const auto r = run_experiment(c);
    for (std::int64_t k = 1; k < 50; ++k) {
        const auto* row = &r.records[static_cast<std::size_t>(k) * 5];
        for (int i = 2; i < 5; ++i) EXPECT_NEAR(row[i].position_error, row[1].position_error, 1e-9);
    }
}

TEST(RunExperiment, TracksTheTarget) {
    auto c = small_scenario(400);
    c.gamma = 0.0;
    const auto r = run_experiment(c);
    EXPECT_LT(r.summary.asymptotic_rmse, 20.0);
}

TEST(RunExperiment, DeterministicCsv) {
    auto c = small_scenario();
    auto csv = [&] {
        const auto r = run_experiment(c);
        std::ostringstream os;
        write_steps_csv(os, r.records);
        write_summary_csv(os, r);
        write_series_csv(os, r.summary);
        return os.str();
    };
    EXPECT_EQ(csv(), csv());
}

TEST(RunExperiment, SeedChangesOnlyRandomness) {
    auto c = small_scenario();
    const auto a = run_experiment(c);
    c.seeds.master = 2;
    const auto b = run_experiment(c);
    EXPECT_NE(a.truth.back(), b.truth.back());
}

TEST(RunSweep, GammaZeroIsFullAccessAndFailuresAreMarked) {
    auto c = small_scenario(60);
    const std::vector<double> g{0.0, 1.0};
    const auto res = run_sweep(c, g, {FilterKind::voi, 2, 2});
    ASSERT_EQ(res.size(), 2u);
    EXPECT_DOUBLE_EQ(res[0].mean_medium_access, 1.0);
    EXPECT_EQ(res[0].seeds, 2);
    EXPECT_TRUE(res[1].ok);

    const std::vector<double> bad{-1.0, 0.0};
    const auto res2 = run_sweep(c, bad, {FilterKind::voi, 1, 1});
    EXPECT_FALSE(res2[0].ok);
    EXPECT_FALSE(res2[0].error.empty());
    EXPECT_TRUE(res2[1].ok);
}

TEST(FilterKind, RoundTrip) {
    for (auto f : {FilterKind::voi, FilterKind::voi_nocov, FilterKind::diffusion}) {
        EXPECT_EQ(filter_kind_from_string(to_string(f)), f);
    }
    EXPECT_THROW(filter_kind_from_string("kalman"), ConfigError);
}

TEST(ConfigIo, ParsesNodesAndDeployment) {
    const auto j = nlohmann::json::parse(R"({
        "delta": 0.5, "horizon": 10, "gamma": 0.2, "seed": 9,
        "process_noise": {"q_scale": 3},
        "target": {"initial_state": [0, 1, 0, 1], "maneuvers": [{"step": 5, "vx": 2, "vy": 0}]},
        "link": {"connectivity_floor": 0.1},
        "nodes": [{"kind": "TOA", "x": 1, "y": 2}, {"kind": "DOA", "x": 3, "y": 4, "noise_std_deg": 1}]
    })");
    const auto c = config_from_json(j);
    EXPECT_DOUBLE_EQ(c.delta, 0.5);
    EXPECT_EQ(c.horizon, 10);
    EXPECT_EQ(c.seeds.master, 9u);
    EXPECT_DOUBLE_EQ(c.truth_q_scale, 3.0);
    EXPECT_EQ(c.prior_mean, State4(0, 1, 0, 1));
    ASSERT_EQ(c.nodes.size(), 2u);
    EXPECT_DOUBLE_EQ(c.nodes[0].noise_std, 1.5);
    EXPECT_NEAR(c.nodes[1].noise_std, std::numbers::pi / 180.0, 1e-15);
    EXPECT_DOUBLE_EQ(c.link.connectivity_floor, 0.1);

    const auto d = config_from_json(nlohmann::json::parse(
        R"({"deployment": {"count": 7, "toa_fraction": 1.0, "seed": 2}})"));
    EXPECT_EQ(d.num_nodes(), 7);
}

TEST(ConfigIo, RejectsBadInput) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse("{}")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(
                     R"({"nodes": [{"kind": "TOA", "x": 0, "y": 0}], "deployment": {}})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(
                     R"({"nodes": [{"kind": "SONAR", "x": 0, "y": 0}]})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(
                     R"({"delta": -1, "nodes": [{"kind": "TOA", "x": 0, "y": 0}]})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(
                     R"({"nodes": [{"kind": "TOA", "y": 0}]})")),
                 ConfigError);
    EXPECT_THROW(load_config("/nonexistent/scenario.json"), ConfigError);
}

TEST(CsvFormat, FixedPrecision) {
    EXPECT_EQ(fmt_double(0.1), "0.1");
    EXPECT_EQ(fmt_double(1.0 / 3.0), "0.3333333333");
    EXPECT_EQ(fmt_double(std::numeric_limits<double>::infinity()), "inf");
}
