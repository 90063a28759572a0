#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "voi/netsim.hpp"

using namespace voi;

namespace {

std::vector<Eigen::Vector2d> line(int n, double spacing) {
    std::vector<Eigen::Vector2d> p;
    for (int i = 0; i < n; ++i) p.emplace_back(i * spacing, 0.0);
    return p;
}

std::set<int> all(int n) {
    std::set<int> s;
    for (int i = 0; i < n; ++i) s.insert(i);
    return s;
}

}  // namespace

TEST(LinkModel, SuccessProbability) {
    LinkModel m;
    EXPECT_DOUBLE_EQ(m.success_probability(0.0), 1.0);
    EXPECT_DOUBLE_EQ(m.success_probability(1e-9), 1.0);
    EXPECT_DOUBLE_EQ(m.success_probability(1000.0), 0.5);
    EXPECT_NEAR(m.success_probability(2000.0), 0.5 / 8.0, 1e-15);
    EXPECT_NEAR(m.success_probability(1000.0, 10.0), 1.0, 0.0);
    EXPECT_NEAR(m.success_probability(1000.0, -10.0), 0.05, 1e-15);
    m.connectivity_floor = 0.2;
    EXPECT_DOUBLE_EQ(m.success_probability(1e6), 0.2);
}

TEST(LinkModel, Validation) {
    LinkModel m;
    m.success_at_reference = 1.5;
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m = LinkModel{};
    m.path_loss_exponent = 0.0;
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(EvaluateLinks, FloorOneDeliversEverywhere) {
    LinkModel m;
    m.connectivity_floor = 1.0;
    const auto pos = line(6, 5000.0);
    const auto snap = evaluate_links(pos, all(6), m, KeyedRandom(1), 0);
    for (int t = 0; t < 6; ++t) {
        for (int r = 0; r < 6; ++r) EXPECT_EQ(snap.delivered_to(t, r), t != r);
    }
}

TEST(EvaluateLinks, OnlyTransmittersDeliver) {
    LinkModel m;
    m.connectivity_floor = 1.0;
    const auto snap = evaluate_links(line(4, 10.0), {2}, m, KeyedRandom(1), 0);
    EXPECT_EQ(snap.delivered.size(), 1u);
    EXPECT_EQ(snap.heard_by(0), std::vector<int>{2});
    EXPECT_TRUE(snap.heard_by(2).empty());
}

TEST(EvaluateLinks, Deterministic) {
    const LinkModel m;
    const auto pos = line(8, 700.0);
    const auto a = evaluate_links(pos, all(8), m, KeyedRandom(42), 17);
    const auto b = evaluate_links(pos, all(8), m, KeyedRandom(42), 17);
    EXPECT_EQ(a.delivered, b.delivered);
    const auto c = evaluate_links(pos, all(8), m, KeyedRandom(42), 18);
    EXPECT_NE(a.delivered, c.delivered);
}

TEST(EvaluateLinks, LinkOutcomeIndependentOfOtherTransmitters) {
    const LinkModel m;
    const auto pos = line(6, 800.0);
    const auto full = evaluate_links(pos, all(6), m, KeyedRandom(5), 3);
    const auto one = evaluate_links(pos, {4}, m, KeyedRandom(5), 3);
    EXPECT_EQ(full.delivered.at(4), one.delivered.at(4));
}

TEST(EvaluateLinks, EmpiricalRateMatchesModel) {
    LinkModel m;
    m.shadowing_std_db = 0.0;
    const std::vector<Eigen::Vector2d> pos{{0.0, 0.0}, {1500.0, 0.0}};
    const KeyedRandom rng(9);
    int hits = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k) hits += evaluate_links(pos, {0}, m, rng, k).delivered_to(0, 1);
    const double p = m.success_probability(1500.0);
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(EvaluateLinks, RejectsUnknownTransmitter) {
    EXPECT_THROW(evaluate_links(line(2, 1.0), {5}, LinkModel{}, KeyedRandom(1), 0),
                 std::out_of_range);
}

TEST(NeighborhoodTrace, FloorOneStronglyConnected) {
    LinkModel m;
    m.connectivity_floor = 1.0;
    const auto pos = line(5, 3000.0);
    std::vector<NetworkSnapshot> w;
    for (int k = 0; k < 3; ++k) w.push_back(evaluate_links(pos, all(5), m, KeyedRandom(2), k));
    const auto t = neighborhood_trace(w, 5);
    EXPECT_TRUE(t.union_strongly_connected);
    for (const auto& deg : t.in_degree) {
        for (int d : deg) EXPECT_EQ(d, 4);
    }
    for (double f : t.isolation_fraction) EXPECT_DOUBLE_EQ(f, 0.0);
}

TEST(NeighborhoodTrace, ZeroSuccessIsolatesEveryone) {
    LinkModel m;
    m.success_at_reference = 0.0;
    const auto pos = line(4, 10.0);
    std::vector<NetworkSnapshot> w{evaluate_links(pos, all(4), m, KeyedRandom(3), 0)};
    const auto t = neighborhood_trace(w, 4);
    EXPECT_FALSE(t.union_strongly_connected);
    EXPECT_DOUBLE_EQ(t.isolation_fraction[0], 1.0);
}

TEST(NeighborhoodTrace, DefaultLinksConnectOverAWindow) {
    // Twenty nodes on a 2.4 km by 2.25 km grid with the default link model: no
    // single step reaches everyone but a 20-step window is strongly connected.
    std::vector<Eigen::Vector2d> pos;
    for (int i = 0; i < 20; ++i) pos.emplace_back(150.0 * (i % 5) * 4.0, 750.0 * (i / 5));
    const LinkModel m;
    std::vector<NetworkSnapshot> w;
    for (int k = 0; k < 20; ++k) w.push_back(evaluate_links(pos, all(20), m, KeyedRandom(4), k));
    EXPECT_TRUE(neighborhood_trace(w, 20).union_strongly_connected);
    const auto one = neighborhood_trace(std::span(w).first(1), 20);
    EXPECT_LT(*std::min_element(one.in_degree[0].begin(), one.in_degree[0].end()), 19);
}

TEST(StronglyConnected, SmallGraphs) {
    EXPECT_TRUE(strongly_connected({{1}, {2}, {0}}));
    EXPECT_FALSE(strongly_connected({{1}, {2}, {}}));
    EXPECT_TRUE(strongly_connected({{}}));
}
