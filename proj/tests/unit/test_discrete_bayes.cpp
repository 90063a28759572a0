#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "voi/discrete_bayes.hpp"
#include "voi/verify.hpp"

using namespace voi::discrete;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
    return Eigen::Map<const VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
}

void expect_dist_near(const DiscreteDist& d, std::initializer_list<double> want, double tol) {
    ASSERT_EQ(d.size(), static_cast<Eigen::Index>(want.size()));
    Eigen::Index i = 0;
    for (double w : want) EXPECT_NEAR(d[i++], w, tol);
}

double max_gap(const DiscreteDist& a, const DiscreteDist& b) {
    return (a.probs() - b.probs()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(DiscreteDist, Validation) {
    EXPECT_THROW(DiscreteDist({0.5, 0.4}), std::invalid_argument);
    EXPECT_THROW(DiscreteDist({1.5, -0.5}), std::invalid_argument);
    EXPECT_THROW(DiscreteDist{VectorXd()}, std::invalid_argument);
    EXPECT_THROW(DiscreteDist::normalized(VectorXd::Zero(3), "zero"), std::domain_error);
    EXPECT_THROW(DiscreteModel((Eigen::MatrixXd(2, 2) << 0.5, 0.6, 0.5, 0.5).finished()),
                 std::invalid_argument);
}

TEST(BayesPredict, Examples) {
    const DiscreteDist d{0.3, 0.7};
    EXPECT_EQ(bayes_predict(d, DiscreteModel::identity(2)), d);

    const DiscreteModel doubly((Eigen::MatrixXd(3, 3) << 0.2, 0.5, 0.3, 0.3, 0.2, 0.5, 0.5, 0.3, 0.2)
                                   .finished());
    expect_dist_near(bayes_predict(DiscreteDist::uniform(3), doubly), {1 / 3.0, 1 / 3.0, 1 / 3.0},
                     1e-15);

    const DiscreteModel t((Eigen::MatrixXd(2, 2) << 0.9, 0.1, 0.2, 0.8).finished());
    expect_dist_near(bayes_predict(DiscreteDist{1.0, 0.0}, t), {0.9, 0.1}, 1e-15);
}

TEST(BayesUpdate, Examples) {
    const DiscreteDist d{0.25, 0.75};
    expect_dist_near(bayes_update(d, vec({0.3, 0.3})), {0.25, 0.75}, 1e-15);
    expect_dist_near(bayes_update(DiscreteDist{0.5, 0.5}, vec({0.8, 0.2})), {0.8, 0.2}, 1e-15);
    EXPECT_THROW(bayes_update(DiscreteDist{1.0, 0.0}, vec({0.0, 1.0})), std::domain_error);
    EXPECT_THROW(bayes_update(d, vec({-0.1, 1.0})), std::invalid_argument);
    EXPECT_THROW(bayes_update(d, vec({1.0, 1.0, 1.0})), std::invalid_argument);
}

TEST(LogopPool, Examples) {
    const DiscreteDist a{0.2, 0.3, 0.5};
    expect_dist_near(logop_pool({a, a, a}), {0.2, 0.3, 0.5}, 1e-15);

    const double s4 = std::sqrt(0.4), s1 = std::sqrt(0.1);
    const auto pooled = logop_pool({DiscreteDist{0.5, 0.5}, DiscreteDist{0.8, 0.2}});
    expect_dist_near(pooled, {s4 / (s4 + s1), s1 / (s4 + s1)}, 1e-15);
    expect_dist_near(pooled, {0.66667, 0.33333}, 1e-5);
}

TEST(LogopPool, ZerosAndErrors) {
    expect_dist_near(logop_pool({DiscreteDist{0.0, 0.5, 0.5}, DiscreteDist{0.2, 0.4, 0.4}}),
                     {0.0, 0.5, 0.5}, 1e-15);
    EXPECT_THROW(logop_pool({DiscreteDist{1.0, 0.0}, DiscreteDist{0.0, 1.0}}), std::domain_error);
    EXPECT_THROW(logop_pool(std::span<const DiscreteDist>{}), std::invalid_argument);
    EXPECT_THROW(logop_pool({DiscreteDist{1.0}, DiscreteDist{0.5, 0.5}}), std::invalid_argument);
}

TEST(LogopPool, PermutationInvariant) {
    const DiscreteDist a{0.1, 0.6, 0.3}, b{0.5, 0.25, 0.25}, c{0.3, 0.3, 0.4};
    const auto p1 = logop_pool({a, b, c});
    const auto p2 = logop_pool({c, a, b});
    EXPECT_LT((p1.probs() - p2.probs()).norm(), 1e-15);
}

TEST(LogopPool, BeatsSimplexGrid) {
    const auto r = voi::verify::check_logop_optimality(3, 1e-3, 21);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(KlDiscrete, Examples) {
    const DiscreteDist p{0.3, 0.7};
    EXPECT_DOUBLE_EQ(kl_discrete(p, p), 0.0);
    EXPECT_NEAR(kl_discrete(DiscreteDist{1.0, 0.0}, DiscreteDist{0.5, 0.5}), std::log(2.0), 1e-15);
    const double inf = kl_discrete(DiscreteDist{0.5, 0.5}, DiscreteDist{1.0, 0.0});
    EXPECT_TRUE(is_infinite_divergence(inf));
    EXPECT_THROW(kl_discrete(p, DiscreteDist{1.0}), std::invalid_argument);
}

TEST(DiscreteVoiStep, SingleNodeIsLocalBayesFilter) {
    const DiscreteModel t((Eigen::MatrixXd(3, 3) << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.2, 0.2, 0.6)
                              .finished());
    std::vector<DiscreteNode> nodes{DiscreteNode::from_prior(DiscreteDist::uniform(3))};
    const std::vector<std::vector<int>> nbrs{{}};
    DiscreteDist local = DiscreteDist::uniform(3);
    const std::vector<VectorXd> zs{vec({0.7, 0.2, 0.1}), vec({0.1, 0.1, 0.8}),
                                   vec({0.3, 0.3, 0.4})};
    for (const auto& z : zs) {
        const std::vector<std::optional<VectorXd>> obs{z};
        auto r = discrete_voi_step(nodes, t, obs, nbrs, 0.0);
        nodes = r.nodes;
        local = bayes_predict(bayes_update(local, z), t);
        EXPECT_LT(max_gap(nodes[0].fused, local), 1e-14);
        EXPECT_LT(max_gap(nodes[0].shadow, local), 1e-14);
    }
}

TEST(DiscreteVoiStep, InfiniteGammaNeverTransmits) {
    std::vector<DiscreteNode> nodes{DiscreteNode::from_prior(DiscreteDist{0.9, 0.1}),
                                    DiscreteNode::from_prior(DiscreteDist{0.2, 0.8})};
    const std::vector<std::vector<int>> nbrs{{1}, {0}};
    const std::vector<std::optional<VectorXd>> obs{vec({0.6, 0.4}), std::nullopt};
    for (int k = 0; k < 5; ++k) {
        auto r = discrete_voi_step(nodes, DiscreteModel::identity(2), obs, nbrs,
                                   std::numeric_limits<double>::infinity());
        for (const auto& o : r.outputs) EXPECT_FALSE(o.transmitted);
        for (const auto& n : r.nodes) EXPECT_LT(max_gap(n.fused, n.shadow), 1e-14);
        nodes = r.nodes;
    }
}

TEST(DiscreteVoiStep, RingConsensus) {
    const auto trace = voi::verify::ring_consensus(5, 4, 60, 3);
    EXPECT_LT(trace.max_pairwise_kl.back(), 1e-6);
    const auto r = voi::verify::check_consensus(4);
    EXPECT_TRUE(r.passed) << r.detail;
}

TEST(DiscreteVoiStep, InputValidation) {
    std::vector<DiscreteNode> nodes{DiscreteNode::from_prior(DiscreteDist::uniform(2))};
    const std::vector<std::optional<VectorXd>> obs{std::nullopt};
    const std::vector<std::vector<int>> bad{{4}};
    EXPECT_THROW(discrete_voi_step(nodes, DiscreteModel::identity(2), obs, bad, 0.0),
                 std::out_of_range);
    const std::vector<std::vector<int>> ok{{}};
    EXPECT_THROW(discrete_voi_step(nodes, DiscreteModel::identity(2), obs, ok, -1.0),
                 std::invalid_argument);
}
