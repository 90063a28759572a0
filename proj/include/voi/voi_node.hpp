/**
 * @file voi_node.hpp
 * @brief One agent of the censored distributed information filter.
 *
 * Each node carries two prediction tracks:
 *
 *  - fused:  prediction of the LogOP-aggregated posterior (what the node filters from)
 *  - shadow: prediction of the node's own posterior without aggregation
 *
 * A step is split in two so the harness can route messages in between:
 *
 *   node_update_and_decide   posterior = fused + measurement; transmit the posterior
 *                            iff KL(posterior || shadow) >= gamma
 *   node_fuse_and_predict    pool posterior with received posteriors, predict both tracks
 *
 * Censoring only gates transmission. A censored node still listens and fuses.
 */

#ifndef VOI_VOI_NODE_HPP
#define VOI_VOI_NODE_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "voi/baselines.hpp"
#include "voi/gaussian_info.hpp"

namespace voi {

/// Statistic compared against gamma.
enum class CensorRule {
    kl,         // KL(posterior || shadow) with full covariances
    euclidean,  // covariances replaced by identity: 1/2 |x - x_shadow|^2
};

template <int Dim = 4>
struct BroadcastMessage {
    int sender_id;
    InfoEstimate<Dim> estimate;
    std::int64_t step;

    /// Header (sender, step) plus the information vector and the upper
    /// triangle of the information matrix, 8 bytes per scalar.
    static constexpr std::size_t wire_bytes(Eigen::Index n = Dim) {
        const auto m = static_cast<std::size_t>(n);
        return 12 + 8 * (m + m * (m + 1) / 2);
    }
};

template <int Dim = 4>
struct NodeState {
    int node_id;
    InfoEstimate<Dim> fused;
    InfoEstimate<Dim> shadow;
    double gamma;
    LinearDynamics<Dim> dynamics;
    std::int64_t clock = 0;
    CensorRule rule = CensorRule::kl;
    std::optional<InfoEstimate<Dim>> posterior;  // set between the two half-steps
};

template <int Dim = 4>
struct NodeStepOutput {
    bool transmitted;
    std::optional<BroadcastMessage<Dim>> message;
    double voi_value;
    MomentEstimate<Dim> posterior;
};

/// Both tracks start at the diffuse prior Y = eps I, y = eps * guess.
template <int Dim>
NodeState<Dim> node_init(int node_id, const Vector<Dim>& x0_guess, double eps, double gamma,
                         LinearDynamics<Dim> dynamics, CensorRule rule = CensorRule::kl) {
    if (!(eps > 0.0)) {
        throw std::invalid_argument("node_init: eps must be positive");
    }
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("node_init: gamma must be nonnegative");
    }
    if (x0_guess.size() != dynamics.dim()) {
        throw std::invalid_argument("node_init: guess does not match the dynamics dimension");
    }
    auto prior = InfoEstimate<Dim>::diffuse(x0_guess, eps);
    return {node_id, prior, prior, gamma, std::move(dynamics), 0, rule, std::nullopt};
}

/// Measurement update on the fused track followed by the transmit decision.
/// A missing contribution means the node observed nothing this step.
template <int Dim>
std::pair<NodeState<Dim>, NodeStepOutput<Dim>> node_update_and_decide(
    const NodeState<Dim>& s, const std::optional<MeasurementContribution<Dim>>& c) {
    InfoEstimate<Dim> post = c ? info_update(s.fused, *c) : s.fused;
    MomentEstimate<Dim> post_m = to_moment(post);
    const MomentEstimate<Dim> shadow_m = to_moment(s.shadow);

    const double voi = s.rule == CensorRule::kl
                           ? kl_gaussian(post_m, shadow_m)
                           : norm_censor_statistic<Dim>(post_m.mean, shadow_m.mean);
    const bool transmit = voi >= s.gamma;

    NodeStepOutput<Dim> out{transmit, std::nullopt, voi, std::move(post_m)};
    if (transmit) {
        out.message = BroadcastMessage<Dim>{s.node_id, post, s.clock};
    }
    NodeState<Dim> next = s;
    next.posterior = std::move(post);
    return {std::move(next), std::move(out)};
}

/// LogOP aggregation of the posterior with this step's received posteriors,
/// then prediction of the aggregated (fused) and own (shadow) posteriors.
template <int Dim>
NodeState<Dim> node_fuse_and_predict(const NodeState<Dim>& s,
                                     std::span<const BroadcastMessage<Dim>> received) {
    if (!s.posterior) {
        throw std::logic_error("node_fuse_and_predict called before node_update_and_decide");
    }
    std::set<int> senders;
    std::vector<InfoEstimate<Dim>> estimates;
    estimates.reserve(received.size());
    for (const auto& m : received) {
        if (m.step != s.clock) {
            throw std::invalid_argument("node_fuse_and_predict: message from another step");
        }
        if (m.sender_id == s.node_id || !senders.insert(m.sender_id).second) {
            throw std::invalid_argument("node_fuse_and_predict: duplicate sender in one step");
        }
        estimates.push_back(m.estimate);
    }
    const InfoEstimate<Dim> pooled =
        logop_fuse<Dim>(*s.posterior, std::span<const InfoEstimate<Dim>>(estimates));

    NodeState<Dim> next = s;
    next.shadow = info_predict(*s.posterior, s.dynamics);
    next.fused = estimates.empty() ? next.shadow : info_predict(pooled, s.dynamics);
    next.posterior.reset();
    ++next.clock;
    return next;
}

}  // namespace voi

#endif  // VOI_VOI_NODE_HPP
