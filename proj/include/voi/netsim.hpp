/**
 * @file netsim.hpp
 * @brief Time-varying lossy broadcast network.
 *
 * Each directed link (t -> r) succeeds independently every step with
 *
 *   p(d) = clamp(success_at_reference * (reference_distance / d)^path_loss_exponent
 *                * 10^(s / 10),  connectivity_floor, 1),      s ~ N(0, shadowing_std_db^2)
 *
 * where s is a memoryless log-normal shadowing draw. Draws are keyed by
 * (step, sender, receiver), so runs are reproducible bit for bit and the
 * outcome of one link does not depend on who else transmitted.
 */

#ifndef VOI_NETSIM_HPP
#define VOI_NETSIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "voi/random.hpp"

namespace voi {

struct LinkModel {
    double reference_distance = 1000.0;  // metres
    double success_at_reference = 0.5;
    double path_loss_exponent = 3.0;
    double shadowing_std_db = 4.0;
    double connectivity_floor = 0.0;

    void validate() const {
        auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (!is_prob(success_at_reference) || !is_prob(connectivity_floor)) {
            throw std::invalid_argument("link model probabilities must lie in [0, 1]");
        }
        if (!(path_loss_exponent > 0.0)) {
            throw std::invalid_argument("path_loss_exponent must be positive");
        }
        if (!(reference_distance > 0.0) || !(shadowing_std_db >= 0.0)) {
            throw std::invalid_argument("reference_distance must be positive, shadowing nonnegative");
        }
    }

    /// Success probability at distance d for a given shadowing draw (dB).
    [[nodiscard]] double success_probability(double d, double shadowing_db = 0.0) const {
        if (d <= 0.0) {
            return 1.0;
        }
        const double p = success_at_reference *
                         std::pow(reference_distance / d, path_loss_exponent) *
                         std::pow(10.0, shadowing_db / 10.0);
        return std::clamp(p, connectivity_floor, 1.0);
    }
};

/// Who heard whom during one step.
struct NetworkSnapshot {
    std::map<int, std::set<int>> delivered;  // sender -> receivers
    std::vector<Eigen::Vector2d> positions;

    [[nodiscard]] bool delivered_to(int sender, int receiver) const {
        const auto it = delivered.find(sender);
        return it != delivered.end() && it->second.contains(receiver);
    }

    /// Senders whose broadcast reached `receiver`, in ascending id order.
    [[nodiscard]] std::vector<int> heard_by(int receiver) const {
        std::vector<int> out;
        for (const auto& [sender, receivers] : delivered) {
            if (receivers.contains(receiver)) {
                out.push_back(sender);
            }
        }
        return out;
    }
};

/// Draws every directed link out of each transmitter for this step.
inline NetworkSnapshot evaluate_links(std::span<const Eigen::Vector2d> positions,
                                      const std::set<int>& transmitters, const LinkModel& model,
                                      const KeyedRandom& rng, std::int64_t step) {
    NetworkSnapshot snap;
    snap.positions.assign(positions.begin(), positions.end());
    const int n = static_cast<int>(positions.size());
    for (const int t : transmitters) {
        if (t < 0 || t >= n) {
            throw std::out_of_range("evaluate_links: transmitter id out of range");
        }
        auto& receivers = snap.delivered[t];
        for (int r = 0; r < n; ++r) {
            if (r == t) {
                continue;
            }
            const auto key_t = static_cast<std::uint64_t>(t);
            const auto key_r = static_cast<std::uint64_t>(r);
            const auto key_k = static_cast<std::uint64_t>(step);
            const double d = (positions[static_cast<std::size_t>(t)] -
                              positions[static_cast<std::size_t>(r)])
                                 .norm();
            const double shadow_db =
                model.shadowing_std_db > 0.0
                    ? model.shadowing_std_db * rng.normal({key_k, key_t, key_r, 0})
                    : 0.0;
            const double p = model.success_probability(d, shadow_db);
            if (rng.uniform({key_k, key_t, key_r, 1}) < p) {
                receivers.insert(r);
            }
        }
    }
    return snap;
}

struct ConnectivityTrace {
    std::vector<std::vector<int>> in_degree;  // [step][node]
    std::vector<double> isolation_fraction;   // per step: nodes neither sending nor receiving
    bool union_strongly_connected = false;
};

namespace detail {

inline std::vector<bool> reachable(const std::vector<std::set<int>>& adj, int start) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const int v : adj[static_cast<std::size_t>(u)]) {
            if (!seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = true;
                stack.push_back(v);
            }
        }
    }
    return seen;
}

}  // namespace detail

inline bool strongly_connected(const std::vector<std::set<int>>& adj) {
    if (adj.size() <= 1) {
        return true;
    }
    std::vector<std::set<int>> rev(adj.size());
    for (std::size_t u = 0; u < adj.size(); ++u) {
        for (const int v : adj[u]) {
            rev[static_cast<std::size_t>(v)].insert(static_cast<int>(u));
        }
    }
    const auto fwd = detail::reachable(adj, 0);
    const auto bwd = detail::reachable(rev, 0);
    return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

/// Connectivity statistics over a window of snapshots.
inline ConnectivityTrace neighborhood_trace(std::span<const NetworkSnapshot> window,
                                            int num_nodes) {
    if (window.empty()) {
        throw std::invalid_argument("neighborhood_trace: empty window");
    }
    ConnectivityTrace trace;
    std::vector<std::set<int>> union_adj(static_cast<std::size_t>(num_nodes));
    for (const auto& snap : window) {
        std::vector<int> deg(static_cast<std::size_t>(num_nodes), 0);
        std::vector<bool> active(static_cast<std::size_t>(num_nodes), false);
        for (const auto& [sender, receivers] : snap.delivered) {
            for (const int r : receivers) {
                ++deg[static_cast<std::size_t>(r)];
                active[static_cast<std::size_t>(r)] = true;
                active[static_cast<std::size_t>(sender)] = true;
                union_adj[static_cast<std::size_t>(sender)].insert(r);
            }
        }
        const auto isolated = std::count(active.begin(), active.end(), false);
        trace.isolation_fraction.push_back(static_cast<double>(isolated) /
                                           static_cast<double>(num_nodes));
        trace.in_degree.push_back(std::move(deg));
    }
    trace.union_strongly_connected = strongly_connected(union_adj);
    return trace;
}

}  // namespace voi

#endif  // VOI_NETSIM_HPP
