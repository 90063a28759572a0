/**
 * @file discrete_bayes.hpp
 * @brief Finite-state Bayes filtering with logarithmic opinion pooling and VoI
 *        censoring.
 *
 * This is the exact (non-Gaussian) form of the censored distributed filter on a
 * small state space, where every quantity can be checked by enumeration.
 */

#ifndef VOI_DISCRETE_BAYES_HPP
#define VOI_DISCRETE_BAYES_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace voi::discrete {

inline constexpr double kNormTolerance = 1e-12;

/// Probability vector over a finite state space.
class DiscreteDist {
public:
    explicit DiscreteDist(Eigen::VectorXd probs) : probs_(std::move(probs)) {
        if (probs_.size() == 0) {
            throw std::invalid_argument("DiscreteDist: empty state space");
        }
        if ((probs_.array() < 0.0).any() || !probs_.allFinite()) {
            throw std::invalid_argument("DiscreteDist: negative or non-finite probability");
        }
        if (std::abs(probs_.sum() - 1.0) > kNormTolerance) {
            throw std::invalid_argument("DiscreteDist: probabilities sum to " +
                                        std::to_string(probs_.sum()));
        }
    }

    DiscreteDist(std::initializer_list<double> probs)
        : DiscreteDist(Eigen::Map<const Eigen::VectorXd>(probs.begin(),
                                                         static_cast<Eigen::Index>(probs.size()))) {}

    /// Normalizes a nonnegative weight vector; throws if the total mass is zero.
    static DiscreteDist normalized(const Eigen::VectorXd& weights, const char* on_zero) {
        const double total = weights.sum();
        if (!(total > 0.0) || !std::isfinite(total)) {
            throw std::domain_error(on_zero);
        }
        Eigen::VectorXd p = weights / total;
        // Renormalize once more so the sum check holds to the last ulp.
        p /= p.sum();
        return DiscreteDist(std::move(p));
    }

    static DiscreteDist uniform(Eigen::Index n) {
        return DiscreteDist(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
    }

    [[nodiscard]] const Eigen::VectorXd& probs() const { return probs_; }
    [[nodiscard]] Eigen::Index size() const { return probs_.size(); }
    double operator[](Eigen::Index i) const { return probs_(i); }

    friend bool operator==(const DiscreteDist& a, const DiscreteDist& b) {
        return a.probs_ == b.probs_;
    }

private:
    Eigen::VectorXd probs_;
};

/// Transition kernel p(x_k | x_{k-1}) as a row-stochastic matrix.
class DiscreteModel {
public:
    explicit DiscreteModel(Eigen::MatrixXd transition) : transition_(std::move(transition)) {
        if (transition_.rows() != transition_.cols() || transition_.rows() == 0) {
            throw std::invalid_argument("DiscreteModel: transition must be square and nonempty");
        }
        if ((transition_.array() < 0.0).any()) {
            throw std::invalid_argument("DiscreteModel: negative transition probability");
        }
        const Eigen::VectorXd row_sums = transition_.rowwise().sum();
        if (((row_sums.array() - 1.0).abs() > kNormTolerance).any()) {
            throw std::invalid_argument("DiscreteModel: transition rows must sum to 1");
        }
    }

    static DiscreteModel identity(Eigen::Index n) {
        return DiscreteModel(Eigen::MatrixXd::Identity(n, n));
    }

    [[nodiscard]] const Eigen::MatrixXd& transition() const { return transition_; }
    [[nodiscard]] Eigen::Index size() const { return transition_.rows(); }

private:
    Eigen::MatrixXd transition_;
};

inline void check_likelihood(const Eigen::VectorXd& likelihood) {
    if ((likelihood.array() < 0.0).any() || !likelihood.allFinite()) {
        throw std::invalid_argument("likelihood entries must be finite and nonnegative");
    }
    if (!(likelihood.maxCoeff() > 0.0)) {
        throw std::invalid_argument("likelihood must not be identically zero");
    }
}

/// Chapman-Kolmogorov prediction: probs' = T^T probs.
inline DiscreteDist bayes_predict(const DiscreteDist& d, const DiscreteModel& m) {
    if (d.size() != m.size()) {
        throw std::invalid_argument("bayes_predict: dimension mismatch");
    }
    return DiscreteDist::normalized(m.transition().transpose() * d.probs(),
                                    "bayes_predict: zero mass");
}

/// Bayes' rule: probs' proportional to likelihood .* probs.
inline DiscreteDist bayes_update(const DiscreteDist& d, const Eigen::VectorXd& likelihood) {
    if (d.size() != likelihood.size()) {
        throw std::invalid_argument("bayes_update: dimension mismatch");
    }
    check_likelihood(likelihood);
    return DiscreteDist::normalized(likelihood.cwiseProduct(d.probs()),
                                    "measurement incompatible with support");
}

/// Equal-weight logarithmic opinion pool: normalized pointwise geometric mean.
inline DiscreteDist logop_pool(std::span<const DiscreteDist> dists) {
    if (dists.empty()) {
        throw std::invalid_argument("logop_pool: no distributions");
    }
    const Eigen::Index n = dists.front().size();
    const double w = 1.0 / static_cast<double>(dists.size());
    Eigen::VectorXd log_sum = Eigen::VectorXd::Zero(n);
    std::vector<bool> vanished(static_cast<std::size_t>(n), false);
    for (const auto& d : dists) {
        if (d.size() != n) {
            throw std::invalid_argument("logop_pool: dimension mismatch");
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            if (d[i] == 0.0) {
                vanished[static_cast<std::size_t>(i)] = true;
            } else {
                log_sum(i) += w * std::log(d[i]);
            }
        }
    }
    // Shift by the max log value before exponentiating to avoid underflow.
    double max_log = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!vanished[static_cast<std::size_t>(i)]) {
            max_log = std::max(max_log, log_sum(i));
        }
    }
    Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!vanished[static_cast<std::size_t>(i)]) {
            weights(i) = std::exp(log_sum(i) - max_log);
        }
    }
    return DiscreteDist::normalized(weights, "logop_pool: inputs have disjoint supports");
}

inline DiscreteDist logop_pool(std::initializer_list<DiscreteDist> dists) {
    return logop_pool(std::span<const DiscreteDist>(dists.begin(), dists.size()));
}

/// KL(p || q) = sum p_i log(p_i / q_i). Returns +infinity when p puts mass
/// where q has none.
inline double kl_discrete(const DiscreteDist& p, const DiscreteDist& q) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("kl_discrete: dimension mismatch");
    }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) {
            continue;
        }
        if (q[i] == 0.0) {
            return std::numeric_limits<double>::infinity();
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl < 0.0 ? 0.0 : kl;
}

inline bool is_infinite_divergence(double kl) { return std::isinf(kl); }

/// One agent of the finite-state network: the aggregated prediction it
/// filters from, and the local prediction that excludes pooled information.
struct DiscreteNode {
    DiscreteDist fused;
    DiscreteDist shadow;

    static DiscreteNode from_prior(const DiscreteDist& prior) { return {prior, prior}; }
};

struct DiscreteNodeOutput {
    DiscreteDist posterior;
    bool transmitted;
    double voi;
};

struct DiscreteStepResult {
    std::vector<DiscreteNode> nodes;
    std::vector<DiscreteNodeOutput> outputs;
};

/**
 * One round of VoI Bayes filtering over a fixed communication graph.
 *
 * Node i updates its aggregated prediction with its observation (if any),
 * transmits iff KL(posterior || shadow) >= gamma, pools its own posterior with
 * the posteriors of transmitting in-neighbours, then predicts both the pooled
 * and its own unpooled posterior.
 *
 * `in_neighbours[i]` lists the nodes i can hear from; self-loops are ignored.
 * A missing observation means no measurement this step.
 */
inline DiscreteStepResult discrete_voi_step(
    std::span<const DiscreteNode> nodes, const DiscreteModel& model,
    std::span<const std::optional<Eigen::VectorXd>> observations,
    std::span<const std::vector<int>> in_neighbours, double gamma) {
    const std::size_t n = nodes.size();
    if (observations.size() != n || in_neighbours.size() != n) {
        throw std::invalid_argument("discrete_voi_step: per-node inputs must match node count");
    }
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("discrete_voi_step: gamma must be nonnegative");
    }

    DiscreteStepResult result;
    result.outputs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        DiscreteDist posterior =
            observations[i] ? bayes_update(nodes[i].fused, *observations[i]) : nodes[i].fused;
        const double voi = kl_discrete(posterior, nodes[i].shadow);
        result.outputs.push_back({std::move(posterior), voi >= gamma, voi});
    }

    result.nodes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<DiscreteDist> pool{result.outputs[i].posterior};
        std::set<int> seen;
        for (const int j : in_neighbours[i]) {
            if (j < 0 || static_cast<std::size_t>(j) >= n) {
                throw std::out_of_range("discrete_voi_step: neighbour index out of range");
            }
            if (static_cast<std::size_t>(j) == i || !seen.insert(j).second) {
                continue;
            }
            if (result.outputs[static_cast<std::size_t>(j)].transmitted) {
                pool.push_back(result.outputs[static_cast<std::size_t>(j)].posterior);
            }
        }
        const DiscreteDist pooled = logop_pool(pool);
        result.nodes.push_back({bayes_predict(pooled, model),
                                bayes_predict(result.outputs[i].posterior, model)});
    }
    return result;
}

}  // namespace voi::discrete

#endif  // VOI_DISCRETE_BAYES_HPP
