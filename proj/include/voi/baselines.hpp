/**
 * @file baselines.hpp
 * @brief Comparison filters: VoI censoring on the Euclidean distance between
 *        means (no covariance in the decision), and a censored
 *        adapt-then-combine diffusion Kalman filter that shares means only.
 */

#ifndef VOI_BASELINES_HPP
#define VOI_BASELINES_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "voi/gaussian_info.hpp"

namespace voi {

/// Half the squared Euclidean distance between means: the Gaussian KL with
/// both covariances set to identity.
template <int Dim>
double norm_censor_statistic(const Vector<Dim>& posterior_mean, const Vector<Dim>& shadow_mean) {
    if (posterior_mean.size() != shadow_mean.size()) {
        throw std::invalid_argument("norm_censor_statistic: dimension mismatch");
    }
    return 0.5 * (posterior_mean - shadow_mean).squaredNorm();
}

template <int Dim>
bool norm_censor_decide(const Vector<Dim>& posterior_mean, const Vector<Dim>& shadow_mean,
                        double gamma) {
    return norm_censor_statistic<Dim>(posterior_mean, shadow_mean) >= gamma;
}

/// Mean-only broadcast of the diffusion filter.
template <int Dim = 4>
struct DiffusionMessage {
    int sender_id;
    Vector<Dim> mean;
    std::int64_t step;

    /// Header (sender, step) plus one double per state component.
    static constexpr std::size_t wire_bytes(Eigen::Index n = Dim) {
        return 12 + 8 * static_cast<std::size_t>(n);
    }
};

template <int Dim = 4>
struct DiffusionNodeState {
    int node_id;
    Vector<Dim> mean;          // prediction x_{k|k-1}
    Matrix<Dim> cov;           // local covariance, never transmitted
    Vector<Dim> shadow_mean;   // prediction of the node's own uncombined estimate
    double gamma;
    LinearDynamics<Dim> dynamics;
    std::int64_t clock = 0;
    std::optional<Vector<Dim>> adapted;  // set between adapt and combine
};

template <int Dim = 4>
struct DiffusionStepOutput {
    bool transmitted;
    std::optional<DiffusionMessage<Dim>> message;
    double statistic;
    MomentEstimate<Dim> posterior;  // adapted mean with the local covariance
};

template <int Dim>
DiffusionNodeState<Dim> diffusion_init(int node_id, const Vector<Dim>& guess, double eps,
                                       double gamma, LinearDynamics<Dim> dynamics) {
    if (!(eps > 0.0)) throw std::invalid_argument("diffusion_init: eps must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("diffusion_init: gamma must be nonnegative");
    const Eigen::Index n = guess.size();
    return {node_id, guess, Matrix<Dim>::Identity(n, n) / eps, guess, gamma, std::move(dynamics),
            0, std::nullopt};
}

/// Adapt: local Kalman update with the node's own covariance, then the
/// Euclidean censoring decision on the adapted mean.
template <int Dim>
std::pair<DiffusionNodeState<Dim>, DiffusionStepOutput<Dim>> diffusion_adapt_and_decide(
    const DiffusionNodeState<Dim>& s, const std::optional<MeasurementContribution<Dim>>& c) {
    DiffusionNodeState<Dim> next = s;
    const Eigen::Index n = s.mean.size();
    Vector<Dim> x = s.mean;
    Matrix<Dim> P = s.cov;
    if (c) {
        if (c->dim() != n) throw std::invalid_argument("diffusion: dimension mismatch");
        const auto prior = detail::factor_pd<Dim>(s.cov, "diffusion covariance");
        const Matrix<Dim> Y =
            symmetrize(Matrix<Dim>(prior.solve(Matrix<Dim>::Identity(n, n)) + c->imat));
        const auto post = detail::factor_pd<Dim>(Y, "diffusion information");
        P = symmetrize(Matrix<Dim>(post.solve(Matrix<Dim>::Identity(n, n))));
        x = post.solve(Vector<Dim>(prior.solve(s.mean) + c->ivec));
    }
    next.cov = P;
    next.adapted = x;
    const double stat = norm_censor_statistic<Dim>(x, s.shadow_mean);
    const bool tx = stat >= s.gamma;
    DiffusionStepOutput<Dim> out{tx, std::nullopt, stat, MomentEstimate<Dim>(x, P)};
    if (tx) out.message = DiffusionMessage<Dim>{s.node_id, x, s.clock};
    return {std::move(next), std::move(out)};
}

namespace detail {

template <int Dim>
DiffusionNodeState<Dim> combine_and_predict(const DiffusionNodeState<Dim>& s,
                                            const std::vector<Vector<Dim>>& received_means) {
    if (!s.adapted) {
        throw std::logic_error("diffusion combine called before adapt");
    }
    Vector<Dim> sum = *s.adapted;
    for (const auto& m : received_means) {
        if (m.size() != sum.size()) throw std::invalid_argument("diffusion: dimension mismatch");
        sum += m;
    }
    const Vector<Dim> combined = sum / static_cast<double>(received_means.size() + 1);
    const auto& dyn = s.dynamics;
    DiffusionNodeState<Dim> next = s;
    next.mean = dyn.A() * combined;
    next.cov = symmetrize(Matrix<Dim>(dyn.A() * s.cov * dyn.A().transpose() + dyn.Q()));
    next.shadow_mean = dyn.A() * *s.adapted;
    next.adapted.reset();
    ++next.clock;
    return next;
}

}  // namespace detail

/// Combine: uniform average of the node's adapted mean and the received means.
/// The covariance is not adjusted by the combination. Then predict.
template <int Dim>
DiffusionNodeState<Dim> diffusion_combine_and_predict(
    const DiffusionNodeState<Dim>& s, std::span<const DiffusionMessage<Dim>> received) {
    std::set<int> senders;
    std::vector<Vector<Dim>> means;
    means.reserve(received.size());
    for (const auto& m : received) {
        if (m.step != s.clock) throw std::invalid_argument("diffusion: stale message");
        if (m.sender_id == s.node_id || !senders.insert(m.sender_id).second) {
            throw std::invalid_argument("diffusion: duplicate sender in one step");
        }
        means.push_back(m.mean);
    }
    return detail::combine_and_predict(s, means);
}

/// One full diffusion step for a node whose neighbours' adapted means are
/// already known. Returns the next state and the transmit decision.
template <int Dim>
std::pair<DiffusionNodeState<Dim>, bool> diffusion_step(
    const DiffusionNodeState<Dim>& s, const std::optional<MeasurementContribution<Dim>>& c,
    std::span<const Vector<Dim>> received_means) {
    auto [adapted, out] = diffusion_adapt_and_decide(s, c);
    const std::vector<Vector<Dim>> means(received_means.begin(), received_means.end());
    return {detail::combine_and_predict(adapted, means), out.transmitted};
}

}  // namespace voi

#endif  // VOI_BASELINES_HPP
