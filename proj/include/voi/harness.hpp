/**
 * @file harness.hpp
 * @brief Closed-loop tracking experiments: truth -> sensing -> update/censor ->
 *        network delivery -> fuse/predict, plus metrics and censoring sweeps.
 */

#ifndef VOI_HARNESS_HPP
#define VOI_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "voi/baselines.hpp"
#include "voi/gaussian_info.hpp"
#include "voi/netsim.hpp"
#include "voi/random.hpp"
#include "voi/scenario.hpp"
#include "voi/sensing.hpp"
#include "voi/voi_node.hpp"

namespace voi {

enum class FilterKind { voi, voi_nocov, diffusion };

inline std::string_view to_string(FilterKind f) {
    switch (f) {
        case FilterKind::voi: return "voi";
        case FilterKind::voi_nocov: return "voi-nocov";
        case FilterKind::diffusion: return "diffusion";
    }
    return "?";
}

inline FilterKind filter_kind_from_string(std::string_view s) {
    if (s == "voi") return FilterKind::voi;
    if (s == "voi-nocov") return FilterKind::voi_nocov;
    if (s == "diffusion") return FilterKind::diffusion;
    throw ConfigError("unknown filter '" + std::string(s) + "' (expected voi, voi-nocov, diffusion)");
}

struct StepRecord {
    std::int64_t step;
    int node_id;
    bool transmitted;
    double voi_value;        // censoring statistic (nats for the KL rule)
    std::size_t bytes_sent;  // 0 unless transmitted
    double position_error;   // metres, |(x, y) - (x_hat, y_hat)|
    double position_trace;   // P_xx + P_yy of the reported posterior, m^2
};

struct MetricsOptions {
    double delta = 1.0;
    double burn_in_fraction = 0.2;
};

struct RunSummary {
    int num_nodes = 0;
    std::int64_t horizon = 0;
    // Per-step series.
    std::vector<double> network_rmse;
    std::vector<double> running_rmse;
    std::vector<double> medium_access;
    std::vector<double> best_error;
    std::vector<double> worst_error;
    // Scalars over the post-burn-in window unless stated otherwise.
    double asymptotic_rmse = 0.0;
    double best_node_rmse = 0.0;
    double worst_node_rmse = 0.0;
    double mean_medium_access = 0.0;  // whole run
    double peak_medium_access = 0.0;  // whole run
    std::size_t total_bytes = 0;
    double kbps = 0.0;
};

/// Aggregates per-node records into network statistics. Node count and horizon
/// are taken from the largest ids present.
inline RunSummary compute_metrics(std::span<const StepRecord> records,
                                  const MetricsOptions& opt = {}) {
    if (records.empty()) {
        throw std::invalid_argument("compute_metrics: no records");
    }
    RunSummary s;
    for (const auto& r : records) {
        s.num_nodes = std::max(s.num_nodes, r.node_id + 1);
        s.horizon = std::max(s.horizon, r.step + 1);
    }
    const auto K = static_cast<std::size_t>(s.horizon);
    const auto N = static_cast<std::size_t>(s.num_nodes);
    std::vector<double> sq_sum(K, 0.0);
    std::vector<int> count(K, 0);
    std::vector<int> tx(K, 0);
    s.best_error.assign(K, std::numeric_limits<double>::infinity());
    s.worst_error.assign(K, 0.0);
    const auto burn_in = static_cast<std::int64_t>(
        std::floor(opt.burn_in_fraction * static_cast<double>(s.horizon)));
    std::vector<double> node_sq(N, 0.0);
    std::vector<int> node_count(N, 0);

    for (const auto& r : records) {
        const auto k = static_cast<std::size_t>(r.step);
        const double e2 = r.position_error * r.position_error;
        sq_sum[k] += e2;
        ++count[k];
        tx[k] += r.transmitted ? 1 : 0;
        s.best_error[k] = std::min(s.best_error[k], r.position_error);
        s.worst_error[k] = std::max(s.worst_error[k], r.position_error);
        s.total_bytes += r.bytes_sent;
        if (r.step >= burn_in) {
            node_sq[static_cast<std::size_t>(r.node_id)] += e2;
            ++node_count[static_cast<std::size_t>(r.node_id)];
        }
    }

    s.network_rmse.resize(K);
    s.running_rmse.resize(K);
    s.medium_access.resize(K);
    double running = 0.0;
    double asym_sum = 0.0;
    std::size_t asym_n = 0;
    double access_sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        s.network_rmse[k] = count[k] > 0 ? std::sqrt(sq_sum[k] / count[k]) : 0.0;
        running += s.network_rmse[k];
        s.running_rmse[k] = running / static_cast<double>(k + 1);
        s.medium_access[k] = static_cast<double>(tx[k]) / static_cast<double>(N);
        access_sum += s.medium_access[k];
        s.peak_medium_access = std::max(s.peak_medium_access, s.medium_access[k]);
        if (static_cast<std::int64_t>(k) >= burn_in) {
            asym_sum += s.network_rmse[k];
            ++asym_n;
        }
        if (count[k] == 0) s.best_error[k] = 0.0;
    }
    s.asymptotic_rmse = asym_n > 0 ? asym_sum / static_cast<double>(asym_n) : 0.0;
    s.mean_medium_access = access_sum / static_cast<double>(K);

    s.best_node_rmse = std::numeric_limits<double>::infinity();
    s.worst_node_rmse = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        if (node_count[i] == 0) continue;
        const double r = std::sqrt(node_sq[i] / node_count[i]);
        s.best_node_rmse = std::min(s.best_node_rmse, r);
        s.worst_node_rmse = std::max(s.worst_node_rmse, r);
    }
    if (!std::isfinite(s.best_node_rmse)) s.best_node_rmse = 0.0;
    s.kbps = static_cast<double>(s.total_bytes) * 8.0 /
             (static_cast<double>(s.horizon) * opt.delta) / 1000.0;
    return s;
}

struct ExperimentResult {
    FilterKind filter;
    double gamma;
    std::uint64_t seed;
    std::vector<State4> truth;
    std::vector<StepRecord> records;  // ordered by (step, node)
    RunSummary summary;
};

/// Numerical failure inside a run, tagged with where it happened.
class SimulationError : public NumericalError {
public:
    SimulationError(std::int64_t step, int node, const std::string& what)
        : NumericalError("step " + std::to_string(step) + ", node " + std::to_string(node) +
                         ": " + what),
          step_(step),
          node_(node) {}

    [[nodiscard]] std::int64_t step() const { return step_; }
    [[nodiscard]] int node() const { return node_; }

private:
    std::int64_t step_;
    int node_;
};

namespace detail {

inline std::optional<MeasurementContribution<4>> sense(const SensorSpec& spec, const State4& truth,
                                                       const State4& prior_mean, Rng& rng) {
    const auto z = measure(spec, truth, rng);
    if (!z) return std::nullopt;
    // Linearizing on top of the sensor is undefined; drop the measurement.
    if ((position_of(prior_mean) - spec.position).norm() <= kDegenerateRadius) {
        return std::nullopt;
    }
    return contribution(spec, *z, prior_mean);
}

inline double position_error(const State4& truth, const Vector<4>& estimate) {
    return std::hypot(truth(0) - estimate(0), truth(2) - estimate(2));
}

inline double position_trace(const Matrix<4>& cov) { return cov(0, 0) + cov(2, 2); }

}  // namespace detail

/**
 * Runs one closed-loop experiment. Deterministic for a fixed configuration:
 * the process noise, every sensor and the link draws use separate seeded
 * streams, so changing gamma or the filter leaves unrelated randomness intact.
 */
inline ExperimentResult run_experiment(const ScenarioConfig& config,
                                       FilterKind filter = FilterKind::voi) {
    config.validate();
    const NcvModel truth_model = build_ncv(config.delta, config.truth_q_scale);
    const NcvModel filter_model = build_ncv(config.delta, config.q_scale);
    const LinearDynamics<4> dynamics = filter_model.dynamics();

    ExperimentResult result{filter, config.gamma, config.seeds.master, {}, {}, {}};
    Rng process_rng(config.seeds.process());
    result.truth = simulate_truth(truth_model, config, process_rng);

    const int N = config.num_nodes();
    const auto positions = config.positions();
    std::vector<Rng> sensor_rng;
    sensor_rng.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) sensor_rng.emplace_back(config.seeds.sensor(i));
    const KeyedRandom link_rng(config.seeds.links());

    std::vector<NodeState<4>> voi_nodes;
    std::vector<DiffusionNodeState<4>> diff_nodes;
    for (int i = 0; i < N; ++i) {
        if (filter == FilterKind::diffusion) {
            diff_nodes.push_back(
                diffusion_init<4>(i, config.prior_mean, config.prior_eps, config.gamma, dynamics));
        } else {
            voi_nodes.push_back(node_init<4>(
                i, config.prior_mean, config.prior_eps, config.gamma, dynamics,
                filter == FilterKind::voi ? CensorRule::kl : CensorRule::euclidean));
        }
    }

    result.records.reserve(static_cast<std::size_t>(config.horizon) * static_cast<std::size_t>(N));
    const std::size_t info_bytes = BroadcastMessage<4>::wire_bytes();
    const std::size_t mean_bytes = DiffusionMessage<4>::wire_bytes();

    for (std::int64_t k = 0; k < config.horizon; ++k) {
        const State4& x = result.truth[static_cast<std::size_t>(k)];
        std::set<int> transmitters;
        std::vector<std::optional<BroadcastMessage<4>>> voi_msgs(static_cast<std::size_t>(N));
        std::vector<std::optional<DiffusionMessage<4>>> diff_msgs(static_cast<std::size_t>(N));

        for (int i = 0; i < N; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            try {
                if (filter == FilterKind::diffusion) {
                    auto& node = diff_nodes[ui];
                    const auto c =
                        detail::sense(config.nodes[ui], x, node.mean, sensor_rng[ui]);
                    auto [next, out] = diffusion_adapt_and_decide<4>(node, c);
                    node = std::move(next);
                    if (out.transmitted) {
                        transmitters.insert(i);
                        diff_msgs[ui] = out.message;
                    }
                    result.records.push_back({k, i, out.transmitted, out.statistic,
                                              out.transmitted ? mean_bytes : 0,
                                              detail::position_error(x, out.posterior.mean),
                                              detail::position_trace(out.posterior.cov)});
                } else {
                    auto& node = voi_nodes[ui];
                    const State4 prior_mean = to_moment(node.fused).mean;
                    const auto c = detail::sense(config.nodes[ui], x, prior_mean, sensor_rng[ui]);
                    auto [next, out] = node_update_and_decide<4>(node, c);
                    node = std::move(next);
                    if (out.transmitted) {
                        transmitters.insert(i);
                        voi_msgs[ui] = out.message;
                    }
                    result.records.push_back({k, i, out.transmitted, out.voi_value,
                                              out.transmitted ? info_bytes : 0,
                                              detail::position_error(x, out.posterior.mean),
                                              detail::position_trace(out.posterior.cov)});
                }
            } catch (const NumericalError& e) {
                throw SimulationError(k, i, e.what());
            }
        }

        const NetworkSnapshot snap =
            evaluate_links(positions, transmitters, config.link, link_rng, k);

        for (int i = 0; i < N; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const auto heard = snap.heard_by(i);
            try {
                if (filter == FilterKind::diffusion) {
                    std::vector<DiffusionMessage<4>> inbox;
                    for (const int j : heard) inbox.push_back(*diff_msgs[static_cast<std::size_t>(j)]);
                    diff_nodes[ui] = diffusion_combine_and_predict<4>(diff_nodes[ui], inbox);
                } else {
                    std::vector<BroadcastMessage<4>> inbox;
                    for (const int j : heard) inbox.push_back(*voi_msgs[static_cast<std::size_t>(j)]);
                    voi_nodes[ui] = node_fuse_and_predict<4>(voi_nodes[ui], inbox);
                }
            } catch (const NumericalError& e) {
                throw SimulationError(k, i, e.what());
            }
        }
    }

    result.summary = compute_metrics(result.records, {config.delta, config.burn_in_fraction});
    return result;
}

struct SweepResult {
    double gamma = 0.0;
    int seeds = 0;
    double asymptotic_rmse = 0.0;
    double best_node_rmse = 0.0;
    double worst_node_rmse = 0.0;
    double mean_medium_access = 0.0;
    double total_kbps = 0.0;
    bool ok = true;
    std::string error;
};

struct SweepOptions {
    FilterKind filter = FilterKind::voi;
    int seeds = 1;
    unsigned threads = 0;  // 0: hardware concurrency
};

/// The configuration of run `index` in a multi-seed batch.
inline ScenarioConfig with_seed_offset(ScenarioConfig config, int index) {
    config.seeds.master += static_cast<std::uint64_t>(index);
    return config;
}

/// Runs `tasks` jobs over a small thread pool; results are stored by index.
template <typename Fn>
void parallel_for(std::size_t tasks, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks));
    if (threads <= 1) {
        for (std::size_t i = 0; i < tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < tasks; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

/**
 * One SweepResult per gamma, each averaged over `opt.seeds` runs with seeds
 * master, master + 1, ... A failing point is reported with ok = false and the
 * sweep carries on.
 */
inline std::vector<SweepResult> run_sweep(const ScenarioConfig& config,
                                          std::span<const double> gammas,
                                          const SweepOptions& opt = {}) {
    if (gammas.empty()) throw std::invalid_argument("run_sweep: empty gamma list");
    if (opt.seeds < 1) throw std::invalid_argument("run_sweep: need at least one seed");
    config.validate();

    const std::size_t S = static_cast<std::size_t>(opt.seeds);
    std::vector<std::optional<RunSummary>> runs(gammas.size() * S);
    std::vector<std::string> errors(gammas.size() * S);
    parallel_for(runs.size(), opt.threads, [&](std::size_t idx) {
        ScenarioConfig c = with_seed_offset(config, static_cast<int>(idx % S));
        c.gamma = gammas[idx / S];
        try {
            runs[idx] = run_experiment(c, opt.filter).summary;
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    });

    std::vector<SweepResult> out;
    for (std::size_t g = 0; g < gammas.size(); ++g) {
        SweepResult r;
        r.gamma = gammas[g];
        for (std::size_t s = 0; s < S; ++s) {
            const auto& run = runs[g * S + s];
            if (!run) {
                r.ok = false;
                r.error = errors[g * S + s];
                continue;
            }
            ++r.seeds;
            r.asymptotic_rmse += run->asymptotic_rmse;
            r.best_node_rmse += run->best_node_rmse;
            r.worst_node_rmse += run->worst_node_rmse;
            r.mean_medium_access += run->mean_medium_access;
            r.total_kbps += run->kbps;
        }
        if (r.seeds > 0) {
            const double n = r.seeds;
            r.asymptotic_rmse /= n;
            r.best_node_rmse /= n;
            r.worst_node_rmse /= n;
            r.mean_medium_access /= n;
            r.total_kbps /= n;
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace voi

#endif  // VOI_HARNESS_HPP
