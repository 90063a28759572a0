/**
 * @file scenario.hpp
 * @brief Nearly-constant-velocity target, sensor deployment and the scenario
 *        description consumed by the harness.
 */

#ifndef VOI_SCENARIO_HPP
#define VOI_SCENARIO_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "voi/gaussian_info.hpp"
#include "voi/netsim.hpp"
#include "voi/random.hpp"
#include "voi/sensing.hpp"

namespace voi {

/// Raised for invalid scenario descriptions (bad values, missing keys).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Planar NCV model on [x, xdot, y, ydot].
struct NcvModel {
    double delta;
    double q_scale;
    Matrix<4> A;
    Matrix<4> Q;

    [[nodiscard]] LinearDynamics<4> dynamics() const { return {A, Q}; }
};

inline NcvModel build_ncv(double delta, double q_scale = 1.0) {
    if (!(delta > 0.0)) {
        throw std::invalid_argument("build_ncv: sampling interval must be positive");
    }
    if (!(q_scale >= 0.0)) {
        throw std::invalid_argument("build_ncv: q_scale must be nonnegative");
    }
    Eigen::Matrix2d a;
    a << 1.0, delta, 0.0, 1.0;
    Eigen::Matrix2d q;
    q << delta * delta * delta / 3.0, delta * delta / 2.0, delta * delta / 2.0, delta;

    NcvModel m{delta, q_scale, Matrix<4>::Zero(), Matrix<4>::Zero()};
    m.A.block<2, 2>(0, 0) = a;
    m.A.block<2, 2>(2, 2) = a;
    m.Q.block<2, 2>(0, 0) = q_scale * q;
    m.Q.block<2, 2>(2, 2) = q_scale * q;
    if (q_scale > 0.0 && Eigen::LLT<Matrix<4>>(m.Q).info() != Eigen::Success) {
        throw NumericalError("build_ncv: process noise is not positive definite");
    }
    return m;
}

struct Maneuver {
    std::int64_t step;
    double vx;
    double vy;
};

/// Uniform random placement of sensing nodes over a rectangle.
struct RandomDeployment {
    int count = 20;
    double x_min = 0.0, x_max = 4000.0;
    double y_min = 0.0, y_max = 4000.0;
    double toa_fraction = 0.5;
    double toa_noise_std = 1.5;       // metres
    double doa_noise_std = 0.0349066;  // radians (2 degrees)
    double sensing_radius = 1000.0;
    std::uint64_t seed = 1;
};

inline std::vector<SensorSpec> deploy(const RandomDeployment& d) {
    if (d.count <= 0 || !(d.x_max > d.x_min) || !(d.y_max > d.y_min)) {
        throw ConfigError("random deployment needs count > 0 and a nonempty rectangle");
    }
    Rng rng = make_rng(d.seed, {0xDE9107});
    std::uniform_real_distribution<double> ux(d.x_min, d.x_max);
    std::uniform_real_distribution<double> uy(d.y_min, d.y_max);
    const int toa_count = static_cast<int>(std::lround(d.toa_fraction * d.count));
    std::vector<SensorSpec> out;
    out.reserve(static_cast<std::size_t>(d.count));
    for (int i = 0; i < d.count; ++i) {
        SensorSpec s;
        s.kind = i < toa_count ? SensorKind::toa : SensorKind::doa;
        s.noise_std = s.kind == SensorKind::toa ? d.toa_noise_std : d.doa_noise_std;
        s.sensing_radius = d.sensing_radius;
        s.position = {ux(rng), uy(rng)};
        out.push_back(s);
    }
    return out;
}

struct SeedSet {
    std::uint64_t master = 1;

    [[nodiscard]] std::uint64_t process() const { return derive_seed(master, {0x9A0C}); }
    [[nodiscard]] std::uint64_t sensor(int node) const {
        return derive_seed(master, {0x5E50, static_cast<std::uint64_t>(node)});
    }
    [[nodiscard]] std::uint64_t links() const { return derive_seed(master, {0x111C}); }
};

struct ScenarioConfig {
    std::string name = "scenario";
    double delta = 1.0;
    double q_scale = 1.0;        // process noise assumed by the filters
    double truth_q_scale = 1.0;  // process noise driving the target
    std::int64_t horizon = 3000;
    State4 initial_state = State4(1500.0, 8.0, 1000.0, 12.0);
    std::vector<Maneuver> maneuvers;
    std::vector<SensorSpec> nodes;
    double gamma = 0.4;
    LinkModel link;
    SeedSet seeds;
    double prior_eps = 1e-6;
    State4 prior_mean = State4(1500.0, 8.0, 1000.0, 12.0);
    double burn_in_fraction = 0.2;

    [[nodiscard]] int num_nodes() const { return static_cast<int>(nodes.size()); }

    void validate() const {
        if (!(delta > 0.0)) throw ConfigError("delta must be positive");
        if (!(q_scale >= 0.0) || !(truth_q_scale >= 0.0)) {
            throw ConfigError("q_scale values must be nonnegative");
        }
        if (horizon <= 0) throw ConfigError("horizon must be positive");
        if (nodes.empty()) throw ConfigError("scenario has no nodes");
        if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
        if (!(prior_eps > 0.0)) throw ConfigError("prior eps must be positive");
        if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
            throw ConfigError("burn_in_fraction must lie in [0, 1)");
        }
        bool any_sensing = false;
        for (const auto& n : nodes) {
            try {
                n.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
            any_sensing = any_sensing || n.kind != SensorKind::none;
        }
        if (!any_sensing) throw ConfigError("scenario needs at least one sensing node");
        for (const auto& m : maneuvers) {
            if (m.step < 0 || m.step >= horizon) {
                throw ConfigError("maneuver step " + std::to_string(m.step) +
                                  " outside the horizon");
            }
        }
        try {
            link.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }

    [[nodiscard]] std::vector<Eigen::Vector2d> positions() const {
        std::vector<Eigen::Vector2d> p;
        p.reserve(nodes.size());
        for (const auto& n : nodes) p.push_back(n.position);
        return p;
    }
};

/**
 * Ground truth x_0 .. x_{horizon-1} with x_{k+1} = A x_k + w_k, w_k ~ N(0, Q).
 * A maneuver at step k overwrites the velocities of x_k before it is propagated.
 */
inline std::vector<State4> simulate_truth(const NcvModel& model, const ScenarioConfig& config,
                                          Rng& rng) {
    std::vector<State4> traj;
    traj.reserve(static_cast<std::size_t>(config.horizon));
    Matrix<4> L = Matrix<4>::Zero();
    if (model.q_scale > 0.0) {
        L = Eigen::LLT<Matrix<4>>(model.Q).matrixL();
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    State4 x = config.initial_state;
    for (std::int64_t k = 0; k < config.horizon; ++k) {
        for (const auto& m : config.maneuvers) {
            if (m.step == k) {
                x(1) = m.vx;
                x(3) = m.vy;
            }
        }
        traj.push_back(x);
        State4 w;
        for (int i = 0; i < 4; ++i) w(i) = normal(rng);
        x = model.A * x + L * w;
    }
    return traj;
}

}  // namespace voi

#endif  // VOI_SCENARIO_HPP
