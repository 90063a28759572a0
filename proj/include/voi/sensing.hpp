/**
 * @file sensing.hpp
 * @brief Range (TOA) and bearing (DOA) sensors for a planar target with state
 *        [x, xdot, y, ydot], and their EKF information contributions.
 *
 * Bearings are measured from the +y axis towards +x:
 *   theta = atan2(x - x_s, y - y_s)
 * so a target due "north" of the sensor reads 0 and one due "east" reads pi/2.
 */

#ifndef VOI_SENSING_HPP
#define VOI_SENSING_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>

#include <Eigen/Core>

#include "voi/gaussian_info.hpp"
#include "voi/random.hpp"

namespace voi {

using State4 = Vector<4>;
using Point2 = Eigen::Vector2d;

enum class SensorKind { toa, doa, none };

inline std::string_view to_string(SensorKind k) {
    switch (k) {
        case SensorKind::toa: return "TOA";
        case SensorKind::doa: return "DOA";
        case SensorKind::none: return "NONE";
    }
    return "?";
}

inline SensorKind sensor_kind_from_string(std::string_view s) {
    if (s == "TOA" || s == "toa") return SensorKind::toa;
    if (s == "DOA" || s == "doa") return SensorKind::doa;
    if (s == "NONE" || s == "none") return SensorKind::none;
    throw std::invalid_argument("unknown sensor kind '" + std::string(s) + "'");
}

/// Points closer than this to the sensor are treated as unobservable.
inline constexpr double kDegenerateRadius = 1e-6;

struct SensorSpec {
    SensorKind kind = SensorKind::none;
    Point2 position = Point2::Zero();
    double noise_std = 1.0;          // metres (TOA) or radians (DOA)
    double sensing_radius = 1000.0;  // metres

    void validate() const {
        if (kind != SensorKind::none && !(noise_std > 0.0)) {
            throw std::invalid_argument("sensor noise_std must be positive");
        }
        if (!(sensing_radius > 0.0)) {
            throw std::invalid_argument("sensing_radius must be positive");
        }
    }
};

struct Measurement {
    double value;
    SensorKind kind;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a, two_pi);
    if (w <= -std::numbers::pi) {
        w += two_pi;
    } else if (w > std::numbers::pi) {
        w -= two_pi;
    }
    return w;
}

inline Point2 position_of(const State4& s) { return {s(0), s(2)}; }

inline double distance_to(const SensorSpec& spec, const State4& s) {
    return (position_of(s) - spec.position).norm();
}

/// True when the sensor produces a measurement of a target in this state.
inline bool in_range(const SensorSpec& spec, const State4& s) {
    if (spec.kind == SensorKind::none) {
        return false;
    }
    const double d = distance_to(spec, s);
    return d <= spec.sensing_radius && d > kDegenerateRadius;
}

/// Noiseless measurement function h(x).
inline double observe(const SensorSpec& spec, const State4& s) {
    const double dx = s(0) - spec.position.x();
    const double dy = s(2) - spec.position.y();
    switch (spec.kind) {
        case SensorKind::toa: return std::hypot(dx, dy);
        case SensorKind::doa: return std::atan2(dx, dy);
        case SensorKind::none: break;
    }
    throw std::logic_error("observe: sensor has no measurement model");
}

/// Noisy measurement, or nothing when the target is outside the sensing radius.
inline std::optional<Measurement> measure(const SensorSpec& spec, const State4& truth, Rng& rng) {
    if (!in_range(spec, truth)) {
        return std::nullopt;
    }
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    double z = observe(spec, truth) + noise(rng);
    if (spec.kind == SensorKind::doa) {
        z = wrap_angle(z);
    }
    return Measurement{z, spec.kind};
}

inline Eigen::Matrix<double, 1, 4> jacobian(const SensorSpec& spec, const State4& at) {
    const double dx = at(0) - spec.position.x();
    const double dy = at(2) - spec.position.y();
    const double r2 = dx * dx + dy * dy;
    const double r = std::sqrt(r2);
    if (r <= kDegenerateRadius) {
        throw NumericalError("jacobian: linearization point coincides with the sensor");
    }
    Eigen::Matrix<double, 1, 4> H;
    switch (spec.kind) {
        case SensorKind::toa: H << dx / r, 0.0, dy / r, 0.0; break;
        case SensorKind::doa: H << dy / r2, 0.0, -dx / r2, 0.0; break;
        case SensorKind::none: throw std::logic_error("jacobian: sensor has no measurement model");
    }
    return H;
}

/**
 * EKF information contribution linearized at `prior_mean`:
 *   zbar = (z - h(xhat)) + H xhat,   i = H^T R^-1 zbar,   I = H^T R^-1 H.
 * Bearing innovations are wrapped to (-pi, pi] first.
 */
inline MeasurementContribution<4> contribution(const SensorSpec& spec, const Measurement& z,
                                               const State4& prior_mean) {
    if (z.kind != spec.kind) {
        throw std::invalid_argument("contribution: measurement kind does not match sensor");
    }
    const auto H = jacobian(spec, prior_mean);
    double innovation = z.value - observe(spec, prior_mean);
    if (spec.kind == SensorKind::doa) {
        innovation = wrap_angle(innovation);
    }
    const double pseudo = innovation + (H * prior_mean)(0);
    const double r_inv = 1.0 / (spec.noise_std * spec.noise_std);
    return {H.transpose() * (r_inv * pseudo), H.transpose() * r_inv * H};
}

inline MeasurementContribution<4> contribution(const SensorSpec& spec, const Measurement& z,
                                               const MomentEstimate<4>& linearization) {
    return contribution(spec, z, linearization.mean);
}

}  // namespace voi

#endif  // VOI_SENSING_HPP
