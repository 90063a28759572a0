/**
 * @file config_io.hpp
 * @brief JSON scenario files and CSV output.
 *
 * Scenario schema (all keys optional unless noted, defaults in parentheses):
 *
 *   name                 string ("scenario")
 *   delta                sampling interval in seconds (1.0)
 *   horizon              number of steps (3000)
 *   gamma                censoring level in nats (0.4)
 *   seed                 master seed for process, sensor and link streams (1)
 *   burn_in_fraction     leading fraction excluded from asymptotic stats (0.2)
 *   process_noise        { q_scale (1.0), truth_q_scale (= q_scale) }
 *   target               { initial_state [x, xdot, y, ydot] ([1500, 8, 1000, 12]),
 *                          maneuvers [{ step, vx, vy }] ([]) }
 *   prior                { eps (1e-6), mean [4] (= target.initial_state) }
 *   link                 { reference_distance_m, success_at_reference,
 *                          path_loss_exponent, shadowing_std_db, connectivity_floor }
 *   nodes                [{ kind "TOA"|"DOA"|"NONE", x, y,
 *                           noise_std (native units) or noise_std_deg (DOA),
 *                           sensing_radius_m (1000) }]
 *   deployment           used when "nodes" is absent:
 *                        { count, x_range [lo, hi], y_range [lo, hi], toa_fraction,
 *                          toa_noise_std_m (1.5), doa_noise_std_deg (2),
 *                          sensing_radius_m (1000), seed }
 *
 * Exactly one of "nodes" or "deployment" is required.
 */

#ifndef VOI_CONFIG_IO_HPP
#define VOI_CONFIG_IO_HPP

#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <tuple>

#include <json.hpp>

#include "voi/harness.hpp"
#include "voi/scenario.hpp"

namespace voi {

namespace detail {

inline constexpr double kDegToRad = std::numbers::pi / 180.0;

inline State4 state_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 4) {
        throw ConfigError(std::string(what) + " must be an array of 4 numbers");
    }
    return State4(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

inline std::pair<double, double> range_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2) {
        throw ConfigError(std::string(what) + " must be [lo, hi]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    try {
        c.name = j.value("name", c.name);
        c.delta = j.value("delta", c.delta);
        c.horizon = j.value("horizon", c.horizon);
        c.gamma = j.value("gamma", c.gamma);
        c.seeds.master = j.value("seed", c.seeds.master);
        c.burn_in_fraction = j.value("burn_in_fraction", c.burn_in_fraction);

        if (j.contains("process_noise")) {
            const auto& p = j.at("process_noise");
            c.q_scale = p.value("q_scale", c.q_scale);
            c.truth_q_scale = p.value("truth_q_scale", c.q_scale);
        } else {
            c.truth_q_scale = c.q_scale;
        }

        if (j.contains("target")) {
            const auto& t = j.at("target");
            if (t.contains("initial_state")) {
                c.initial_state = detail::state_from_json(t.at("initial_state"), "initial_state");
            }
            for (const auto& m : t.value("maneuvers", nlohmann::json::array())) {
                c.maneuvers.push_back(
                    {m.at("step").get<std::int64_t>(), m.at("vx").get<double>(), m.at("vy").get<double>()});
            }
        }

        c.prior_mean = c.initial_state;
        if (j.contains("prior")) {
            const auto& p = j.at("prior");
            c.prior_eps = p.value("eps", c.prior_eps);
            if (p.contains("mean")) c.prior_mean = detail::state_from_json(p.at("mean"), "prior.mean");
        }

        if (j.contains("link")) {
            const auto& l = j.at("link");
            c.link.reference_distance = l.value("reference_distance_m", c.link.reference_distance);
            c.link.success_at_reference = l.value("success_at_reference", c.link.success_at_reference);
            c.link.path_loss_exponent = l.value("path_loss_exponent", c.link.path_loss_exponent);
            c.link.shadowing_std_db = l.value("shadowing_std_db", c.link.shadowing_std_db);
            c.link.connectivity_floor = l.value("connectivity_floor", c.link.connectivity_floor);
        }

        const bool has_nodes = j.contains("nodes");
        const bool has_deploy = j.contains("deployment");
        if (has_nodes == has_deploy) {
            throw ConfigError("exactly one of 'nodes' or 'deployment' must be given");
        }
        if (has_nodes) {
            for (const auto& n : j.at("nodes")) {
                SensorSpec s;
                s.kind = sensor_kind_from_string(n.value("kind", std::string("NONE")));
                s.position = {n.at("x").get<double>(), n.at("y").get<double>()};
                s.sensing_radius = n.value("sensing_radius_m", s.sensing_radius);
                if (n.contains("noise_std_deg")) {
                    s.noise_std = n.at("noise_std_deg").get<double>() * detail::kDegToRad;
                } else if (n.contains("noise_std")) {
                    s.noise_std = n.at("noise_std").get<double>();
                } else {
                    s.noise_std = s.kind == SensorKind::doa ? 2.0 * detail::kDegToRad : 1.5;
                }
                c.nodes.push_back(s);
            }
        } else {
            const auto& d = j.at("deployment");
            RandomDeployment rd;
            rd.count = d.value("count", rd.count);
            if (d.contains("x_range")) {
                std::tie(rd.x_min, rd.x_max) = detail::range_from_json(d.at("x_range"), "x_range");
            }
            if (d.contains("y_range")) {
                std::tie(rd.y_min, rd.y_max) = detail::range_from_json(d.at("y_range"), "y_range");
            }
            rd.toa_fraction = d.value("toa_fraction", rd.toa_fraction);
            rd.toa_noise_std = d.value("toa_noise_std_m", rd.toa_noise_std);
            rd.doa_noise_std = d.value("doa_noise_std_deg", 2.0) * detail::kDegToRad;
            rd.sensing_radius = d.value("sensing_radius_m", rd.sensing_radius);
            rd.seed = d.value("seed", rd.seed);
            c.nodes = deploy(rd);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

/// Fixed formatting so identical runs produce byte-identical files.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_steps_csv(std::ostream& os, std::span<const StepRecord> records) {
    os << "step,node_id,transmitted,voi_value,bytes_sent,position_error_m,position_trace_m2\n";
    for (const auto& r : records) {
        os << r.step << ',' << r.node_id << ',' << (r.transmitted ? 1 : 0) << ','
           << fmt_double(r.voi_value) << ',' << r.bytes_sent << ',' << fmt_double(r.position_error)
           << ',' << fmt_double(r.position_trace) << '\n';
    }
}

/// Per-step network series (RMSE, running average, medium access, best/worst node).
inline void write_series_csv(std::ostream& os, const RunSummary& s) {
    os << "step,network_rmse_m,running_rmse_m,medium_access,best_error_m,worst_error_m\n";
    for (std::size_t k = 0; k < s.network_rmse.size(); ++k) {
        os << k << ',' << fmt_double(s.network_rmse[k]) << ',' << fmt_double(s.running_rmse[k])
           << ',' << fmt_double(s.medium_access[k]) << ',' << fmt_double(s.best_error[k]) << ','
           << fmt_double(s.worst_error[k]) << '\n';
    }
}

inline void write_summary_csv(std::ostream& os, const ExperimentResult& r) {
    const auto& s = r.summary;
    os << "filter,gamma,seed,num_nodes,horizon,asymptotic_rmse_m,best_node_rmse_m,"
          "worst_node_rmse_m,mean_medium_access,peak_medium_access,total_bytes,kbps\n";
    os << to_string(r.filter) << ',' << fmt_double(r.gamma) << ',' << r.seed << ','
       << s.num_nodes << ',' << s.horizon << ',' << fmt_double(s.asymptotic_rmse) << ','
       << fmt_double(s.best_node_rmse) << ',' << fmt_double(s.worst_node_rmse) << ','
       << fmt_double(s.mean_medium_access) << ',' << fmt_double(s.peak_medium_access) << ','
       << s.total_bytes << ',' << fmt_double(s.kbps) << '\n';
}

inline void write_sweep_csv(std::ostream& os, FilterKind filter,
                            std::span<const SweepResult> results) {
    os << "filter,gamma,seeds,asymptotic_rmse_m,best_node_rmse_m,worst_node_rmse_m,"
          "mean_medium_access,total_kbps,ok,error\n";
    for (const auto& r : results) {
        std::string err = r.error;
        for (auto& ch : err) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        os << to_string(filter) << ',' << fmt_double(r.gamma) << ',' << r.seeds << ','
           << fmt_double(r.asymptotic_rmse) << ',' << fmt_double(r.best_node_rmse) << ','
           << fmt_double(r.worst_node_rmse) << ',' << fmt_double(r.mean_medium_access) << ','
           << fmt_double(r.total_kbps) << ',' << (r.ok ? 1 : 0) << ',' << err << '\n';
    }
}

}  // namespace voi

#endif  // VOI_CONFIG_IO_HPP
