/**
 * @file verify.hpp
 * @brief Self-contained oracle checks run by `voi_cli verify` and the
 *        acceptance suite. Each check compares the library against an
 *        independent computation (quadrature, moment-form Kalman algebra,
 *        Monte Carlo, brute-force grid search).
 */

#ifndef VOI_VERIFY_HPP
#define VOI_VERIFY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "voi/discrete_bayes.hpp"
#include "voi/gaussian_info.hpp"
#include "voi/random.hpp"
#include "voi/scenario.hpp"

namespace voi::verify {

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

/// Random symmetric positive definite matrix with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n, double lo, double hi) {
    std::normal_distribution<double> g;
    std::uniform_real_distribution<double> u(lo, hi);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd ev(n);
    for (Eigen::Index i = 0; i < n; ++i) ev(i) = u(rng);
    return symmetrize(Eigen::MatrixXd(q * ev.asDiagonal() * q.transpose()));
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index n, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

/// Gaussian log density written out directly (no library code involved).
inline double log_density(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::MatrixXd& cov) {
    const Eigen::Index n = x.size();
    const Eigen::VectorXd d = x - mean;
    const double quad = d.dot(cov.inverse() * d);
    return -0.5 * quad - 0.5 * std::log(cov.determinant()) -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// KL(p || q) by adaptive Gauss-Kronrod quadrature in p's whitened coordinates,
/// where the integrand is phi(u) * (log p(x) - log q(x)).
inline double kl_by_quadrature(const Eigen::VectorXd& mp, const Eigen::MatrixXd& Pp,
                               const Eigen::VectorXd& mq, const Eigen::MatrixXd& Pq) {
    using boost::math::quadrature::gauss_kronrod;
    constexpr double kBound = 12.0;
    const Eigen::MatrixXd L = Pp.llt().matrixL();
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto log_ratio = [&](const Eigen::VectorXd& u) {
        const Eigen::VectorXd x = mp + L * u;
        return log_density(x, mp, Pp) - log_density(x, mq, Pq);
    };
    if (mp.size() == 1) {
        auto f = [&](double u) {
            Eigen::VectorXd uv(1);
            uv << u;
            return norm * std::exp(-0.5 * u * u) * log_ratio(uv);
        };
        return gauss_kronrod<double, 61>::integrate(f, -kBound, kBound, 15, 1e-12);
    }
    auto outer = [&](double u1) {
        auto inner = [&](double u2) {
            Eigen::VectorXd uv(2);
            uv << u1, u2;
            return norm * std::exp(-0.5 * u2 * u2) * log_ratio(uv);
        };
        return norm * std::exp(-0.5 * u1 * u1) *
               gauss_kronrod<double, 31>::integrate(inner, -kBound, kBound, 10, 1e-11);
    };
    return gauss_kronrod<double, 31>::integrate(outer, -kBound, kBound, 10, 1e-11);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1.0);
}

/// Random invertible dynamics: either an NCV model with random interval and
/// noise scale, or a generic well-conditioned matrix with a random SPD Q.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_dynamics(Rng& rng, Eigen::Index n,
                                                                   bool ncv) {
    std::uniform_real_distribution<double> u(0.05, 2.0);
    if (ncv) {
        const NcvModel m = build_ncv(u(rng), u(rng));
        return {m.A, m.Q};
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + 0.3 * random_vector(rng, n * n, 1.0)
                                                                     .reshaped(n, n);
    return {A, random_spd(rng, n, 0.05, 2.0)};
}

/// NEES of one Monte Carlo trial.
inline double nees(const Eigen::VectorXd& err, const Eigen::MatrixXd& cov) {
    return err.dot(cov.llt().solve(err));
}

}  // namespace detail

/// Closed-form Gaussian KL against adaptive quadrature on random 1-D and 2-D pairs.
inline CheckResult check_kl_quadrature(int cases = 100, std::uint64_t seed = 11) {
    Rng rng = make_rng(seed);
    double worst = 0.0;
    for (int dim = 1; dim <= 2; ++dim) {
        for (int c = 0; c < cases; ++c) {
            const Eigen::VectorXd mp = detail::random_vector(rng, dim, 1.5);
            const Eigen::VectorXd mq = detail::random_vector(rng, dim, 1.5);
            const Eigen::MatrixXd Pp = detail::random_spd(rng, dim, 0.2, 4.0);
            const Eigen::MatrixXd Pq = detail::random_spd(rng, dim, 0.2, 4.0);
            const double closed = kl_gaussian(MomentEstimate<>(mp, Pp), MomentEstimate<>(mq, Pq));
            const double numeric = detail::kl_by_quadrature(mp, Pp, mq, Pq);
            worst = std::max(worst, std::abs(closed - numeric));
        }
    }
    return {"kl_closed_form_vs_quadrature", worst <= 1e-3,
            "max |closed - quadrature| = " + detail::fmt(worst) + " over " +
                std::to_string(2 * cases) + " pairs (tol 1e-3)"};
}

/// Information-form prediction and update against covariance-form Kalman algebra.
inline CheckResult check_information_form(int cases = 1000, std::uint64_t seed = 12) {
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> dim_pick(1, 6);
    std::uniform_int_distribution<int> meas_pick(1, 3);
    double worst = 0.0;
    for (int c = 0; c < cases; ++c) {
        const bool ncv = c % 2 == 0;
        const Eigen::Index n = ncv ? 4 : dim_pick(rng);
        const auto [A, Q] = detail::random_dynamics(rng, n, ncv);
        const Eigen::VectorXd x = detail::random_vector(rng, n, 10.0);
        const Eigen::MatrixXd P = detail::random_spd(rng, n, 0.1, 10.0);
        const InfoEstimate<> e = to_information(MomentEstimate<>(x, P));

        const InfoEstimate<> pred = info_predict(e, A, Q);
        const Eigen::MatrixXd P_pred = A * P * A.transpose() + Q;
        const Eigen::MatrixXd Y_pred = P_pred.inverse();
        worst = std::max(worst, detail::rel_diff(pred.info_mat, Y_pred));
        worst = std::max(worst, detail::rel_diff(pred.info_vec, Y_pred * (A * x)));

        const Eigen::Index m = meas_pick(rng);
        const Eigen::MatrixXd H = detail::random_vector(rng, m * n, 1.0).reshaped(m, n);
        const Eigen::MatrixXd R = detail::random_spd(rng, m, 0.1, 5.0);
        const Eigen::VectorXd z = H * x + detail::random_vector(rng, m, 1.0);
        const Eigen::MatrixXd Rinv = R.inverse();
        const MeasurementContribution<> contrib{H.transpose() * Rinv * z,
                                                H.transpose() * Rinv * H};
        const MomentEstimate<> upd = to_moment(info_update(e, contrib));

        const Eigen::MatrixXd S = H * P * H.transpose() + R;
        const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
        const Eigen::MatrixXd IKH = Eigen::MatrixXd::Identity(n, n) - K * H;
        const Eigen::MatrixXd P_upd = IKH * P * IKH.transpose() + K * R * K.transpose();
        const Eigen::VectorXd x_upd = x + K * (z - H * x);
        worst = std::max(worst, detail::rel_diff(upd.cov, P_upd));
        worst = std::max(worst, detail::rel_diff(upd.mean, x_upd));
    }
    return {"information_form_vs_moment_form", worst <= 1e-9,
            "max relative difference = " + detail::fmt(worst) + " over " + std::to_string(cases) +
                " instances (tol 1e-9)"};
}

struct NeesBand {
    double lower;
    double upper;
};

/// Two-sided 99% acceptance band for the mean NEES of `trials` draws in `dim` dimensions.
inline NeesBand nees_band(int trials, int dim) {
    const boost::math::chi_squared chi(static_cast<double>(trials) * dim);
    return {boost::math::quantile(chi, 0.005) / trials, boost::math::quantile(chi, 0.995) / trials};
}

struct NeesReport {
    double shared_logop;      // near-identical inputs with shared error
    double mixed_logop;       // heterogeneous, partially correlated inputs
    double mixed_diffusion;   // same inputs, mean averaging with the local covariance
    NeesBand band;
};

/**
 * Monte Carlo NEES of fused estimates. Each of `m` nodes reports
 * x + e_c + e_i with covariance C + D_i, where e_c ~ N(0, C) is common to all
 * nodes and e_i ~ N(0, D_i) is private, so every input is individually
 * consistent while the cross-correlation is unknown to the fuser.
 *
 *  - shared: D_i = 0.01 C for all i. Inputs almost coincide, so a consistent
 *    fuser should sit inside the two-sided band.
 *  - mixed: node 0 has D_0 = 0, the others carry large private errors
 *    D_i = 8 C. LogOP must stay below the upper bound; averaging the means
 *    while keeping node 0's covariance C (diffusion combine) must exceed it.
 */
inline NeesReport nees_experiment(int trials = 5000, std::uint64_t seed = 13) {
    constexpr int kDim = 4;
    constexpr int kNodes = 4;
    Rng rng = make_rng(seed);
    const Eigen::MatrixXd C = detail::random_spd(rng, kDim, 0.5, 3.0);
    const Eigen::MatrixXd Lc = C.llt().matrixL();

    auto run = [&](double private_scale_others, double private_scale_first,
                   const std::function<double(const std::vector<Eigen::VectorXd>&,
                                              const std::vector<Eigen::MatrixXd>&)>& score) {
        std::vector<Eigen::MatrixXd> covs;
        for (int i = 0; i < kNodes; ++i) {
            const double s = i == 0 ? private_scale_first : private_scale_others;
            covs.push_back((1.0 + s) * C);
        }
        double total = 0.0;
        for (int t = 0; t < trials; ++t) {
            const Eigen::VectorXd common = Lc * detail::random_vector(rng, kDim, 1.0);
            std::vector<Eigen::VectorXd> errs;
            for (int i = 0; i < kNodes; ++i) {
                const double s = i == 0 ? private_scale_first : private_scale_others;
                errs.push_back(common + std::sqrt(s) * Lc * detail::random_vector(rng, kDim, 1.0));
            }
            total += score(errs, covs);
        }
        return total / trials;
    };

    // The target sits at the origin, so each node's reported mean equals its error.
    auto logop = [](const std::vector<Eigen::VectorXd>& errs,
                    const std::vector<Eigen::MatrixXd>& covs) {
        std::vector<InfoEstimate<>> others;
        for (std::size_t i = 1; i < errs.size(); ++i) {
            others.push_back(to_information(MomentEstimate<>(errs[i], covs[i])));
        }
        const InfoEstimate<> own = to_information(MomentEstimate<>(errs[0], covs[0]));
        const MomentEstimate<> fused =
            to_moment(logop_fuse<Eigen::Dynamic>(own, std::span<const InfoEstimate<>>(others)));
        return detail::nees(fused.mean, fused.cov);
    };
    auto diffusion = [](const std::vector<Eigen::VectorXd>& errs,
                        const std::vector<Eigen::MatrixXd>& covs) {
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(errs[0].size());
        for (const auto& e : errs) avg += e;
        avg /= static_cast<double>(errs.size());
        return detail::nees(avg, covs[0]);
    };

    NeesReport r{};
    r.shared_logop = run(0.01, 0.01, logop);
    r.mixed_logop = run(8.0, 0.0, logop);
    r.mixed_diffusion = run(8.0, 0.0, diffusion);
    r.band = nees_band(trials, kDim);
    return r;
}

inline CheckResult check_nees(int trials = 5000, std::uint64_t seed = 13) {
    const NeesReport r = nees_experiment(trials, seed);
    const bool shared_in = r.shared_logop >= r.band.lower && r.shared_logop <= r.band.upper;
    const bool mixed_ok = r.mixed_logop <= r.band.upper;
    const bool diffusion_violates = r.mixed_diffusion > r.band.upper;
    return {"logop_nees_consistency", shared_in && mixed_ok && diffusion_violates,
            "band [" + detail::fmt(r.band.lower) + ", " + detail::fmt(r.band.upper) +
                "]; logop shared " + detail::fmt(r.shared_logop) + ", logop mixed " +
                detail::fmt(r.mixed_logop) + ", diffusion mixed " +
                detail::fmt(r.mixed_diffusion) + " (" + std::to_string(trials) + " trials)"};
}

/// The information-matrix prediction map preserves the PSD order.
inline CheckResult check_monotone_prediction(int pairs = 1000, std::uint64_t seed = 14) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> shrink(0.0, 0.95);
    double worst = std::numeric_limits<double>::infinity();
    for (int c = 0; c < pairs; ++c) {
        const bool ncv = c % 2 == 0;
        const Eigen::Index n = ncv ? 4 : 1 + c % 5;
        const auto [A, Q] = detail::random_dynamics(rng, n, ncv);
        const Eigen::MatrixXd Y2 = detail::random_spd(rng, n, 0.1, 10.0);
        // Y1 = Y2 - D with 0 <= D < Y2: scale a random PSD direction into the gap.
        const Eigen::MatrixXd L2 = Y2.llt().matrixL();
        const Eigen::MatrixXd G = detail::random_spd(rng, n, 0.0, 1.0);
        const double g_max = G.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
        const Eigen::MatrixXd D = L2 * (shrink(rng) / g_max * G) * L2.transpose();
        const Eigen::MatrixXd Y1 = symmetrize(Eigen::MatrixXd(Y2 - D));
        const Eigen::MatrixXd gap = symmetrize(Eigen::MatrixXd(f_map(Y2, A, Q) - f_map(Y1, A, Q)));
        worst = std::min(worst, gap.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff());
    }
    return {"prediction_map_monotone", worst >= -1e-9,
            "min eigenvalue of f(Y2) - f(Y1) = " + detail::fmt(worst) + " over " +
                std::to_string(pairs) + " pairs (tol -1e-9)"};
}

/// Average KL from a candidate to each opinion: the objective LogOP minimises.
inline double pooled_objective(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& qs) {
    double total = 0.0;
    for (const auto& q : qs) {
        for (int s = 0; s < 3; ++s) {
            if (p(s) > 0.0) total += p(s) * std::log(p(s) / q(s));
        }
    }
    return total / static_cast<double>(qs.size());
}

/// LogOP output against every point of a regular simplex grid.
inline CheckResult check_logop_optimality(int instances = 20, double step = 1e-3,
                                          std::uint64_t seed = 15) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.02, 1.0);
    std::uniform_int_distribution<int> count(2, 5);
    const int ticks = static_cast<int>(std::lround(1.0 / step));
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < instances; ++k) {
        std::vector<Eigen::Vector3d> qs;
        std::vector<discrete::DiscreteDist> dists;
        const int m = count(rng);
        for (int i = 0; i < m; ++i) {
            Eigen::Vector3d q(u(rng), u(rng), u(rng));
            q /= q.sum();
            qs.push_back(q);
            dists.push_back(discrete::DiscreteDist::normalized(q, "opinion"));
        }
        const Eigen::VectorXd pooled = discrete::logop_pool(dists).probs();
        const double pooled_value = pooled_objective(Eigen::Vector3d(pooled), qs);
        double grid_best = std::numeric_limits<double>::infinity();
        for (int a = 0; a <= ticks; ++a) {
            for (int b = 0; a + b <= ticks; ++b) {
                const Eigen::Vector3d p(a * step, b * step, (ticks - a - b) * step);
                grid_best = std::min(grid_best, pooled_objective(p, qs));
            }
        }
        worst_gap = std::max(worst_gap, pooled_value - grid_best);
    }
    return {"logop_beats_simplex_grid", worst_gap <= 1e-5,
            "max (pooled - best grid point) = " + detail::fmt(worst_gap) + " over " +
                std::to_string(instances) + " instances (tol 1e-5)"};
}

struct ConsensusTrace {
    std::vector<double> max_pairwise_kl;  // one entry per round
};

/// Ring of `n` nodes with heterogeneous priors over `states` states, static
/// target, no measurements and gamma = 0.
inline ConsensusTrace ring_consensus(int n = 5, int states = 4, int rounds = 200,
                                     std::uint64_t seed = 16) {
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<discrete::DiscreteNode> nodes;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd w(states);
        for (int s = 0; s < states; ++s) w(s) = u(rng);
        nodes.push_back(discrete::DiscreteNode::from_prior(discrete::DiscreteDist::normalized(w, "prior")));
    }
    std::vector<std::vector<int>> neighbours(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        neighbours[static_cast<std::size_t>(i)] = {(i + n - 1) % n, (i + 1) % n};
    }
    const auto model = discrete::DiscreteModel::identity(states);
    const std::vector<std::optional<Eigen::VectorXd>> silent(static_cast<std::size_t>(n));

    ConsensusTrace trace;
    for (int r = 0; r < rounds; ++r) {
        auto step = discrete::discrete_voi_step(nodes, model, silent, neighbours, 0.0);
        nodes = std::move(step.nodes);
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i != j) {
                    worst = std::max(worst, discrete::kl_discrete(nodes[static_cast<std::size_t>(i)].fused,
                                                                  nodes[static_cast<std::size_t>(j)].fused));
                }
            }
        }
        trace.max_pairwise_kl.push_back(worst);
    }
    return trace;
}

inline CheckResult check_consensus(std::uint64_t seed = 16) {
    const ConsensusTrace t = ring_consensus(5, 4, 200, seed);
    const auto& kl = t.max_pairwise_kl;
    const auto first_below = std::find_if(kl.begin(), kl.end(), [](double v) { return v < 1e-6; });
    bool monotone = true;
    for (std::size_t k = 1; k < kl.size(); ++k) {
        if (kl[k - 1] > 1e-14 && kl[k] > kl[k - 1] * (1.0 + 1e-9)) monotone = false;
    }
    const bool reached = first_below != kl.end();
    return {"ring_consensus", reached && monotone,
            reached ? "max pairwise KL < 1e-6 after " +
                          std::to_string(std::distance(kl.begin(), first_below) + 1) +
                          " rounds, final " + detail::fmt(kl.back()) +
                          (monotone ? ", non-increasing" : ", NOT monotone")
                    : "max pairwise KL still " + detail::fmt(kl.back()) + " after 200 rounds"};
}

inline std::vector<CheckResult> run_all() {
    return {check_kl_quadrature(), check_information_form(), check_nees(),
            check_monotone_prediction(), check_logop_optimality(), check_consensus()};
}

}  // namespace voi::verify

#endif  // VOI_VERIFY_HPP
