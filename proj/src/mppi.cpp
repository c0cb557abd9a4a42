/*
 Copyright 2026 The vimppi Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/


#include "vimppi/mppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/random/normal_distribution.hpp>

#include "vimppi/errors.hpp"

namespace vimppi {

void MppiConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("mppi: " + what);
    };
    require(horizon >= 1, "horizon must be >= 1");
    require(samples >= 1, "samples must be >= 1");
    require(lambda > 0, "lambda must be positive");
    require(rollout_dt > 0, "rollout_dt must be positive");
    require(newton_iters >= 1, "newton_iters must be >= 1");
    require(sigma.isApprox(sigma.transpose()) &&
                Eigen::LLT<Eigen::Matrix2d>(sigma).info() == Eigen::Success,
            "sigma must be symmetric positive definite");
    require((Q.array() >= 0).all() && (R.array() >= 0).all() && (P.array() >= 0).all(),
            "Q, R and P must be nonnegative");
}

ControlSequence ControlSequence::zeros(int horizon, double dt, double t0) {
    return {Eigen::Matrix2Xd::Zero(2, horizon), dt, t0};
}

double stage_cost(const Stated& s, const Eigen::Vector2d& u, const Eigen::Vector2d& du,
                  const MppiConfig& cfg, const GoalSpec& goal) {
    const Eigen::Vector4d err = state_error(s, goal.x_goal);
    double cost = err.dot(cfg.Q.cwiseProduct(err));
    const double gamma = cfg.gamma();
    if (gamma != 0.0) cost += gamma * (u + du).dot(cfg.sigma.ldlt().solve(u));
    return cost;
}

double terminal_cost(const Stated& s, const MppiConfig& cfg, const GoalSpec& goal) {
    const Eigen::Vector4d err = state_error(s, goal.x_goal);
    return err.dot(cfg.P.cwiseProduct(err));
}

double cost_to_go(const std::vector<Stated>& traj, const Eigen::Matrix2Xd& controls,
                  const Eigen::Matrix2Xd& perturbations, const MppiConfig& cfg,
                  const GoalSpec& goal) {
    const Eigen::Index T = controls.cols();
    if (static_cast<Eigen::Index>(traj.size()) != T + 1 || perturbations.cols() != T) {
        throw std::invalid_argument("cost_to_go: expected T + 1 states and T controls");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < T; ++i) {
        const Eigen::Vector2d u = controls.col(i);
        total += stage_cost(traj[static_cast<std::size_t>(i)], u, perturbations.col(i), cfg, goal);
        total += u.dot(cfg.R.cwiseProduct(u));
    }
    return total + terminal_cost(traj.back(), cfg, goal);
}

DiscreteLagrangianCtx<double> rollout_context(const MppiConfig& cfg, const ModelParamsd& p) {
    return {cfg.rollout_dt, p, cfg.newton_iters, cfg.newton_tol};
}

namespace {

/// Rolls out batch.perturbations kRolloutLanes samples at a time and fills batch.costs.
template <typename MakeLanes>
void score_lanes(RolloutBatch& batch, const Stated& s0, const ControlSequence& seq, const MppiConfig& cfg,
                 const ModelParamsd& p, const GoalSpec& goal, double control_cost, const WorkerPool& pool,
                 MakeLanes&& make_lanes) {
    using Lanes = decltype(make_lanes());
    using Lane = typename Lanes::Lane;
    const int T = seq.size();
    const int K = static_cast<int>(batch.costs.size());
    const Eigen::Matrix2Xd& nominal = seq.points;
    const Eigen::Matrix2d sigma_inv = cfg.sigma.inverse();
    const double gamma = cfg.gamma();
    const Eigen::Vector4d xg = goal.x_goal.vector();
    const std::size_t blocks = (static_cast<std::size_t>(K) + kRolloutLanes - 1) / kRolloutLanes;

    pool.parallel_for(blocks, [&](std::size_t block) {
        const int first = static_cast<int>(block) * kRolloutLanes;
        const int count = std::min(kRolloutLanes, K - first);
        Lanes lanes = make_lanes();
        lanes.reset(s0);
        Lane cost = Lane::Constant(control_cost);
        Lane du1 = Lane::Zero();
        Lane du2 = Lane::Zero();
        for (int i = 0; i < T; ++i) {
            for (int j = 0; j < count; ++j) {
                du1(j) = batch.perturbations(2 * i, first + j);
                du2(j) = batch.perturbations(2 * i + 1, first + j);
            }
            const double u1 = nominal(0, i);
            const double u2 = nominal(1, i);
            const Lane e1 = wrap_angle_lanes(lanes.q1() - xg(0));
            const Lane e2 = wrap_angle_lanes(lanes.q2() - xg(1));
            const Lane e3 = lanes.v1() - xg(2);
            const Lane e4 = lanes.v2() - xg(3);
            cost += cfg.Q(0) * e1 * e1 + cfg.Q(1) * e2 * e2 + cfg.Q(2) * e3 * e3 + cfg.Q(3) * e4 * e4;
            if (gamma != 0.0) {
                const Eigen::Vector2d su = sigma_inv * nominal.col(i);
                cost += gamma * ((u1 + du1) * su(0) + (u2 + du2) * su(1));
            }
            const Lane tau1 =
                p.actuation_mask[0] ? Lane((u1 + du1).max(-p.tau_max).min(p.tau_max)) : Lane(Lane::Zero());
            const Lane tau2 =
                p.actuation_mask[1] ? Lane((u2 + du2).max(-p.tau_max).min(p.tau_max)) : Lane(Lane::Zero());
            lanes.advance(tau1, tau2);
        }
        const Lane e1 = wrap_angle_lanes(lanes.q1() - xg(0));
        const Lane e2 = wrap_angle_lanes(lanes.q2() - xg(1));
        const Lane e3 = lanes.v1() - xg(2);
        const Lane e4 = lanes.v2() - xg(3);
        cost += cfg.P(0) * e1 * e1 + cfg.P(1) * e2 * e2 + cfg.P(2) * e3 * e3 + cfg.P(3) * e4 * e4;
        for (int j = 0; j < count; ++j) {
            const bool ok = !lanes.failed()(j) && std::isfinite(cost(j)) && lanes.state(j).finite();
            batch.costs(first + j) = ok ? cost(j) : std::numeric_limits<double>::infinity();
        }
    });
}

}  // namespace

RolloutBatch rollout_batch(const Stated& s0, const ControlSequence& seq, const MppiConfig& cfg,
                           const ModelParamsd& p, const GoalSpec& goal, std::uint64_t seed,
                           const WorkerPool& pool) {
    const int T = seq.size();
    const int K = cfg.samples;
    RolloutBatch batch;
    batch.seed = seed;
    batch.perturbations.resize(2 * T, K);
    batch.costs.resize(K);

    const Eigen::Matrix2d chol = cfg.sigma.llt().matrixL();
    const auto ctx = rollout_context(cfg, p);
    const Eigen::Matrix2Xd& nominal = seq.points;

    // Nominal control cost is shared by every sample.
    double control_cost = 0.0;
    for (int i = 0; i < T; ++i) control_cost += nominal.col(i).dot(cfg.R.cwiseProduct(nominal.col(i)));

    pool.parallel_for(static_cast<std::size_t>(K), [&](std::size_t idx) {
        SplitMix64 engine(mix_seed(seed, idx));
        boost::random::normal_distribution<double> normal;
        double* noise = batch.perturbations.col(static_cast<Eigen::Index>(idx)).data();
        for (int j = 0; j < 2 * T; j += 2) {
            const Eigen::Vector2d du = chol * Eigen::Vector2d(normal(engine), normal(engine));
            noise[j] = du(0);
            noise[j + 1] = du(1);
        }
    });

    if (cfg.stepper == StepperKind::Variational) {
        score_lanes(batch, s0, seq, cfg, p, goal, control_cost, pool,
                    [&] { return VariationalLanes<double, kRolloutLanes>(ctx); });
    } else {
        score_lanes(batch, s0, seq, cfg, p, goal, control_cost, pool,
                    [&] { return ClassicalLanes<double, kRolloutLanes>(cfg.stepper, ctx.dt, p); });
    }
    return batch;
}

Eigen::VectorXd softmax_weights(const Eigen::VectorXd& costs, double lambda) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : costs) {
        if (std::isfinite(c)) best = std::min(best, c);
    }
    if (!std::isfinite(best)) throw DegenerateWeights("mppi: every rollout cost is non-finite");

    Eigen::VectorXd w(costs.size());
    for (Eigen::Index k = 0; k < costs.size(); ++k) {
        w(k) = std::isfinite(costs(k)) ? std::exp(-(costs(k) - best) / lambda) : 0.0;
    }
    return w / w.sum();
}

ControlSequence update_sequence(const ControlSequence& seq, const RolloutBatch& batch,
                                const MppiConfig& cfg) {
    const Eigen::VectorXd w = softmax_weights(batch.costs, cfg.lambda);
    const Eigen::VectorXd delta = batch.perturbations * w;
    ControlSequence out = seq;
    out.points += Eigen::Map<const Eigen::Matrix2Xd>(delta.data(), 2, seq.size());
    return out;
}

ControlSequence interpolate_shift(const ControlSequence& seq, double elapsed) {
    if (!(elapsed >= 0.0)) throw std::invalid_argument("interpolate_shift: elapsed must be >= 0");
    const int T = seq.size();
    ControlSequence out = seq;
    out.t0 = seq.t0 + elapsed;
    if (elapsed == 0.0) return out;
    const double offset = elapsed / seq.dt;
    for (int i = 0; i < T; ++i) {
        const double x = offset + i;
        const double j = std::floor(x);
        if (j >= T - 1) {
            out.points.col(i) = seq.points.col(T - 1);
            continue;
        }
        const auto lo = static_cast<int>(j);
        const double frac = x - j;
        out.points.col(i) = (1.0 - frac) * seq.points.col(lo) + frac * seq.points.col(lo + 1);
    }
    return out;
}

MppiOutput mppi_control(const Stated& s, const ControlSequence& seq, const MppiConfig& cfg,
                        const ModelParamsd& p, const GoalSpec& goal, std::uint64_t seed,
                        const WorkerPool& pool) {
    const RolloutBatch batch = rollout_batch(s, seq, cfg, p, goal, seed, pool);
    ControlSequence next = update_sequence(seq, batch, cfg);
    // Keep the nominal plan inside the feasible torque set.
    for (int i = 0; i < next.size(); ++i) {
        next.points.col(i) = apply_actuation<double>(next.points.col(i), p);
    }
    const Eigen::Vector2d applied = next.points.col(0);
    return {applied, std::move(next)};
}

}  // namespace vimppi
