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


#include "vimppi/supervisor.hpp"

#include <cmath>
#include <stdexcept>

#include "vimppi/integrators.hpp"

namespace vimppi {

double weighted_state_distance(const Stated& a, const Stated& b, const Eigen::Vector4d& weights) {
    const Eigen::Vector4d err = state_error(a, b);
    return weights.cwiseProduct(err).norm();
}

DisturbanceMonitor::DisturbanceMonitor(double threshold, Eigen::Vector4d weights)
    : threshold_(threshold), weights_(std::move(weights)) {
    if (!(threshold_ > 0)) throw std::invalid_argument("disturbance threshold must be positive");
}

bool DisturbanceMonitor::check(const Stated& measured) {
    if (!last_prediction_) {
        last_mismatch_ = 0.0;
        return false;
    }
    last_mismatch_ = weighted_state_distance(measured, *last_prediction_, weights_);
    last_prediction_.reset();
    return last_mismatch_ > threshold_;
}

Stated predict_next(const Stated& s, const Eigen::Vector2d& applied, double control_period,
                    const ModelParamsd& p) {
    DiscreteLagrangianCtx<double> ctx;
    ctx.dt = control_period;
    ctx.params = p;
    return vi_step(s, applied, ctx);
}

WarmStartPolicy::Kind parse_warm_start(std::string_view name) {
    if (name == "none") return WarmStartPolicy::Kind::None;
    if (name == "energy") return WarmStartPolicy::Kind::EnergySwingUp;
    throw std::invalid_argument("unknown warm-start policy '" + std::string(name) +
                                "' (expected none or energy)");
}

std::string warm_start_name(WarmStartPolicy::Kind kind) {
    return kind == WarmStartPolicy::Kind::EnergySwingUp ? "energy" : "none";
}

Eigen::Vector2d energy_swing_up_torque(const Stated& s, const WarmStartPolicy& policy,
                                       const ModelParamsd& p, const GoalSpec& goal) {
    if (policy.kind == WarmStartPolicy::Kind::None || is_upright(s, goal, p)) {
        return Eigen::Vector2d::Zero();
    }
    const double energy_error = total_energy(goal.x_goal, p) - total_energy(s, p);
    Eigen::Vector2d u = Eigen::Vector2d::Zero();
    if (p.actuation_mask[0]) u(0) = policy.energy_gain * energy_error * s.v(0);
    if (p.actuation_mask[1]) {
        u(1) = policy.energy_gain * energy_error * s.v(1) - policy.pump_gain * wrap_angle(s.q(1));
    }
    return apply_actuation<double>(u, p);
}

ControlSequence warm_start_sequence(const Stated& s, const WarmStartPolicy& policy,
                                    const MppiConfig& cfg, const ModelParamsd& p,
                                    const GoalSpec& goal) {
    ControlSequence seq = ControlSequence::zeros(cfg.horizon, cfg.rollout_dt);
    if (policy.kind == WarmStartPolicy::Kind::None) return seq;
    const auto ctx = rollout_context(cfg, p);
    Stated x = s;
    for (int i = 0; i < cfg.horizon; ++i) {
        const Eigen::Vector2d u = energy_swing_up_torque(x, policy, p, goal);
        seq.points.col(i) = u;
        x = vi_step(x, u, ctx);
    }
    return seq;
}

}  // namespace vimppi
