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


#include "vimppi/controllers.hpp"

namespace vimppi {

MppiController::MppiController(MppiControllerOptions options, ModelParamsd params, GoalSpec goal)
    : options_(std::move(options)),
      params_(std::move(params)),
      goal_(std::move(goal)),
      pool_(options_.workers),
      monitor_(options_.supervisor.threshold, options_.supervisor.weights),
      sequence_(ControlSequence::zeros(options_.mppi.horizon, options_.mppi.rollout_dt)) {
    options_.mppi.validate();
    validate(params_);
}

std::string MppiController::name() const {
    if (!options_.label.empty()) return options_.label;
    std::string label = stepper_label(options_.mppi.stepper);
    if (options_.supervisor.warm_start.kind != WarmStartPolicy::Kind::None) label += "-WS";
    return label;
}

void MppiController::reset(const Stated&, std::uint64_t seed) {
    seed_ = seed;
    cycle_ = 0;
    detected_ = false;
    monitor_.reset();
    sequence_ = ControlSequence::zeros(options_.mppi.horizon, options_.mppi.rollout_dt);
}

Eigen::Vector2d MppiController::control(double t, const Stated& measured) {
    if (cycle_ > 0) {
        sequence_ = interpolate_shift(sequence_, t - sequence_.t0);
    } else {
        sequence_.t0 = t;
    }

    const SupervisorConfig& sup = options_.supervisor;
    detected_ = sup.enabled && monitor_.check(measured);
    if (detected_ && sup.warm_start.kind != WarmStartPolicy::Kind::None) {
        sequence_ = warm_start_sequence(measured, sup.warm_start, options_.mppi, params_, goal_);
        sequence_.t0 = t;
    }

    MppiOutput out = mppi_control(measured, sequence_, options_.mppi, params_, goal_,
                                  mix_seed(seed_, cycle_), pool_);
    sequence_ = std::move(out.sequence);
    if (sup.enabled) {
        monitor_.set_prediction(predict_next(measured, out.applied, options_.control_period, params_));
    }
    ++cycle_;
    return out.applied;
}

}  // namespace vimppi
