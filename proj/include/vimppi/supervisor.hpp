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


#ifndef VIMPPI_SUPERVISOR_HPP
#define VIMPPI_SUPERVISOR_HPP

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "vimppi/model.hpp"
#include "vimppi/mppi.hpp"

namespace vimppi {

/// Weighted norm of a state difference with wrapped angle components.
double weighted_state_distance(const Stated& a, const Stated& b, const Eigen::Vector4d& weights);

/**
 * @brief Flags a disturbance when the measured state departs from the
 * one-step model prediction by more than `threshold`.
 *
 * Distance is sqrt(sum_i (w_i e_i)^2) over (q1, q2, v1, v2).
 */
class DisturbanceMonitor {
public:
    explicit DisturbanceMonitor(double threshold = 0.1,
                                Eigen::Vector4d weights = {1.0, 1.0, 0.1, 0.1});

    double threshold() const { return threshold_; }
    const Eigen::Vector4d& weights() const { return weights_; }
    const std::optional<Stated>& last_prediction() const { return last_prediction_; }

    void set_prediction(const Stated& predicted) { last_prediction_ = predicted; }
    void reset() { last_prediction_.reset(); }

    /// Consumes the stored prediction. Without one, returns false.
    bool check(const Stated& measured);

    /// Mismatch of the last check, 0 when no prediction was stored.
    double last_mismatch() const { return last_mismatch_; }

private:
    double threshold_;
    Eigen::Vector4d weights_;
    std::optional<Stated> last_prediction_;
    double last_mismatch_ = 0.0;
};

/// One variational step of the plant model over the control period.
Stated predict_next(const Stated& s, const Eigen::Vector2d& applied, double control_period,
                    const ModelParamsd& p);

struct WarmStartPolicy {
    enum class Kind { None, EnergySwingUp };
    Kind kind = Kind::None;
    double energy_gain = 20.0;
    double pump_gain = 2.0;
};

WarmStartPolicy::Kind parse_warm_start(std::string_view name);
std::string warm_start_name(WarmStartPolicy::Kind kind);

/**
 * @brief Energy-shaping swing-up law used as the warm-start stand-in.
 *
 * The actuated joint injects power (E* - E) * v_a, scaled by energy_gain.
 * When the elbow is actuated, pump_gain also pulls the elbow back toward
 * straight. Returns zero torque once the state is upright.
 */
Eigen::Vector2d energy_swing_up_torque(const Stated& s, const WarmStartPolicy& policy,
                                       const ModelParamsd& p, const GoalSpec& goal);

/// Rolls the policy through the variational model to build a T-step sequence.
ControlSequence warm_start_sequence(const Stated& s, const WarmStartPolicy& policy,
                                    const MppiConfig& cfg, const ModelParamsd& p,
                                    const GoalSpec& goal);

}  // namespace vimppi

#endif  // VIMPPI_SUPERVISOR_HPP
