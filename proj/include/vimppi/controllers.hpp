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


#ifndef VIMPPI_CONTROLLERS_HPP
#define VIMPPI_CONTROLLERS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "vimppi/model.hpp"
#include "vimppi/mppi.hpp"
#include "vimppi/parallel.hpp"
#include "vimppi/supervisor.hpp"

namespace vimppi {

/// A feedback law consulted once per control period.
class Controller {
public:
    virtual ~Controller() = default;

    virtual std::string name() const = 0;
    virtual void reset(const Stated& s0, std::uint64_t seed) = 0;
    /// Returns the torque to hold until the next call.
    virtual Eigen::Vector2d control(double t, const Stated& measured) = 0;
    /// Whether the last control() call flagged a disturbance.
    virtual bool disturbance_detected() const { return false; }
};

using ControllerFactory = std::function<std::unique_ptr<Controller>()>;

struct NamedController {
    std::string name;
    ControllerFactory make;
};

class NullController final : public Controller {
public:
    std::string name() const override { return "NULL"; }
    void reset(const Stated&, std::uint64_t) override {}
    Eigen::Vector2d control(double, const Stated&) override { return Eigen::Vector2d::Zero(); }
};

/// The warm-start policy run on its own, as a baseline row.
class PolicyController final : public Controller {
public:
    PolicyController(WarmStartPolicy policy, ModelParamsd params, GoalSpec goal)
        : policy_(policy), params_(std::move(params)), goal_(std::move(goal)) {}

    std::string name() const override { return "ENERGY"; }
    void reset(const Stated&, std::uint64_t) override {}
    Eigen::Vector2d control(double, const Stated& measured) override {
        return energy_swing_up_torque(measured, policy_, params_, goal_);
    }

private:
    WarmStartPolicy policy_;
    ModelParamsd params_;
    GoalSpec goal_;
};

struct SupervisorConfig {
    bool enabled = true;
    double threshold = 0.1;
    Eigen::Vector4d weights{1.0, 1.0, 0.1, 0.1};
    WarmStartPolicy warm_start{};
};

struct MppiControllerOptions {
    MppiConfig mppi{};
    SupervisorConfig supervisor{};
    double control_period = 0.002;
    int workers = 1;
    /// Empty picks a label from the stepper, e.g. "VIMPPI" or "VIMPPI-WS".
    std::string label;
};

/**
 * @brief Direct MPPI controller with disturbance supervision.
 *
 * Between calls the stored plan is resampled by one control period. When the
 * monitor flags a disturbance and a warm-start policy is configured, the plan
 * is replaced by the policy's sequence before the MPPI update.
 */
class MppiController final : public Controller {
public:
    MppiController(MppiControllerOptions options, ModelParamsd params, GoalSpec goal);

    std::string name() const override;
    void reset(const Stated& s0, std::uint64_t seed) override;
    Eigen::Vector2d control(double t, const Stated& measured) override;
    bool disturbance_detected() const override { return detected_; }

    const ControlSequence& sequence() const { return sequence_; }
    const DisturbanceMonitor& monitor() const { return monitor_; }
    const MppiControllerOptions& options() const { return options_; }

private:
    MppiControllerOptions options_;
    ModelParamsd params_;
    GoalSpec goal_;
    WorkerPool pool_;
    DisturbanceMonitor monitor_;
    ControlSequence sequence_;
    std::uint64_t seed_ = 0;
    std::uint64_t cycle_ = 0;
    bool detected_ = false;
};

}  // namespace vimppi

#endif  // VIMPPI_CONTROLLERS_HPP
