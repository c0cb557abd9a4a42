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


#ifndef VIMPPI_MPPI_HPP
#define VIMPPI_MPPI_HPP

#include <cstdint>

#include <Eigen/Dense>

#include "vimppi/integrators.hpp"
#include "vimppi/model.hpp"
#include "vimppi/parallel.hpp"

namespace vimppi {

/// Samples advanced together by the variational rollout.
inline constexpr int kRolloutLanes = 8;

/// Sampling-controller hyperparameters. Defaults are the published tuning.
struct MppiConfig {
    int horizon = 20;
    int samples = 4096;
    double lambda = 50.0;
    double alpha = 1.0;
    Eigen::Matrix2d sigma = 0.2 * Eigen::Matrix2d::Identity();
    Eigen::Vector4d Q{10.0, 1.0, 0.10, 0.10};
    Eigen::Vector2d R{0.10, 0.10};
    Eigen::Vector4d P{5.0e6, 5.0e6, 2.0e6, 2.0e6};
    double rollout_dt = 0.02;
    StepperKind stepper = StepperKind::Variational;
    int newton_iters = 2;
    double newton_tol = 1e-9;

    /// Coupling weight of the perturbation term in the stage cost.
    double gamma() const { return lambda * (1.0 - alpha); }
    /// Planning window covered by one sequence, horizon * rollout_dt.
    double planning_window() const { return horizon * rollout_dt; }
    /// Throws ConfigError on an unusable configuration.
    void validate() const;
};

struct ControlSequence {
    Eigen::Matrix2Xd points;  // column i is u_i
    double dt = 0.02;
    double t0 = 0.0;

    int size() const { return static_cast<int>(points.cols()); }
    static ControlSequence zeros(int horizon, double dt, double t0 = 0.0);
};

struct RolloutBatch {
    /// Column k stacks the 2 x T perturbation draws of sample k.
    Eigen::MatrixXd perturbations;
    Eigen::VectorXd costs;
    std::uint64_t seed = 0;

    Eigen::Map<const Eigen::Matrix2Xd> perturbation(int k) const {
        return {perturbations.col(k).data(), 2, perturbations.rows() / 2};
    }
};

double stage_cost(const Stated& s, const Eigen::Vector2d& u, const Eigen::Vector2d& du,
                  const MppiConfig& cfg, const GoalSpec& goal);

double terminal_cost(const Stated& s, const MppiConfig& cfg, const GoalSpec& goal);

/**
 * @brief Cost-to-go of one trajectory: stage costs, u^T R u on the nominal
 * controls, and the terminal cost on the last state.
 *
 * traj holds T + 1 states; controls and perturbations are 2 x T.
 */
double cost_to_go(const std::vector<Stated>& traj, const Eigen::Matrix2Xd& controls,
                  const Eigen::Matrix2Xd& perturbations, const MppiConfig& cfg,
                  const GoalSpec& goal);

/// Model context used for rollouts under the given configuration.
DiscreteLagrangianCtx<double> rollout_context(const MppiConfig& cfg, const ModelParamsd& p);

/**
 * @brief Samples K perturbed copies of seq and scores each rollout from s0.
 *
 * Sample k draws from its own stream seeded by (seed, k), so the batch is the
 * same for any worker count. A rollout whose stepper fails or leaves the
 * finite range is scored +inf.
 */
RolloutBatch rollout_batch(const Stated& s0, const ControlSequence& seq, const MppiConfig& cfg,
                           const ModelParamsd& p, const GoalSpec& goal, std::uint64_t seed,
                           const WorkerPool& pool);

/// Normalized exp(-(S - min S) / lambda). Throws DegenerateWeights if no cost is finite.
Eigen::VectorXd softmax_weights(const Eigen::VectorXd& costs, double lambda);

ControlSequence update_sequence(const ControlSequence& seq, const RolloutBatch& batch,
                                const MppiConfig& cfg);

/**
 * @brief Resamples seq on nodes advanced by `elapsed` seconds.
 *
 * Values between old nodes are linearly interpolated; past the last node the
 * final point is held. t0 advances by `elapsed`.
 */
ControlSequence interpolate_shift(const ControlSequence& seq, double elapsed);

struct MppiOutput {
    Eigen::Vector2d applied;
    ControlSequence sequence;
};

/// One sample/update cycle; returns the masked, clamped first control.
MppiOutput mppi_control(const Stated& s, const ControlSequence& seq, const MppiConfig& cfg,
                        const ModelParamsd& p, const GoalSpec& goal, std::uint64_t seed,
                        const WorkerPool& pool);

}  // namespace vimppi

#endif  // VIMPPI_MPPI_HPP
