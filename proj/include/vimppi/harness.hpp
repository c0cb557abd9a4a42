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


#ifndef VIMPPI_HARNESS_HPP
#define VIMPPI_HARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vimppi/controllers.hpp"
#include "vimppi/model.hpp"
#include "vimppi/parallel.hpp"

namespace vimppi {

enum class DisturbanceKind { TorqueImpulse, StateJump };

std::string disturbance_kind_name(DisturbanceKind kind);
DisturbanceKind parse_disturbance_kind(std::string_view name);

struct Disturbance {
    DisturbanceKind kind = DisturbanceKind::TorqueImpulse;
    /// N*m*s for impulses; weighted state norm for jumps.
    double magnitude = 0.0;
    /// Impulse joint (0 or 1); -1 draws it from the rng.
    int joint = -1;
};

struct ScheduledDisturbance {
    double time = 0.0;
    Disturbance disturbance;
};

/// A realized disturbance with the stream that fixes its random direction.
struct DisturbanceEvent {
    double time = 0.0;
    Disturbance disturbance;
    std::uint64_t seed = 0;
};

struct DisturbanceGenerator {
    /// Mean seconds between random impulses; <= 0 disables them.
    double mean_interarrival = 5.0;
    double impulse_min = 0.05;
    double impulse_max = 0.15;
    std::vector<ScheduledDisturbance> scheduled;
    /// Metric in which state-jump magnitudes are measured.
    Eigen::Vector4d jump_weights{1.0, 1.0, 0.1, 0.1};
};

struct EpisodeConfig {
    double duration = 60.0;
    double control_period = 0.002;
    double plant_dt = 1e-4;
    DisturbanceGenerator disturbances{};
    /// Half-width of the uniform perturbation of the hanging start angles.
    double initial_noise = 0.05;
    double swingup_debounce = 0.1;
    /// Stop once the pendulum has stayed upright this long; 0 runs the full duration.
    double stop_after_hold = 0.0;
    /// Wall-clock budget in seconds; 0 disables the timeout.
    double wall_clock_budget = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    int control_steps() const;
    int plant_substeps() const;
};

struct StepRecord {
    double t = 0.0;
    Stated state;
    Eigen::Vector2d torque = Eigen::Vector2d::Zero();
    bool upright = false;
    bool disturbed = false;
};

struct EpisodeMetrics {
    int swingups = 0;
    double uptime = 0.0;
    /// Longest continuous upright stretch.
    double longest_hold = 0.0;
    /// Episode time actually simulated.
    double simulated = 0.0;
    /// Control cycles in which the controller flagged a disturbance.
    int detections = 0;
    bool failed = false;
    std::string error;
    std::vector<StepRecord> timeseries;
    std::vector<DisturbanceEvent> disturbances;
};

/**
 * @brief Applies one disturbance to the state.
 *
 * A torque impulse J on joint j adds M(q)^-1 (J e_j) to v, with a random sign
 * (and joint, when d.joint < 0). A state jump moves (q, v) along a random
 * direction by d.magnitude in the jump_weights metric.
 */
Stated inject_disturbance(const Stated& s, const Disturbance& d, std::mt19937_64& rng,
                          const ModelParamsd& p,
                          const Eigen::Vector4d& jump_weights = {1.0, 1.0, 0.1, 0.1});

/// Disturbance realization of an episode: a function of ep.seed only.
std::vector<DisturbanceEvent> realize_disturbances(const EpisodeConfig& ep);

/// Hanging start with the seeded angle perturbation.
Stated initial_state(const EpisodeConfig& ep);

using PlantStep = std::function<Stated(const Stated&, const Eigen::Vector2d&, double)>;

/// RK4 ground truth at the given step.
PlantStep rk4_plant(const ModelParamsd& p);

/**
 * @brief Closed-loop episode.
 *
 * The plant advances in plant_dt substeps under zero-order-hold torque; the
 * controller sees the state only at control-period boundaries. Disturbances
 * due in a period are applied at its start, before the measurement. An empty
 * `plant` uses rk4_plant(p).
 */
EpisodeMetrics run_episode(Controller& ctrl, const EpisodeConfig& ep, const ModelParamsd& p,
                           const GoalSpec& goal, const PlantStep& plant = {});

struct CampaignRow {
    std::string controller;
    int episodes = 0;
    double swingups_mean = 0.0;
    double swingups_std = 0.0;
    double uptime_mean = 0.0;
    double uptime_std = 0.0;
    int failures = 0;
    /// Per-seed metrics without timeseries, in seed order.
    std::vector<EpisodeMetrics> runs;
};

struct CampaignSummary {
    std::vector<CampaignRow> rows;
};

/// Called once per finished episode, possibly from a worker thread.
using EpisodeSink =
    std::function<void(const std::string& controller, int seed_index, const EpisodeMetrics&)>;

/// Seed used for episode k of a campaign with master seed `master`.
std::uint64_t episode_seed(std::uint64_t master, int k);

/**
 * @brief Evaluates every controller on the same n_seeds episodes.
 *
 * Episode k of each controller shares the initial state and disturbance
 * realization. Rows are sorted by mean uptime, highest first. A failed
 * episode counts as zero uptime and is tallied in `failures`.
 */
CampaignSummary run_campaign(const std::vector<NamedController>& controllers,
                             const EpisodeConfig& ep, const ModelParamsd& p, const GoalSpec& goal,
                             int n_seeds, const WorkerPool& pool, const EpisodeSink& sink = {});

/// Factory for an MPPI controller with the given stepper swapped in.
NamedController mppi_variant(StepperKind kind, const MppiControllerOptions& base,
                             const ModelParamsd& p, const GoalSpec& goal);

/// VI, E, I and IF variants under one MPPI configuration and seed set.
CampaignSummary ablation_suite(const EpisodeConfig& ep, const ModelParamsd& p,
                               const GoalSpec& goal, const MppiControllerOptions& base,
                               int n_seeds, const WorkerPool& pool, const EpisodeSink& sink = {});

void write_timeseries_csv(std::ostream& os, const EpisodeMetrics& m);
void write_summary_csv(std::ostream& os, const CampaignSummary& summary);
std::string format_summary_table(const CampaignSummary& summary);

}  // namespace vimppi

#endif  // VIMPPI_HARNESS_HPP
