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

#ifndef VIMPPI_CONFIG_HPP
#define VIMPPI_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vimppi/controllers.hpp"
#include "vimppi/harness.hpp"
#include "vimppi/model.hpp"

namespace vimppi {

enum class Robot { Pendubot, Acrobot };

Robot parse_robot(std::string_view name);
std::string robot_name(Robot robot);

/**
 * @brief Everything a run needs, addressable by flat dotted keys.
 *
 * Sections: model.*, mppi.*, vi.*, supervisor.*, goal.*, harness.*,
 * campaign.*. Keys are matched case-insensitively.
 */
struct RunConfig {
    Robot robot = Robot::Pendubot;
    ModelParamsd model{};
    MppiControllerOptions controller{};
    GoalSpec goal{};
    EpisodeConfig episode{};
    std::uint64_t seed = 0;
    int n_seeds = 20;
    /// Episodes run concurrently by campaign and ablation modes.
    int campaign_workers = 1;

    /// Model parameters with the robot's actuation mask applied.
    ModelParamsd plant() const;
    /// Controller options with the harness control period copied in.
    MppiControllerOptions controller_options() const;
    /// Throws ConfigError if any section is unusable.
    void validate() const;
};

/// Every recognized key, in snapshot order.
const std::vector<std::string>& config_keys();

/// Sets one key. Throws ConfigError naming the key on an unknown key or bad value.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies "key=value" text; throws ConfigError when there is no '='.
void apply_assignment(RunConfig& cfg, std::string_view assignment);

/**
 * @brief Applies a config file: one `key = value` per line, '#' starts a
 * comment. Throws ConfigError with the line number on malformed input.
 */
void load_config_text(RunConfig& cfg, std::string_view text, const std::string& origin = "config");
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/**
 * @brief Applies VIMPPI_<SECTION>__<KEY>=value entries, e.g.
 * VIMPPI_MPPI__LAMBDA=20 sets mppi.lambda. Other entries are ignored.
 */
void apply_env_overrides(RunConfig& cfg, const std::vector<std::string>& environment);
/// The process environment as NAME=value strings.
std::vector<std::string> process_environment();

/// Value of one key as it would appear in a snapshot.
std::string config_value(const RunConfig& cfg, std::string_view key);

/// Loadable text listing every key; numbers are written to round-trip exactly.
std::string format_config(const RunConfig& cfg);

}  // namespace vimppi

#endif  // VIMPPI_CONFIG_HPP
