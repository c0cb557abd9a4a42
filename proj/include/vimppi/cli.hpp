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

#ifndef VIMPPI_CLI_HPP
#define VIMPPI_CLI_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vimppi/config.hpp"
#include "vimppi/integrators.hpp"
#include "vimppi/supervisor.hpp"

namespace vimppi {

enum class RunMode { Episode, Campaign, Ablation };

std::string run_mode_name(RunMode mode);

/// A parsed `run` invocation. Unset optionals leave the config value alone.
struct RunSpec {
    RunMode mode = RunMode::Episode;
    std::optional<Robot> robot;
    std::optional<std::filesystem::path> config_path;
    std::filesystem::path output_dir = "vimppi_out";
    std::optional<std::uint64_t> seed;
    std::optional<int> n_seeds;
    /// key=value assignments in command-line order.
    std::vector<std::string> overrides;
    std::optional<StepperKind> stepper;
    std::optional<WarmStartPolicy::Kind> warm_start;
    /// Set when --help was requested; holds the help text.
    std::optional<std::string> help;
};

/**
 * @brief Parses `vimppi run [flags]`.
 *
 * Throws UsageError whose message names the offending flag. Override keys
 * are checked against the config schema here.
 */
RunSpec parse_args(int argc, const char* const* argv);

/**
 * @brief Resolves the run configuration.
 *
 * Layers, later wins: built-in defaults, --config file, VIMPPI_* environment
 * entries, --set overrides, then the dedicated flags.
 */
RunConfig resolve_config(const RunSpec& spec, const std::vector<std::string>& environment);

/**
 * @brief Runs the spec and writes its artifacts to spec.output_dir.
 *
 * Episode mode writes episode.csv; campaign mode writes episode_NNN.csv per
 * seed and campaign_summary.csv; ablation mode writes ablation_summary.csv.
 * Every mode writes resolved_config.cfg. Returns 0 on success, 1 on a runtime
 * failure and 2 on a configuration error, with a diagnostic on `err`.
 */
int execute(const RunSpec& spec, std::ostream& out, std::ostream& err,
            const std::vector<std::string>& environment = {});

}  // namespace vimppi

#endif  // VIMPPI_CLI_HPP
