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

#include "vimppi/cli.hpp"

#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "vimppi/controllers.hpp"
#include "vimppi/errors.hpp"
#include "vimppi/harness.hpp"

namespace vimppi {

std::string run_mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::Episode: return "episode";
        case RunMode::Campaign: return "campaign";
        case RunMode::Ablation: return "ablation";
    }
    return "episode";
}

namespace {

RunMode parse_mode(const std::string& name) {
    if (name == "episode") return RunMode::Episode;
    if (name == "campaign") return RunMode::Campaign;
    if (name == "ablation") return RunMode::Ablation;
    throw std::invalid_argument("unknown mode '" + name + "' (expected episode, campaign or ablation)");
}

/// Converts a flag value, reporting failures against the flag.
template <typename Fn>
auto flag_value(const char* flag, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw UsageError(fmt::format("{}: {}", flag, e.what()));
    }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

template <typename Writer>
void write_with(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream os(path, std::ios::binary);
    writer(os);
    if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

RunSpec parse_args(int argc, const char* const* argv) {
    CLI::App app{"Variational-integrator MPPI benchmark for two-link pendulums", "vimppi"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "Run an episode, a seed campaign or the integrator ablation");

    std::string mode = "episode";
    std::string robot;
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    int n_seeds = 0;
    std::vector<std::string> sets;
    std::string stepper;
    std::string warm_start;

    run->add_option("--mode", mode, "episode, campaign or ablation");
    run->add_option("--robot", robot, "pendubot or acrobot");
    run->add_option("--config", config, "Config file of key = value lines");
    run->add_option("--out", out, "Output directory");
    auto* seed_opt = run->add_option("--seed", seed, "Master seed");
    auto* n_opt = run->add_option("--n-seeds", n_seeds, "Episodes per controller");
    run->add_option("--set", sets, "Config override key=value (repeatable)")->allow_extra_args(false);
    run->add_option("--stepper", stepper, "Rollout stepper: e, i, if or vi (rk4 also accepted)");
    run->add_option("--warm-start", warm_start, "Warm start after a detected disturbance: none or energy");

    RunSpec spec;
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        spec.help = app.help("", CLI::AppFormatMode::All);
        return spec;
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    spec.mode = flag_value("--mode", [&] { return parse_mode(mode); });
    if (!robot.empty()) spec.robot = flag_value("--robot", [&] { return parse_robot(robot); });
    if (!config.empty()) spec.config_path = config;
    if (!out.empty()) spec.output_dir = out;
    if (*seed_opt) spec.seed = seed;
    if (*n_opt) {
        if (n_seeds < 1) throw UsageError("--n-seeds: must be at least 1");
        spec.n_seeds = n_seeds;
    }
    if (!stepper.empty()) spec.stepper = flag_value("--stepper", [&] { return parse_stepper(stepper); });
    if (!warm_start.empty()) {
        spec.warm_start = flag_value("--warm-start", [&] { return parse_warm_start(warm_start); });
    }
    RunConfig probe;
    for (const auto& s : sets) {
        flag_value("--set", [&] {
            apply_assignment(probe, s);
            return 0;
        });
        spec.overrides.push_back(s);
    }
    return spec;
}

RunConfig resolve_config(const RunSpec& spec, const std::vector<std::string>& environment) {
    RunConfig cfg;
    if (spec.config_path) load_config_file(cfg, *spec.config_path);
    apply_env_overrides(cfg, environment);
    for (const auto& s : spec.overrides) apply_assignment(cfg, s);
    if (spec.robot) cfg.robot = *spec.robot;
    if (spec.stepper) cfg.controller.mppi.stepper = *spec.stepper;
    if (spec.warm_start) cfg.controller.supervisor.warm_start.kind = *spec.warm_start;
    if (spec.seed) cfg.seed = *spec.seed;
    if (spec.n_seeds) cfg.n_seeds = *spec.n_seeds;
    cfg.validate();
    return cfg;
}

int execute(const RunSpec& spec, std::ostream& out, std::ostream& err,
            const std::vector<std::string>& environment) {
    if (spec.help) {
        out << *spec.help;
        return 0;
    }
    RunConfig cfg;
    try {
        cfg = resolve_config(spec, environment);
        if (spec.mode != RunMode::Episode && cfg.n_seeds < 2) {
            throw ConfigError("campaign.n_seeds must be at least 2 for campaign and ablation runs");
        }
    } catch (const ConfigError& e) {
        err << "vimppi: configuration error: " << e.what() << "\n";
        return 2;
    }

    try {
        std::filesystem::create_directories(spec.output_dir);
        const std::filesystem::path dir = spec.output_dir;
        write_file(dir / "resolved_config.cfg",
                   fmt::format("# vimppi resolved configuration (mode {})\n{}", run_mode_name(spec.mode),
                               format_config(cfg)));

        const ModelParamsd plant = cfg.plant();
        const MppiControllerOptions options = cfg.controller_options();
        EpisodeConfig ep = cfg.episode;

        if (spec.mode == RunMode::Episode) {
            MppiController controller(options, plant, cfg.goal);
            ep.seed = episode_seed(cfg.seed, 0);
            const EpisodeMetrics m = run_episode(controller, ep, plant, cfg.goal);
            write_with(dir / "episode.csv", [&](std::ostream& os) { write_timeseries_csv(os, m); });
            out << fmt::format("{} {}: uptime {:.3f} s, swingups {}, longest hold {:.3f} s, detections {}\n",
                               controller.name(), robot_name(cfg.robot), m.uptime, m.swingups,
                               m.longest_hold, m.detections);
            if (m.failed) {
                err << "vimppi: episode failed: " << m.error << "\n";
                return 1;
            }
            return 0;
        }

        const WorkerPool pool(cfg.campaign_workers);
        CampaignSummary summary;
        std::string summary_name;
        if (spec.mode == RunMode::Campaign) {
            const MppiController probe(options, plant, cfg.goal);
            std::vector<NamedController> controllers{
                {probe.name(), [options, plant, goal = cfg.goal] {
                     return std::make_unique<MppiController>(options, plant, goal);
                 }}};
            const auto sink = [&](const std::string&, int k, const EpisodeMetrics& m) {
                write_with(dir / fmt::format("episode_{:03d}.csv", k),
                           [&](std::ostream& os) { write_timeseries_csv(os, m); });
            };
            summary = run_campaign(controllers, ep, plant, cfg.goal, cfg.n_seeds, pool, sink);
            summary_name = "campaign_summary.csv";
        } else {
            summary = ablation_suite(ep, plant, cfg.goal, options, cfg.n_seeds, pool);
            summary_name = "ablation_summary.csv";
        }
        write_with(dir / summary_name, [&](std::ostream& os) { write_summary_csv(os, summary); });
        out << format_summary_table(summary);
        return 0;
    } catch (const std::exception& e) {
        err << "vimppi: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace vimppi
