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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "vimppi/cli.hpp"
#include "vimppi/config.hpp"
#include "vimppi/errors.hpp"

namespace vimppi {
namespace {

namespace fs = std::filesystem;

RunSpec parse(std::vector<std::string> args) {
    args.insert(args.begin(), "vimppi");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_args(static_cast<int>(argv.size()), argv.data());
}

std::string usage_error(std::vector<std::string> args) {
    try {
        parse(std::move(args));
    } catch (const UsageError& e) {
        return e.what();
    }
    return "<no error>";
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
    return names;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path(testing::TempDir()) / ("vimppi_" + name);
    fs::remove_all(dir);
    return dir;
}

// Small enough to run in milliseconds.
std::vector<std::string> quick_run(const fs::path& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"run",   "--out", out.string(), "--set", "mppi.samples=16",
                                  "--set", "harness.duration=0.06", "--set", "harness.control_period=0.01",
                                  "--set", "harness.plant_dt=0.001", "--set", "harness.mean_interarrival=0.02"};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr,
        const std::vector<std::string>& env = {}) {
    std::ostringstream out, err;
    const int code = execute(parse(args), out, err, env);
    if (err_text) *err_text = err.str();
    return code;
}

TEST(Config, KeysAreUniqueAndCoverEverySection) {
    std::set<std::string> keys(config_keys().begin(), config_keys().end());
    EXPECT_EQ(keys.size(), config_keys().size());
    for (const char* k : {"model.m1", "mppi.lambda", "vi.newton_iters", "supervisor.threshold", "goal.state",
                          "harness.duration", "campaign.seed"}) {
        EXPECT_TRUE(keys.count(k)) << k;
    }
}

TEST(Config, DefaultsMatchTheBenchmarkSettings) {
    const RunConfig cfg;
    EXPECT_EQ(config_value(cfg, "mppi.samples"), "4096");
    EXPECT_EQ(config_value(cfg, "mppi.horizon"), "20");
    EXPECT_EQ(config_value(cfg, "mppi.lambda"), "50");
    EXPECT_EQ(config_value(cfg, "mppi.sigma"), "0.2, 0, 0, 0.2");
    EXPECT_EQ(config_value(cfg, "mppi.Q"), "10, 1, 0.1, 0.1");
    EXPECT_EQ(config_value(cfg, "mppi.R"), "0.1, 0.1");
    EXPECT_EQ(config_value(cfg, "mppi.P"), "5000000, 5000000, 2000000, 2000000");
    EXPECT_EQ(config_value(cfg, "mppi.rollout_dt"), "0.02");
    EXPECT_EQ(config_value(cfg, "campaign.n_seeds"), "20");
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, SnapshotRoundTripsExactly) {
    RunConfig cfg;
    apply_setting(cfg, "mppi.lambda", "0.1");
    apply_setting(cfg, "model.m1", "1.0000000000000002");
    apply_setting(cfg, "mppi.sigma", "0.3, 0.01, 0.01, 0.2");
    apply_setting(cfg, "harness.schedule", "1.5:state_jump:0.2; 3:torque_impulse:0.1:1");
    apply_setting(cfg, "model.robot", "acrobot");
    apply_setting(cfg, "supervisor.enabled", "off");
    apply_setting(cfg, "campaign.seed", "18446744073709551615");
    const std::string text = format_config(cfg);
    RunConfig back;
    load_config_text(back, text);
    EXPECT_EQ(format_config(back), text);
    EXPECT_EQ(back.model.m1, 1.0000000000000002);
    EXPECT_EQ(back.seed, 18446744073709551615ull);
    ASSERT_EQ(back.episode.disturbances.scheduled.size(), 2u);
    EXPECT_EQ(back.episode.disturbances.scheduled[1].disturbance.joint, 1);
    EXPECT_EQ(back.robot, Robot::Acrobot);
    EXPECT_FALSE(back.controller.supervisor.enabled);
}

TEST(Config, KeysAreCaseInsensitive) {
    RunConfig cfg;
    apply_setting(cfg, "MPPI.Lambda", "12");
    apply_setting(cfg, "mppi.q", "1, 2, 3, 4");
    EXPECT_EQ(cfg.controller.mppi.lambda, 12.0);
    EXPECT_EQ(cfg.controller.mppi.Q, Eigen::Vector4d(1, 2, 3, 4));
}

TEST(Config, DiagonalSigmaShorthand) {
    RunConfig cfg;
    apply_setting(cfg, "mppi.sigma", "0.5, 0.25");
    EXPECT_EQ(cfg.controller.mppi.sigma, Eigen::Vector2d(0.5, 0.25).asDiagonal().toDenseMatrix());
}

TEST(Config, ErrorsNameTheKeyAndLine) {
    RunConfig cfg;
    auto message = [&](auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("<no error>");
    };
    EXPECT_NE(message([&] { apply_setting(cfg, "mppi.lamda", "1"); }).find("mppi.lamda"), std::string::npos);
    EXPECT_NE(message([&] { apply_setting(cfg, "mppi.lambda", "fifty"); }).find("mppi.lambda"), std::string::npos);
    EXPECT_NE(message([&] { apply_setting(cfg, "mppi.lambda", "inf"); }).find("mppi.lambda"), std::string::npos);
    EXPECT_NE(message([&] { apply_setting(cfg, "mppi.samples", "2.5"); }).find("mppi.samples"), std::string::npos);
    EXPECT_NE(message([&] { apply_setting(cfg, "mppi.Q", "1, 2"); }).find("mppi.Q"), std::string::npos);
    EXPECT_NE(message([&] { apply_setting(cfg, "model.robot", "tripod"); }).find("model.robot"), std::string::npos);
    EXPECT_NE(message([&] { apply_assignment(cfg, "mppi.lambda"); }).find("key=value"), std::string::npos);
    const std::string file = message([&] { load_config_text(cfg, "# ok\nmppi.lambda = 3\n\nbogus = 1\n", "f.cfg"); });
    EXPECT_NE(file.find("f.cfg:4"), std::string::npos) << file;
    EXPECT_THROW(load_config_file(cfg, "/nonexistent/x.cfg"), ConfigError);
}

TEST(Config, CommentsAndBlankLines) {
    RunConfig cfg;
    load_config_text(cfg, "  mppi.lambda = 7   # trailing\n\n# mppi.lambda = 9\n");
    EXPECT_EQ(cfg.controller.mppi.lambda, 7.0);
}

TEST(Config, ValidateCatchesUnusableValues) {
    RunConfig cfg;
    cfg.model.m1 = -1;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.controller.supervisor.threshold = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.episode.plant_dt = 0.003;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, RobotSelectsActuation) {
    RunConfig cfg;
    EXPECT_EQ(cfg.plant().actuation_mask, pendubot_params<double>().actuation_mask);
    cfg.robot = Robot::Acrobot;
    EXPECT_EQ(cfg.plant().actuation_mask, acrobot_params<double>().actuation_mask);
    cfg.episode.control_period = 0.004;
    EXPECT_EQ(cfg.controller_options().control_period, 0.004);
}

TEST(Env, OverridesUseTheSectionSeparator) {
    RunConfig cfg;
    apply_env_overrides(cfg, {"VIMPPI_MPPI__LAMBDA=20", "VIMPPI_HARNESS__CONTROL_PERIOD=0.004", "PATH=/bin",
                              "VIMPPI_NOSEP=1", "VIMPPI_MODEL__ROBOT"});
    EXPECT_EQ(cfg.controller.mppi.lambda, 20.0);
    EXPECT_EQ(cfg.episode.control_period, 0.004);
}

TEST(Env, BadValueNamesTheVariable) {
    RunConfig cfg;
    try {
        apply_env_overrides(cfg, {"VIMPPI_MPPI__LAMBDA=x"});
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("VIMPPI_MPPI__LAMBDA"), std::string::npos);
    }
    EXPECT_THROW(apply_env_overrides(cfg, {"VIMPPI_MPPI__NOPE=1"}), ConfigError);
}

TEST(ParseArgs, EpisodeWithRobotAndSeed) {
    const RunSpec s = parse({"run", "--mode", "episode", "--robot", "pendubot", "--seed", "7"});
    EXPECT_EQ(s.mode, RunMode::Episode);
    EXPECT_EQ(s.robot, Robot::Pendubot);
    EXPECT_EQ(s.seed, 7u);
    EXPECT_FALSE(s.n_seeds.has_value());
    EXPECT_FALSE(s.help.has_value());
}

TEST(ParseArgs, AblationWithOverride) {
    const RunSpec s = parse({"run", "--mode", "ablation", "--set", "mppi.lambda=50.0", "--set", "mppi.alpha=0.5"});
    EXPECT_EQ(s.mode, RunMode::Ablation);
    EXPECT_EQ(s.overrides, (std::vector<std::string>{"mppi.lambda=50.0", "mppi.alpha=0.5"}));
    EXPECT_EQ(resolve_config(s, {}).controller.mppi.lambda, 50.0);
}

TEST(ParseArgs, AllFlags) {
    const RunSpec s = parse({"run", "--mode", "campaign", "--robot", "acrobot", "--config", "a.cfg", "--out", "o",
                             "--n-seeds", "5", "--stepper", "if", "--warm-start", "energy"});
    EXPECT_EQ(s.mode, RunMode::Campaign);
    EXPECT_EQ(s.robot, Robot::Acrobot);
    EXPECT_EQ(s.config_path, fs::path("a.cfg"));
    EXPECT_EQ(s.output_dir, fs::path("o"));
    EXPECT_EQ(s.n_seeds, 5);
    EXPECT_EQ(s.stepper, StepperKind::SemiImplicit);
    EXPECT_EQ(s.warm_start, WarmStartPolicy::Kind::EnergySwingUp);
}

TEST(ParseArgs, ErrorsNameTheFlag) {
    EXPECT_NE(usage_error({"run", "--robot", "tripod"}).find("--robot"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--mode", "tour"}).find("--mode"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--stepper", "rk2"}).find("--stepper"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--warm-start", "hot"}).find("--warm-start"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--set", "mppi.nope=1"}).find("--set"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--set", "mppi.nope=1"}).find("mppi.nope"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--n-seeds", "0"}).find("--n-seeds"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--seed", "minus"}).find("--seed"), std::string::npos);
    EXPECT_NE(usage_error({"run", "--frobnicate"}).find("--frobnicate"), std::string::npos);
    EXPECT_NE(usage_error({}), "<no error>");
}

TEST(ParseArgs, Help) {
    const RunSpec s = parse({"run", "--help"});
    ASSERT_TRUE(s.help.has_value());
    EXPECT_NE(s.help->find("--warm-start"), std::string::npos);
    std::ostringstream out, err;
    EXPECT_EQ(execute(s, out, err), 0);
    EXPECT_EQ(out.str(), *s.help);
}

TEST(Resolve, LaterLayersWin) {
    const fs::path dir = fresh_dir("layers");
    fs::create_directories(dir);
    const fs::path file = dir / "a.cfg";
    std::ofstream(file) << "mppi.lambda = 1\nmppi.alpha = 0.1\nmppi.samples = 10\nmodel.robot = acrobot\n"
                           "campaign.seed = 3\n";
    const RunSpec s = parse({"run", "--config", file.string(), "--set", "mppi.alpha=0.3", "--robot", "pendubot",
                             "--seed", "9", "--stepper", "e"});
    const RunConfig cfg = resolve_config(s, {"VIMPPI_MPPI__ALPHA=0.2", "VIMPPI_MPPI__SAMPLES=11",
                                             "VIMPPI_MPPI__STEPPER=i"});
    EXPECT_EQ(cfg.controller.mppi.lambda, 1.0);   // file
    EXPECT_EQ(cfg.controller.mppi.samples, 11);   // env over file
    EXPECT_EQ(cfg.controller.mppi.alpha, 0.3);    // --set over env
    EXPECT_EQ(cfg.robot, Robot::Pendubot);        // flag over file
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.controller.mppi.stepper, StepperKind::ExplicitEuler);
}

TEST(Execute, EpisodeWritesOneCsvAndSnapshot) {
    const fs::path dir = fresh_dir("episode");
    EXPECT_EQ(run(quick_run(dir, {"--seed", "7"})), 0);
    EXPECT_EQ(listing(dir), (std::set<std::string>{"episode.csv", "resolved_config.cfg"}));
    const std::string csv = slurp(dir / "episode.csv");
    EXPECT_EQ(csv.rfind("t,q1,q2,v1,v2,u1,u2,upright,disturbed\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
}

TEST(Execute, CampaignWritesOneFilePerSeedAndSummary) {
    const fs::path dir = fresh_dir("campaign");
    EXPECT_EQ(run(quick_run(dir, {"--mode", "campaign", "--n-seeds", "4"})), 0);
    EXPECT_EQ(listing(dir), (std::set<std::string>{"episode_000.csv", "episode_001.csv", "episode_002.csv",
                                                   "episode_003.csv", "campaign_summary.csv",
                                                   "resolved_config.cfg"}));
    const std::string summary = slurp(dir / "campaign_summary.csv");
    EXPECT_NE(summary.find("\nVIMPPI,4,"), std::string::npos) << summary;
}

TEST(Execute, AblationSummarizesFourVariants) {
    const fs::path dir = fresh_dir("ablation");
    EXPECT_EQ(run(quick_run(dir, {"--mode", "ablation", "--n-seeds", "2"})), 0);
    EXPECT_EQ(listing(dir), (std::set<std::string>{"ablation_summary.csv", "resolved_config.cfg"}));
    const std::string summary = slurp(dir / "ablation_summary.csv");
    for (const char* name : {"VIMPPI,", "EMPPI,", "IMPPI,", "IFMPPI,"}) {
        EXPECT_NE(summary.find(name), std::string::npos) << name;
    }
}

TEST(Execute, RepeatedRunsAreByteIdentical) {
    const fs::path a = fresh_dir("repeat_a"), b = fresh_dir("repeat_b");
    EXPECT_EQ(run(quick_run(a, {"--mode", "campaign", "--n-seeds", "2", "--seed", "5"})), 0);
    EXPECT_EQ(run(quick_run(b, {"--mode", "campaign", "--n-seeds", "2", "--seed", "5"})), 0);
    for (const char* f : {"episode_000.csv", "episode_001.csv", "campaign_summary.csv", "resolved_config.cfg"}) {
        EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
    }
}

TEST(Execute, SnapshotReproducesTheRun) {
    const fs::path a = fresh_dir("snap_a"), b = fresh_dir("snap_b");
    std::string err;
    ASSERT_EQ(run(quick_run(a, {"--seed", "11", "--stepper", "if", "--warm-start", "energy"}), &err,
                  {"VIMPPI_MPPI__LAMBDA=25"}),
              0)
        << err;
    const std::string snapshot = slurp(a / "resolved_config.cfg");
    EXPECT_NE(snapshot.find("mppi.lambda = 25\n"), std::string::npos);
    EXPECT_NE(snapshot.find("mppi.samples = 16\n"), std::string::npos);
    EXPECT_NE(snapshot.find("campaign.seed = 11\n"), std::string::npos);
    EXPECT_NE(snapshot.find("mppi.stepper = if\n"), std::string::npos);
    ASSERT_EQ(run({"run", "--config", (a / "resolved_config.cfg").string(), "--out", b.string()}), 0);
    EXPECT_EQ(slurp(a / "episode.csv"), slurp(b / "episode.csv"));
    EXPECT_EQ(slurp(b / "resolved_config.cfg"), snapshot);
}

TEST(Execute, ConfigErrorsExitWithTwo) {
    std::string err;
    EXPECT_EQ(run(quick_run(fresh_dir("cfgerr"), {"--set", "mppi.lambda=-1"}), &err), 2);
    EXPECT_NE(err.find("configuration error"), std::string::npos);
    EXPECT_EQ(run(quick_run(fresh_dir("cfgerr"), {"--mode", "campaign", "--n-seeds", "1"}), &err), 2);
    EXPECT_EQ(run(quick_run(fresh_dir("cfgerr"), {"--config", "/nonexistent.cfg"}), &err), 2);
    EXPECT_EQ(run(quick_run(fresh_dir("cfgerr")), &err, {"VIMPPI_MPPI__SAMPLES=many"}), 2);
    EXPECT_NE(err.find("VIMPPI_MPPI__SAMPLES"), std::string::npos);
}

TEST(Execute, RuntimeFailureExitsWithOne) {
    std::string err;
    EXPECT_EQ(run(quick_run(fresh_dir("timeout"), {"--set", "harness.wall_clock_budget=1e-9"}), &err), 1);
    EXPECT_NE(err.find("wall-clock"), std::string::npos) << err;
}

}  // namespace
}  // namespace vimppi
