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

#include "vimppi/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "vimppi/errors.hpp"

extern char** environ;

namespace vimppi {

Robot parse_robot(std::string_view name) {
    if (name == "pendubot") return Robot::Pendubot;
    if (name == "acrobot") return Robot::Acrobot;
    throw std::invalid_argument("unknown robot '" + std::string(name) +
                                "' (expected pendubot or acrobot)");
}

std::string robot_name(Robot robot) { return robot == Robot::Acrobot ? "acrobot" : "pendubot"; }

ModelParamsd RunConfig::plant() const {
    return robot == Robot::Acrobot ? acrobot_params(model) : pendubot_params(model);
}

MppiControllerOptions RunConfig::controller_options() const {
    MppiControllerOptions out = controller;
    out.control_period = episode.control_period;
    return out;
}

void RunConfig::validate() const {
    try {
        vimppi::validate(model);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    controller.mppi.validate();
    episode.validate();
    if (!(controller.supervisor.threshold > 0)) {
        throw ConfigError("supervisor: threshold must be positive");
    }
    if ((controller.supervisor.weights.array() < 0).any()) {
        throw ConfigError("supervisor: weights must be nonnegative");
    }
    if (controller.workers < 0 || campaign_workers < 0) {
        throw ConfigError("workers must be >= 0 (0 uses every core)");
    }
    if (n_seeds < 1) throw ConfigError("campaign: n_seeds must be >= 1");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw ConfigError(fmt::format("{}: cannot use '{}' (expected {})", key, value, want));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text, std::string_view want) {
    const std::string_view s = trim(text);
    T out{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) bad_value(key, text, want);
    return out;
}

double parse_real(std::string_view key, std::string_view text) {
    const double x = parse_number<double>(key, text, "a finite number");
    if (!std::isfinite(x)) bad_value(key, text, "a finite number");
    return x;
}

bool parse_bool(std::string_view key, std::string_view text) {
    const std::string s = lower(trim(text));
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    bad_value(key, text, "true or false");
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

Eigen::VectorXd parse_list(std::string_view key, std::string_view text, int n) {
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != n) bad_value(key, text, fmt::format("{} comma-separated numbers", n));
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) out(i) = parse_real(key, parts[static_cast<std::size_t>(i)]);
    return out;
}

template <typename Derived>
std::string format_list(const Eigen::DenseBase<Derived>& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += fmt::format("{}", v(i));
    }
    return out;
}

template <typename Fn>
auto rethrow_as_config(std::string_view key, Fn&& fn) {
    try {
        return fn();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(fmt::format("{}: {}", key, e.what()));
    }
}

std::vector<ScheduledDisturbance> parse_schedule(std::string_view key, std::string_view text) {
    std::vector<ScheduledDisturbance> out;
    if (trim(text).empty()) return out;
    for (std::string_view item : split(text, ';')) {
        if (item.empty()) continue;
        const auto fields = split(item, ':');
        if (fields.size() != 3 && fields.size() != 4) {
            bad_value(key, item, "time:kind:magnitude[:joint]");
        }
        ScheduledDisturbance d;
        d.time = parse_real(key, fields[0]);
        d.disturbance.kind = rethrow_as_config(key, [&] { return parse_disturbance_kind(fields[1]); });
        d.disturbance.magnitude = parse_real(key, fields[2]);
        if (fields.size() == 4) d.disturbance.joint = parse_number<int>(key, fields[3], "a joint index");
        out.push_back(d);
    }
    return out;
}

std::string format_schedule(const std::vector<ScheduledDisturbance>& schedule) {
    std::string out;
    for (const auto& d : schedule) {
        if (!out.empty()) out += "; ";
        out += fmt::format("{}:{}:{}", d.time, disturbance_kind_name(d.disturbance.kind),
                           d.disturbance.magnitude);
        if (d.disturbance.joint >= 0) out += fmt::format(":{}", d.disturbance.joint);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename Access>
Field real(std::string key, Access access) {
    return {key, [key, access](RunConfig& c, std::string_view v) { access(c) = parse_real(key, v); },
            [access](const RunConfig& c) { return fmt::format("{}", access(c)); }};
}

template <typename Access>
Field integer(std::string key, Access access) {
    return {key,
            [key, access](RunConfig& c, std::string_view v) {
                using T = std::remove_reference_t<decltype(access(c))>;
                access(c) = parse_number<T>(key, v, "an integer");
            },
            [access](const RunConfig& c) { return fmt::format("{}", access(c)); }};
}

template <typename Access>
Field boolean(std::string key, Access access) {
    return {key, [key, access](RunConfig& c, std::string_view v) { access(c) = parse_bool(key, v); },
            [access](const RunConfig& c) { return std::string(access(c) ? "true" : "false"); }};
}

template <int N, typename Access>
Field list(std::string key, Access access) {
    return {key,
            [key, access](RunConfig& c, std::string_view v) { access(c) = parse_list(key, v, N); },
            [access](const RunConfig& c) { return format_list(access(c)); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"model.robot",
                     [](RunConfig& c, std::string_view v) {
                         c.robot = rethrow_as_config("model.robot", [&] { return parse_robot(trim(v)); });
                     },
                     [](const RunConfig& c) { return robot_name(c.robot); }});
        f.push_back(real("model.m1", [](auto& c) -> auto& { return c.model.m1; }));
        f.push_back(real("model.m2", [](auto& c) -> auto& { return c.model.m2; }));
        f.push_back(real("model.l1", [](auto& c) -> auto& { return c.model.l1; }));
        f.push_back(real("model.l2", [](auto& c) -> auto& { return c.model.l2; }));
        f.push_back(real("model.r1", [](auto& c) -> auto& { return c.model.r1; }));
        f.push_back(real("model.r2", [](auto& c) -> auto& { return c.model.r2; }));
        f.push_back(real("model.I1", [](auto& c) -> auto& { return c.model.I1; }));
        f.push_back(real("model.I2", [](auto& c) -> auto& { return c.model.I2; }));
        f.push_back(real("model.b1", [](auto& c) -> auto& { return c.model.b1; }));
        f.push_back(real("model.b2", [](auto& c) -> auto& { return c.model.b2; }));
        f.push_back(real("model.g", [](auto& c) -> auto& { return c.model.g; }));
        f.push_back(real("model.tau_max", [](auto& c) -> auto& { return c.model.tau_max; }));

        f.push_back(integer("mppi.horizon", [](auto& c) -> auto& { return c.controller.mppi.horizon; }));
        f.push_back(integer("mppi.samples", [](auto& c) -> auto& { return c.controller.mppi.samples; }));
        f.push_back(real("mppi.lambda", [](auto& c) -> auto& { return c.controller.mppi.lambda; }));
        f.push_back(real("mppi.alpha", [](auto& c) -> auto& { return c.controller.mppi.alpha; }));
        f.push_back({"mppi.sigma",
                     [](RunConfig& c, std::string_view v) {
                         const auto n = split(v, ',').size();
                         if (n == 2) {
                             c.controller.mppi.sigma = parse_list("mppi.sigma", v, 2).asDiagonal();
                         } else {
                             const Eigen::VectorXd s = parse_list("mppi.sigma", v, 4);
                             c.controller.mppi.sigma << s(0), s(1), s(2), s(3);
                         }
                     },
                     [](const RunConfig& c) {
                         const auto& s = c.controller.mppi.sigma;
                         return format_list(Eigen::Vector4d(s(0, 0), s(0, 1), s(1, 0), s(1, 1)));
                     }});
        f.push_back(list<4>("mppi.Q", [](auto& c) -> auto& { return c.controller.mppi.Q; }));
        f.push_back(list<2>("mppi.R", [](auto& c) -> auto& { return c.controller.mppi.R; }));
        f.push_back(list<4>("mppi.P", [](auto& c) -> auto& { return c.controller.mppi.P; }));
        f.push_back(real("mppi.rollout_dt", [](auto& c) -> auto& { return c.controller.mppi.rollout_dt; }));
        f.push_back({"mppi.stepper",
                     [](RunConfig& c, std::string_view v) {
                         c.controller.mppi.stepper =
                             rethrow_as_config("mppi.stepper", [&] { return parse_stepper(trim(v)); });
                     },
                     [](const RunConfig& c) { return stepper_name(c.controller.mppi.stepper); }});
        f.push_back(integer("mppi.workers", [](auto& c) -> auto& { return c.controller.workers; }));

        f.push_back(integer("vi.newton_iters", [](auto& c) -> auto& { return c.controller.mppi.newton_iters; }));
        f.push_back(real("vi.newton_tol", [](auto& c) -> auto& { return c.controller.mppi.newton_tol; }));

        f.push_back(boolean("supervisor.enabled", [](auto& c) -> auto& { return c.controller.supervisor.enabled; }));
        f.push_back(real("supervisor.threshold", [](auto& c) -> auto& { return c.controller.supervisor.threshold; }));
        f.push_back(list<4>("supervisor.weights", [](auto& c) -> auto& { return c.controller.supervisor.weights; }));
        f.push_back({"supervisor.warm_start",
                     [](RunConfig& c, std::string_view v) {
                         c.controller.supervisor.warm_start.kind =
                             rethrow_as_config("supervisor.warm_start", [&] { return parse_warm_start(trim(v)); });
                     },
                     [](const RunConfig& c) { return warm_start_name(c.controller.supervisor.warm_start.kind); }});
        f.push_back(real("supervisor.energy_gain",
                         [](auto& c) -> auto& { return c.controller.supervisor.warm_start.energy_gain; }));
        f.push_back(real("supervisor.pump_gain",
                         [](auto& c) -> auto& { return c.controller.supervisor.warm_start.pump_gain; }));

        f.push_back({"goal.state",
                     [](RunConfig& c, std::string_view v) {
                         c.goal.x_goal = Stated::from_vector(parse_list("goal.state", v, 4));
                     },
                     [](const RunConfig& c) { return format_list(c.goal.x_goal.vector()); }});
        f.push_back(real("goal.upright_height", [](auto& c) -> auto& { return c.goal.upright_height_threshold; }));
        f.push_back(real("goal.upright_velocity", [](auto& c) -> auto& { return c.goal.upright_velocity_threshold; }));

        f.push_back(real("harness.duration", [](auto& c) -> auto& { return c.episode.duration; }));
        f.push_back(real("harness.control_period", [](auto& c) -> auto& { return c.episode.control_period; }));
        f.push_back(real("harness.plant_dt", [](auto& c) -> auto& { return c.episode.plant_dt; }));
        f.push_back(real("harness.initial_noise", [](auto& c) -> auto& { return c.episode.initial_noise; }));
        f.push_back(real("harness.swingup_debounce", [](auto& c) -> auto& { return c.episode.swingup_debounce; }));
        f.push_back(real("harness.stop_after_hold", [](auto& c) -> auto& { return c.episode.stop_after_hold; }));
        f.push_back(real("harness.wall_clock_budget", [](auto& c) -> auto& { return c.episode.wall_clock_budget; }));
        f.push_back(real("harness.mean_interarrival",
                         [](auto& c) -> auto& { return c.episode.disturbances.mean_interarrival; }));
        f.push_back(real("harness.impulse_min", [](auto& c) -> auto& { return c.episode.disturbances.impulse_min; }));
        f.push_back(real("harness.impulse_max", [](auto& c) -> auto& { return c.episode.disturbances.impulse_max; }));
        f.push_back(list<4>("harness.jump_weights", [](auto& c) -> auto& { return c.episode.disturbances.jump_weights; }));
        f.push_back({"harness.schedule",
                     [](RunConfig& c, std::string_view v) {
                         c.episode.disturbances.scheduled = parse_schedule("harness.schedule", v);
                     },
                     [](const RunConfig& c) { return format_schedule(c.episode.disturbances.scheduled); }});

        f.push_back(integer("campaign.seed", [](auto& c) -> auto& { return c.seed; }));
        f.push_back(integer("campaign.n_seeds", [](auto& c) -> auto& { return c.n_seeds; }));
        f.push_back(integer("campaign.workers", [](auto& c) -> auto& { return c.campaign_workers; }));
        return f;
    }();
    return table;
}

const Field& find_field(std::string_view key) {
    const std::string wanted = lower(trim(key));
    for (const auto& f : fields()) {
        if (lower(f.key) == wanted) return f;
    }
    throw ConfigError(fmt::format("unknown config key '{}'", trim(key)));
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> out;
        for (const auto& f : fields()) out.push_back(f.key);
        return out;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
    find_field(key).set(cfg, trim(value));
}

void apply_assignment(RunConfig& cfg, std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError(fmt::format("expected key=value, got '{}'", assignment));
    }
    apply_setting(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

void load_config_text(RunConfig& cfg, std::string_view text, const std::string& origin) {
    std::istringstream in{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        try {
            apply_assignment(cfg, body);
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("{}:{}: {}", origin, number, e.what()));
        }
    }
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    std::ostringstream text;
    text << in.rdbuf();
    load_config_text(cfg, text.str(), path.string());
}

void apply_env_overrides(RunConfig& cfg, const std::vector<std::string>& environment) {
    constexpr std::string_view prefix = "VIMPPI_";
    for (const auto& entry : environment) {
        const std::string_view e = entry;
        if (e.substr(0, prefix.size()) != prefix) continue;
        const std::size_t eq = e.find('=');
        if (eq == std::string_view::npos) continue;
        const std::string_view name = e.substr(prefix.size(), eq - prefix.size());
        const std::size_t sep = name.find("__");
        if (sep == std::string_view::npos) continue;
        const std::string key = lower(name.substr(0, sep)) + "." + lower(name.substr(sep + 2));
        try {
            apply_setting(cfg, key, e.substr(eq + 1));
        } catch (const ConfigError& err) {
            throw ConfigError(fmt::format("environment {}: {}", e.substr(0, eq), err.what()));
        }
    }
}

std::vector<std::string> process_environment() {
    std::vector<std::string> out;
    for (char** e = environ; e && *e; ++e) out.emplace_back(*e);
    return out;
}

std::string config_value(const RunConfig& cfg, std::string_view key) { return find_field(key).get(cfg); }

std::string format_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        const std::string head = f.key.substr(0, f.key.find('.'));
        if (head != section) {
            if (!section.empty()) out += "\n";
            out += fmt::format("# {}\n", head);
            section = head;
        }
        out += fmt::format("{} = {}\n", f.key, f.get(cfg));
    }
    return out;
}

}  // namespace vimppi
