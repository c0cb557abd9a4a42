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


#include "vimppi/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>

#include "vimppi/errors.hpp"
#include "vimppi/integrators.hpp"

namespace vimppi {

namespace {

constexpr std::uint64_t kInitialStateStream = 0x1717;
constexpr std::uint64_t kScheduleStream = 0xD157;
constexpr std::uint64_t kRandomEventStream = 1000;
constexpr std::uint64_t kScheduledEventStream = 500000;

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    if (xs.empty()) return m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return m;
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return m;
}

}  // namespace

std::string disturbance_kind_name(DisturbanceKind kind) {
    return kind == DisturbanceKind::StateJump ? "state_jump" : "torque_impulse";
}

DisturbanceKind parse_disturbance_kind(std::string_view name) {
    if (name == "torque_impulse") return DisturbanceKind::TorqueImpulse;
    if (name == "state_jump") return DisturbanceKind::StateJump;
    throw std::invalid_argument("unknown disturbance kind '" + std::string(name) + "'");
}

void EpisodeConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("harness: ") + what);
    };
    require(duration > 0, "duration must be positive");
    require(control_period > 0 && plant_dt > 0, "timesteps must be positive");
    const double ratio = control_period / plant_dt;
    require(ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) < 1e-6,
            "control_period must be an integer multiple of plant_dt");
    require(disturbances.impulse_min <= disturbances.impulse_max, "impulse range is inverted");
    require((disturbances.jump_weights.array() > 0).all(), "jump weights must be positive");
    require(swingup_debounce >= 0 && stop_after_hold >= 0 && wall_clock_budget >= 0,
            "debounce, hold and budget must be nonnegative");
}

int EpisodeConfig::control_steps() const {
    return static_cast<int>(std::llround(std::ceil(duration / control_period - 1e-9)));
}

int EpisodeConfig::plant_substeps() const {
    return static_cast<int>(std::llround(control_period / plant_dt));
}

Stated inject_disturbance(const Stated& s, const Disturbance& d, std::mt19937_64& rng,
                          const ModelParamsd& p, const Eigen::Vector4d& jump_weights) {
    if (d.magnitude == 0.0) return s;
    Stated out = s;
    switch (d.kind) {
        case DisturbanceKind::TorqueImpulse: {
            double impulse = d.magnitude;
            int joint = d.joint;
            if (joint < 0) {
                joint = boost::random::uniform_int_distribution<int>(0, 1)(rng);
                if (boost::random::bernoulli_distribution<>(0.5)(rng)) impulse = -impulse;
            }
            Eigen::Vector2d j = Eigen::Vector2d::Zero();
            j(joint) = impulse;
            out.v += mass_matrix(s.q, p).inverse() * j;
            break;
        }
        case DisturbanceKind::StateJump: {
            boost::random::normal_distribution<double> normal;
            Eigen::Vector4d dir;
            do {
                for (int i = 0; i < 4; ++i) dir(i) = normal(rng);
            } while (dir.norm() == 0.0);
            dir.normalize();
            const Eigen::Vector4d dx = d.magnitude * dir.cwiseQuotient(jump_weights);
            out.q += dx.head<2>();
            out.v += dx.tail<2>();
            break;
        }
    }
    return out;
}

std::vector<DisturbanceEvent> realize_disturbances(const EpisodeConfig& ep) {
    std::vector<DisturbanceEvent> events;
    const DisturbanceGenerator& gen = ep.disturbances;
    if (gen.mean_interarrival > 0) {
        std::mt19937_64 rng(mix_seed(ep.seed, kScheduleStream));
        boost::random::exponential_distribution<double> gap(1.0 / gen.mean_interarrival);
        boost::random::uniform_real_distribution<double> magnitude(gen.impulse_min, gen.impulse_max);
        double t = 0.0;
        for (std::uint64_t i = 0;; ++i) {
            t += gap(rng);
            if (t >= ep.duration) break;
            DisturbanceEvent e;
            e.time = t;
            e.disturbance = {DisturbanceKind::TorqueImpulse, magnitude(rng), -1};
            e.seed = mix_seed(ep.seed, kRandomEventStream + i);
            events.push_back(e);
        }
    }
    for (std::size_t j = 0; j < gen.scheduled.size(); ++j) {
        events.push_back({gen.scheduled[j].time, gen.scheduled[j].disturbance,
                          mix_seed(ep.seed, kScheduledEventStream + j)});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    return events;
}

Stated initial_state(const EpisodeConfig& ep) {
    std::mt19937_64 rng(mix_seed(ep.seed, kInitialStateStream));
    Stated s;
    if (ep.initial_noise > 0) {
        boost::random::uniform_real_distribution<double> u(-ep.initial_noise, ep.initial_noise);
        s.q(0) = u(rng);
        s.q(1) = u(rng);
    }
    return s;
}

PlantStep rk4_plant(const ModelParamsd& p) {
    return [p](const Stated& s, const Eigen::Vector2d& tau, double dt) {
        return rk4_step(s, tau, dt, p);
    };
}

EpisodeMetrics run_episode(Controller& ctrl, const EpisodeConfig& ep, const ModelParamsd& p,
                           const GoalSpec& goal, const PlantStep& plant) {
    ep.validate();
    const PlantStep advance = plant ? plant : rk4_plant(p);
    const int steps = ep.control_steps();
    const int substeps = ep.plant_substeps();
    const double period = ep.control_period;
    const int debounce_steps =
        std::max(1, static_cast<int>(std::ceil(ep.swingup_debounce / period - 1e-9)));
    const auto started = std::chrono::steady_clock::now();

    EpisodeMetrics m;
    m.disturbances = realize_disturbances(ep);
    m.timeseries.reserve(static_cast<std::size_t>(steps));

    Stated s = initial_state(ep);
    ctrl.reset(s, ep.seed);

    std::size_t next_event = 0;
    int upright_steps = 0;
    int streak = 0;
    int longest = 0;
    bool counted = false;
    int k = 0;
    for (; k < steps; ++k) {
        const double t = k * period;
        bool disturbed = false;
        while (next_event < m.disturbances.size() &&
               m.disturbances[next_event].time < t + period - 1e-12) {
            const DisturbanceEvent& e = m.disturbances[next_event++];
            std::mt19937_64 rng(e.seed);
            s = inject_disturbance(s, e.disturbance, rng, p, ep.disturbances.jump_weights);
            disturbed = true;
        }

        const bool upright = is_upright(s, goal, p);
        Eigen::Vector2d torque;
        try {
            torque = apply_actuation<double>(ctrl.control(t, s), p);
        } catch (const std::exception& err) {
            m.failed = true;
            m.error = err.what();
            break;
        }
        if (ctrl.disturbance_detected()) ++m.detections;

        if (upright) {
            ++upright_steps;
            ++streak;
            longest = std::max(longest, streak);
            if (streak >= debounce_steps && !counted) {
                ++m.swingups;
                counted = true;
            }
        } else {
            streak = 0;
            counted = false;
        }
        m.timeseries.push_back({t, s, torque, upright, disturbed});

        for (int j = 0; j < substeps; ++j) s = advance(s, torque, ep.plant_dt);
        if (!s.finite()) {
            m.failed = true;
            m.error = "plant state became non-finite";
            ++k;
            break;
        }
        if (ep.wall_clock_budget > 0) {
            const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - started;
            if (spent.count() > ep.wall_clock_budget) {
                m.failed = true;
                m.error = ControllerTimeout("episode exceeded its wall-clock budget").what();
                ++k;
                break;
            }
        }
        if (ep.stop_after_hold > 0 && longest * period >= ep.stop_after_hold - 1e-9) {
            ++k;
            break;
        }
    }
    m.simulated = k * period;
    m.uptime = upright_steps * period;
    m.longest_hold = longest * period;
    return m;
}

std::uint64_t episode_seed(std::uint64_t master, int k) {
    return mix_seed(master, static_cast<std::uint64_t>(k));
}

CampaignSummary run_campaign(const std::vector<NamedController>& controllers,
                             const EpisodeConfig& ep, const ModelParamsd& p, const GoalSpec& goal,
                             int n_seeds, const WorkerPool& pool, const EpisodeSink& sink) {
    if (n_seeds < 2) throw std::invalid_argument("run_campaign: n_seeds must be >= 2");
    const std::size_t n = static_cast<std::size_t>(n_seeds);
    std::vector<EpisodeMetrics> results(controllers.size() * n);
    std::mutex sink_mutex;

    pool.parallel_for(results.size(), [&](std::size_t idx) {
        const std::size_t c = idx / n;
        const int k = static_cast<int>(idx % n);
        EpisodeConfig episode = ep;
        episode.seed = episode_seed(ep.seed, k);
        EpisodeMetrics m;
        try {
            auto ctrl = controllers[c].make();
            m = run_episode(*ctrl, episode, p, goal);
        } catch (const std::exception& err) {
            m.failed = true;
            m.error = err.what();
        }
        if (sink) {
            std::lock_guard<std::mutex> lock(sink_mutex);
            sink(controllers[c].name, k, m);
        }
        m.timeseries.clear();
        m.timeseries.shrink_to_fit();
        results[idx] = std::move(m);
    });

    CampaignSummary summary;
    for (std::size_t c = 0; c < controllers.size(); ++c) {
        CampaignRow row;
        row.controller = controllers[c].name;
        row.episodes = n_seeds;
        std::vector<double> swingups;
        std::vector<double> uptimes;
        for (std::size_t k = 0; k < n; ++k) {
            EpisodeMetrics& m = results[c * n + k];
            if (m.failed) {
                ++row.failures;
                m.uptime = 0.0;
            }
            swingups.push_back(m.swingups);
            uptimes.push_back(m.uptime);
            row.runs.push_back(std::move(m));
        }
        const Moments sw = moments(swingups);
        const Moments up = moments(uptimes);
        row.swingups_mean = sw.mean;
        row.swingups_std = sw.stddev;
        row.uptime_mean = up.mean;
        row.uptime_std = up.stddev;
        summary.rows.push_back(std::move(row));
    }
    std::stable_sort(summary.rows.begin(), summary.rows.end(),
                     [](const auto& a, const auto& b) { return a.uptime_mean > b.uptime_mean; });
    return summary;
}

NamedController mppi_variant(StepperKind kind, const MppiControllerOptions& base,
                             const ModelParamsd& p, const GoalSpec& goal) {
    MppiControllerOptions options = base;
    options.mppi.stepper = kind;
    options.label.clear();
    const std::string name = MppiController(options, p, goal).name();
    return {name, [options, p, goal] { return std::make_unique<MppiController>(options, p, goal); }};
}

CampaignSummary ablation_suite(const EpisodeConfig& ep, const ModelParamsd& p,
                               const GoalSpec& goal, const MppiControllerOptions& base,
                               int n_seeds, const WorkerPool& pool, const EpisodeSink& sink) {
    std::vector<NamedController> variants;
    for (StepperKind kind : {StepperKind::Variational, StepperKind::ExplicitEuler,
                             StepperKind::ImplicitMidpoint, StepperKind::SemiImplicit}) {
        variants.push_back(mppi_variant(kind, base, p, goal));
    }
    return run_campaign(variants, ep, p, goal, n_seeds, pool, sink);
}

void write_timeseries_csv(std::ostream& os, const EpisodeMetrics& m) {
    os << "t,q1,q2,v1,v2,u1,u2,upright,disturbed\n";
    for (const StepRecord& r : m.timeseries) {
        os << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.t, r.state.q(0), r.state.q(1),
                          r.state.v(0), r.state.v(1), r.torque(0), r.torque(1),
                          r.upright ? 1 : 0, r.disturbed ? 1 : 0);
    }
}

void write_summary_csv(std::ostream& os, const CampaignSummary& summary) {
    os << "controller,episodes,swingups_mean,swingups_std,uptime_mean,uptime_std,failures\n";
    for (const CampaignRow& r : summary.rows) {
        os << fmt::format("{},{},{},{},{},{},{}\n", r.controller, r.episodes, r.swingups_mean,
                          r.swingups_std, r.uptime_mean, r.uptime_std, r.failures);
    }
}

std::string format_summary_table(const CampaignSummary& summary) {
    std::size_t width = 10;
    for (const CampaignRow& r : summary.rows) width = std::max(width, r.controller.size());
    std::string out = fmt::format("{:<{}}  {:>18}  {:>18}  {:>8}\n", "Controller", width,
                                  "Swingups", "Uptime [s]", "Failures");
    for (const CampaignRow& r : summary.rows) {
        out += fmt::format("{:<{}}  {:>18}  {:>18}  {:>8}\n", r.controller, width,
                           fmt::format("{:.2f} ± {:.2f}", r.swingups_mean, r.swingups_std),
                           fmt::format("{:.2f} ± {:.2f}", r.uptime_mean, r.uptime_std),
                           r.failures);
    }
    return out;
}

}  // namespace vimppi
