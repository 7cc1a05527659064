// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/fleet_sim.hpp"
#include "evsched/rl/critic.hpp"
#include "evsched/rl/env.hpp"
#include "evsched/rl/param_store.hpp"
#include "evsched/scenario.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched::rl {

/// beta_t = c / (t0 + t)^power, t counted in global steps from 0.
struct RateSchedule {
    double c = 1.0;
    double t0 = 1.0;
    double power = 0.0;

    double at(double t) const;
};

/// True when sum beta_t diverges and sum beta_t^2 converges, i.e. c > 0
/// and 0.5 < power <= 1.
bool robbins_monro(const RateSchedule& schedule);

enum class Ordering {
    RoundRobin, // workers take turns; the run is a deterministic function of the seed
    Free,       // workers run concurrently; the push log records the interleaving
};

struct TrainConfig {
    double beta_a = 1e-4;
    double beta_c = 1e-3;
    double discount = 0.01;
    std::uint64_t k_max = 200000;
    int n_workers = 4;
    int update_period = 20;
    std::uint64_t seed = 1;

    RewardMode reward = RewardMode::ExactCost;
    CriticKind critic = CriticKind::Mlp;
    Ordering ordering = Ordering::RoundRobin;
    int actor_hidden = 200;
    int critic_hidden = 100;
    double log_sigma_init = 0.0;
    /// Per-step TD updates on the worker's local copy between pushes.
    bool local_updates = true;
    /// Rewards are multiplied by this before learning.
    double reward_scale = 1.0;
    /// Euclidean norm limit on each pushed increment; 0 disables.
    double grad_clip = 0.0;

    /// Learning rates decay as beta * (t0 / (t0 + k))^power; power 0 keeps
    /// them constant.
    double lr_decay_power = 0.0;
    double lr_decay_t0 = 1e4;
    /// Reject schedules that fail the Robbins-Monro conditions.
    bool require_robbins_monro = false;

    int moving_window = 20; // episodes per moving-average window
    double divergence_factor = 10.0;
    int divergence_windows = 3;

    void validate() const;
    RateSchedule actor_schedule() const;
    RateSchedule critic_schedule() const;
    /// Stable text form, used for the config hash in serialized parameters.
    std::string canonical() const;
};

struct EpisodeLog {
    std::uint64_t episode = 0;
    std::uint64_t steps = 0; // decisions in this episode
    double reward = 0.0;
    double moving_reward = 0.0;
    double wall_ms = 0.0;
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::vector<EpisodeLog> log)
        : std::runtime_error(what), log_(std::move(log)) {}
    const std::vector<EpisodeLog>& log() const { return log_; }

private:
    std::vector<EpisodeLog> log_;
};

struct TrainResult {
    PolicyParams policy;
    Critic critic;
    std::vector<EpisodeLog> log;
    std::vector<PushRecord> pushes;
    std::uint64_t steps = 0;
    std::uint64_t skipped_updates = 0;
    double wall_ms = 0.0;
};

/// Asynchronous actor-critic over `prototype` (cloned once per worker).
TrainResult train_actor_critic(const ScenarioSampler& sampler, const Task& prototype, const TrainConfig& cfg);

/// Re-executes a recorded run by applying pushes in logged order, each
/// segment computed from the snapshot version it originally read.
TrainResult replay(const ScenarioSampler& sampler, const Task& prototype, const TrainConfig& cfg,
                   const std::vector<PushRecord>& pushes);

/// Per-EV policy over the full SOC + price state.
TrainResult train_sca(const ScenarioSampler& sampler, const TrainConfig& cfg);
/// Aggregate policy over the reduced state.
TrainResult train_calc_stage1(const ScenarioSampler& sampler, const TrainConfig& cfg);

/// Task used by train_sca for the fleet size of `sampler(0)`.
ScaTask sca_task_for(const ScenarioSampler& sampler, RewardMode mode);

} // namespace evsched::rl
