// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/harness/config.hpp"
#include "evsched/rl/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evsched::harness {

struct RunMetrics {
    std::string algorithm; // "EC", "OA", "AEM-<levels>", "SCA", "CALC"
    std::uint64_t seed = 0;
    double total_cost = 0.0;
    double peak_total_load = 0.0;
    std::vector<double> per_slot_load; // total load per slot, kWh
    double wall_time_ms = 0.0;         // schedule production only
    double train_time_ms = 0.0;        // 0 for algorithms without training
    double demand_violation_max = 0.0;
    int truncation_count = 0;
    int n_evs = 0;

    bool failed = false;
    std::string error;

    ChargingSchedule schedule;
    std::vector<rl::EpisodeLog> convergence; // SCA and CALC
    std::vector<double> episode_rewards;     // AEM
};

/// Scenario evaluated for `seed`: the configured fleet drawn with that seed.
Scenario build_scenario(const ExperimentConfig& cfg, std::uint64_t seed, int* truncation_count = nullptr);

/// One entry per (seed, algorithm, AEM level). A failing run is returned
/// with `failed` set and does not stop the others.
std::vector<RunMetrics> run_experiment(const ExperimentConfig& cfg);

enum class SweepParam { Discount, BetaA, NEvs, AemLevels };

SweepParam parse_sweep_param(const std::string& name);
std::string to_string(SweepParam p);

struct SweepGroup {
    double value = 0.0;
    std::vector<RunMetrics> runs;
};

/// Throws ConfigError when no configured algorithm uses the parameter.
std::vector<SweepGroup> sweep(const ExperimentConfig& cfg, SweepParam param, const std::vector<double>& values);

/// Copy of `cfg` with the parameter set to `value`.
ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam param, double value);

} // namespace evsched::harness
