// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/core_model.hpp"
#include "evsched/fleet_sim.hpp"
#include "evsched/scenario.hpp"
#include "evsched/solvers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace evsched {

// --- eager charging ---------------------------------------------------------

/// Every EV charges min(b_max, residual) from arrival until its demand is met.
ChargingSchedule ec_schedule(const Scenario& scenario);

// --- rolling online control -------------------------------------------------

struct ResolveRecord {
    int slot = 0;
    std::vector<int> ev_ids; // H(slot)
    SlotRange window;        // W(slot)
};

struct OaResult {
    ChargingSchedule schedule;
    std::vector<ResolveRecord> resolves;
};

/// Online rolling-horizon control. Vehicles are revealed at their arrival
/// slot; the window problem is re-solved whenever a vehicle arrives or
/// leaves or the base load changes, and only the current column is
/// committed. The base load of the window is taken as known.
OaResult oa_run(const Scenario& scenario, const SolverOptions& opts = {});
ChargingSchedule oa_schedule(const Scenario& scenario, double tol = 1e-6);

// --- tabular Q-learning with discrete charge levels --------------------------

struct QLearnConfig {
    double learning_rate = 0.1;
    double discount = 0.95;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.5; // of the episodes
    int episodes = 2000;
    std::uint64_t seed = 1;

    void validate() const;
    double epsilon(int episode) const;
};

/// Q(s, a) over (aggregate SOC bin x base-load bin) states and evenly
/// spaced per-EV charge levels 0, q, 2q, ..., b_max with q = b_max/(levels-1).
class QTable {
public:
    static constexpr double kValueBound = 1e12;

    QTable(int states, int levels);

    int states() const { return states_; }
    int levels() const { return levels_; }

    double value(int s, int a) const { return values_[index(s, a)]; }
    std::uint32_t visits(int s, int a) const { return visits_[index(s, a)]; }
    void set(int s, int a, double v) { values_[index(s, a)] = v; }

    /// Lowest-index maximiser among visited actions (all actions when the
    /// state has never been visited).
    int greedy(int s) const;
    double max_value(int s) const;

    /// One-step Q-learning backup; next_state < 0 marks a terminal transition.
    /// Returns false when the new value had to be clamped to kValueBound.
    bool update(int s, int a, double reward, int next_state, double alpha, double gamma);

    // EV-specific discretisation
    int soc_bins = 20;
    int load_bins = 10;
    double b_max = 1.0;
    double load_reference = 1.0; // base load mapped to the top bin

    double quantum() const { return b_max / (levels_ - 1); }
    int state_of(double mean_soc, double base_load) const;

    /// Text file: a header comment, one line of dimensions, then one
    /// "state action value visits" line per visited entry.
    void save(const std::filesystem::path& path) const;
    static QTable load(const std::filesystem::path& path);

    std::uint64_t clamp_events = 0;

private:
    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(levels_) + static_cast<std::size_t>(a);
    }

    int states_;
    int levels_;
    std::vector<double> values_;
    std::vector<std::uint32_t> visits_;
};

struct AemResult {
    QTable table;
    std::vector<double> episode_rewards;
};

AemResult aem_train(const ScenarioSampler& sampler, const QLearnConfig& cfg, int levels,
                    RewardMode mode = RewardMode::ExactCost);

/// Greedy rollout of a trained table. Amounts are multiples of the quantum
/// except the top-up in each EV's last parked slot.
ChargingSchedule aem_schedule(const QTable& table, const Scenario& scenario);

/// Aggregate state observed by the Q-learning agent at the simulator's slot.
int aem_state(const QTable& table, const FleetSim& sim);

} // namespace evsched
