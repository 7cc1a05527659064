// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/core_model.hpp"

#include <span>
#include <vector>

namespace evsched {

enum class RewardMode {
    ExactCost, // -slot_cost of the committed column
    PaperEq13, // -sum_i (k0 + 2 k1 b_i + 2 k1 l_b) b_i, or its aggregate form
};

/// Slot-by-slot execution of a scenario. Tracks residual demand per EV and
/// keeps every commitment feasible: each parked EV is charged at least the
/// amount that keeps its remaining demand deliverable before departure (so
/// the last parked slot tops it up) and at most min(b_max, residual).
class FleetSim {
public:
    explicit FleetSim(const Scenario& scenario);
    /// Positioned at slot t with the given residual demand per row.
    FleetSim(const Scenario& scenario, int t, std::vector<double> residual);

    const Scenario& scenario() const { return scenario_; }
    int slot() const { return t_; }
    bool finished() const;

    /// Rows parked at the current slot.
    const std::vector<int>& parked() const { return parked_; }
    double residual(int row) const { return residual_[row]; }
    double soc(int row) const;
    double base_load() const { return scenario_.base_load[t_]; }

    /// Least amount that keeps the row feasible.
    double min_charge(int row) const;
    /// min(b_max, residual).
    double max_charge(int row) const;
    /// Room under the load cap at the current slot.
    double cap_headroom() const;

    struct Step {
        int slot = 0;
        double committed_total = 0.0;
        double reward = 0.0;
        double forced = 0.0; // kWh added to meet feasibility floors
        bool terminal = false;
    };

    /// Clips each parked row's request into [min_charge, max_charge], shrinks
    /// the discretionary part to respect the load cap, commits the column and
    /// advances one slot. `request` has one entry per scenario row.
    Step commit(std::span<const double> request, RewardMode mode = RewardMode::ExactCost);

    /// Spreads an aggregate amount earliest-deadline-first on top of the
    /// floors; with quantum > 0 discretionary amounts are multiples of it.
    std::vector<double> allocate_edf(double aggregate, double quantum = 0.0) const;

    /// Advances through slots where nobody is parked.
    void skip_idle();

    const ChargingSchedule& schedule() const { return schedule_; }
    /// SOC fraction per row, zero for rows not parked at the current slot.
    std::vector<double> soc_vector() const;

private:
    void refresh_parked();

    Scenario scenario_;
    int t_ = 0;
    std::vector<double> residual_;
    std::vector<int> parked_;
    ChargingSchedule schedule_;
};

double step_reward(std::span<const double> column, double l_b, const PriceModel& pm, RewardMode mode);
double aggregate_reward(double l_ev, double l_b, const PriceModel& pm, RewardMode mode);

} // namespace evsched
