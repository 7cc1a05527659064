// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/fleet_sim.hpp"
#include "evsched/rl/mlp.hpp"

#include <memory>
#include <optional>

namespace evsched::rl {

/// Per-EV SOC (fixed length N, zero for EVs not parked) and the current
/// unit price.
struct RlState {
    Vec soc;
    double price = 0.0;

    /// Network input: SOC entries followed by price / price_scale.
    Vec to_input(double price_scale) const;
};

/// Aggregate SOC of the parked fleet and the base load.
struct ReducedState {
    double soc_ev = 0.0;
    double l_b = 0.0;
};

struct EnvTransition {
    RlState state;
    Vec action; // kWh actually committed per EV
    double reward = 0.0;
    RlState next_state;
    bool terminal = false;
};

/// Price before any EV load is added at the simulator's slot.
double current_price(const FleetSim& sim);
/// k0 + 2 k1 L_ref, with L_ref the load cap (or, if uncapped, peak base
/// load plus every EV charging at full rate).
double price_scale(const Scenario& scenario);
/// Load used to normalise the base-load input of the reduced state.
double load_scale(const Scenario& scenario);

RlState observe_full(const FleetSim& sim);
ReducedState observe_reduced(const FleetSim& sim);

/// Commits per-EV amounts (kWh, one per scenario row) at the simulator's
/// slot. Amounts are clipped to each EV's feasible range by the simulator.
EnvTransition env_step_full(FleetSim& sim, const Vec& action, RewardMode mode = RewardMode::ExactCost);

/// Episode interface the actor-critic trainer runs against. Actions are in
/// policy units; slots where nobody is parked are skipped.
class Task {
public:
    virtual ~Task() = default;

    virtual int state_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual std::unique_ptr<Task> clone() const = 0;

    virtual void reset(const Scenario& scenario);
    bool done() const { return !sim_ || sim_->finished(); }
    const FleetSim& sim() const { return *sim_; }

    virtual Vec observe() const = 0;
    /// Feasible action box at the current slot.
    virtual void bounds(Vec& lower, Vec& upper) const = 0;
    /// Applies an action inside the box, returns the reward.
    virtual double step(const Vec& action) = 0;

protected:
    std::optional<FleetSim> sim_;
};

/// One action per EV in kWh; state is RlState. An empty fleet keeps one
/// dummy dimension with bounds [0, 0].
class ScaTask : public Task {
public:
    ScaTask(int fleet_size, RewardMode mode = RewardMode::ExactCost);

    int state_dim() const override { return dim_ + 1; }
    int action_dim() const override { return dim_; }
    std::unique_ptr<Task> clone() const override { return std::make_unique<ScaTask>(*this); }

    void reset(const Scenario& scenario) override;
    Vec observe() const override;
    void bounds(Vec& lower, Vec& upper) const override;
    double step(const Vec& action) override;

private:
    int n_;
    int dim_;
    RewardMode mode_;
    double price_scale_ = 1.0;
};

/// Scalar aggregate action as a fraction of N * b_max (fleet size times the
/// largest per-slot rate), spread earliest-deadline-first; state is
/// ReducedState normalised to (soc_ev / N, l_b / load_scale).
class CalcTask : public Task {
public:
    explicit CalcTask(RewardMode mode = RewardMode::ExactCost);

    int state_dim() const override { return 2; }
    int action_dim() const override { return 1; }
    std::unique_ptr<Task> clone() const override { return std::make_unique<CalcTask>(*this); }

    void reset(const Scenario& scenario) override;
    Vec observe() const override;
    void bounds(Vec& lower, Vec& upper) const override;
    double step(const Vec& action) override;

    double unit() const { return unit_; }

private:
    RewardMode mode_;
    double unit_ = 1.0;
    double load_scale_ = 1.0;
};

} // namespace evsched::rl
