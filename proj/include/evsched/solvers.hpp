// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/core_model.hpp"
#include "evsched/scenario.hpp"

#include <Eigen/Core>

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched {

struct SolverOptions {
    double tol = 1e-6; // KKT residual, kWh
    int max_iter = 50000;
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double unmet, std::vector<int> ev_ids = {})
        : std::runtime_error(what), unmet_(unmet), ev_ids_(std::move(ev_ids)) {}

    /// Aggregate demand (kWh) that no schedule can deliver.
    double unmet() const { return unmet_; }
    /// EVs whose own window cannot hold their demand, if that is the cause.
    const std::vector<int>& ev_ids() const { return ev_ids_; }

private:
    double unmet_;
    std::vector<int> ev_ids_;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// One charging block of a quadratic charging problem: a row with a slot
/// window, a demand equality and a per-slot box.
struct ChargeRow {
    int first = 0;
    int last = -1;
    double demand = 0.0;
    double b_max = 0.0;
};

/// min sum_t slot_cost(sum_i x[i][t], base[t])  s.t. row demands, boxes,
/// sum_i x[i][t] + base[t] <= cap.
struct ChargeProblem {
    std::vector<double> base;
    double load_cap = std::numeric_limits<double>::infinity();
    std::vector<ChargeRow> rows;
    PriceModel price;

    int slots() const { return static_cast<int>(base.size()); }
};

struct QpSolution {
    ChargingSchedule schedule;
    double objective = 0.0;
    int iterations = 0;
    double kkt_residual = 0.0;
};

/// Largest total demand any schedule can deliver (max-flow over EV->slot
/// edges with the load cap on slot->sink edges).
double max_deliverable(const ChargeProblem& problem);

/// Accelerated projected gradient with a projected-gradient-step KKT
/// certificate. When k1 == 0 every feasible point is optimal and the
/// minimum-norm one is returned.
QpSolution solve_charge_problem(const ChargeProblem& problem, const SolverOptions& opts = {});

/// Offline optimum with full knowledge of the fleet.
QpSolution solve_offline(const Scenario& scenario, const SolverOptions& opts = {});

struct RollingStep {
    SlotRange window;
    std::vector<int> rows;  // scenario rows of H(t_s), order of `amounts` rows
    Eigen::MatrixXd amounts; // rows.size() x window.size()
    double objective = 0.0;
    int iterations = 0;
};

/// Re-solve at slot t_s over W(t_s) for the EVs parked at t_s, each with its
/// residual demand. `revealed` are the profiles known at t_s (rows indexed
/// like `residual`); the base-load forecast and price come from `context`.
RollingStep solve_rolling_step(const Scenario& context, std::span<const EvProfile> revealed,
                               std::span<const double> residual, int t_s, const SolverOptions& opts = {});

struct ProjectionResult {
    ChargingSchedule schedule;  // b: demand-feasible
    ChargingSchedule surrogate; // b*: column sums follow the clipped target
    double distance = 0.0;      // sum of squared differences
    std::vector<double> clipped_target;
    double clip_magnitude = 0.0; // sum |target - clipped_target|
    int iterations = 0;
};

/// Maps an aggregate per-slot target onto per-EV amounts: the demand-feasible
/// schedule closest to a box-feasible split of the (clipped) target.
ProjectionResult project_allocation(std::span<const double> aggregate_target, const Scenario& scenario,
                                    double tol = 1e-9, int max_iter = 20000);

} // namespace evsched
