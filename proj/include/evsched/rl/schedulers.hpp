// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/core_model.hpp"
#include "evsched/rl/mlp.hpp"
#include "evsched/solvers.hpp"

#include <vector>

namespace evsched::rl {

struct RolloutDiagnostics {
    double forced_kwh = 0.0; // charge added beyond the policy mean to keep demands deliverable
    int forced_slots = 0;
};

/// Deterministic rollout of a per-EV policy (action = clipped mean). Each
/// EV's remaining demand is forced as the departure slot approaches.
ChargingSchedule sca_schedule(const PolicyParams& policy, const Scenario& scenario,
                              RolloutDiagnostics* diagnostics = nullptr);

/// Aggregate series l_ev(t) produced by a deterministic rollout of an
/// aggregate policy.
std::vector<double> calc_aggregate(const PolicyParams& policy, const Scenario& scenario);

/// Two-stage schedule: aggregate rollout, then projection onto the per-EV
/// constraints.
ProjectionResult calc_run(const PolicyParams& policy, const Scenario& scenario, double tol = 1e-9);
ChargingSchedule calc_schedule(const PolicyParams& policy, const Scenario& scenario, double tol = 1e-9);

} // namespace evsched::rl
