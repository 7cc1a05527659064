// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/schedulers.hpp"

#include "evsched/rl/env.hpp"
#include "evsched/rl/policy.hpp"

namespace evsched::rl {

ChargingSchedule sca_schedule(const PolicyParams& policy, const Scenario& scenario, RolloutDiagnostics* diagnostics) {
    ScaTask task(scenario.ev_count());
    task.reset(scenario);
    Vec lo, hi;
    while (!task.done()) {
        const Vec x = task.observe();
        task.bounds(lo, hi);
        const Vec mu = mlp_forward(policy, x).mu;
        if (diagnostics) {
            const double forced = (lo - mu).cwiseMax(0.0).sum();
            if (forced > 0.0) {
                diagnostics->forced_kwh += forced;
                ++diagnostics->forced_slots;
            }
        }
        task.step(mu.cwiseMax(lo).cwiseMin(hi));
    }
    return task.sim().schedule();
}

std::vector<double> calc_aggregate(const PolicyParams& policy, const Scenario& scenario) {
    CalcTask task;
    task.reset(scenario);
    Vec lo, hi;
    while (!task.done()) {
        const Vec x = task.observe();
        task.bounds(lo, hi);
        task.step(policy_mean_action(policy, x, lo, hi));
    }
    std::vector<double> series(static_cast<std::size_t>(scenario.horizon), 0.0);
    const ChargingSchedule& s = task.sim().schedule();
    for (int t = 0; t < scenario.horizon; ++t)
        series[static_cast<std::size_t>(t)] = s.slot_total(t);
    return series;
}

ProjectionResult calc_run(const PolicyParams& policy, const Scenario& scenario, double tol) {
    const auto target = calc_aggregate(policy, scenario);
    return project_allocation(target, scenario, tol);
}

ChargingSchedule calc_schedule(const PolicyParams& policy, const Scenario& scenario, double tol) {
    return calc_run(policy, scenario, tol).schedule;
}

} // namespace evsched::rl
