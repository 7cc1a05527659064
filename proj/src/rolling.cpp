// SPDX-License-Identifier: Apache-2.0
#include "evsched/baselines.hpp"

#include <algorithm>

namespace evsched {

OaResult oa_run(const Scenario& scenario, const SolverOptions& opts) {
    scenario.validate();
    const int T = scenario.horizon;
    OaResult result;
    result.schedule = ChargingSchedule(scenario.ev_count(), T);

    std::vector<double> residual;
    for (const auto& ev : scenario.evs)
        residual.push_back(ev.demand);

    std::vector<EvProfile> revealed;
    std::vector<int> revealed_row; // scenario row of each revealed EV
    std::vector<double> revealed_residual;

    RollingStep plan;
    std::vector<double> plan_base; // base load the plan assumed over its window
    bool have_plan = false;
    std::vector<int> previous_parked;

    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < scenario.ev_count(); ++i)
            if (scenario.evs[i].t_arr == t) {
                revealed.push_back(scenario.evs[i]);
                revealed_row.push_back(i);
            }

        std::vector<int> parked;
        for (std::size_t k = 0; k < revealed.size(); ++k)
            if (revealed[k].parked_at(t))
                parked.push_back(static_cast<int>(k));
        if (parked.empty()) {
            have_plan = false;
            previous_parked.clear();
            continue;
        }

        const bool fleet_changed = parked != previous_parked;
        const bool load_changed =
            have_plan && scenario.base_load[t] != plan_base[t - plan.window.first];
        if (!have_plan || fleet_changed || load_changed || !plan.window.contains(t)) {
            revealed_residual.resize(revealed.size());
            for (std::size_t k = 0; k < revealed.size(); ++k)
                revealed_residual[k] = residual[revealed_row[k]];
            plan = solve_rolling_step(scenario, revealed, revealed_residual, t, opts);
            plan_base.assign(scenario.base_load.begin() + plan.window.first,
                             scenario.base_load.begin() + plan.window.last + 1);
            have_plan = true;

            ResolveRecord rec;
            rec.slot = t;
            rec.window = plan.window;
            for (int k : plan.rows)
                rec.ev_ids.push_back(revealed[k].id);
            result.resolves.push_back(std::move(rec));
        }
        previous_parked = parked;

        const int col = t - plan.window.first;
        for (std::size_t r = 0; r < plan.rows.size(); ++r) {
            const int k = plan.rows[r];
            const int row = revealed_row[k];
            const auto& ev = scenario.evs[row];
            double b = std::clamp(plan.amounts(static_cast<int>(r), col), 0.0, std::min(ev.b_max, residual[row]));
            if (t == ev.t_dep)
                b = std::min(ev.b_max, residual[row]);
            result.schedule(row, t) = b;
            residual[row] = std::max(0.0, residual[row] - b);
        }
    }
    return result;
}

ChargingSchedule oa_schedule(const Scenario& scenario, double tol) {
    SolverOptions opts;
    opts.tol = tol;
    return oa_run(scenario, opts).schedule;
}

} // namespace evsched
