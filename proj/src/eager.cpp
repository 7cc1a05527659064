// SPDX-License-Identifier: Apache-2.0
#include "evsched/baselines.hpp"

#include <algorithm>

namespace evsched {

ChargingSchedule ec_schedule(const Scenario& scenario) {
    ChargingSchedule schedule(scenario.ev_count(), scenario.horizon);
    for (int i = 0; i < scenario.ev_count(); ++i) {
        const auto& ev = scenario.evs[i];
        double residual = ev.demand;
        for (int t = ev.t_arr; t <= ev.t_dep && residual > 0.0; ++t) {
            const double b = std::min(ev.b_max, residual);
            schedule(i, t) = b;
            residual -= b;
        }
    }
    return schedule;
}

} // namespace evsched
