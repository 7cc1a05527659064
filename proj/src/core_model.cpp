// SPDX-License-Identifier: Apache-2.0
#include "evsched/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evsched {

void PriceModel::validate() const {
    if (!(k0 >= 0.0) || !(k1 >= 0.0))
        throw std::invalid_argument("price coefficients must be non-negative");
}

void EvProfile::validate(double tol) const {
    std::ostringstream msg;
    msg << "EV " << id << ": ";
    if (t_arr > t_dep)
        throw std::invalid_argument(msg.str() + "arrival after departure");
    if (!(demand >= 0.0))
        throw std::invalid_argument(msg.str() + "negative demand");
    if (!(b_max > 0.0) || !(battery > 0.0))
        throw std::invalid_argument(msg.str() + "b_max and battery must be positive");
    if (soc_init < 0.0 || soc_init > 1.0)
        throw std::invalid_argument(msg.str() + "initial SOC outside [0,1]");
    if (demand > battery * (1.0 - soc_init) + tol)
        throw std::invalid_argument(msg.str() + "demand exceeds free battery capacity");
}

void Scenario::validate() const {
    if (horizon <= 0)
        throw std::invalid_argument("horizon must be positive");
    if (static_cast<int>(base_load.size()) != horizon)
        throw std::invalid_argument("base load length does not match horizon");
    price.validate();
    double max_base = 0.0;
    for (double lb : base_load) {
        if (!(lb >= 0.0))
            throw std::invalid_argument("base load must be non-negative");
        max_base = std::max(max_base, lb);
    }
    if (load_cap < max_base)
        throw std::invalid_argument("load cap below peak base load");
    for (const auto& ev : evs) {
        ev.validate();
        if (ev.t_arr < 0 || ev.t_dep >= horizon)
            throw std::invalid_argument("EV " + std::to_string(ev.id) + " window outside horizon");
    }
}

double unit_price(double l_ev, double l_b, const PriceModel& pm) {
    if (l_ev < 0.0 || l_b < 0.0)
        throw std::invalid_argument("unit_price: loads must be non-negative");
    return pm.k0 + 2.0 * pm.k1 * (l_ev + l_b);
}

double slot_cost(double aggregate, double l_b, const PriceModel& pm) {
    return pm.k0 * aggregate + pm.k1 * aggregate * aggregate + 2.0 * pm.k1 * l_b * aggregate;
}

double slot_cost(std::span<const double> amounts, double l_b, const PriceModel& pm) {
    double total = 0.0;
    for (double b : amounts) {
        if (b < 0.0)
            throw std::invalid_argument("slot_cost: negative charging amount");
        total += b;
    }
    return slot_cost(total, l_b, pm);
}

double horizon_cost(const ChargingSchedule& schedule, const Scenario& scenario) {
    if (schedule.ev_count() != scenario.ev_count() || schedule.horizon() != scenario.horizon)
        throw std::invalid_argument("horizon_cost: schedule dimensions do not match scenario");
    double cost = 0.0;
    for (int t = 0; t < scenario.horizon; ++t)
        cost += slot_cost(schedule.slot(t), scenario.base_load[t], scenario.price);
    return cost;
}

std::vector<SlotLoad> slot_loads(const ChargingSchedule& schedule, const Scenario& scenario) {
    std::vector<SlotLoad> loads(scenario.horizon);
    for (int t = 0; t < scenario.horizon; ++t) {
        const double l_ev = schedule.ev_count() > 0 ? schedule.slot_total(t) : 0.0;
        loads[t] = {l_ev, scenario.base_load[t], l_ev + scenario.base_load[t]};
    }
    return loads;
}

double peak_total_load(const ChargingSchedule& schedule, const Scenario& scenario) {
    double peak = 0.0;
    for (const auto& l : slot_loads(schedule, scenario))
        peak = std::max(peak, l.total);
    return peak;
}

std::string Violation::describe() const {
    std::ostringstream out;
    switch (kind) {
    case Kind::Demand: out << "demand gap " << magnitude << " kWh for EV row " << ev; break;
    case Kind::Bound:
        out << "amount out of [0, b_max] by " << magnitude << " at EV row " << ev << ", slot " << slot;
        break;
    case Kind::Window:
        out << "charging " << magnitude << " kWh outside window at EV row " << ev << ", slot " << slot;
        break;
    case Kind::LoadCap: out << "total load exceeds cap by " << magnitude << " at slot " << slot; break;
    case Kind::Shape: out << "schedule dimensions do not match scenario"; break;
    }
    return out.str();
}

bool ValidationReport::has(Violation::Kind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

ValidationReport validate_schedule(const ChargingSchedule& schedule, const Scenario& scenario,
                                   double tol) {
    ValidationReport report;
    auto flag = [&report](Violation v) {
        report.ok = false;
        report.violations.push_back(v);
    };
    if (schedule.ev_count() != scenario.ev_count() || schedule.horizon() != scenario.horizon) {
        flag({Violation::Kind::Shape, -1, -1, 0.0});
        return report;
    }

    for (int i = 0; i < scenario.ev_count(); ++i) {
        const auto& ev = scenario.evs[i];
        double delivered = 0.0;
        for (int t = 0; t < scenario.horizon; ++t) {
            const double b = schedule(i, t);
            delivered += b;
            if (!ev.parked_at(t)) {
                if (std::abs(b) > tol)
                    flag({Violation::Kind::Window, i, t, std::abs(b)});
                continue;
            }
            if (b < -tol)
                flag({Violation::Kind::Bound, i, t, -b});
            else if (b > ev.b_max + tol)
                flag({Violation::Kind::Bound, i, t, b - ev.b_max});
        }
        const double gap = std::abs(delivered - ev.demand);
        report.max_demand_gap = std::max(report.max_demand_gap, gap);
        if (gap > tol)
            flag({Violation::Kind::Demand, i, -1, gap});
    }

    for (int t = 0; t < scenario.horizon; ++t) {
        const double total = (scenario.ev_count() > 0 ? schedule.slot_total(t) : 0.0) + scenario.base_load[t];
        if (total > scenario.load_cap + tol)
            flag({Violation::Kind::LoadCap, -1, t, total - scenario.load_cap});
    }
    return report;
}

} // namespace evsched
