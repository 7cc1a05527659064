// SPDX-License-Identifier: Apache-2.0
#include "evsched/fleet_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace evsched {

namespace {
constexpr double kSnap = 1e-12;
}

double step_reward(std::span<const double> column, double l_b, const PriceModel& pm, RewardMode mode) {
    if (mode == RewardMode::ExactCost)
        return -slot_cost(column, l_b, pm);
    double r = 0.0;
    for (double b : column)
        r -= (pm.k0 + 2.0 * pm.k1 * b + 2.0 * pm.k1 * l_b) * b;
    return r;
}

double aggregate_reward(double l_ev, double l_b, const PriceModel& pm, RewardMode mode) {
    if (mode == RewardMode::ExactCost)
        return -slot_cost(l_ev, l_b, pm);
    return -(pm.k0 + 2.0 * pm.k1 * l_ev + 2.0 * pm.k1 * l_b) * l_ev;
}

FleetSim::FleetSim(const Scenario& scenario)
    : scenario_(scenario), schedule_(scenario.ev_count(), scenario.horizon) {
    residual_.reserve(scenario.ev_count());
    for (const auto& ev : scenario.evs)
        residual_.push_back(ev.demand);
    refresh_parked();
}

FleetSim::FleetSim(const Scenario& scenario, int t, std::vector<double> residual)
    : scenario_(scenario), t_(t), residual_(std::move(residual)), schedule_(scenario.ev_count(), scenario.horizon) {
    if (static_cast<int>(residual_.size()) != scenario.ev_count())
        throw std::invalid_argument("FleetSim: one residual per EV required");
    if (t < 0 || t > scenario.horizon)
        throw std::invalid_argument("FleetSim: slot outside horizon");
    refresh_parked();
}

bool FleetSim::finished() const {
    if (t_ >= scenario_.horizon)
        return true;
    return std::all_of(residual_.begin(), residual_.end(), [](double r) { return r <= 0.0; });
}

double FleetSim::soc(int row) const {
    const auto& ev = scenario_.evs[row];
    return ev.soc_init + (ev.demand - residual_[row]) / ev.battery;
}

double FleetSim::min_charge(int row) const {
    const auto& ev = scenario_.evs[row];
    const double later = ev.b_max * (ev.t_dep - t_);
    return std::clamp(residual_[row] - later, 0.0, max_charge(row));
}

double FleetSim::max_charge(int row) const {
    return std::max(0.0, std::min(scenario_.evs[row].b_max, residual_[row]));
}

double FleetSim::cap_headroom() const { return std::max(0.0, scenario_.load_cap - base_load()); }

void FleetSim::refresh_parked() {
    parked_.clear();
    if (t_ >= scenario_.horizon)
        return;
    for (int i = 0; i < scenario_.ev_count(); ++i)
        if (scenario_.evs[i].parked_at(t_))
            parked_.push_back(i);
}

std::vector<double> FleetSim::soc_vector() const {
    std::vector<double> out(scenario_.ev_count(), 0.0);
    for (int row : parked_)
        out[row] = soc(row);
    return out;
}

FleetSim::Step FleetSim::commit(std::span<const double> request, RewardMode mode) {
    if (t_ >= scenario_.horizon)
        throw std::logic_error("FleetSim::commit past the horizon");
    if (static_cast<int>(request.size()) != scenario_.ev_count())
        throw std::invalid_argument("FleetSim::commit: one request per EV required");

    Step step;
    step.slot = t_;
    std::vector<double> lo(parked_.size()), amount(parked_.size());
    double total = 0.0, discretionary = 0.0;
    for (std::size_t k = 0; k < parked_.size(); ++k) {
        const int row = parked_[k];
        lo[k] = min_charge(row);
        const double req = std::isfinite(request[row]) ? request[row] : 0.0;
        amount[k] = std::clamp(req, lo[k], max_charge(row));
        step.forced += std::max(0.0, lo[k] - req);
        total += amount[k];
        discretionary += amount[k] - lo[k];
    }
    const double headroom = cap_headroom();
    if (total > headroom && discretionary > 0.0) {
        const double keep = std::max(0.0, 1.0 - (total - headroom) / discretionary);
        for (std::size_t k = 0; k < parked_.size(); ++k)
            amount[k] = lo[k] + (amount[k] - lo[k]) * keep;
    }
    for (std::size_t k = 0; k < parked_.size(); ++k) {
        const int row = parked_[k];
        schedule_(row, t_) = amount[k];
        residual_[row] -= amount[k];
        if (residual_[row] < kSnap)
            residual_[row] = 0.0;
        step.committed_total += amount[k];
    }
    step.reward = step_reward(schedule_.slot(t_), base_load(), scenario_.price, mode);
    ++t_;
    refresh_parked();
    step.terminal = finished();
    return step;
}

std::vector<double> FleetSim::allocate_edf(double aggregate, double quantum) const {
    std::vector<double> req(scenario_.ev_count(), 0.0);
    const bool quantised = quantum > 0.0;
    auto last_slot = [&](int row) { return scenario_.evs[row].t_dep == t_; };

    std::vector<int> order = parked_;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scenario_.evs[a].t_dep < scenario_.evs[b].t_dep; });

    double remaining = aggregate;
    for (int row : parked_) {
        double f = min_charge(row);
        if (quantised && !last_slot(row))
            f = std::min(max_charge(row), std::ceil(f / quantum - 1e-9) * quantum);
        req[row] = f;
        remaining -= f;
    }
    for (int row : order) {
        if (remaining <= 0.0)
            break;
        if (last_slot(row))
            continue;
        double top = max_charge(row);
        if (quantised)
            top = std::floor(top / quantum + 1e-9) * quantum;
        double add = std::min(std::max(0.0, top - req[row]), remaining);
        if (quantised)
            add = std::floor(add / quantum + 1e-9) * quantum;
        req[row] += add;
        remaining -= add;
    }
    return req;
}

void FleetSim::skip_idle() {
    const std::vector<double> none(scenario_.ev_count(), 0.0);
    while (!finished() && parked_.empty())
        commit(none);
}

} // namespace evsched
