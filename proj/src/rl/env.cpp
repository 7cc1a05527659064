// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evsched::rl {

Vec RlState::to_input(double scale) const {
    Vec x(soc.size() + 1);
    x.head(soc.size()) = soc;
    x[soc.size()] = price / scale;
    return x;
}

double current_price(const FleetSim& sim) { return unit_price(0.0, sim.base_load(), sim.scenario().price); }

namespace {

double reference_load(const Scenario& s) {
    if (std::isfinite(s.load_cap) && s.load_cap > 0.0)
        return s.load_cap;
    double peak = 0.0;
    for (double l : s.base_load)
        peak = std::max(peak, l);
    for (const auto& ev : s.evs)
        peak += ev.b_max;
    return peak > 0.0 ? peak : 1.0;
}

} // namespace

double price_scale(const Scenario& s) { return s.price.k0 + 2.0 * s.price.k1 * reference_load(s); }

double load_scale(const Scenario& s) { return reference_load(s); }

RlState observe_full(const FleetSim& sim) {
    RlState st;
    const auto soc = sim.soc_vector();
    st.soc = Eigen::Map<const Vec>(soc.data(), static_cast<Eigen::Index>(soc.size()));
    st.price = current_price(sim);
    return st;
}

ReducedState observe_reduced(const FleetSim& sim) {
    ReducedState st;
    for (int row : sim.parked())
        st.soc_ev += sim.soc(row);
    st.l_b = sim.base_load();
    return st;
}

EnvTransition env_step_full(FleetSim& sim, const Vec& action, RewardMode mode) {
    if (action.size() != sim.scenario().ev_count())
        throw std::invalid_argument("env_step_full: one action per EV required");
    EnvTransition tr;
    tr.state = observe_full(sim);
    const int t = sim.slot();
    const auto step = sim.commit(std::span<const double>(action.data(), static_cast<std::size_t>(action.size())), mode);
    const auto column = sim.schedule().slot(t);
    tr.action = Eigen::Map<const Vec>(column.data(), static_cast<Eigen::Index>(column.size()));
    tr.reward = step.reward;
    tr.terminal = step.terminal;
    if (sim.slot() < sim.scenario().horizon) {
        tr.next_state = observe_full(sim);
    } else {
        tr.next_state.soc = Vec::Zero(action.size());
        tr.next_state.price = 0.0;
    }
    return tr;
}

void Task::reset(const Scenario& scenario) {
    sim_.emplace(scenario);
    sim_->skip_idle();
}

ScaTask::ScaTask(int fleet_size, RewardMode mode) : n_(fleet_size), dim_(std::max(1, fleet_size)), mode_(mode) {
    if (fleet_size < 0)
        throw std::invalid_argument("fleet size must be non-negative");
}

void ScaTask::reset(const Scenario& scenario) {
    if (scenario.ev_count() != n_)
        throw std::invalid_argument("SCA task was built for " + std::to_string(n_) + " EVs, scenario has " +
                                    std::to_string(scenario.ev_count()));
    price_scale_ = price_scale(scenario);
    Task::reset(scenario);
}

Vec ScaTask::observe() const {
    RlState st = observe_full(*sim_);
    if (dim_ != n_)
        st.soc = Vec::Zero(dim_);
    return st.to_input(price_scale_);
}

void ScaTask::bounds(Vec& lower, Vec& upper) const {
    lower = Vec::Zero(dim_);
    upper = Vec::Zero(dim_);
    for (int row : sim_->parked()) {
        lower[row] = sim_->min_charge(row);
        upper[row] = sim_->max_charge(row);
    }
}

double ScaTask::step(const Vec& action) {
    const auto s = sim_->commit(std::span<const double>(action.data(), static_cast<std::size_t>(n_)), mode_);
    sim_->skip_idle();
    return s.reward;
}

CalcTask::CalcTask(RewardMode mode) : mode_(mode) {}

void CalcTask::reset(const Scenario& scenario) {
    double b_max = 0.0;
    for (const auto& ev : scenario.evs)
        b_max = std::max(b_max, ev.b_max);
    unit_ = b_max > 0.0 ? b_max * scenario.ev_count() : 1.0;
    load_scale_ = load_scale(scenario);
    Task::reset(scenario);
}

Vec CalcTask::observe() const {
    const ReducedState st = observe_reduced(*sim_);
    const int n = std::max(1, sim_->scenario().ev_count());
    Vec x(2);
    x << st.soc_ev / n, st.l_b / load_scale_;
    return x;
}

void CalcTask::bounds(Vec& lower, Vec& upper) const {
    double lo = 0.0, hi = 0.0;
    for (int row : sim_->parked()) {
        lo += sim_->min_charge(row);
        hi += sim_->max_charge(row);
    }
    lower = Vec::Constant(1, lo / unit_);
    upper = Vec::Constant(1, hi / unit_);
}

double CalcTask::step(const Vec& action) {
    const double l_b = sim_->base_load();
    const auto request = sim_->allocate_edf(action[0] * unit_);
    const auto s = sim_->commit(request, mode_);
    sim_->skip_idle();
    return aggregate_reward(s.committed_total, l_b, sim_->scenario().price, mode_);
}

} // namespace evsched::rl
