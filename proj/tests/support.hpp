// SPDX-License-Identifier: Apache-2.0
// Small scenario builders shared by the unit and acceptance suites.
#pragma once

#include "evsched/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace evsched::testing {

inline EvProfile make_ev(int id, int t_arr, int t_dep, double demand, double b_max = 3.2, double battery = 36.0) {
    EvProfile ev;
    ev.id = id;
    ev.t_arr = t_arr;
    ev.t_dep = t_dep;
    ev.demand = demand;
    ev.b_max = b_max;
    ev.battery = battery;
    ev.soc_init = std::clamp(1.0 - demand / battery, 0.0, 1.0);
    return ev;
}

inline Scenario make_scenario(std::vector<double> base, std::vector<EvProfile> evs, PriceModel pm = {},
                              double cap = std::numeric_limits<double>::infinity()) {
    Scenario s;
    s.horizon = static_cast<int>(base.size());
    s.base_load = std::move(base);
    s.evs = std::move(evs);
    s.price = pm;
    s.load_cap = cap;
    return s;
}

/// Five vehicles whose windows give H = {2,3,4,5} and W = slots 3..8 at
/// slot 3 (0-based), with EV 5 leaving last.
inline Scenario fig1_scenario() {
    std::vector<EvProfile> evs{make_ev(1, 0, 2, 4.0), make_ev(2, 1, 5, 6.0), make_ev(3, 2, 4, 5.0),
                               make_ev(4, 3, 6, 7.0), make_ev(5, 3, 8, 8.0)};
    return make_scenario(std::vector<double>(10, 20.0), evs);
}

/// Random feasible instance: every demand fits its own window and the cap
/// is infinite.
inline Scenario random_scenario(std::mt19937_64& rng, int max_evs, int max_slots, double b_max = 3.2) {
    std::uniform_int_distribution<int> n_dist(1, max_evs);
    std::uniform_int_distribution<int> t_dist(2, max_slots);
    const int horizon = t_dist(rng);
    const int n = n_dist(rng);
    std::uniform_real_distribution<double> load(5.0, 40.0);
    std::vector<double> base(static_cast<std::size_t>(horizon));
    for (double& b : base)
        b = load(rng);
    std::vector<EvProfile> evs;
    std::uniform_int_distribution<int> arr(0, horizon - 1);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const int a = arr(rng);
        std::uniform_int_distribution<int> dep(a, horizon - 1);
        const int d = dep(rng);
        const double demand = frac(rng) * b_max * (d - a + 1);
        evs.push_back(make_ev(i + 1, a, d, demand, b_max, std::max(36.0, demand + 1.0)));
    }
    std::stable_sort(evs.begin(), evs.end(), [](const EvProfile& x, const EvProfile& y) { return x.t_arr < y.t_arr; });
    return make_scenario(base, evs);
}

struct GridOptimum {
    double cost = std::numeric_limits<double>::infinity();
    double slack = 0.0; // bound on (grid optimum - continuous optimum)
};

/// Exhaustive minimum of the horizon cost over schedules whose entries are
/// multiples of `step`. Demands and b_max must be multiples of `step`;
/// intended for at most three vehicles. Dynamic programming over slots
/// with the vector of residual demands as state.
inline GridOptimum grid_optimum(const Scenario& s, double step) {
    const int n = s.ev_count();
    std::vector<int> demand(n), cap(n), radix(n + 1, 1);
    for (int i = 0; i < n; ++i) {
        demand[i] = static_cast<int>(std::lround(s.evs[i].demand / step));
        cap[i] = static_cast<int>(std::lround(s.evs[i].b_max / step));
        radix[i + 1] = radix[i] * (demand[i] + 1);
    }
    const int states = radix[n];
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> best(states, inf), next(states);
    // State index encodes the residual units of each vehicle.
    int start = 0;
    for (int i = 0; i < n; ++i)
        start += demand[i] * radix[i];
    best[start] = 0.0;
    std::vector<int> res(n), take(n);
    for (int t = 0; t < s.horizon; ++t) {
        std::fill(next.begin(), next.end(), inf);
        for (int code = 0; code < states; ++code) {
            if (best[code] == inf)
                continue;
            for (int i = 0; i < n; ++i)
                res[i] = (code / radix[i]) % (demand[i] + 1);
            bool dead = false;
            for (int i = 0; i < n; ++i) {
                const auto& ev = s.evs[i];
                if (t > ev.t_dep && res[i] > 0)
                    dead = true;
                if (t >= ev.t_arr && t <= ev.t_dep && res[i] > cap[i] * (ev.t_dep - t + 1))
                    dead = true;
            }
            if (dead)
                continue;
            std::fill(take.begin(), take.end(), 0);
            while (true) {
                int units = 0, to = code;
                for (int i = 0; i < n; ++i) {
                    units += take[i];
                    to -= take[i] * radix[i];
                }
                const double l_ev = units * step;
                if (s.base_load[t] + l_ev <= s.load_cap + 1e-12) {
                    const double c = best[code] + slot_cost(l_ev, s.base_load[t], s.price);
                    next[to] = std::min(next[to], c);
                }
                int i = 0;
                for (; i < n; ++i) {
                    const bool parked = t >= s.evs[i].t_arr && t <= s.evs[i].t_dep;
                    const int hi = parked ? std::min(cap[i], res[i]) : 0;
                    if (take[i] < hi) {
                        ++take[i];
                        break;
                    }
                    take[i] = 0;
                }
                if (i == n)
                    break;
            }
        }
        best.swap(next);
    }
    GridOptimum g;
    g.cost = best[0];
    // Rounding the continuous optimum onto the grid (per vehicle, keeping
    // its total) moves each slot's aggregate by less than n * step.
    for (int t = 0; t < s.horizon; ++t) {
        double peak_ev = 0.0;
        for (const auto& ev : s.evs)
            if (ev.parked_at(t))
                peak_ev += ev.b_max;
        const double p_max = s.price.k0 + 2.0 * s.price.k1 * (s.base_load[t] + peak_ev);
        const double d = n * step;
        g.slack += p_max * d + s.price.k1 * d * d;
    }
    return g;
}

} // namespace evsched::testing
