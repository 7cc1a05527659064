// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

namespace evsched {

/// Linear unit price p = k0 + 2*k1*L over the total load L, which makes the
/// cost of a slot quadratic in the aggregate EV charge.
struct PriceModel {
    double k0 = 0.1;   // currency per kWh
    double k1 = 0.001; // currency per kWh^2

    void validate() const;
};

/// One vehicle. Slots are 0-based and the parking window [t_arr, t_dep] is
/// inclusive on both ends.
struct EvProfile {
    int id = 0;
    int t_arr = 0;
    int t_dep = 0;
    double demand = 0.0;   // kWh still to deliver at arrival
    double b_max = 0.0;    // kWh per slot
    double battery = 0.0;  // kWh capacity
    double soc_init = 0.0; // fraction of capacity at arrival

    int window_length() const { return t_dep - t_arr + 1; }
    bool parked_at(int t) const { return t_arr <= t && t <= t_dep; }
    void validate(double tol = 1e-6) const;
};

struct Scenario {
    int horizon = 0;
    double slot_hours = 1.0;
    std::vector<double> base_load; // kWh per slot, size == horizon
    std::vector<EvProfile> evs;
    PriceModel price;
    double load_cap = 0.0; // L_max, kWh per slot

    int ev_count() const { return static_cast<int>(evs.size()); }
    void validate() const;
};

/// Per-EV per-slot charging amounts in kWh. Row i is scenario.evs[i],
/// column t is slot t.
class ChargingSchedule {
public:
    ChargingSchedule() = default;
    ChargingSchedule(int n_evs, int horizon) : amounts_(Eigen::MatrixXd::Zero(n_evs, horizon)) {}
    explicit ChargingSchedule(Eigen::MatrixXd amounts) : amounts_(std::move(amounts)) {}

    int ev_count() const { return static_cast<int>(amounts_.rows()); }
    int horizon() const { return static_cast<int>(amounts_.cols()); }

    double& operator()(int ev, int slot) { return amounts_(ev, slot); }
    double operator()(int ev, int slot) const { return amounts_(ev, slot); }

    /// Column t is contiguous (column-major storage).
    std::span<const double> slot(int t) const {
        return {amounts_.col(t).data(), static_cast<std::size_t>(amounts_.rows())};
    }
    double slot_total(int t) const { return amounts_.col(t).sum(); }
    double ev_total(int i) const { return amounts_.row(i).sum(); }

    const Eigen::MatrixXd& matrix() const { return amounts_; }
    Eigen::MatrixXd& matrix() { return amounts_; }

    bool operator==(const ChargingSchedule& other) const { return amounts_ == other.amounts_; }

private:
    Eigen::MatrixXd amounts_;
};

struct SlotLoad {
    double l_ev = 0.0;
    double l_b = 0.0;
    double total = 0.0;
};

double unit_price(double l_ev, double l_b, const PriceModel& pm);

/// Integral of the unit price over [l_b, l_b + S] with S the aggregate charge.
double slot_cost(double aggregate, double l_b, const PriceModel& pm);
double slot_cost(std::span<const double> amounts, double l_b, const PriceModel& pm);

double horizon_cost(const ChargingSchedule& schedule, const Scenario& scenario);

std::vector<SlotLoad> slot_loads(const ChargingSchedule& schedule, const Scenario& scenario);
double peak_total_load(const ChargingSchedule& schedule, const Scenario& scenario);

struct Violation {
    enum class Kind { Demand, Bound, Window, LoadCap, Shape };

    Kind kind = Kind::Demand;
    int ev = -1;   // row index, -1 when slot-level
    int slot = -1; // -1 when EV-level
    double magnitude = 0.0;

    std::string describe() const;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;
    double max_demand_gap = 0.0;

    bool has(Violation::Kind kind) const;
};

ValidationReport validate_schedule(const ChargingSchedule& schedule, const Scenario& scenario,
                                   double tol = 1e-6);

} // namespace evsched
