// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/core_model.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched {

/// Probability mass over arrival slots 0..T-1.
struct ArrivalDistribution {
    std::vector<double> weights;

    void validate() const;
    static ArrivalDistribution uniform(int horizon);
    static ArrivalDistribution point(int horizon, int slot);
    /// Evening-peaked daily profile repeated over the horizon (hourly slots).
    static ArrivalDistribution evening_peak(int horizon);
};

/// Histogram over the initial state of charge. SOC is drawn uniformly
/// inside the selected bin.
struct SocDistribution {
    std::vector<double> bin_edges; // size bin_mass.size() + 1
    std::vector<double> bin_mass;

    void validate() const;
    /// Ten 0.1-wide bins with mass centred on 0.4-0.6.
    static SocDistribution mid_centred();
};

/// Probability mass over parking durations: weights[d-1] is P(duration = d slots).
struct DwellDistribution {
    std::vector<double> weights;

    void validate() const;
    static DwellDistribution uniform(int min_slots, int max_slots);
};

enum class EvType { Type1, Type2 };

struct EvTypeSpec {
    double b_max;   // kWh per slot
    double battery; // kWh
};

EvTypeSpec ev_type_spec(EvType type);
std::string to_string(EvType type);
EvType parse_ev_type(const std::string& name);

struct FleetConfig {
    int n_evs = 40;
    EvType ev_type = EvType::Type1;
    DwellDistribution dwell = DwellDistribution::uniform(4, 12);
    ArrivalDistribution arrival = ArrivalDistribution::evening_peak(48);
    SocDistribution soc = SocDistribution::mid_centred();
    std::uint64_t seed = 1;

    int horizon() const { return static_cast<int>(arrival.weights.size()); }
    void validate() const;
};

struct Fleet {
    std::vector<EvProfile> evs;
    int truncation_count = 0; // demands cut to what the parking window can deliver
};

/// Monte Carlo draw of a fleet. EV ids are 1..n in arrival order.
Fleet sample_fleet(const FleetConfig& cfg, std::uint64_t rng_seed);

class BaseLoadError : public std::runtime_error {
public:
    enum class Kind { Io, Parse, Length, Negative };

    BaseLoadError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Plain text, one non-negative decimal per line. Blank lines and lines
/// starting with '#' are skipped.
std::vector<double> load_base_series(const std::filesystem::path& path, int expected_horizon);

/// The (arrival, departure, demand) triple revealed when an EV arrives.
struct ExogenousEvent {
    int ev_id = 0;
    int t_arr = 0;
    int t_dep = 0;
    double demand = 0.0;
};

/// Reveals EVs to an online algorithm no earlier than their arrival slot.
class EventLog {
public:
    explicit EventLog(std::vector<EvProfile> evs);

    /// Events whose arrival slot is exactly t.
    std::vector<ExogenousEvent> arrivals_at(int t) const;
    /// Profiles of every EV revealed by slot t.
    std::vector<EvProfile> revealed_up_to(int t) const;

private:
    std::vector<EvProfile> evs_;
};

struct SlotRange {
    int first = 0;
    int last = -1;

    int size() const { return last - first + 1; }
    bool contains(int t) const { return first <= t && t <= last; }
    bool operator==(const SlotRange&) const = default;
};

/// H(t): ids of EVs parked at slot t, in input order.
std::vector<int> active_set(std::span<const EvProfile> evs, int t);
/// Row indices instead of ids.
std::vector<int> active_rows(std::span<const EvProfile> evs, int t);

/// W(t) = [t, latest departure among H(t)]; nullopt when nobody is parked.
std::optional<SlotRange> rolling_window(std::span<const EvProfile> evs, int t);

/// Produces the scenario used for a training episode.
using ScenarioSampler = std::function<Scenario(std::uint64_t episode)>;

/// Replays one scenario for every episode.
ScenarioSampler fixed_sampler(Scenario scenario);
/// Draws a new fleet for every episode (seed derived from cfg.seed and the
/// episode index); base load, price and cap are shared.
ScenarioSampler fleet_sampler(FleetConfig cfg, std::vector<double> base_load, PriceModel price, double load_cap);

Scenario make_scenario(const FleetConfig& cfg, std::vector<double> base_load, PriceModel price,
                       double load_cap, int* truncation_count = nullptr);

} // namespace evsched
