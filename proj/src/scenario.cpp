// SPDX-License-Identifier: Apache-2.0
#include "evsched/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace evsched {

namespace {

void check_mass(const std::vector<double>& w, const char* what) {
    if (w.empty())
        throw std::invalid_argument(std::string(what) + ": empty support");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0))
            throw std::invalid_argument(std::string(what) + ": negative weight");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": weights do not sum to 1");
}

std::vector<double> normalised(std::vector<double> w) {
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w)
        x /= sum;
    return w;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

void ArrivalDistribution::validate() const { check_mass(weights, "arrival distribution"); }

ArrivalDistribution ArrivalDistribution::uniform(int horizon) {
    return {std::vector<double>(horizon, 1.0 / horizon)};
}

ArrivalDistribution ArrivalDistribution::point(int horizon, int slot) {
    std::vector<double> w(horizon, 0.0);
    w.at(slot) = 1.0;
    return {w};
}

ArrivalDistribution ArrivalDistribution::evening_peak(int horizon) {
    // relative arrival intensity per hour of day
    static constexpr double kDaily[24] = {0.5, 0.3, 0.2, 0.2, 0.2, 0.3, 0.6, 1.0, 1.5, 1.8, 2.0, 2.2,
                                          2.5, 2.8, 3.2, 4.0, 5.5, 7.0, 7.5, 6.5, 5.0, 3.5, 2.0, 1.0};
    std::vector<double> w(horizon);
    for (int t = 0; t < horizon; ++t)
        w[t] = kDaily[t % 24];
    return {normalised(std::move(w))};
}

void SocDistribution::validate() const {
    check_mass(bin_mass, "SOC distribution");
    if (bin_edges.size() != bin_mass.size() + 1)
        throw std::invalid_argument("SOC distribution: need one more edge than bins");
    for (std::size_t k = 0; k < bin_edges.size(); ++k) {
        if (bin_edges[k] < 0.0 || bin_edges[k] > 1.0)
            throw std::invalid_argument("SOC distribution: edge outside [0,1]");
        if (k > 0 && !(bin_edges[k] > bin_edges[k - 1]))
            throw std::invalid_argument("SOC distribution: edges must be strictly increasing");
    }
}

SocDistribution SocDistribution::mid_centred() {
    SocDistribution d;
    for (int k = 0; k <= 10; ++k)
        d.bin_edges.push_back(k / 10.0);
    d.bin_mass = {0.01, 0.03, 0.08, 0.15, 0.22, 0.22, 0.15, 0.08, 0.04, 0.02};
    return d;
}

void DwellDistribution::validate() const { check_mass(weights, "dwell distribution"); }

DwellDistribution DwellDistribution::uniform(int min_slots, int max_slots) {
    if (min_slots < 1 || max_slots < min_slots)
        throw std::invalid_argument("dwell range must satisfy 1 <= min <= max");
    std::vector<double> w(max_slots, 0.0);
    for (int d = min_slots; d <= max_slots; ++d)
        w[d - 1] = 1.0 / (max_slots - min_slots + 1);
    return {w};
}

EvTypeSpec ev_type_spec(EvType type) {
    switch (type) {
    case EvType::Type1: return {3.2, 36.0};
    case EvType::Type2: return {1.4, 16.0};
    }
    throw std::invalid_argument("unknown EV type");
}

std::string to_string(EvType type) { return type == EvType::Type1 ? "type1" : "type2"; }

EvType parse_ev_type(const std::string& name) {
    if (name == "type1" || name == "Type1" || name == "1")
        return EvType::Type1;
    if (name == "type2" || name == "Type2" || name == "2")
        return EvType::Type2;
    throw std::invalid_argument("unknown EV type '" + name + "'");
}

void FleetConfig::validate() const {
    if (n_evs < 0)
        throw std::invalid_argument("fleet size must be non-negative");
    arrival.validate();
    soc.validate();
    dwell.validate();
}

Fleet sample_fleet(const FleetConfig& cfg, std::uint64_t rng_seed) {
    cfg.validate();
    const int horizon = cfg.horizon();
    const EvTypeSpec spec = ev_type_spec(cfg.ev_type);

    std::mt19937_64 rng(rng_seed);
    std::discrete_distribution<int> arrival(cfg.arrival.weights.begin(), cfg.arrival.weights.end());
    std::discrete_distribution<int> dwell(cfg.dwell.weights.begin(), cfg.dwell.weights.end());
    std::discrete_distribution<int> soc_bin(cfg.soc.bin_mass.begin(), cfg.soc.bin_mass.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Fleet fleet;
    fleet.evs.reserve(cfg.n_evs);
    for (int n = 0; n < cfg.n_evs; ++n) {
        EvProfile ev;
        ev.t_arr = arrival(rng);
        const int duration = dwell(rng) + 1;
        ev.t_dep = std::min(horizon - 1, ev.t_arr + duration - 1);
        const int bin = soc_bin(rng);
        const double lo = cfg.soc.bin_edges[bin];
        const double hi = cfg.soc.bin_edges[bin + 1];
        ev.soc_init = lo + (hi - lo) * unit(rng);
        ev.b_max = spec.b_max;
        ev.battery = spec.battery;
        ev.demand = spec.battery * (1.0 - ev.soc_init);
        const double deliverable = ev.b_max * ev.window_length();
        if (ev.demand > deliverable) {
            ev.demand = deliverable;
            ++fleet.truncation_count;
        }
        fleet.evs.push_back(ev);
    }
    std::stable_sort(fleet.evs.begin(), fleet.evs.end(),
                     [](const EvProfile& a, const EvProfile& b) { return a.t_arr < b.t_arr; });
    for (int n = 0; n < cfg.n_evs; ++n)
        fleet.evs[n].id = n + 1;
    return fleet;
}

std::vector<double> load_base_series(const std::filesystem::path& path, int expected_horizon) {
    std::ifstream in(path);
    if (!in)
        throw BaseLoadError(BaseLoadError::Kind::Io, "cannot open base-load file " + path.string());

    std::vector<double> series;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#')
            continue;
        double value = 0.0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
            throw BaseLoadError(BaseLoadError::Kind::Parse,
                                path.string() + ":" + std::to_string(line_no) + ": not a number: " + text);
        if (value < 0.0)
            throw BaseLoadError(BaseLoadError::Kind::Negative,
                                path.string() + ":" + std::to_string(line_no) + ": negative base load");
        series.push_back(value);
    }
    if (static_cast<int>(series.size()) != expected_horizon)
        throw BaseLoadError(BaseLoadError::Kind::Length,
                            path.string() + ": expected " + std::to_string(expected_horizon) +
                                " values, found " + std::to_string(series.size()));
    return series;
}

EventLog::EventLog(std::vector<EvProfile> evs) : evs_(std::move(evs)) {}

std::vector<ExogenousEvent> EventLog::arrivals_at(int t) const {
    std::vector<ExogenousEvent> out;
    for (const auto& ev : evs_)
        if (ev.t_arr == t)
            out.push_back({ev.id, ev.t_arr, ev.t_dep, ev.demand});
    return out;
}

std::vector<EvProfile> EventLog::revealed_up_to(int t) const {
    std::vector<EvProfile> out;
    std::copy_if(evs_.begin(), evs_.end(), std::back_inserter(out),
                 [t](const EvProfile& ev) { return ev.t_arr <= t; });
    return out;
}

std::vector<int> active_set(std::span<const EvProfile> evs, int t) {
    std::vector<int> ids;
    for (const auto& ev : evs)
        if (ev.parked_at(t))
            ids.push_back(ev.id);
    return ids;
}

std::vector<int> active_rows(std::span<const EvProfile> evs, int t) {
    std::vector<int> rows;
    for (int i = 0; i < static_cast<int>(evs.size()); ++i)
        if (evs[i].parked_at(t))
            rows.push_back(i);
    return rows;
}

std::optional<SlotRange> rolling_window(std::span<const EvProfile> evs, int t) {
    int last = -1;
    for (const auto& ev : evs)
        if (ev.parked_at(t))
            last = std::max(last, ev.t_dep);
    if (last < 0)
        return std::nullopt;
    return SlotRange{t, last};
}

Scenario make_scenario(const FleetConfig& cfg, std::vector<double> base_load, PriceModel price,
                       double load_cap, int* truncation_count) {
    Fleet fleet = sample_fleet(cfg, cfg.seed);
    if (truncation_count)
        *truncation_count = fleet.truncation_count;
    Scenario s;
    s.horizon = cfg.horizon();
    s.base_load = std::move(base_load);
    s.evs = std::move(fleet.evs);
    s.price = price;
    s.load_cap = load_cap;
    s.validate();
    return s;
}

ScenarioSampler fixed_sampler(Scenario scenario) {
    scenario.validate();
    return [s = std::move(scenario)](std::uint64_t) { return s; };
}

ScenarioSampler fleet_sampler(FleetConfig cfg, std::vector<double> base_load, PriceModel price, double load_cap) {
    cfg.validate();
    return [cfg, base = std::move(base_load), price, load_cap](std::uint64_t episode) {
        FleetConfig draw = cfg;
        std::seed_seq seq{cfg.seed, episode, std::uint64_t{0x5eed}};
        std::uint32_t words[2];
        seq.generate(words, words + 2);
        draw.seed = (std::uint64_t{words[0]} << 32) | words[1];
        return make_scenario(draw, base, price, load_cap);
    };
}

} // namespace evsched
