// SPDX-License-Identifier: Apache-2.0
#include "evsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace evsched {

void QLearnConfig::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw std::invalid_argument("Q-learning rate must lie in (0, 1]");
    if (!(discount >= 0.0 && discount <= 1.0))
        throw std::invalid_argument("Q-learning discount must lie in [0, 1]");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
        throw std::invalid_argument("exploration rates must lie in [0, 1]");
    if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
        throw std::invalid_argument("epsilon decay fraction must lie in (0, 1]");
    if (episodes < 1)
        throw std::invalid_argument("Q-learning needs at least one episode");
}

double QLearnConfig::epsilon(int episode) const {
    const double span = epsilon_decay_fraction * episodes;
    const double frac = std::min(1.0, episode / std::max(1.0, span));
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

QTable::QTable(int states, int levels) : states_(states), levels_(levels) {
    if (states < 1)
        throw std::invalid_argument("Q-table needs at least one state");
    if (levels < 2)
        throw std::invalid_argument("Q-table needs at least two action levels");
    values_.assign(static_cast<std::size_t>(states) * levels, 0.0);
    visits_.assign(values_.size(), 0);
}

int QTable::greedy(int s) const {
    const std::size_t base = index(s, 0);
    int best = -1;
    for (int a = 0; a < levels_; ++a) {
        if (visits_[base + a] == 0)
            continue;
        if (best < 0 || values_[base + a] > values_[base + best])
            best = a;
    }
    if (best >= 0)
        return best;
    return static_cast<int>(std::max_element(values_.begin() + base, values_.begin() + base + levels_) -
                            (values_.begin() + base));
}

double QTable::max_value(int s) const { return value(s, greedy(s)); }

bool QTable::update(int s, int a, double reward, int next_state, double alpha, double gamma) {
    const double target = reward + (next_state >= 0 ? gamma * max_value(next_state) : 0.0);
    double& q = values_[index(s, a)];
    double next = q + alpha * (target - q);
    ++visits_[index(s, a)];
    if (!std::isfinite(next) || std::abs(next) > kValueBound) {
        next = std::isnan(next) ? q : std::clamp(next, -kValueBound, kValueBound);
        q = next;
        ++clamp_events;
        return false;
    }
    q = next;
    return true;
}

int QTable::state_of(double mean_soc, double base_load) const {
    const int sb = std::clamp(static_cast<int>(std::floor(mean_soc * soc_bins)), 0, soc_bins - 1);
    const double rel = load_reference > 0.0 ? base_load / load_reference : 0.0;
    const int lb = std::clamp(static_cast<int>(std::floor(rel * load_bins)), 0, load_bins - 1);
    return std::min(states_ - 1, sb * load_bins + lb);
}

void QTable::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write Q-table to " + path.string());
    out << "# evsched qtable v1: states levels soc_bins load_bins b_max load_reference\n";
    out << std::setprecision(17);
    out << states_ << ' ' << levels_ << ' ' << soc_bins << ' ' << load_bins << ' ' << b_max << ' '
        << load_reference << '\n';
    for (int s = 0; s < states_; ++s)
        for (int a = 0; a < levels_; ++a)
            if (visits(s, a) > 0 || value(s, a) != 0.0)
                out << s << ' ' << a << ' ' << value(s, a) << ' ' << visits(s, a) << '\n';
    if (!out)
        throw std::runtime_error("error writing Q-table to " + path.string());
}

QTable QTable::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open Q-table " + path.string());
    std::string line;
    auto next_line = [&]() {
        while (std::getline(in, line))
            if (!line.empty() && line.front() != '#')
                return true;
        return false;
    };
    if (!next_line())
        throw std::runtime_error(path.string() + ": missing Q-table dimensions");
    std::istringstream dims(line);
    int states = 0, levels = 0;
    QTable proto(1, 2);
    if (!(dims >> states >> levels >> proto.soc_bins >> proto.load_bins >> proto.b_max >> proto.load_reference))
        throw std::runtime_error(path.string() + ": malformed Q-table dimensions");
    QTable table(states, levels);
    table.soc_bins = proto.soc_bins;
    table.load_bins = proto.load_bins;
    table.b_max = proto.b_max;
    table.load_reference = proto.load_reference;
    while (next_line()) {
        std::istringstream row(line);
        int s = 0, a = 0;
        double v = 0.0;
        std::uint32_t n = 0;
        if (!(row >> s >> a >> v >> n) || s < 0 || s >= states || a < 0 || a >= levels)
            throw std::runtime_error(path.string() + ": malformed Q-table entry: " + line);
        table.values_[table.index(s, a)] = v;
        table.visits_[table.index(s, a)] = n;
    }
    return table;
}

int aem_state(const QTable& table, const FleetSim& sim) {
    const auto& parked = sim.parked();
    double mean = 0.0;
    for (int row : parked)
        mean += sim.soc(row);
    if (!parked.empty())
        mean /= static_cast<double>(parked.size());
    return table.state_of(mean, sim.base_load());
}

namespace {

std::vector<double> level_request(const FleetSim& sim, const QTable& table, int action) {
    int charging = 0;
    for (int row : sim.parked())
        if (sim.residual(row) > 0.0)
            ++charging;
    const double q = table.quantum();
    return sim.allocate_edf(action * q * charging, q);
}

} // namespace

AemResult aem_train(const ScenarioSampler& sampler, const QLearnConfig& cfg, int levels, RewardMode mode) {
    cfg.validate();
    if (levels < 2)
        throw std::invalid_argument("AEM needs at least two action levels");

    constexpr int kSocBins = 20;
    constexpr int kLoadBins = 10;
    AemResult result{QTable(kSocBins * kLoadBins, levels), {}};
    QTable& table = result.table;
    table.soc_bins = kSocBins;
    table.load_bins = kLoadBins;

    {
        const Scenario first = sampler(0);
        double b_max = 0.0;
        for (const auto& ev : first.evs)
            b_max = std::max(b_max, ev.b_max);
        table.b_max = b_max > 0.0 ? b_max : 1.0;
        const double peak = first.base_load.empty()
                                ? 0.0
                                : *std::max_element(first.base_load.begin(), first.base_load.end());
        table.load_reference = peak > 0.0 ? peak * (1.0 + 1e-9) : 1.0;
    }

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> any_action(0, levels - 1);

    result.episode_rewards.reserve(cfg.episodes);
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        FleetSim sim(sampler(static_cast<std::uint64_t>(ep)));
        const double eps = cfg.epsilon(ep);
        double total = 0.0;
        sim.skip_idle();
        if (sim.finished()) {
            result.episode_rewards.push_back(0.0);
            continue;
        }
        int s = aem_state(table, sim);
        while (!sim.finished()) {
            const int a = unit(rng) < eps ? any_action(rng) : table.greedy(s);
            const auto step = sim.commit(level_request(sim, table, a), mode);
            total += step.reward;
            sim.skip_idle();
            if (sim.finished()) {
                table.update(s, a, step.reward, -1, cfg.learning_rate, cfg.discount);
            } else {
                const int next = aem_state(table, sim);
                table.update(s, a, step.reward, next, cfg.learning_rate, cfg.discount);
                s = next;
            }
        }
        result.episode_rewards.push_back(total);
    }
    return result;
}

ChargingSchedule aem_schedule(const QTable& table, const Scenario& scenario) {
    FleetSim sim(scenario);
    sim.skip_idle();
    while (!sim.finished()) {
        const int a = table.greedy(aem_state(table, sim));
        sim.commit(level_request(sim, table, a));
        sim.skip_idle();
    }
    return sim.schedule();
}

} // namespace evsched
