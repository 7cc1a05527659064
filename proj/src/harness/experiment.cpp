// SPDX-License-Identifier: Apache-2.0
#include "evsched/harness/experiment.hpp"

#include "evsched/baselines.hpp"
#include "evsched/rl/schedulers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace evsched::harness {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<double> read_base_load(const ExperimentConfig& cfg) {
    try {
        return load_base_series(cfg.base_load_path, cfg.fleet.horizon());
    } catch (const BaseLoadError& e) {
        throw ConfigError(e.what());
    }
}

ScenarioSampler training_sampler(const ExperimentConfig& cfg, const Scenario& evaluated, std::uint64_t seed) {
    if (cfg.training == TrainingSource::Fixed)
        return fixed_sampler(evaluated);
    FleetConfig fc = cfg.fleet;
    fc.seed = seed;
    return fleet_sampler(fc, evaluated.base_load, evaluated.price, evaluated.load_cap);
}

// Fills the schedule-derived fields. Metrics are only computed for a
// schedule that passed validation.
void finish(RunMetrics& m, const Scenario& scenario, double tol) {
    const ValidationReport report = validate_schedule(m.schedule, scenario, tol);
    m.demand_violation_max = report.max_demand_gap;
    if (!report.ok) {
        m.failed = true;
        m.error = "schedule failed validation: " + report.violations.front().describe();
        return;
    }
    m.total_cost = horizon_cost(m.schedule, scenario);
    m.peak_total_load = peak_total_load(m.schedule, scenario);
    m.per_slot_load.clear();
    for (const SlotLoad& l : slot_loads(m.schedule, scenario))
        m.per_slot_load.push_back(l.total);
}

RunMetrics run_one(const ExperimentConfig& cfg, Algorithm alg, int levels, const Scenario& scenario,
                   std::uint64_t seed, int truncations) {
    RunMetrics m;
    m.algorithm = alg == Algorithm::AEM ? "AEM-" + std::to_string(levels) : to_string(alg);
    m.seed = seed;
    m.truncation_count = truncations;
    m.n_evs = scenario.ev_count();
    double tol = cfg.validation_tol;

    try {
        switch (alg) {
        case Algorithm::EC: {
            const auto t0 = Clock::now();
            m.schedule = ec_schedule(scenario);
            m.wall_time_ms = ms_since(t0);
            break;
        }
        case Algorithm::OA: {
            const auto t0 = Clock::now();
            m.schedule = oa_schedule(scenario, cfg.validation_tol);
            m.wall_time_ms = ms_since(t0);
            break;
        }
        case Algorithm::AEM: {
            QLearnConfig q = cfg.aem;
            q.seed = seed;
            const auto t0 = Clock::now();
            AemResult trained = aem_train(training_sampler(cfg, scenario, seed), q, levels);
            m.train_time_ms = ms_since(t0);
            const auto t1 = Clock::now();
            m.schedule = aem_schedule(trained.table, scenario);
            m.wall_time_ms = ms_since(t1);
            m.episode_rewards = std::move(trained.episode_rewards);
            tol = std::max(tol, trained.table.quantum());
            break;
        }
        case Algorithm::SCA: {
            rl::TrainConfig tc = cfg.sca;
            tc.seed = seed;
            const auto t0 = Clock::now();
            rl::TrainResult trained = rl::train_sca(training_sampler(cfg, scenario, seed), tc);
            m.train_time_ms = ms_since(t0);
            const auto t1 = Clock::now();
            m.schedule = rl::sca_schedule(trained.policy, scenario);
            m.wall_time_ms = ms_since(t1);
            m.convergence = std::move(trained.log);
            break;
        }
        case Algorithm::CALC: {
            rl::TrainConfig tc = cfg.calc;
            tc.seed = seed;
            const auto t0 = Clock::now();
            rl::TrainResult trained = rl::train_calc_stage1(training_sampler(cfg, scenario, seed), tc);
            m.train_time_ms = ms_since(t0);
            const auto t1 = Clock::now();
            m.schedule = rl::calc_schedule(trained.policy, scenario);
            m.wall_time_ms = ms_since(t1);
            m.convergence = std::move(trained.log);
            break;
        }
        }
        finish(m, scenario, tol);
    } catch (const rl::DivergenceError& e) {
        m.failed = true;
        m.error = e.what();
        m.convergence = e.log();
    } catch (const std::exception& e) {
        m.failed = true;
        m.error = e.what();
    }
    return m;
}

} // namespace

Scenario build_scenario(const ExperimentConfig& cfg, std::uint64_t seed, int* truncation_count) {
    FleetConfig fc = cfg.fleet;
    fc.seed = seed;
    return make_scenario(fc, read_base_load(cfg), cfg.price, cfg.load_cap, truncation_count);
}

std::vector<RunMetrics> run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::vector<double> base = read_base_load(cfg);

    std::vector<RunMetrics> out;
    for (std::uint64_t seed : cfg.seeds) {
        FleetConfig fc = cfg.fleet;
        fc.seed = seed;
        int truncations = 0;
        Scenario scenario;
        try {
            scenario = make_scenario(fc, base, cfg.price, cfg.load_cap, &truncations);
        } catch (const std::exception& e) {
            for (Algorithm alg : cfg.algorithms) {
                RunMetrics m;
                m.algorithm = to_string(alg);
                m.seed = seed;
                m.failed = true;
                m.error = std::string("scenario construction failed: ") + e.what();
                out.push_back(std::move(m));
            }
            continue;
        }
        for (Algorithm alg : cfg.algorithms) {
            if (alg == Algorithm::AEM) {
                for (int levels : cfg.aem_levels)
                    out.push_back(run_one(cfg, alg, levels, scenario, seed, truncations));
            } else {
                out.push_back(run_one(cfg, alg, 0, scenario, seed, truncations));
            }
        }
    }
    return out;
}

SweepParam parse_sweep_param(const std::string& name) {
    if (name == "discount")
        return SweepParam::Discount;
    if (name == "beta_a")
        return SweepParam::BetaA;
    if (name == "n_evs")
        return SweepParam::NEvs;
    if (name == "aem_levels")
        return SweepParam::AemLevels;
    throw ConfigError("unknown sweep parameter '" + name + "' (expected discount, beta_a, n_evs or aem_levels)");
}

std::string to_string(SweepParam p) {
    switch (p) {
    case SweepParam::Discount: return "discount";
    case SweepParam::BetaA: return "beta_a";
    case SweepParam::NEvs: return "n_evs";
    case SweepParam::AemLevels: return "aem_levels";
    }
    return "?";
}

ExperimentConfig with_param(const ExperimentConfig& cfg, SweepParam param, double value) {
    ExperimentConfig c = cfg;
    auto whole = [&](const char* what) {
        if (value != std::floor(value) || value < 0)
            throw ConfigError(std::string(what) + " values must be non-negative integers");
        return static_cast<int>(value);
    };
    switch (param) {
    case SweepParam::Discount:
        c.sca.discount = value;
        c.calc.discount = value;
        break;
    case SweepParam::BetaA:
        c.sca.beta_a = value;
        c.calc.beta_a = value;
        break;
    case SweepParam::NEvs:
        c.fleet.n_evs = whole("n_evs");
        break;
    case SweepParam::AemLevels:
        c.aem_levels = {whole("aem_levels")};
        break;
    }
    return c;
}

std::vector<SweepGroup> sweep(const ExperimentConfig& cfg, SweepParam param, const std::vector<double>& values) {
    auto uses = [&](Algorithm a) {
        return std::find(cfg.algorithms.begin(), cfg.algorithms.end(), a) != cfg.algorithms.end();
    };
    bool applicable = false;
    switch (param) {
    case SweepParam::Discount:
    case SweepParam::BetaA: applicable = uses(Algorithm::SCA) || uses(Algorithm::CALC); break;
    case SweepParam::NEvs: applicable = !cfg.algorithms.empty(); break;
    case SweepParam::AemLevels: applicable = uses(Algorithm::AEM); break;
    }
    if (!applicable)
        throw ConfigError("sweep parameter " + to_string(param) + " is not used by any configured algorithm");
    if (values.empty())
        throw ConfigError("sweep needs at least one value");

    std::vector<ExperimentConfig> configs;
    for (double v : values) {
        configs.push_back(with_param(cfg, param, v));
        configs.back().validate();
    }
    std::vector<SweepGroup> groups;
    for (std::size_t k = 0; k < values.size(); ++k)
        groups.push_back({values[k], run_experiment(configs[k])});
    return groups;
}

} // namespace evsched::harness
