// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "evsched/baselines.hpp"
#include "evsched/harness/config.hpp"
#include "evsched/harness/experiment.hpp"
#include "evsched/harness/report.hpp"
#include "evsched/rl/critic.hpp"
#include "evsched/rl/policy.hpp"
#include "evsched/rl/schedulers.hpp"
#include "evsched/rl/trainer.hpp"
#include "evsched/solvers.hpp"
#include "support.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace evsched;
using namespace evsched::harness;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto start = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (!o.pass)
        ++g_failures;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

fs::path source_path(const std::string& rel) { return fs::path(EVSCHED_SOURCE_DIR) / rel; }

ExperimentConfig shipped_config() {
    ExperimentConfig cfg = load_config(source_path("configs/type1_40ev.ini"));
    cfg.base_load_path = source_path("data/base_load_synthetic_48.txt");
    cfg.output_dir = fs::current_path() / "acceptance_results";
    return cfg;
}

// Short training budgets for the many-small-scenario checks.
rl::TrainConfig quick_train(std::uint64_t seed) {
    rl::TrainConfig c;
    c.k_max = 3000;
    c.n_workers = 2;
    c.actor_hidden = 32;
    c.critic_hidden = 32;
    c.seed = seed;
    return c;
}

QLearnConfig quick_aem(std::uint64_t seed) {
    QLearnConfig q;
    q.episodes = 200;
    q.seed = seed;
    return q;
}

struct AllSchedules {
    ChargingSchedule ec, oa, aem, sca, calc;
    double aem_quantum = 0.0;
};

AllSchedules every_algorithm(const Scenario& s, std::uint64_t seed) {
    AllSchedules out;
    out.ec = ec_schedule(s);
    out.oa = oa_schedule(s);
    const auto aem = aem_train(fixed_sampler(s), quick_aem(seed), 33);
    out.aem = aem_schedule(aem.table, s);
    out.aem_quantum = aem.table.quantum();
    out.sca = rl::sca_schedule(rl::train_sca(fixed_sampler(s), quick_train(seed)).policy, s);
    out.calc = rl::calc_schedule(rl::train_calc_stage1(fixed_sampler(s), quick_train(seed)).policy, s);
    return out;
}

double rel_error(const rl::Vec& a, const rl::Vec& b) {
    return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

template <class F>
rl::Vec central_difference(rl::Vec theta, F&& f, double h = 1e-5) {
    rl::Vec g(theta.size());
    for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double keep = theta[k];
        theta[k] = keep + h;
        const double up = f(theta);
        theta[k] = keep - h;
        const double down = f(theta);
        theta[k] = keep;
        g[k] = (up - down) / (2.0 * h);
    }
    return g;
}

struct AlgStats {
    int runs = 0;
    double cost = 0.0;
    double peak = 0.0;
    double wall = 0.0;
    double end_to_end = 0.0;
};

std::map<std::string, AlgStats> means(const std::vector<RunMetrics>& runs) {
    std::map<std::string, AlgStats> by;
    for (const auto& m : runs) {
        if (m.failed)
            continue;
        AlgStats& a = by[m.algorithm];
        ++a.runs;
        a.cost += m.total_cost;
        a.peak += m.peak_total_load;
        a.wall += m.wall_time_ms;
        a.end_to_end += m.wall_time_ms + m.train_time_ms;
    }
    for (auto& [name, a] : by) {
        (void)name;
        a.cost /= a.runs;
        a.peak /= a.runs;
        a.wall /= a.runs;
        a.end_to_end /= a.runs;
    }
    return by;
}

std::string failed_runs(const std::vector<RunMetrics>& runs) {
    std::string out;
    for (const auto& m : runs)
        if (m.failed)
            out += " " + m.algorithm + "/" + std::to_string(m.seed) + " failed (" + m.error + ");";
    return out;
}

/// Largest fall of the series below its running maximum.
double max_drawdown(const std::vector<rl::EpisodeLog>& log) {
    double peak = -std::numeric_limits<double>::infinity(), worst = 0.0;
    for (const auto& e : log) {
        peak = std::max(peak, e.moving_reward);
        worst = std::max(worst, peak - e.moving_reward);
    }
    return worst;
}

/// Means of consecutive non-overlapping blocks of episode rewards over the
/// last quarter of training.
std::vector<double> last_quartile_blocks(const std::vector<rl::EpisodeLog>& log, int block) {
    const std::size_t from = log.size() - log.size() / 4;
    std::vector<double> out;
    for (std::size_t k = from; k + static_cast<std::size_t>(block) <= log.size(); k += static_cast<std::size_t>(block)) {
        double sum = 0.0;
        for (int j = 0; j < block; ++j)
            sum += log[k + static_cast<std::size_t>(j)].reward;
        out.push_back(sum / block);
    }
    return out;
}

struct SlopeCi {
    double slope = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

SlopeCi ols_slope_ci(const std::vector<double>& y) {
    const std::size_t n = y.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += static_cast<double>(k);
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (k - mx) * (k - mx);
        sxy += (k - mx) * (y[k] - my);
    }
    SlopeCi ci;
    ci.slope = sxy / sxx;
    const double intercept = my - ci.slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double r = y[k] - intercept - ci.slope * static_cast<double>(k);
        sse += r * r;
    }
    const double se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t t(static_cast<double>(n - 2));
    const double q = boost::math::quantile(boost::math::complement(t, 0.025));
    ci.lo = ci.slope - q * se;
    ci.hi = ci.slope + q * se;
    return ci;
}

std::string without_wall_time(const std::string& csv) {
    std::istringstream in(csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ','))
            cells.push_back(c);
        if (cells.size() > 4)
            cells[4].clear();
        for (std::size_t k = 0; k < cells.size(); ++k)
            out << (k ? "," : "") << cells[k];
        out << '\n';
    }
    return out.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main() {
    std::printf("acceptance criteria\n");

    report(1, "oracle dominance", [] {
        const auto start = Clock::now();
        std::mt19937_64 rng(1001);
        int worse = 0;
        double tightest = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 50; ++k) {
            const Scenario s = evsched::testing::random_scenario(rng, 5, 12);
            const double off = solve_offline(s).objective;
            const auto all = every_algorithm(s, static_cast<std::uint64_t>(k) + 1);
            for (const auto* sched : {&all.ec, &all.oa, &all.aem, &all.sca, &all.calc}) {
                const double gap = horizon_cost(*sched, s) - off;
                tightest = std::min(tightest, gap);
                if (gap < -1e-6)
                    ++worse;
            }
        }
        const double secs = seconds_since(start);
        const bool ok = worse == 0 && secs < 120.0;
        return Outcome{ok, std::to_string(worse) + " of 250 schedules beat the offline optimum by >1e-6; min gap " +
                               fmt("%.3g", tightest) + "; " + fmt("%.1f", secs) + " s of 120"};
    });

    report(2, "brute-force equivalence", [] {
        const auto start = Clock::now();
        std::mt19937_64 rng(2002);
        int outside = 0;
        double worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            Scenario s = evsched::testing::random_scenario(rng, 3, 6, 0.5);
            for (auto& ev : s.evs)
                ev.demand = std::floor(ev.demand * 10.0 + 1e-9) / 10.0;
            const auto grid = evsched::testing::grid_optimum(s, 0.1);
            const double off = solve_offline(s).objective;
            // The grid optimum is feasible, so it bounds the continuous optimum from above.
            const bool ok = off <= grid.cost + 1e-6 && grid.cost - off <= grid.slack;
            worst = std::max(worst, (grid.cost - off) / std::max(grid.slack, 1e-12));
            outside += !ok;
        }
        const double secs = seconds_since(start);
        return Outcome{outside == 0 && secs < 300.0, std::to_string(outside) +
                                                         " of 20 outside the grid slack; largest gap/slack " +
                                                         fmt("%.3f", worst) + "; " + fmt("%.1f", secs) + " s of 300"};
    });

    report(3, "rolling consistency", [] {
        const auto start = Clock::now();
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            std::mt19937_64 rng(3000 + seed);
            const Scenario s = evsched::testing::random_scenario(rng, 1, 24);
            const double off = solve_offline(s, {1e-10, 200000}).objective;
            const double oa = horizon_cost(oa_schedule(s, 1e-10), s);
            worst = std::max(worst, std::abs(oa - off));
        }
        const double secs = seconds_since(start);
        return Outcome{worst <= 1e-5 && secs < 60.0,
                       "max |OA - offline| " + fmt("%.3g", worst) + " of 1e-05; " + fmt("%.1f", secs) + " s of 60"};
    });

    report(4, "gradient checks", [] {
        const auto start = Clock::now();
        std::mt19937_64 rng(4004);
        std::normal_distribution<double> g(0.0, 1.0);
        auto rv = [&](int n) {
            rl::Vec v(n);
            for (int k = 0; k < n; ++k)
                v[k] = g(rng);
            return v;
        };
        double worst_actor = 0.0, worst_critic = 0.0;
        for (int net = 0; net < 10; ++net) {
            rl::PolicyParams p(5, 3, 8);
            rl::init_uniform(p, 40 + net, -0.5);
            const rl::Vec s = rv(5), a = rv(3);
            const rl::Vec num = central_difference(p.theta, [&](const rl::Vec& th) {
                rl::PolicyParams q = p;
                q.theta = th;
                return rl::log_policy(q, s, a);
            });
            worst_actor = std::max(worst_actor, rel_error(rl::log_policy_gradient(p, s, a), num));

            rl::CriticParams c(5, 3, 8);
            rl::init_uniform(c, 60 + net);
            const rl::Vec cnum = central_difference(c.theta, [&](const rl::Vec& th) {
                rl::CriticParams q = c;
                q.theta = th;
                return rl::critic_value(q, s, a);
            });
            worst_critic = std::max(worst_critic, rel_error(rl::critic_gradient(c, s, a), cnum));
        }
        const double secs = seconds_since(start);
        return Outcome{worst_actor < 1e-4 && worst_critic < 1e-4 && secs < 30.0,
                       "max relative error actor " + fmt("%.2e", worst_actor) + ", critic " +
                           fmt("%.2e", worst_critic) + " (limit 1e-4); " + fmt("%.1f", secs) + " s of 30"};
    });

    // Criteria 5, 6, 7, 9 and 12 share the run of the shipped scenario.
    const ExperimentConfig shipped = shipped_config();
    std::vector<RunMetrics> shipped_runs;
    double shipped_secs = 0.0;
    std::string shipped_error;
    try {
        const auto start = Clock::now();
        shipped_runs = run_experiment(shipped);
        shipped_secs = seconds_since(start);
        emit_report(shipped_runs, shipped.output_dir);
        std::printf("shipped scenario, %zu seeds, %.1f s\n%s", shipped.seeds.size(), shipped_secs,
                    summary_text(shipped_runs).c_str());
    } catch (const std::exception& e) {
        shipped_error = e.what();
    }
    const auto by = means(shipped_runs);
    auto stat = [&](const std::string& name) -> const AlgStats& {
        const auto it = by.find(name);
        if (it == by.end())
            throw std::runtime_error("no successful " + name + " runs" + failed_runs(shipped_runs) + shipped_error);
        return it->second;
    };
    const std::string aem33 = "AEM-33";

    report(5, "cost ordering", [&] {
        const double ec = stat("EC").cost, oa = stat("OA").cost, sca = stat("SCA").cost, aem = stat(aem33).cost;
        const bool budget = shipped.sca.k_max <= 200000 && shipped.calc.k_max <= 200000;
        const bool seeds = shipped.seeds.size() >= 5;
        const bool ok = ec > oa && oa > sca && sca < aem && budget && seeds && shipped_secs <= 1800.0;
        std::string broken;
        for (const auto& [holds, what] : {std::pair{ec > oa, "EC>OA"}, std::pair{oa > sca, "OA>SCA"},
                                          std::pair{sca < aem, "SCA<AEM-33"}})
            if (!holds)
                broken += std::string(" ") + what;
        return Outcome{ok, "mean cost EC " + fmt("%.3f", ec) + ", OA " + fmt("%.3f", oa) + ", SCA " +
                               fmt("%.3f", sca) + ", AEM-33 " + fmt("%.3f", aem) + "; violated:" +
                               (broken.empty() ? std::string(" none") : broken) + "; " + std::to_string(shipped.seeds.size()) +
                               " seeds, run " + fmt("%.0f", shipped_secs) + " s of 1800" +
                               failed_runs(shipped_runs)};
    });

    report(6, "CALC gap", [&] {
        const double sca = stat("SCA").cost, calc = stat("CALC").cost, aem = stat(aem33).cost;
        const bool ok = calc <= 1.15 * sca && calc < aem;
        return Outcome{ok, "CALC/SCA " + fmt("%.4f", calc / sca) + " (limit 1.15), CALC " + fmt("%.3f", calc) +
                               " vs AEM-33 " + fmt("%.3f", aem)};
    });

    report(7, "peak-load ordering", [&] {
        double top = 0.0;
        std::string top_name;
        for (const auto& [name, a] : by)
            if (a.peak > top) {
                top = a.peak;
                top_name = name;
            }
        const double ec = stat("EC").peak, sca = stat("SCA").peak, calc = stat("CALC").peak;
        const bool ok = ec >= top && calc <= sca && shipped.seeds.size() >= 5;
        return Outcome{ok, "mean peak EC " + fmt("%.3f", ec) + " (highest: " + top_name + "), CALC " +
                               fmt("%.4f", calc) + " vs SCA " + fmt("%.4f", sca) + " kWh"};
    });

    report(8, "AEM quantization trend", [] {
        ExperimentConfig cfg = shipped_config();
        cfg.fleet.n_evs = 10;
        cfg.algorithms = {Algorithm::AEM};
        cfg.aem_levels = {33, 3300};
        cfg.output_dir = fs::current_path() / "acceptance_results_aem";
        const auto start = Clock::now();
        const auto runs = run_experiment(cfg);
        const double secs = seconds_since(start);
        emit_report(runs, cfg.output_dir);
        const auto m = means(runs);
        const auto& a = m.at("AEM-33");
        const auto& b = m.at("AEM-3300");
        const bool ok = b.cost <= a.cost && b.wall >= a.wall && secs < 600.0;
        return Outcome{ok, "mean cost " + fmt("%.4f", a.cost) + " -> " + fmt("%.4f", b.cost) + ", wall ms " +
                               fmt("%.3f", a.wall) + " -> " + fmt("%.3f", b.wall) + " for levels 33 -> 3300; " +
                               fmt("%.0f", secs) + " s of 600" + failed_runs(runs)};
    });

    report(9, "convergence", [&] {
        if (shipped.sca.discount != 0.01 || shipped.sca.beta_a != 1e-4)
            return Outcome{false, "shipped SCA settings are not discount 0.01, beta_a 1e-4"};
        std::map<std::uint64_t, const RunMetrics*> base;
        for (const auto& m : shipped_runs)
            if (m.algorithm == "SCA" && !m.failed)
                base[m.seed] = &m;
        if (base.size() < shipped.seeds.size())
            return Outcome{false, "missing SCA training logs"};

        // Slope of the seed-averaged block means over the last quarter.
        const int block = shipped.sca.moving_window;
        std::vector<std::vector<double>> per_seed;
        std::size_t len = std::numeric_limits<std::size_t>::max();
        for (const auto& [seed, m] : base) {
            (void)seed;
            per_seed.push_back(last_quartile_blocks(m->convergence, block));
            len = std::min(len, per_seed.back().size());
        }
        std::vector<double> avg(len, 0.0);
        for (const auto& s : per_seed)
            for (std::size_t k = 0; k < len; ++k)
                avg[k] += s[k] / static_cast<double>(per_seed.size());
        if (len < 3)
            return Outcome{false, "too few blocks in the last quartile"};
        const SlopeCi ci = ols_slope_ci(avg);
        const bool flat = ci.lo <= 0.0 && 0.0 <= ci.hi;

        // Same seeds with beta_a = 1e-3.
        ExperimentConfig fast = shipped;
        fast.algorithms = {Algorithm::SCA};
        fast.sca.beta_a = 1e-3;
        const auto runs = run_experiment(fast);
        double dd_slow = 0.0, dd_fast = 0.0;
        int matched = 0;
        for (const auto& m : runs) {
            if (m.failed || !base.count(m.seed))
                continue;
            dd_fast += max_drawdown(m.convergence);
            dd_slow += max_drawdown(base[m.seed]->convergence);
            ++matched;
        }
        if (matched == 0)
            return Outcome{false, "no matched beta_a = 1e-3 runs" + failed_runs(runs)};
        dd_fast /= matched;
        dd_slow /= matched;
        const bool rougher = dd_fast > dd_slow;
        return Outcome{flat && rougher, "last-quartile slope " + fmt("%.3g", ci.slope) + " per block, 95% CI [" +
                                            fmt("%.3g", ci.lo) + ", " + fmt("%.3g", ci.hi) + "] over " +
                                            std::to_string(len) + " blocks; mean max drawdown beta_a 1e-3 " +
                                            fmt("%.4f", dd_fast) + " vs 1e-4 " + fmt("%.4f", dd_slow) + " on " +
                                            std::to_string(matched) + " seeds" + failed_runs(runs)};
    });

    report(10, "feasibility suite", [] {
        const auto start = Clock::now();
        std::mt19937_64 rng(10010);
        int bad = 0;
        for (int k = 0; k < 100; ++k) {
            const Scenario s = evsched::testing::random_scenario(rng, 8, 24);
            const auto all = every_algorithm(s, static_cast<std::uint64_t>(k) + 1);
            bad += !validate_schedule(all.ec, s, 1e-6).ok;
            bad += !validate_schedule(all.oa, s, 1e-6).ok;
            bad += !validate_schedule(all.aem, s, all.aem_quantum).ok;
            bad += !validate_schedule(all.sca, s, 1e-6).ok;
            bad += !validate_schedule(all.calc, s, 1e-6).ok;
        }
        const double secs = seconds_since(start);
        return Outcome{bad == 0 && secs < 300.0,
                       std::to_string(bad) + " of 500 schedules invalid; " + fmt("%.1f", secs) + " s of 300"};
    });

    report(11, "determinism", [] {
        ExperimentConfig cfg = shipped_config();
        cfg.fleet.n_evs = 12;
        cfg.seeds = {1, 2};
        cfg.aem.episodes = 300;
        cfg.sca.k_max = 5000;
        cfg.calc.k_max = 5000;
        const fs::path a = fs::current_path() / "acceptance_det_a", b = fs::current_path() / "acceptance_det_b";
        emit_report(run_experiment(cfg), a);
        emit_report(run_experiment(cfg), b);
        const bool same_csv = without_wall_time(slurp(a / "metrics.csv")) == without_wall_time(slurp(b / "metrics.csv"));

        // Free-running workers: the recorded interleaving reproduces the run.
        const auto sampler = fleet_sampler(cfg.fleet, load_base_series(cfg.base_load_path, cfg.fleet.horizon()),
                                           cfg.price, cfg.load_cap);
        rl::TrainConfig t = cfg.sca;
        t.ordering = rl::Ordering::Free;
        t.n_workers = 4;
        const auto run = rl::train_sca(sampler, t);
        const auto again = rl::replay(sampler, rl::sca_task_for(sampler, t.reward), t, run.pushes);
        const bool replayed = again.policy.theta == run.policy.theta && again.critic.theta() == run.critic.theta();
        return Outcome{same_csv && replayed, std::string("metrics.csv ") + (same_csv ? "identical" : "DIFFERS") +
                                                 " across runs; 4-worker replay of " +
                                                 std::to_string(run.pushes.size()) + " pushes " +
                                                 (replayed ? "bit-exact" : "DIFFERS")};
    });

    report(12, "runtime ordering", [&] {
        const bool matched = shipped.sca.k_max == shipped.calc.k_max && shipped.sca.n_workers == shipped.calc.n_workers;
        const double sca = stat("SCA").end_to_end, calc = stat("CALC").end_to_end;
        return Outcome{matched && calc < sca, "mean end-to-end ms CALC " + fmt("%.0f", calc) + " vs SCA " +
                                                  fmt("%.0f", sca) + (matched ? "" : "; budgets differ")};
    });

    std::printf("%d of 12 criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
