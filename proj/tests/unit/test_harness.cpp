// SPDX-License-Identifier: Apache-2.0
#include "evsched/harness/config.hpp"
#include "evsched/harness/experiment.hpp"
#include "evsched/harness/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace evsched;
using namespace evsched::harness;
namespace fs = std::filesystem;

namespace {

const std::string kBase = (fs::path(EVSCHED_SOURCE_DIR) / "data/base_load_synthetic_48.txt").string();

std::string ini(const std::string& algorithms, const std::string& extra = "", int n_evs = 8,
                const std::string& seeds = "1") {
    std::ostringstream s;
    s << "[scenario]\nn_evs = " << n_evs << "\nbase_load_path = " << kBase << "\nload_cap_kwh = 150\n"
      << "[run]\nalgorithms = " << algorithms << "\nseeds = " << seeds << "\noutput_dir = unused\n"
      << "[aem]\nepisodes = 30\n"
      << "[sca]\nk_max_steps = 600\nactor_hidden_units = 8\ncritic_hidden_units = 8\n"
      << "[calc]\nk_max_steps = 600\nactor_hidden_units = 8\ncritic_hidden_units = 8\n"
      << "[price]\n";
    // Extra "[section]\nkey = value" blocks merge into the sections above.
    std::string text = s.str();
    std::istringstream in(extra);
    std::string line, section;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '[') {
            section = line;
            if (text.find(section + "\n") == std::string::npos)
                text += section + "\n";
            continue;
        }
        const auto at = text.find(section + "\n") + section.size() + 1;
        text.insert(at, line + "\n");
    }
    return text;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("evsched_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// metrics.csv with the wall-time column blanked.
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
            cells[4] = "";
        for (std::size_t k = 0; k < cells.size(); ++k)
            out << (k ? "," : "") << cells[k];
        out << '\n';
    }
    return out.str();
}

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " \"" + std::string(EVSCHED_CLI_PATH) + "\" " + args + " > /dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

} // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_config(ini("EC, oa, AEM", "", 12, "3, 4"));
    CHECK(cfg.fleet.n_evs == 12);
    CHECK(cfg.algorithms == std::vector<Algorithm>{Algorithm::EC, Algorithm::OA, Algorithm::AEM});
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.load_cap == 150.0);
    CHECK(cfg.price.k0 == 0.1);
    CHECK(cfg.price.k1 == 0.001);
    CHECK(cfg.aem.episodes == 30);
    CHECK(cfg.sca.k_max == 600);
    CHECK(cfg.sca.discount == 0.01);
    CHECK(cfg.training == TrainingSource::Fresh);

    std::string text = ini("SCA", "[price]\nk0_per_kwh = 0.2\n[sca]\nreward = per-ev\ncritic = compatible\nordering = free\n");
    const auto at = text.find("k_max_steps = 600");
    text.replace(at, 17, "k_max_steps = 2e5");
    const auto more = parse_config(text);
    CHECK(more.price.k0 == 0.2);
    CHECK(more.sca.k_max == 200000);
    CHECK(more.sca.reward == RewardMode::PaperEq13);
    CHECK(more.sca.critic == rl::CriticKind::Compatible);
    CHECK(more.sca.ordering == rl::Ordering::Free);
}

TEST_CASE("config errors") {
    CHECK_THROWS_AS(parse_config(ini("EC", "[run]\nbogus = 1\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("EC", "[run]\nseeds = 2\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("EC", "[mystery]\nx = 1\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("XYZ")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("EC", "", 8, "")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("SCA", "[sca]\ndiscount = 1.5\n")), ConfigError);
    CHECK_THROWS_AS(parse_config(ini("SCA", "[sca]\nk_max_steps = 2.5\n")), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario]\nn_evs = 4\n[run]\nalgorithms = EC\nseeds = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[scenario\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/evsched.ini"), ConfigError);

    auto cfg = parse_config(ini("EC"));
    cfg.base_load_path = "/nonexistent/base.txt";
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("shipped configs parse") {
    for (const auto& entry : fs::directory_iterator(fs::path(EVSCHED_SOURCE_DIR) / "configs"))
        if (entry.path().extension() == ".ini") {
            CAPTURE(entry.path().string());
            CHECK_NOTHROW(load_config(entry.path()));
        }
}

TEST_CASE("one eager run gives one metrics row") {
    const auto runs = run_experiment(parse_config(ini("EC")));
    REQUIRE(runs.size() == 1);
    const RunMetrics& m = runs[0];
    CHECK_FALSE(m.failed);
    CHECK(m.wall_time_ms > 0.0);
    CHECK(m.per_slot_load.size() == 48);
    CHECK(m.demand_violation_max <= 1e-6);

    const fs::path dir = fresh_dir("one_ec");
    emit_report(runs, dir);
    const std::string csv = slurp(dir / "metrics.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
    CHECK(csv.rfind(kMetricsHeader, 0) == 0);
    CHECK(fs::exists(dir / "summary.txt"));
    CHECK_FALSE(fs::exists(dir / "failures.csv"));
}

TEST_CASE("reported cost matches the stored schedule exactly") {
    auto cfg = parse_config(ini("EC, OA, AEM, SCA, CALC"));
    const auto runs = run_experiment(cfg);
    const fs::path dir = fresh_dir("consistency");
    emit_report(runs, dir);
    const Scenario s = build_scenario(cfg, 1);
    const auto reread = read_metrics_csv(dir / "metrics.csv");
    REQUIRE(reread.size() == runs.size());
    for (const auto& m : reread) {
        CAPTURE(m.algorithm);
        const ChargingSchedule sched = read_schedule_csv(dir / ("schedule_" + m.algorithm + "_1.csv"));
        CHECK(horizon_cost(sched, s) == m.total_cost);
        CHECK(peak_total_load(sched, s) == m.peak_total_load);
        const double tol = m.algorithm.rfind("AEM", 0) == 0 ? 3.2 / 32 : 1e-6;
        CHECK(validate_schedule(sched, s, tol).ok);
    }
    CHECK(fs::exists(dir / "convergence_SCA_1.csv"));
    CHECK(fs::exists(dir / "convergence_CALC_1.csv"));
    CHECK(fs::exists(dir / "convergence_AEM-33_1.csv"));
}

TEST_CASE("repeated runs give identical metrics") {
    const auto cfg = parse_config(ini("EC, OA, AEM, SCA, CALC", "", 8, "1, 2"));
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    emit_report(run_experiment(cfg), a);
    emit_report(run_experiment(cfg), b);
    CHECK(without_wall_time(slurp(a / "metrics.csv")) == without_wall_time(slurp(b / "metrics.csv")));
    CHECK(slurp(a / "loads.csv") == slurp(b / "loads.csv"));
}

TEST_CASE("summary shows cost relative to SCA") {
    std::vector<RunMetrics> runs(3);
    runs[0].algorithm = "SCA";
    runs[0].total_cost = 16.0;
    runs[1].algorithm = "EC";
    runs[1].total_cost = 20.0;
    runs[2].algorithm = "OA";
    runs[2].failed = true;
    runs[2].error = "boom";
    const std::string text = summary_text(runs);
    CHECK(text.find("+25.00%") != std::string::npos);
    CHECK(text.find("+0.00%") != std::string::npos);
    CHECK(text.find("boom") != std::string::npos);

    const fs::path dir = fresh_dir("failures");
    emit_report(runs, dir);
    CHECK(fs::exists(dir / "failures.csv"));
    const std::string csv = slurp(dir / "metrics.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("empty metrics write nothing") {
    const fs::path dir = fresh_dir("empty");
    CHECK_THROWS_AS(emit_report({}, dir), std::invalid_argument);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("sweeps") {
    const auto cfg = parse_config(ini("EC"));

    SUBCASE("a single value matches a plain run") {
        const auto groups = sweep(cfg, SweepParam::NEvs, {8});
        REQUIRE(groups.size() == 1);
        const auto plain = run_experiment(cfg);
        REQUIRE(groups[0].runs.size() == plain.size());
        CHECK(groups[0].runs[0].total_cost == plain[0].total_cost);
    }
    SUBCASE("parameters nobody uses are rejected") {
        CHECK_THROWS_AS(sweep(cfg, SweepParam::Discount, {0.01}), ConfigError);
        CHECK_THROWS_AS(sweep(cfg, SweepParam::AemLevels, {33}), ConfigError);
        CHECK_THROWS_AS(sweep(cfg, SweepParam::NEvs, {}), ConfigError);
        CHECK_THROWS_AS(parse_sweep_param("gamma"), ConfigError);
    }
    SUBCASE("average cost per vehicle grows with the fleet") {
        const auto multi = parse_config(ini("EC, OA", "", 8, "1, 2, 3"));
        const auto groups = sweep(multi, SweepParam::NEvs, {10, 40, 80});
        std::vector<double> per_ev;
        for (const auto& g : groups) {
            double sum = 0.0;
            int n = 0;
            for (const auto& m : g.runs) {
                REQUIRE_FALSE(m.failed);
                sum += m.total_cost / m.n_evs;
                ++n;
            }
            per_ev.push_back(sum / n);
        }
        CHECK(per_ev[0] < per_ev[1]);
        CHECK(per_ev[1] < per_ev[2]);
        const fs::path dir = fresh_dir("sweep_nevs");
        emit_sweep(groups, SweepParam::NEvs, dir);
        CHECK(fs::exists(dir / "sweep.csv"));
        CHECK(fs::exists(dir / "n_evs_40" / "metrics.csv"));
    }
    SUBCASE("a discount sweep emits one training curve per value") {
        const auto sca = parse_config(ini("SCA"));
        const auto groups = sweep(sca, SweepParam::Discount, {0.005, 0.01, 0.05});
        REQUIRE(groups.size() == 3);
        for (const auto& g : groups) {
            REQUIRE(g.runs.size() == 1);
            CHECK_FALSE(g.runs[0].convergence.empty());
        }
        const fs::path dir = fresh_dir("sweep_discount");
        emit_sweep(groups, SweepParam::Discount, dir);
        for (const char* v : {"0.005", "0.01", "0.05"})
            CHECK(fs::exists(dir / (std::string("discount_") + v) / "convergence_SCA_1.csv"));
    }
}

TEST_CASE("command-line exit codes") {
    const fs::path dir = fresh_dir("cli");
    fs::create_directories(dir);
    const fs::path good = dir / "good.ini";
    std::ofstream(good) << ini("EC");
    const fs::path out = dir / "out";
    CHECK(run_cli("run --config \"" + good.string() + "\"", "EVSCHED_OUTPUT_DIR=\"" + out.string() + "\"") == 0);
    CHECK(fs::exists(out / "metrics.csv"));
    CHECK(run_cli("report --in \"" + out.string() + "\"") == 0);

    const fs::path bad = dir / "bad.ini";
    std::ofstream(bad) << ini("EC", "[run]\nnope = 1\n");
    CHECK(run_cli("run --config \"" + bad.string() + "\"") == 2);
    CHECK(run_cli("run --config /nonexistent/evsched.ini") == 2);
    CHECK(run_cli("frobnicate") == 2);

    // A load cap the fleet cannot meet makes every run fail.
    const fs::path tight = dir / "tight.ini";
    std::string text = ini("EC", "", 40);
    text.replace(text.find("load_cap_kwh = 150"), 18, "load_cap_kwh = 51");
    std::ofstream(tight) << text;
    CHECK(run_cli("run --config \"" + tight.string() + "\"", "EVSCHED_OUTPUT_DIR=\"" + (dir / "tight").string() + "\"") ==
          1);
}
