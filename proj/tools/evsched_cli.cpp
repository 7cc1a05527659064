// SPDX-License-Identifier: Apache-2.0
// evsched: run, sweep and summarise charging-scheduling experiments.

#include "evsched/harness/config.hpp"
#include "evsched/harness/experiment.hpp"
#include "evsched/harness/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

constexpr const char* kOutputEnv = "EVSCHED_OUTPUT_DIR";

using namespace evsched::harness;

ExperimentConfig load_with_override(const std::string& path) {
    ExperimentConfig cfg = load_config(path);
    if (const char* dir = std::getenv(kOutputEnv); dir && *dir)
        cfg.output_dir = dir;
    return cfg;
}

int status_of(const std::vector<RunMetrics>& runs) {
    for (const auto& m : runs)
        if (m.failed)
            return kRunFailure;
    return kOk;
}

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        std::size_t end = list.find(',', start);
        if (end == std::string::npos)
            end = list.size();
        std::string item = list.substr(start, end - start);
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
            if (ec != std::errc() || p != item.data() + item.size())
                throw ConfigError("bad sweep value '" + item + "'");
            out.push_back(v);
        }
        start = end + 1;
    }
    if (out.empty())
        throw ConfigError("--values needs at least one number");
    return out;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig cfg = load_with_override(config_path);
    const auto runs = run_experiment(cfg);
    emit_report(runs, cfg.output_dir);
    std::cout << summary_text(runs) << "results in " << cfg.output_dir.string() << '\n';
    return status_of(runs);
}

int cmd_sweep(const std::string& config_path, const std::string& param_name, const std::string& values) {
    const ExperimentConfig cfg = load_with_override(config_path);
    const SweepParam param = parse_sweep_param(param_name);
    const auto groups = sweep(cfg, param, parse_values(values));
    emit_sweep(groups, param, cfg.output_dir);
    int status = kOk;
    for (const auto& g : groups) {
        std::cout << to_string(param) << " = " << g.value << '\n' << summary_text(g.runs) << '\n';
        status = std::max(status, status_of(g.runs));
    }
    std::cout << "results in " << cfg.output_dir.string() << '\n';
    return status;
}

int cmd_report(const std::string& dir) {
    const std::filesystem::path in = dir;
    const auto runs = read_metrics_csv(in / "metrics.csv");
    if (runs.empty())
        throw std::runtime_error((in / "metrics.csv").string() + " has no rows");
    const std::string text = summary_text(runs);
    std::ofstream out(in / "summary.txt");
    if (!(out << text))
        throw std::runtime_error("cannot write " + (in / "summary.txt").string());
    std::cout << text;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV fleet charging scheduling experiments"};
    app.require_subcommand(1);

    std::string config_path, param, values, in_dir;

    auto* run = app.add_subcommand("run", "run every configured algorithm and seed");
    run->add_option("--config", config_path, "experiment config file")->required();

    auto* sw = app.add_subcommand("sweep", "repeat the experiment over values of one parameter");
    sw->add_option("--config", config_path, "experiment config file")->required();
    sw->add_option("--param", param, "discount, beta_a, n_evs or aem_levels")->required();
    sw->add_option("--values", values, "comma-separated values")->required();

    auto* rep = app.add_subcommand("report", "rebuild summary.txt from a results directory");
    rep->add_option("--in", in_dir, "results directory")->required();

    app.footer(std::string("Set ") + kOutputEnv + " to override the configured output directory.\n"
               "Exit status: 0 success, 1 a run failed, 2 configuration error.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run)
            return cmd_run(config_path);
        if (*sw)
            return cmd_sweep(config_path, param, values);
        return cmd_report(in_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRunFailure;
    }
}
