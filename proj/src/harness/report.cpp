// SPDX-License-Identifier: Apache-2.0
#include "evsched/harness/report.hpp"

#include "evsched/rl/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace evsched::harness {

namespace fs = std::filesystem;

namespace {

// Shortest text that parses back to the same double.
std::string exact(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, end);
}

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out)
        throw std::runtime_error("error writing " + path.string());
}

std::string stem(const RunMetrics& m) { return m.algorithm + "_" + std::to_string(m.seed); }

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
        throw std::runtime_error(where + ": malformed number '" + s + "'");
    return v;
}

} // namespace

std::string metrics_csv(const std::vector<RunMetrics>& metrics) {
    std::ostringstream out;
    out << kMetricsHeader << '\n';
    for (const auto& m : metrics) {
        if (m.failed)
            continue;
        out << m.algorithm << ',' << m.seed << ',' << exact(m.total_cost) << ',' << exact(m.peak_total_load) << ','
            << fixed3(m.wall_time_ms) << ',' << exact(m.demand_violation_max) << ',' << m.truncation_count << '\n';
    }
    return out.str();
}

std::string summary_text(const std::vector<RunMetrics>& metrics) {
    struct Agg {
        int runs = 0;
        int failures = 0;
        double cost = 0.0;
        double peak = 0.0;
        double wall = 0.0;
        double train = 0.0;
    };
    std::vector<std::string> order;
    std::map<std::string, Agg> by_alg;
    for (const auto& m : metrics) {
        if (!by_alg.count(m.algorithm))
            order.push_back(m.algorithm);
        Agg& a = by_alg[m.algorithm];
        if (m.failed) {
            ++a.failures;
            continue;
        }
        ++a.runs;
        a.cost += m.total_cost;
        a.peak += m.peak_total_load;
        a.wall += m.wall_time_ms;
        a.train += m.train_time_ms;
    }
    for (auto& [name, a] : by_alg) {
        (void)name;
        if (a.runs > 0) {
            a.cost /= a.runs;
            a.peak /= a.runs;
            a.wall /= a.runs;
            a.train /= a.runs;
        }
    }

    const auto sca = by_alg.find("SCA");
    const bool have_sca = sca != by_alg.end() && sca->second.runs > 0 && sca->second.cost > 0.0;

    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %5s %6s %14s %14s %12s %12s %12s\n", "algorithm", "runs", "failed",
                  "mean_cost", "mean_peak_kwh", "wall_ms", "train_ms", "vs_SCA");
    out << line;
    for (const auto& name : order) {
        const Agg& a = by_alg[name];
        std::string ratio = "-";
        if (have_sca && a.runs > 0) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * (a.cost - sca->second.cost) / sca->second.cost);
            ratio = buf;
        }
        if (a.runs > 0)
            std::snprintf(line, sizeof line, "%-10s %5d %6d %14.4f %14.3f %12.3f %12.1f %12s\n", name.c_str(), a.runs,
                          a.failures, a.cost, a.peak, a.wall, a.train, ratio.c_str());
        else
            std::snprintf(line, sizeof line, "%-10s %5d %6d %14s %14s %12s %12s %12s\n", name.c_str(), 0, a.failures,
                          "-", "-", "-", "-", "-");
        out << line;
    }
    if (have_sca)
        out << "\nvs_SCA is (mean_cost - mean_cost_SCA) / mean_cost_SCA.\n";
    bool any_failed = false;
    for (const auto& m : metrics) {
        if (!m.failed)
            continue;
        if (!any_failed)
            out << "\nfailed runs:\n";
        any_failed = true;
        out << "  " << m.algorithm << " seed " << m.seed << ": " << m.error << '\n';
    }
    return out.str();
}

void emit_report(const std::vector<RunMetrics>& metrics, const fs::path& output_dir) {
    if (metrics.empty())
        throw std::invalid_argument("emit_report: no metrics to write");

    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec || !fs::is_directory(output_dir))
        throw std::runtime_error("cannot create output directory " + output_dir.string());

    write_file(output_dir / "metrics.csv", metrics_csv(metrics));

    std::ostringstream loads;
    loads << "algorithm,seed,slot,total_load_kwh\n";
    for (const auto& m : metrics)
        for (std::size_t t = 0; t < m.per_slot_load.size(); ++t)
            loads << m.algorithm << ',' << m.seed << ',' << t << ',' << exact(m.per_slot_load[t]) << '\n';
    write_file(output_dir / "loads.csv", loads.str());

    std::ostringstream training;
    training << "algorithm,seed,train_time_ms,episodes\n";
    for (const auto& m : metrics) {
        if (m.train_time_ms <= 0.0)
            continue;
        const std::size_t episodes = m.convergence.empty() ? m.episode_rewards.size() : m.convergence.size();
        training << m.algorithm << ',' << m.seed << ',' << fixed3(m.train_time_ms) << ',' << episodes << '\n';
    }
    write_file(output_dir / "training.csv", training.str());

    for (const auto& m : metrics) {
        if (!m.convergence.empty())
            rl::save_training_log(output_dir / ("convergence_" + stem(m) + ".csv"), m.convergence);
        if (!m.episode_rewards.empty()) {
            std::ostringstream c;
            c << "episode,reward\n";
            for (std::size_t k = 0; k < m.episode_rewards.size(); ++k)
                c << k << ',' << exact(m.episode_rewards[k]) << '\n';
            write_file(output_dir / ("convergence_" + stem(m) + ".csv"), c.str());
        }
        if (!m.failed && m.schedule.ev_count() > 0) {
            std::ostringstream s;
            s << "ev_row,slot,kwh\n";
            for (int i = 0; i < m.schedule.ev_count(); ++i)
                for (int t = 0; t < m.schedule.horizon(); ++t)
                    if (m.schedule(i, t) != 0.0)
                        s << i << ',' << t << ',' << exact(m.schedule(i, t)) << '\n';
            s << "# dims " << m.schedule.ev_count() << ' ' << m.schedule.horizon() << '\n';
            write_file(output_dir / ("schedule_" + stem(m) + ".csv"), s.str());
        }
    }

    bool any_failed = false;
    std::ostringstream failures;
    failures << "algorithm,seed,error\n";
    for (const auto& m : metrics) {
        if (!m.failed)
            continue;
        any_failed = true;
        std::string msg = m.error;
        for (char& c : msg)
            if (c == ',' || c == '\n')
                c = ';';
        failures << m.algorithm << ',' << m.seed << ',' << msg << '\n';
    }
    if (any_failed)
        write_file(output_dir / "failures.csv", failures.str());
    else
        fs::remove(output_dir / "failures.csv", ec);

    write_file(output_dir / "summary.txt", summary_text(metrics));
}

void emit_sweep(const std::vector<SweepGroup>& groups, SweepParam param, const fs::path& output_dir) {
    std::size_t total = 0;
    for (const auto& g : groups)
        total += g.runs.size();
    if (total == 0)
        throw std::invalid_argument("emit_sweep: no metrics to write");

    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec || !fs::is_directory(output_dir))
        throw std::runtime_error("cannot create output directory " + output_dir.string());

    std::ostringstream out;
    out << "parameter,value,algorithm,seed,n_evs,total_cost,peak_load_kwh,wall_time_ms,demand_violation_max,"
           "truncation_count,cost_per_ev,failed\n";
    for (const auto& g : groups) {
        for (const auto& m : g.runs) {
            out << to_string(param) << ',' << exact(g.value) << ',' << m.algorithm << ',' << m.seed << ',' << m.n_evs
                << ',';
            if (m.failed) {
                out << ",,,,,,1\n";
                continue;
            }
            const std::string per_ev = m.n_evs > 0 ? exact(m.total_cost / m.n_evs) : "";
            out << exact(m.total_cost) << ',' << exact(m.peak_total_load) << ',' << fixed3(m.wall_time_ms) << ','
                << exact(m.demand_violation_max) << ',' << m.truncation_count << ',' << per_ev << ",0\n";
        }
        if (!g.runs.empty())
            emit_report(g.runs, output_dir / (to_string(param) + "_" + exact(g.value)));
    }
    write_file(output_dir / "sweep.csv", out.str());
}

std::vector<RunMetrics> read_metrics_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw std::runtime_error(path.string() + ": missing or unexpected header");
    std::vector<RunMetrics> out;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty())
            continue;
        const auto cells = split_csv(line);
        const std::string where = path.string() + " row " + std::to_string(row);
        if (cells.size() != 7)
            throw std::runtime_error(where + ": expected 7 columns");
        RunMetrics m;
        m.algorithm = cells[0];
        m.seed = static_cast<std::uint64_t>(parse_double(cells[1], where));
        m.total_cost = parse_double(cells[2], where);
        m.peak_total_load = parse_double(cells[3], where);
        m.wall_time_ms = parse_double(cells[4], where);
        m.demand_violation_max = parse_double(cells[5], where);
        m.truncation_count = static_cast<int>(parse_double(cells[6], where));
        out.push_back(std::move(m));
    }
    return out;
}

ChargingSchedule read_schedule_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    struct Entry {
        int i, t;
        double v;
    };
    std::vector<Entry> entries;
    int rows = -1, cols = -1;
    while (std::getline(in, line)) {
        if (line.rfind("# dims ", 0) == 0) {
            std::istringstream is(line.substr(7));
            is >> rows >> cols;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != 3)
            throw std::runtime_error(path.string() + ": malformed schedule row");
        entries.push_back({static_cast<int>(parse_double(cells[0], path.string())),
                           static_cast<int>(parse_double(cells[1], path.string())), parse_double(cells[2], path.string())});
    }
    if (rows < 0 || cols < 0)
        throw std::runtime_error(path.string() + ": missing dimensions");
    ChargingSchedule s(rows, cols);
    for (const auto& e : entries) {
        if (e.i < 0 || e.i >= rows || e.t < 0 || e.t >= cols)
            throw std::runtime_error(path.string() + ": entry outside dimensions");
        s(e.i, e.t) = e.v;
    }
    return s;
}

} // namespace evsched::harness
