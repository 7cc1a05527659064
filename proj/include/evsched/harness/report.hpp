// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/harness/experiment.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace evsched::harness {

inline constexpr const char* kMetricsHeader =
    "algorithm,seed,total_cost,peak_load_kwh,wall_time_ms,demand_violation_max,truncation_count";

/// Successful runs only; failures go to failures.csv.
std::string metrics_csv(const std::vector<RunMetrics>& metrics);

/// Mean cost and peak per algorithm plus (cost - sca_cost) / sca_cost.
std::string summary_text(const std::vector<RunMetrics>& metrics);

/// Writes metrics.csv, loads.csv, training.csv, schedule_<alg>_<seed>.csv,
/// convergence_<alg>_<seed>.csv, failures.csv (when any run failed) and
/// summary.txt. Throws std::invalid_argument on empty input before touching
/// the file system and std::runtime_error when the directory is unwritable.
void emit_report(const std::vector<RunMetrics>& metrics, const std::filesystem::path& output_dir);

/// Long format, one row per (value, run).
void emit_sweep(const std::vector<SweepGroup>& groups, SweepParam param, const std::filesystem::path& output_dir);

/// Parses a metrics.csv written by emit_report. Schedules and series are
/// left empty.
std::vector<RunMetrics> read_metrics_csv(const std::filesystem::path& path);

/// Reads a schedule_<alg>_<seed>.csv file.
ChargingSchedule read_schedule_csv(const std::filesystem::path& path);

} // namespace evsched::harness
