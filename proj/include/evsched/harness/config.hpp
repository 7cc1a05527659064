// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/baselines.hpp"
#include "evsched/core_model.hpp"
#include "evsched/rl/trainer.hpp"
#include "evsched/scenario.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace evsched::harness {

enum class Algorithm { EC, OA, AEM, SCA, CALC };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

/// Raised for unreadable, malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// How the learning algorithms draw training episodes.
enum class TrainingSource {
    Fresh, // new fleets from the scenario distribution, independent of the evaluated fleet
    Fixed, // the evaluated scenario itself
};

struct ExperimentConfig {
    FleetConfig fleet;
    std::filesystem::path base_load_path;
    PriceModel price;
    double load_cap = std::numeric_limits<double>::infinity();

    std::vector<Algorithm> algorithms;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path output_dir = "results";
    double validation_tol = 1e-6;

    QLearnConfig aem;
    std::vector<int> aem_levels{33};
    rl::TrainConfig sca;
    rl::TrainConfig calc;
    TrainingSource training = TrainingSource::Fresh;

    /// Throws ConfigError.
    void validate() const;
};

/// Sectioned key = value text; see configs/ for the accepted keys. Unknown
/// sections or keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace evsched::harness
