// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/rl/critic.hpp"
#include "evsched/rl/mlp.hpp"
#include "evsched/rl/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace evsched::rl {

inline constexpr int kParamFormatVersion = 1;

/// FNV-1a of TrainConfig::canonical().
std::uint64_t config_hash(const TrainConfig& cfg);

struct ParamHeader {
    int version = kParamFormatVersion;
    std::string kind; // "policy" or "critic"
    std::vector<int> dims;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

/// Header lines, then one decimal per line, round-trip exact.
void save_policy(const std::filesystem::path& path, const PolicyParams& p, std::uint64_t seed, std::uint64_t hash);
PolicyParams load_policy(const std::filesystem::path& path, ParamHeader* header = nullptr);

void save_critic(const std::filesystem::path& path, const CriticParams& p, std::uint64_t seed, std::uint64_t hash);
CriticParams load_critic(const std::filesystem::path& path, ParamHeader* header = nullptr);

/// `episode,steps,moving_reward,wall_ms` with a header row.
void save_training_log(const std::filesystem::path& path, const std::vector<EpisodeLog>& log);

} // namespace evsched::rl
