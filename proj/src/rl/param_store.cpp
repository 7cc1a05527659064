// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/param_store.hpp"

#include <stdexcept>

namespace evsched::rl {

ParameterStore::ParameterStore(Vec actor, Vec critic, std::function<void(Vec&)> actor_projection)
    : actor_(std::move(actor)), critic_(std::move(critic)), project_(std::move(actor_projection)) {}

ParameterStore::Snapshot ParameterStore::snapshot() const {
    std::lock_guard lock(mu_);
    return {actor_, critic_, version_, steps_};
}

std::uint64_t ParameterStore::push(int worker, std::uint64_t segment, std::uint64_t read_version, const Vec& d_actor,
                                   const Vec& d_critic, std::uint64_t steps) {
    if (d_actor.size() != actor_.size() || d_critic.size() != critic_.size())
        throw std::invalid_argument("parameter push does not match the store layout");
    std::lock_guard lock(mu_);
    actor_ += d_actor;
    critic_ += d_critic;
    if (project_)
        project_(actor_);
    steps_ += steps;
    log_.push_back({worker, segment, read_version, steps});
    return ++version_;
}

std::uint64_t ParameterStore::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

std::uint64_t ParameterStore::global_steps() const {
    std::lock_guard lock(mu_);
    return steps_;
}

std::vector<PushRecord> ParameterStore::log() const {
    std::lock_guard lock(mu_);
    return log_;
}

} // namespace evsched::rl
