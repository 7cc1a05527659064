// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/rl/mlp.hpp"

#include <cstdint>
#include <functional>
#include <mutex>
#include <vector>

namespace evsched::rl {

/// One applied push, in application order.
struct PushRecord {
    int worker = 0;
    std::uint64_t segment = 0;      // per-worker segment counter
    std::uint64_t read_version = 0; // version of the snapshot the segment started from
    std::uint64_t steps = 0;        // environment steps the segment took
};

/// Shared actor and critic parameters. Reads return a consistent snapshot;
/// a push adds both increments under one lock and bumps the version. The
/// push log fixes the final parameters: replaying it reproduces them.
class ParameterStore {
public:
    struct Snapshot {
        Vec actor;
        Vec critic;
        std::uint64_t version = 0;
        std::uint64_t steps = 0; // global step counter at read time
    };

    /// `actor_projection` runs on the actor vector after every push.
    ParameterStore(Vec actor, Vec critic, std::function<void(Vec&)> actor_projection = {});

    Snapshot snapshot() const;
    /// Adds the increments, returns the new version.
    std::uint64_t push(int worker, std::uint64_t segment, std::uint64_t read_version, const Vec& d_actor,
                       const Vec& d_critic, std::uint64_t steps);

    std::uint64_t version() const;
    std::uint64_t global_steps() const;
    std::vector<PushRecord> log() const;

private:
    mutable std::mutex mu_;
    Vec actor_;
    Vec critic_;
    std::uint64_t version_ = 0;
    std::uint64_t steps_ = 0;
    std::vector<PushRecord> log_;
    std::function<void(Vec&)> project_;
};

} // namespace evsched::rl
