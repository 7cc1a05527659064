// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/rl/mlp.hpp"
#include "evsched/rl/policy.hpp"

namespace evsched::rl {

double critic_value(const CriticParams& p, const Vec& state, const Vec& action);

/// dQ/dtheta in the flat layout of CriticParams::theta.
Vec critic_gradient(const CriticParams& p, const Vec& state, const Vec& action);

enum class CriticKind {
    Mlp,        // hidden ReLU layer on (state, action)
    Compatible, // Q = w . grad ln pi(action | state)
};

/// Critic of either kind behind one interface. The compatible critic reads
/// the policy for its features, so both calls take it.
class Critic {
public:
    Critic() = default;
    Critic(CriticKind kind, int state_dim, int action_dim, int policy_size, int hidden = 100);

    CriticKind kind() const { return kind_; }
    Vec& theta() { return kind_ == CriticKind::Mlp ? mlp_.theta : w_; }
    const Vec& theta() const { return kind_ == CriticKind::Mlp ? mlp_.theta : w_; }
    const CriticParams& mlp() const { return mlp_; }
    CriticParams& mlp() { return mlp_; }

    double value(const PolicyParams& policy, const Vec& state, const Vec& action) const;
    Vec gradient(const PolicyParams& policy, const Vec& state, const Vec& action) const;

private:
    CriticKind kind_ = CriticKind::Mlp;
    CriticParams mlp_;
    Vec w_;
};

} // namespace evsched::rl
