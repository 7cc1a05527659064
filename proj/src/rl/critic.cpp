// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/critic.hpp"

#include <stdexcept>

namespace evsched::rl {

double critic_value(const CriticParams& p, const Vec& state, const Vec& action) {
    return mlp_forward(p, state, action).q;
}

Vec critic_gradient(const CriticParams& p, const Vec& state, const Vec& action) {
    const CriticForward f = mlp_forward(p, state, action);
    CriticParams g = p.zeros_like();
    g.w2() = f.h;
    g.b2() = 1.0;
    Vec g_pre = p.w2();
    for (int j = 0; j < p.hidden; ++j)
        if (f.pre[j] <= 0.0)
            g_pre[j] = 0.0;
    g.w1().leftCols(p.state_dim).noalias() = g_pre * state.transpose();
    g.w1().rightCols(p.action_dim).noalias() = g_pre * action.transpose();
    g.b1() = g_pre;
    return std::move(g.theta);
}

Critic::Critic(CriticKind kind, int state_dim, int action_dim, int policy_size, int hidden) : kind_(kind) {
    if (kind == CriticKind::Mlp)
        mlp_ = CriticParams(state_dim, action_dim, hidden);
    else
        w_ = Vec::Zero(policy_size);
}

double Critic::value(const PolicyParams& policy, const Vec& state, const Vec& action) const {
    if (kind_ == CriticKind::Mlp)
        return critic_value(mlp_, state, action);
    if (w_.size() != policy.size())
        throw std::invalid_argument("compatible critic does not match the policy size");
    return w_.dot(log_policy_gradient(policy, state, action));
}

Vec Critic::gradient(const PolicyParams& policy, const Vec& state, const Vec& action) const {
    if (kind_ == CriticKind::Mlp)
        return critic_gradient(mlp_, state, action);
    return log_policy_gradient(policy, state, action);
}

} // namespace evsched::rl
