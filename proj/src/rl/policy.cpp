// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/policy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace evsched::rl {

namespace {

void check_bounds(const PolicyParams& p, const Vec& lower, const Vec& upper) {
    if (lower.size() != p.action_dim || upper.size() != p.action_dim)
        throw std::invalid_argument("action bounds do not match the policy's action dimension");
}

} // namespace

PolicySample policy_sample(const PolicyParams& p, const Vec& state, std::mt19937_64& rng, const Vec& lower,
                           const Vec& upper) {
    check_bounds(p, lower, upper);
    const PolicyForward f = mlp_forward(p, state);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PolicySample s;
    s.raw.resize(p.action_dim);
    for (int k = 0; k < p.action_dim; ++k)
        s.raw[k] = f.mu[k] + std::exp(f.log_sigma[k]) * gauss(rng);
    s.action = s.raw.cwiseMax(lower).cwiseMin(upper);
    return s;
}

Vec policy_mean_action(const PolicyParams& p, const Vec& state, const Vec& lower, const Vec& upper) {
    check_bounds(p, lower, upper);
    return mlp_forward(p, state).mu.cwiseMax(lower).cwiseMin(upper);
}

double log_policy(const PolicyParams& p, const Vec& state, const Vec& action) {
    if (action.size() != p.action_dim)
        throw std::invalid_argument("action size does not match the policy");
    const PolicyForward f = mlp_forward(p, state);
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    double lp = 0.0;
    for (int k = 0; k < p.action_dim; ++k) {
        const double z = (action[k] - f.mu[k]) * std::exp(-f.log_sigma[k]);
        lp += -0.5 * z * z - f.log_sigma[k] - half_log_2pi;
    }
    return lp;
}

Vec log_policy_gradient(const PolicyParams& p, const Vec& state, const Vec& action, const Vec* active) {
    if (action.size() != p.action_dim)
        throw std::invalid_argument("action size does not match the policy");
    if (active && active->size() != p.action_dim)
        throw std::invalid_argument("activity mask does not match the policy");
    const PolicyForward f = mlp_forward(p, state);

    PolicyParams g = p.zeros_like();
    Vec g_mu(p.action_dim);
    for (int k = 0; k < p.action_dim; ++k) {
        if (active && (*active)[k] == 0.0) {
            g_mu[k] = 0.0;
            continue;
        }
        const double inv_var = std::exp(-2.0 * f.log_sigma[k]);
        const double diff = action[k] - f.mu[k];
        g_mu[k] = diff * inv_var;
        const double ls = p.log_sigma()[k];
        const bool inside = ls >= PolicyParams::kLogSigmaMin && ls <= PolicyParams::kLogSigmaMax;
        g.log_sigma()[k] = inside ? diff * diff * inv_var - 1.0 : 0.0;
    }
    g.w_mu().noalias() = g_mu * f.h.transpose();
    g.b_mu() = g_mu;

    Vec g_pre = p.w_mu().transpose() * g_mu;
    for (int j = 0; j < p.hidden; ++j)
        if (f.pre[j] <= 0.0)
            g_pre[j] = 0.0;
    g.w1().noalias() = g_pre * state.transpose();
    g.b1() = g_pre;
    return std::move(g.theta);
}

bool apply_update(Vec& theta, double delta, const Vec& grad, double beta) {
    if (grad.size() != theta.size())
        throw std::invalid_argument("update gradient does not match the parameter vector");
    const double scale = beta * delta;
    if (!std::isfinite(scale))
        return false;
    if (scale == 0.0)
        return true;
    Vec step = scale * grad;
    if (!step.allFinite())
        return false;
    theta += step;
    return true;
}

bool critic_update(Vec& critic_theta, double delta, const Vec& grad_q, double beta_c) {
    return apply_update(critic_theta, delta, grad_q, beta_c);
}

bool actor_update(PolicyParams& policy, double delta, const Vec& score, double beta_a) {
    const bool ok = apply_update(policy.theta, delta, score, beta_a);
    policy.clamp_log_sigma();
    return ok;
}

} // namespace evsched::rl
