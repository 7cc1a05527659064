// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "evsched/rl/mlp.hpp"

#include <random>

namespace evsched::rl {

struct PolicySample {
    Vec raw;    // the Gaussian draw, used for the score
    Vec action; // raw clipped into [lower, upper]
};

/// Draws N(mu, sigma^2) per dimension and clips into [lower, upper].
/// `upper` is expected to already include any residual-demand limit.
PolicySample policy_sample(const PolicyParams& p, const Vec& state, std::mt19937_64& rng, const Vec& lower,
                           const Vec& upper);

/// clip(mu) with no exploration noise.
Vec policy_mean_action(const PolicyParams& p, const Vec& state, const Vec& lower, const Vec& upper);

/// ln N(action; mu(state), sigma^2), summed over dimensions.
double log_policy(const PolicyParams& p, const Vec& state, const Vec& action);

/// Analytic gradient of log_policy with respect to every policy parameter,
/// in the flat layout of PolicyParams::theta. Log sigma entries use the
/// clamped value; the clamp is treated as transparent inside its range.
/// With `active`, dimensions whose entry is 0 are left out of the density
/// (their action is fixed by the bounds).
Vec log_policy_gradient(const PolicyParams& p, const Vec& state, const Vec& action, const Vec* active = nullptr);

// --- scalar update rules ------------------------------------------------------

/// delta = r_next + discount * q_next - q_cur
inline double td_error(double r_next, double q_next, double q_cur, double discount) {
    return r_next + discount * q_next - q_cur;
}

/// R' = r + discount * R
inline double accumulate_return(double r, double running, double discount) { return r + discount * running; }

/// theta += beta * delta * grad. A non-finite increment leaves theta
/// untouched and returns false.
bool apply_update(Vec& theta, double delta, const Vec& grad, double beta);

/// Critic step along grad Q; the caller logs skipped steps.
bool critic_update(Vec& critic_theta, double delta, const Vec& grad_q, double beta_c);
/// Actor step along the score; keeps log sigma in range afterwards.
bool actor_update(PolicyParams& policy, double delta, const Vec& score, double beta_a);

} // namespace evsched::rl
