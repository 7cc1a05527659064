// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace evsched::rl {

namespace {

void require_positive(int v, const char* what) {
    if (v < 1)
        throw std::invalid_argument(std::string(what) + " must be positive");
}

void fill_uniform(double* data, Eigen::Index n, int fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index k = 0; k < n; ++k)
        data[k] = u(rng);
}

} // namespace

PolicyParams::PolicyParams(int input_dim_, int action_dim_, int hidden_)
    : input_dim(input_dim_), hidden(hidden_), action_dim(action_dim_) {
    require_positive(input_dim, "policy input dimension");
    require_positive(action_dim, "policy action dimension");
    require_positive(hidden, "policy hidden width");
    theta = Vec::Zero(off_ls() + action_dim);
}

PolicyParams PolicyParams::zeros_like() const {
    PolicyParams z = *this;
    z.theta.setZero();
    return z;
}

void PolicyParams::clamp_log_sigma() {
    auto ls = log_sigma();
    for (Eigen::Index k = 0; k < ls.size(); ++k)
        ls[k] = std::clamp(ls[k], kLogSigmaMin, kLogSigmaMax);
}

CriticParams::CriticParams(int state_dim_, int action_dim_, int hidden_)
    : state_dim(state_dim_), action_dim(action_dim_), hidden(hidden_) {
    require_positive(state_dim, "critic state dimension");
    require_positive(action_dim, "critic action dimension");
    require_positive(hidden, "critic hidden width");
    theta = Vec::Zero(off_w2() + hidden + 1);
}

CriticParams CriticParams::zeros_like() const {
    CriticParams z = *this;
    z.theta.setZero();
    return z;
}

void init_uniform(PolicyParams& p, std::uint64_t seed, double log_sigma0) {
    std::mt19937_64 rng(seed);
    fill_uniform(p.w1().data(), p.w1().size(), p.input_dim, rng);
    fill_uniform(p.b1().data(), p.b1().size(), p.input_dim, rng);
    fill_uniform(p.w_mu().data(), p.w_mu().size(), p.hidden, rng);
    fill_uniform(p.b_mu().data(), p.b_mu().size(), p.hidden, rng);
    p.log_sigma().setConstant(log_sigma0);
    p.clamp_log_sigma();
}

void init_uniform(CriticParams& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    fill_uniform(p.w1().data(), p.w1().size(), p.input_dim(), rng);
    fill_uniform(p.b1().data(), p.b1().size(), p.input_dim(), rng);
    fill_uniform(p.w2().data(), p.w2().size(), p.hidden, rng);
    fill_uniform(&p.b2(), 1, p.hidden, rng);
}

PolicyForward mlp_forward(const PolicyParams& p, const Vec& input) {
    if (input.size() != p.input_dim)
        throw std::invalid_argument("policy input has size " + std::to_string(input.size()) + ", expected " +
                                    std::to_string(p.input_dim));
    PolicyForward f;
    f.pre = p.w1() * input + p.b1();
    f.h = f.pre.cwiseMax(0.0);
    f.mu = p.w_mu() * f.h + p.b_mu();
    f.log_sigma = p.log_sigma().cwiseMax(PolicyParams::kLogSigmaMin).cwiseMin(PolicyParams::kLogSigmaMax);
    return f;
}

CriticForward mlp_forward(const CriticParams& p, const Vec& state, const Vec& action) {
    if (state.size() != p.state_dim || action.size() != p.action_dim)
        throw std::invalid_argument("critic input shape mismatch");
    CriticForward f;
    f.pre = p.w1().leftCols(p.state_dim) * state + p.w1().rightCols(p.action_dim) * action + p.b1();
    f.h = f.pre.cwiseMax(0.0);
    f.q = p.w2().dot(f.h) + p.b2();
    return f;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

} // namespace evsched::rl
