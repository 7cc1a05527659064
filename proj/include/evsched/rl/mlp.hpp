// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace evsched::rl {

using Vec = Eigen::VectorXd;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

/// Gaussian policy network: one ReLU hidden layer, linear mean head and a
/// state-independent log standard deviation per action dimension.
///
/// All parameters live in one flat vector so that gradients, accumulators
/// and the shared store are plain vectors of the same layout:
/// [W1 (hidden x input) | b1 | Wmu (actions x hidden) | bmu | log_sigma].
struct PolicyParams {
    static constexpr double kLogSigmaMin = -5.0;
    static constexpr double kLogSigmaMax = 2.0;

    int input_dim = 0;
    int hidden = 0;
    int action_dim = 0;
    Vec theta;

    PolicyParams() = default;
    PolicyParams(int input_dim, int action_dim, int hidden = 200);

    Eigen::Index size() const { return theta.size(); }

    MatMap w1() { return {theta.data(), hidden, input_dim}; }
    VecMap b1() { return {theta.data() + off_b1(), hidden}; }
    MatMap w_mu() { return {theta.data() + off_wmu(), action_dim, hidden}; }
    VecMap b_mu() { return {theta.data() + off_bmu(), action_dim}; }
    VecMap log_sigma() { return {theta.data() + off_ls(), action_dim}; }
    ConstMatMap w1() const { return {theta.data(), hidden, input_dim}; }
    ConstVecMap b1() const { return {theta.data() + off_b1(), hidden}; }
    ConstMatMap w_mu() const { return {theta.data() + off_wmu(), action_dim, hidden}; }
    ConstVecMap b_mu() const { return {theta.data() + off_bmu(), action_dim}; }
    ConstVecMap log_sigma() const { return {theta.data() + off_ls(), action_dim}; }

    /// A zero vector with this layout.
    PolicyParams zeros_like() const;
    /// Keeps log sigma inside [kLogSigmaMin, kLogSigmaMax].
    void clamp_log_sigma();

private:
    Eigen::Index off_b1() const { return Eigen::Index(hidden) * input_dim; }
    Eigen::Index off_wmu() const { return off_b1() + hidden; }
    Eigen::Index off_bmu() const { return off_wmu() + Eigen::Index(action_dim) * hidden; }
    Eigen::Index off_ls() const { return off_bmu() + action_dim; }
};

/// Scalar Q network on the concatenated (state, action) input:
/// [W1 (hidden x (state+action)) | b1 | w2 (hidden) | b2].
struct CriticParams {
    int state_dim = 0;
    int action_dim = 0;
    int hidden = 0;
    Vec theta;

    CriticParams() = default;
    CriticParams(int state_dim, int action_dim, int hidden = 100);

    int input_dim() const { return state_dim + action_dim; }
    Eigen::Index size() const { return theta.size(); }

    MatMap w1() { return {theta.data(), hidden, input_dim()}; }
    VecMap b1() { return {theta.data() + off_b1(), hidden}; }
    VecMap w2() { return {theta.data() + off_w2(), hidden}; }
    double& b2() { return theta[off_w2() + hidden]; }
    ConstMatMap w1() const { return {theta.data(), hidden, input_dim()}; }
    ConstVecMap b1() const { return {theta.data() + off_b1(), hidden}; }
    ConstVecMap w2() const { return {theta.data() + off_w2(), hidden}; }
    double b2() const { return theta[off_w2() + hidden]; }

    CriticParams zeros_like() const;

private:
    Eigen::Index off_b1() const { return Eigen::Index(hidden) * input_dim(); }
    Eigen::Index off_w2() const { return off_b1() + hidden; }
};

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer; log sigma starts at
/// `log_sigma0`.
void init_uniform(PolicyParams& p, std::uint64_t seed, double log_sigma0 = 0.0);
void init_uniform(CriticParams& p, std::uint64_t seed);

struct PolicyForward {
    Vec pre;       // hidden pre-activations
    Vec h;         // ReLU features
    Vec mu;
    Vec log_sigma; // clamped
};

/// Throws std::invalid_argument when the input size differs from input_dim.
PolicyForward mlp_forward(const PolicyParams& p, const Vec& input);

struct CriticForward {
    Vec pre;
    Vec h;
    double q = 0.0;
};

CriticForward mlp_forward(const CriticParams& p, const Vec& state, const Vec& action);

bool all_finite(const Vec& v);

} // namespace evsched::rl
