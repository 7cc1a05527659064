// SPDX-License-Identifier: Apache-2.0
#include "evsched/rl/trainer.hpp"

#include "evsched/rl/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace evsched::rl {

double RateSchedule::at(double t) const { return c / std::pow(t0 + t, power); }

bool robbins_monro(const RateSchedule& s) { return s.c > 0.0 && s.power > 0.5 && s.power <= 1.0; }

void TrainConfig::validate() const {
    if (!(beta_a > 0.0) || !(beta_c > 0.0))
        throw std::invalid_argument("learning rates must be positive");
    if (!(discount > 0.0 && discount < 1.0))
        throw std::invalid_argument("discount must lie in (0, 1)");
    if (k_max < 1)
        throw std::invalid_argument("step budget must be positive");
    if (n_workers < 1)
        throw std::invalid_argument("need at least one worker");
    if (update_period < 1)
        throw std::invalid_argument("update period must be positive");
    if (actor_hidden < 1 || critic_hidden < 1)
        throw std::invalid_argument("hidden widths must be positive");
    if (lr_decay_power < 0.0 || !(lr_decay_t0 > 0.0))
        throw std::invalid_argument("learning-rate decay needs power >= 0 and t0 > 0");
    if (!(reward_scale > 0.0) || grad_clip < 0.0)
        throw std::invalid_argument("reward scale must be positive and gradient clip non-negative");
    if (moving_window < 1 || divergence_windows < 1 || !(divergence_factor > 0.0))
        throw std::invalid_argument("invalid divergence detector settings");
    if (require_robbins_monro && !(robbins_monro(actor_schedule()) && robbins_monro(critic_schedule())))
        throw std::invalid_argument("learning-rate schedule does not satisfy the Robbins-Monro conditions");
}

RateSchedule TrainConfig::actor_schedule() const {
    return {beta_a * std::pow(lr_decay_t0, lr_decay_power), lr_decay_t0, lr_decay_power};
}

RateSchedule TrainConfig::critic_schedule() const {
    return {beta_c * std::pow(lr_decay_t0, lr_decay_power), lr_decay_t0, lr_decay_power};
}

std::string TrainConfig::canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "beta_a=" << beta_a << ";beta_c=" << beta_c << ";discount=" << discount << ";k_max=" << k_max
       << ";n_workers=" << n_workers << ";update_period=" << update_period << ";seed=" << seed
       << ";reward=" << (reward == RewardMode::ExactCost ? "exact" : "paper-eq13")
       << ";critic=" << (critic == CriticKind::Mlp ? "mlp" : "compatible")
       << ";ordering=" << (ordering == Ordering::RoundRobin ? "round-robin" : "free")
       << ";actor_hidden=" << actor_hidden << ";critic_hidden=" << critic_hidden
       << ";log_sigma_init=" << log_sigma_init << ";local_updates=" << local_updates
       << ";lr_decay_power=" << lr_decay_power << ";lr_decay_t0=" << lr_decay_t0
       << ";reward_scale=" << reward_scale << ";grad_clip=" << grad_clip;
    return os.str();
}

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    std::uint32_t w[2];
    seq.generate(w, w + 2);
    return (std::uint64_t{w[0]} << 32) | w[1];
}

struct EpisodeDone {
    int worker = 0;
    double reward = 0.0;
    std::uint64_t steps = 0;
};

struct SegmentDelta {
    Vec d_actor;
    Vec d_critic;
    std::uint64_t steps = 0;
};

struct Transition {
    Vec x;
    Vec lower;
    Vec upper;
    Vec raw;
    Vec action;
    Vec active;
    double reward = 0.0;
};

void project_actor(const PolicyParams& shape, Vec& theta) {
    PolicyParams p = shape;
    p.theta.swap(theta);
    p.clamp_log_sigma();
    p.theta.swap(theta);
}

/// One asynchronous learner: its own environment copy, RNG and episode
/// counter. A segment depends only on the snapshot it starts from and on the
/// worker's own history.
class Worker {
public:
    Worker(int id, const ScenarioSampler& sampler, std::unique_ptr<Task> task, const TrainConfig& cfg,
           const PolicyParams& policy, const Critic& critic)
        : id_(id), sampler_(sampler), task_(std::move(task)), cfg_(cfg), policy_(policy), critic_(critic),
          rng_(derive_seed(cfg.seed, 0x517e, static_cast<std::uint64_t>(id))) {}

    std::uint64_t segments() const { return segments_; }
    std::uint64_t skipped() const { return skipped_; }

    std::vector<EpisodeDone> take_finished() { return std::exchange(finished_, {}); }

    SegmentDelta run_segment(const ParameterStore::Snapshot& snap) {
        ++segments_;
        policy_.theta = snap.actor;
        critic_.theta() = snap.critic;
        // accumulated gradients are taken at the synchronised parameters;
        // local TD updates only steer the rollout
        const PolicyParams sync_policy = policy_;
        const Critic sync_critic = critic_;
        const double beta_a = cfg_.actor_schedule().at(static_cast<double>(snap.steps));
        const double beta_c = cfg_.critic_schedule().at(static_cast<double>(snap.steps));
        const double gamma = cfg_.discount;

        SegmentDelta out{Vec::Zero(policy_.size()), Vec::Zero(critic_.theta().size()), 0};

        if (task_->done()) {
            task_->reset(sampler_(static_cast<std::uint64_t>(id_) +
                                  static_cast<std::uint64_t>(cfg_.n_workers) * episodes_));
            ++episodes_;
            ep_reward_ = 0.0;
            ep_steps_ = 0;
            if (task_->done()) {
                finished_.push_back({id_, 0.0, 0});
                out.steps = 1; // an empty episode still consumes budget
                return out;
            }
        }

        std::vector<Transition> traj;
        traj.reserve(static_cast<std::size_t>(cfg_.update_period));
        Vec lo, hi;
        while (static_cast<int>(traj.size()) < cfg_.update_period && !task_->done()) {
            Transition tr;
            tr.x = task_->observe();
            task_->bounds(tr.lower, tr.upper);
            tr.active = ((tr.upper - tr.lower).array() > 1e-12).cast<double>();
            const PolicySample s = policy_sample(policy_, tr.x, rng_, tr.lower, tr.upper);
            tr.raw = s.raw;
            tr.action = s.action;

            if (cfg_.local_updates && !traj.empty())
                local_update(traj.back(), &tr, beta_a, beta_c, gamma);

            const double r = task_->step(tr.action);
            ep_reward_ += r;
            tr.reward = r * cfg_.reward_scale;
            ++ep_steps_;
            traj.push_back(std::move(tr));
        }
        out.steps = traj.size();

        const bool terminal = task_->done();
        if (cfg_.local_updates && terminal)
            local_update(traj.back(), nullptr, beta_a, beta_c, gamma);

        double ret = 0.0;
        if (!terminal) {
            const Vec x = task_->observe();
            task_->bounds(lo, hi);
            ret = sync_critic.value(sync_policy, x, policy_mean_action(sync_policy, x, lo, hi));
        }
        Vec d_actor = Vec::Zero(policy_.size());
        Vec d_critic = Vec::Zero(critic_.theta().size());
        for (auto it = traj.rbegin(); it != traj.rend(); ++it) {
            ret = accumulate_return(it->reward, ret, gamma);
            const double q = sync_critic.value(sync_policy, it->x, it->action);
            // d/dtheta_v (R - Q)^2
            d_critic.noalias() += -2.0 * (ret - q) * sync_critic.gradient(sync_policy, it->x, it->action);
            const Vec mean = policy_mean_action(sync_policy, it->x, it->lower, it->upper);
            const double baseline = sync_critic.value(sync_policy, it->x, mean);
            d_actor.noalias() += (ret - baseline) * log_policy_gradient(sync_policy, it->x, it->raw, &it->active);
        }
        out.d_actor = beta_a * d_actor;
        out.d_critic = -beta_c * d_critic;
        if (!out.d_actor.allFinite() || !out.d_critic.allFinite()) {
            warn_skip("pushed");
            out.d_actor.setZero();
            out.d_critic.setZero();
        }
        clip_norm(out.d_actor);
        clip_norm(out.d_critic);

        if (terminal)
            finished_.push_back({id_, ep_reward_, ep_steps_});
        return out;
    }

private:
    void local_update(const Transition& cur, const Transition* next, double beta_a, double beta_c, double gamma) {
        const double q_cur = critic_.value(policy_, cur.x, cur.action);
        const double q_next = next ? critic_.value(policy_, next->x, next->action) : 0.0;
        const double delta = td_error(cur.reward, q_next, q_cur, gamma);
        const Vec grad_q = critic_.gradient(policy_, cur.x, cur.action);
        const Vec score = log_policy_gradient(policy_, cur.x, cur.raw, &cur.active);
        if (!critic_update(critic_.theta(), clipped(delta, beta_c, grad_q), grad_q, beta_c))
            warn_skip("critic");
        if (!actor_update(policy_, clipped(delta, beta_a, score), score, beta_a))
            warn_skip("actor");
    }

    void warn_skip(const char* which) {
        constexpr std::uint64_t kMaxWarnings = 5;
        if (++skipped_ <= kMaxWarnings)
            std::cerr << "warning: worker " << id_ << " skipped a non-finite " << which << " update"
                      << (skipped_ == kMaxWarnings ? " (further warnings suppressed)" : "") << '\n';
    }

    /// delta shrunk so that |beta * delta| * |grad| stays within grad_clip.
    double clipped(double delta, double beta, const Vec& grad) const {
        if (cfg_.grad_clip <= 0.0)
            return delta;
        const double n = std::abs(beta * delta) * grad.norm();
        return n > cfg_.grad_clip ? delta * (cfg_.grad_clip / n) : delta;
    }

    void clip_norm(Vec& v) const {
        if (cfg_.grad_clip <= 0.0)
            return;
        const double n = v.norm();
        if (n > cfg_.grad_clip)
            v *= cfg_.grad_clip / n;
    }

    int id_;
    const ScenarioSampler& sampler_;
    std::unique_ptr<Task> task_;
    const TrainConfig& cfg_;
    PolicyParams policy_;
    Critic critic_;
    std::mt19937_64 rng_;
    std::uint64_t episodes_ = 0;
    std::uint64_t segments_ = 0;
    std::uint64_t skipped_ = 0;
    double ep_reward_ = 0.0;
    std::uint64_t ep_steps_ = 0;
    std::vector<EpisodeDone> finished_;
};

/// Collects finished episodes, maintains the moving average and watches for
/// divergence.
class EpisodeBook {
public:
    EpisodeBook(const TrainConfig& cfg, Clock::time_point start) : cfg_(cfg), start_(start) {}

    /// Returns false once divergence has been detected.
    bool add(const std::vector<EpisodeDone>& done) {
        std::lock_guard lock(mu_);
        for (const auto& e : done) {
            rewards_.push_back(e.reward);
            const std::size_t w = std::min<std::size_t>(rewards_.size(), static_cast<std::size_t>(cfg_.moving_window));
            double sum = 0.0;
            for (std::size_t k = rewards_.size() - w; k < rewards_.size(); ++k)
                sum += rewards_[k];
            EpisodeLog line;
            line.episode = rewards_.size() - 1;
            line.steps = e.steps;
            line.reward = e.reward;
            line.moving_reward = sum / static_cast<double>(w);
            line.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
            log_.push_back(line);
            if (rewards_.size() % static_cast<std::size_t>(cfg_.moving_window) == 0)
                check_window(line.moving_reward);
        }
        return !diverged_;
    }

    bool diverged() const {
        std::lock_guard lock(mu_);
        return diverged_;
    }
    std::string diagnostic() const {
        std::lock_guard lock(mu_);
        return diagnostic_;
    }
    std::vector<EpisodeLog> log() const {
        std::lock_guard lock(mu_);
        return log_;
    }

private:
    void check_window(double mean) {
        if (!have_best_ || mean > best_) {
            best_ = mean;
            have_best_ = true;
        }
        const double scale = std::max(std::abs(best_), 1e-9);
        if (best_ - mean > cfg_.divergence_factor * scale)
            ++bad_;
        else
            bad_ = 0;
        if (bad_ >= cfg_.divergence_windows && !diverged_) {
            diverged_ = true;
            std::ostringstream os;
            os << "training diverged: moving reward " << mean << " after " << rewards_.size()
               << " episodes, best window " << best_ << ", " << bad_ << " consecutive windows more than "
               << cfg_.divergence_factor << "x worse";
            diagnostic_ = os.str();
        }
    }

    const TrainConfig& cfg_;
    Clock::time_point start_;
    mutable std::mutex mu_;
    std::vector<double> rewards_;
    std::vector<EpisodeLog> log_;
    double best_ = 0.0;
    bool have_best_ = false;
    int bad_ = 0;
    bool diverged_ = false;
    std::string diagnostic_;
};

struct Setup {
    PolicyParams policy;
    Critic critic;
};

Setup initial_parameters(const Task& task, const TrainConfig& cfg) {
    Setup s;
    s.policy = PolicyParams(task.state_dim(), task.action_dim(), cfg.actor_hidden);
    init_uniform(s.policy, derive_seed(cfg.seed, 0xac7, 0), cfg.log_sigma_init);
    s.critic = Critic(cfg.critic, task.state_dim(), task.action_dim(), static_cast<int>(s.policy.size()),
                      cfg.critic_hidden);
    if (cfg.critic == CriticKind::Mlp)
        init_uniform(s.critic.mlp(), derive_seed(cfg.seed, 0xc41, 0));
    return s;
}

std::vector<std::unique_ptr<Worker>> make_workers(const ScenarioSampler& sampler, const Task& prototype,
                                                  const TrainConfig& cfg, const Setup& setup) {
    std::vector<std::unique_ptr<Worker>> workers;
    for (int w = 0; w < cfg.n_workers; ++w)
        workers.push_back(std::make_unique<Worker>(w, sampler, prototype.clone(), cfg, setup.policy, setup.critic));
    return workers;
}

TrainResult finish(const ParameterStore& store, const Setup& setup, const EpisodeBook& book,
                   const std::vector<std::unique_ptr<Worker>>& workers, Clock::time_point start) {
    TrainResult r;
    const auto snap = store.snapshot();
    r.policy = setup.policy;
    r.policy.theta = snap.actor;
    r.critic = setup.critic;
    r.critic.theta() = snap.critic;
    r.log = book.log();
    r.pushes = store.log();
    r.steps = snap.steps;
    for (const auto& w : workers)
        r.skipped_updates += w->skipped();
    r.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return r;
}

} // namespace

TrainResult train_actor_critic(const ScenarioSampler& sampler, const Task& prototype, const TrainConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    const Setup setup = initial_parameters(prototype, cfg);
    ParameterStore store(setup.policy.theta, setup.critic.theta(),
                         [shape = setup.policy](Vec& theta) { project_actor(shape, theta); });
    auto workers = make_workers(sampler, prototype, cfg, setup);
    EpisodeBook book(cfg, start);

    std::mutex turn_mu;
    std::condition_variable turn_cv;
    int turn = 0;
    std::vector<bool> retired(static_cast<std::size_t>(cfg.n_workers), false);
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto pass_turn = [&](int w) {
        // called with turn_mu held
        for (int k = 1; k <= cfg.n_workers; ++k) {
            const int next = (w + k) % cfg.n_workers;
            if (!retired[static_cast<std::size_t>(next)]) {
                turn = next;
                break;
            }
        }
        turn_cv.notify_all();
    };

    auto body = [&](int w) {
        Worker& worker = *workers[static_cast<std::size_t>(w)];
        const bool ordered = cfg.ordering == Ordering::RoundRobin;
        try {
            for (;;) {
                std::unique_lock lock(turn_mu, std::defer_lock);
                if (ordered) {
                    lock.lock();
                    turn_cv.wait(lock, [&] { return turn == w; });
                }
                const auto snap = store.snapshot();
                bool stop = snap.steps >= cfg.k_max || book.diverged();
                {
                    std::lock_guard f(failure_mu);
                    stop = stop || failure != nullptr;
                }
                if (stop) {
                    if (ordered) {
                        retired[static_cast<std::size_t>(w)] = true;
                        pass_turn(w);
                    }
                    return;
                }
                const SegmentDelta d = worker.run_segment(snap);
                store.push(w, worker.segments() - 1, snap.version, d.d_actor, d.d_critic, d.steps);
                book.add(worker.take_finished());
                if (ordered)
                    pass_turn(w);
            }
        } catch (...) {
            {
                std::lock_guard f(failure_mu);
                if (!failure)
                    failure = std::current_exception();
            }
            if (ordered) {
                std::lock_guard lock(turn_mu);
                retired[static_cast<std::size_t>(w)] = true;
                pass_turn(w);
            }
        }
    };

    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.n_workers; ++w)
        threads.emplace_back(body, w);
    for (auto& t : threads)
        t.join();

    if (failure)
        std::rethrow_exception(failure);
    if (book.diverged())
        throw DivergenceError(book.diagnostic(), book.log());
    return finish(store, setup, book, workers, start);
}

TrainResult replay(const ScenarioSampler& sampler, const Task& prototype, const TrainConfig& cfg,
                   const std::vector<PushRecord>& pushes) {
    cfg.validate();
    const auto start = Clock::now();
    const Setup setup = initial_parameters(prototype, cfg);
    ParameterStore store(setup.policy.theta, setup.critic.theta(),
                         [shape = setup.policy](Vec& theta) { project_actor(shape, theta); });
    auto workers = make_workers(sampler, prototype, cfg, setup);
    EpisodeBook book(cfg, start);

    const auto n = static_cast<std::size_t>(cfg.n_workers);
    std::vector<std::vector<const PushRecord*>> per_worker(n);
    for (const auto& rec : pushes) {
        if (rec.worker < 0 || static_cast<std::size_t>(rec.worker) >= n)
            throw std::invalid_argument("push log names an unknown worker");
        per_worker[static_cast<std::size_t>(rec.worker)].push_back(&rec);
    }
    std::vector<std::size_t> next(n, 0);
    std::vector<std::optional<SegmentDelta>> pending(n);

    for (std::size_t j = 0; j < pushes.size(); ++j) {
        const auto snap = store.snapshot();
        for (std::size_t w = 0; w < n; ++w) {
            if (pending[w] || next[w] >= per_worker[w].size())
                continue;
            const PushRecord& rec = *per_worker[w][next[w]];
            if (rec.read_version == snap.version) {
                pending[w] = workers[w]->run_segment(snap);
                book.add(workers[w]->take_finished());
            }
        }
        const PushRecord& rec = pushes[j];
        const auto w = static_cast<std::size_t>(rec.worker);
        if (!pending[w])
            throw std::invalid_argument("push log is inconsistent: segment pushed before it was read");
        store.push(rec.worker, rec.segment, rec.read_version, pending[w]->d_actor, pending[w]->d_critic,
                   pending[w]->steps);
        pending[w].reset();
        ++next[w];
    }
    return finish(store, setup, book, workers, start);
}

ScaTask sca_task_for(const ScenarioSampler& sampler, RewardMode mode) {
    return ScaTask(sampler(0).ev_count(), mode);
}

TrainResult train_sca(const ScenarioSampler& sampler, const TrainConfig& cfg) {
    return train_actor_critic(sampler, sca_task_for(sampler, cfg.reward), cfg);
}

TrainResult train_calc_stage1(const ScenarioSampler& sampler, const TrainConfig& cfg) {
    return train_actor_critic(sampler, CalcTask(cfg.reward), cfg);
}

} // namespace evsched::rl
