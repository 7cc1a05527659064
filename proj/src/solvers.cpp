// SPDX-License-Identifier: Apache-2.0
#include "evsched/solvers.hpp"

#include "evsched/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace evsched {

namespace {

/// Dinic max-flow on a small dense network.
class FlowNetwork {
public:
    explicit FlowNetwork(int nodes) : adj_(nodes), level_(nodes), it_(nodes) {}

    void add_edge(int from, int to, double cap) {
        adj_[from].push_back({to, cap, static_cast<int>(adj_[to].size())});
        adj_[to].push_back({from, 0.0, static_cast<int>(adj_[from].size()) - 1});
    }

    double max_flow(int s, int t) {
        double flow = 0.0;
        while (bfs(s, t)) {
            std::fill(it_.begin(), it_.end(), 0);
            while (double f = dfs(s, t, std::numeric_limits<double>::infinity()))
                flow += f;
        }
        return flow;
    }

private:
    struct Edge {
        int to;
        double cap;
        int rev;
    };
    static constexpr double kEps = 1e-12;

    bool bfs(int s, int t) {
        std::fill(level_.begin(), level_.end(), -1);
        std::queue<int> q;
        level_[s] = 0;
        q.push(s);
        while (!q.empty()) {
            const int v = q.front();
            q.pop();
            for (const auto& e : adj_[v])
                if (e.cap > kEps && level_[e.to] < 0) {
                    level_[e.to] = level_[v] + 1;
                    q.push(e.to);
                }
        }
        return level_[t] >= 0;
    }

    double dfs(int v, int t, double pushed) {
        if (v == t)
            return pushed;
        for (int& i = it_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
            Edge& e = adj_[v][i];
            if (e.cap <= kEps || level_[e.to] != level_[v] + 1)
                continue;
            const double f = dfs(e.to, t, std::min(pushed, e.cap));
            if (f > 0.0) {
                e.cap -= f;
                adj_[e.to][e.rev].cap += f;
                return f;
            }
        }
        return 0.0;
    }

    std::vector<std::vector<Edge>> adj_;
    std::vector<int> level_;
    std::vector<int> it_;
};

std::vector<double> column_caps(const ChargeProblem& p) {
    if (!std::isfinite(p.load_cap))
        return {};
    std::vector<double> caps(p.slots());
    for (int t = 0; t < p.slots(); ++t)
        caps[t] = std::max(0.0, p.load_cap - p.base[t]);
    return caps;
}

double objective_of(const Eigen::MatrixXd& x, const ChargeProblem& p) {
    double cost = 0.0;
    for (int t = 0; t < p.slots(); ++t)
        cost += slot_cost(x.rows() > 0 ? x.col(t).sum() : 0.0, p.base[t], p.price);
    return cost;
}

void gradient_of(const Eigen::MatrixXd& x, const ChargeProblem& p, Eigen::MatrixXd& grad) {
    grad.resize(x.rows(), x.cols());
    for (int t = 0; t < p.slots(); ++t) {
        const double price = p.price.k0 + 2.0 * p.price.k1 * (x.col(t).sum() + p.base[t]);
        grad.col(t).setConstant(price);
    }
}

void check_row_capacity(const ChargeProblem& p, double tol) {
    std::vector<int> bad;
    double unmet = 0.0;
    for (int i = 0; i < static_cast<int>(p.rows.size()); ++i) {
        const auto& r = p.rows[i];
        const double cap = r.b_max * std::max(0, r.last - r.first + 1);
        if (r.demand > cap + tol) {
            bad.push_back(i);
            unmet += r.demand - cap;
        }
    }
    if (!bad.empty()) {
        std::ostringstream msg;
        msg << bad.size() << " row(s) cannot receive their demand inside their window (short by " << unmet
            << " kWh)";
        throw InfeasibleError(msg.str(), unmet, bad);
    }
}

} // namespace

double max_deliverable(const ChargeProblem& problem) {
    const int n = static_cast<int>(problem.rows.size());
    const int T = problem.slots();
    const int source = n + T, sink = n + T + 1;
    FlowNetwork net(n + T + 2);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& r = problem.rows[i];
        net.add_edge(source, i, r.demand);
        total += r.demand;
        for (int t = std::max(0, r.first); t <= std::min(T - 1, r.last); ++t)
            net.add_edge(i, n + t, r.b_max);
    }
    const auto caps = column_caps(problem);
    for (int t = 0; t < T; ++t)
        net.add_edge(n + t, sink, caps.empty() ? total + 1.0 : caps[t]);
    return net.max_flow(source, sink);
}

QpSolution solve_charge_problem(const ChargeProblem& problem, const SolverOptions& opts) {
    problem.price.validate();
    const int n = static_cast<int>(problem.rows.size());
    const int T = problem.slots();
    check_row_capacity(problem, opts.tol);

    const auto caps = column_caps(problem);
    if (!caps.empty()) {
        double demand = 0.0;
        for (const auto& r : problem.rows)
            demand += r.demand;
        const double delivered = max_deliverable(problem);
        if (delivered < demand - opts.tol) {
            std::ostringstream msg;
            msg << "load cap makes the fleet infeasible: " << demand - delivered << " kWh of " << demand
                << " kWh cannot be delivered";
            throw InfeasibleError(msg.str(), demand - delivered);
        }
    }

    std::vector<RowWindow> windows;
    windows.reserve(n);
    for (const auto& r : problem.rows)
        windows.push_back({r.first, r.last, std::min(r.demand, r.b_max * (r.last - r.first + 1)), r.b_max});
    const DemandSetProjector projector(windows, T, caps, std::min(1e-10, opts.tol * 1e-3));

    QpSolution sol;
    Eigen::MatrixXd x = projector.project(Eigen::MatrixXd::Zero(n, T));
    if (n == 0 || problem.price.k1 == 0.0) {
        sol.schedule = ChargingSchedule(x);
        sol.objective = objective_of(x, problem);
        return sol;
    }

    int max_overlap = 1;
    for (int t = 0; t < T; ++t) {
        int k = 0;
        for (const auto& r : problem.rows)
            k += (r.first <= t && t <= r.last) ? 1 : 0;
        max_overlap = std::max(max_overlap, k);
    }
    const double step = 1.0 / (2.0 * problem.price.k1 * max_overlap);

    Eigen::MatrixXd y = x, grad, x_next, probe;
    double momentum = 1.0;
    double residual = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        gradient_of(y, problem, grad);
        x_next = projector.project(y - step * grad);
        // gradient-based adaptive restart
        if (((y - x_next).array() * (x_next - x).array()).sum() > 0.0)
            momentum = 1.0;
        const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        y = x_next + ((momentum - 1.0) / momentum_next) * (x_next - x);
        momentum = momentum_next;
        x.swap(x_next);

        if (it % 10 == 9 || it + 1 == opts.max_iter) {
            gradient_of(x, problem, grad);
            probe = projector.project(x - step * grad);
            residual = (x - probe).cwiseAbs().maxCoeff();
            if (residual <= opts.tol) {
                ++it;
                break;
            }
        }
    }
    if (residual > opts.tol) {
        std::ostringstream msg;
        msg << "projected gradient did not converge in " << opts.max_iter << " iterations (residual " << residual
            << ")";
        throw ConvergenceError(msg.str(), residual);
    }
    sol.schedule = ChargingSchedule(x);
    sol.objective = objective_of(x, problem);
    sol.iterations = it;
    sol.kkt_residual = residual;
    return sol;
}

QpSolution solve_offline(const Scenario& scenario, const SolverOptions& opts) {
    scenario.validate();
    ChargeProblem p;
    p.base = scenario.base_load;
    p.load_cap = scenario.load_cap;
    p.price = scenario.price;
    for (const auto& ev : scenario.evs)
        p.rows.push_back({ev.t_arr, ev.t_dep, ev.demand, ev.b_max});
    try {
        return solve_charge_problem(p, opts);
    } catch (InfeasibleError& e) {
        std::vector<int> ids;
        for (int row : e.ev_ids())
            ids.push_back(scenario.evs[row].id);
        throw InfeasibleError(e.what(), e.unmet(), ids);
    }
}

RollingStep solve_rolling_step(const Scenario& context, std::span<const EvProfile> revealed,
                               std::span<const double> residual, int t_s, const SolverOptions& opts) {
    if (residual.size() != revealed.size())
        throw std::invalid_argument("solve_rolling_step: one residual per revealed EV required");
    const auto window = rolling_window(revealed, t_s);
    if (!window)
        throw std::invalid_argument("solve_rolling_step: no EV parked at slot " + std::to_string(t_s));

    RollingStep step;
    step.window = *window;
    step.rows = active_rows(revealed, t_s);

    ChargeProblem p;
    p.base.assign(context.base_load.begin() + window->first, context.base_load.begin() + window->last + 1);
    p.load_cap = context.load_cap;
    p.price = context.price;

    std::vector<int> short_ids;
    double short_total = 0.0;
    for (int row : step.rows) {
        const auto& ev = revealed[row];
        const double need = residual[row];
        if (need < -opts.tol)
            throw std::invalid_argument("solve_rolling_step: negative residual demand");
        const int last = ev.t_dep - t_s;
        const double deliverable = ev.b_max * (last + 1);
        if (need > deliverable + opts.tol) {
            short_ids.push_back(ev.id);
            short_total += need - deliverable;
        }
        p.rows.push_back({0, last, std::max(0.0, need), ev.b_max});
    }
    if (!short_ids.empty()) {
        std::ostringstream msg;
        msg << "window infeasible at slot " << t_s << " for EV(s)";
        for (int id : short_ids)
            msg << ' ' << id;
        throw InfeasibleError(msg.str(), short_total, short_ids);
    }

    const QpSolution sol = solve_charge_problem(p, opts);
    step.amounts = sol.schedule.matrix();
    step.objective = sol.objective;
    step.iterations = sol.iterations;
    return step;
}

ProjectionResult project_allocation(std::span<const double> aggregate_target, const Scenario& scenario,
                                    double tol, int max_iter) {
    const int T = scenario.horizon;
    const int n = scenario.ev_count();
    if (static_cast<int>(aggregate_target.size()) != T)
        throw std::invalid_argument("project_allocation: target length must equal the horizon");

    ProjectionResult res;
    res.clipped_target.resize(T);
    for (int t = 0; t < T; ++t) {
        double reach = 0.0;
        for (const auto& ev : scenario.evs)
            if (ev.parked_at(t))
                reach += ev.b_max;
        const double upper = std::min(reach, std::max(0.0, scenario.load_cap - scenario.base_load[t]));
        res.clipped_target[t] = std::clamp(aggregate_target[t], 0.0, upper);
        res.clip_magnitude += std::abs(aggregate_target[t] - res.clipped_target[t]);
    }

    std::vector<RowWindow> windows;
    for (const auto& ev : scenario.evs)
        windows.push_back({ev.t_arr, ev.t_dep, ev.demand, ev.b_max});
    std::vector<double> caps(T);
    for (int t = 0; t < T; ++t)
        caps[t] = std::max(0.0, scenario.load_cap - scenario.base_load[t]);
    const DemandSetProjector demand_set(windows, T, caps, std::min(1e-10, tol));

    // surrogate set: per-slot split of the clipped target within the boxes
    auto project_surrogate = [&](Eigen::MatrixXd& z) {
        std::vector<double> buf, upper;
        std::vector<int> rows;
        for (int t = 0; t < T; ++t) {
            rows.clear();
            for (int i = 0; i < n; ++i) {
                if (scenario.evs[i].parked_at(t))
                    rows.push_back(i);
                else
                    z(i, t) = 0.0;
            }
            buf.resize(rows.size());
            upper.resize(rows.size());
            for (std::size_t k = 0; k < rows.size(); ++k) {
                buf[k] = z(rows[k], t);
                upper[k] = scenario.evs[rows[k]].b_max;
            }
            project_capped_simplex(buf, res.clipped_target[t], upper);
            for (std::size_t k = 0; k < rows.size(); ++k)
                z(rows[k], t) = buf[k];
        }
    };

    Eigen::MatrixXd surrogate = Eigen::MatrixXd::Zero(n, T);
    project_surrogate(surrogate);
    Eigen::MatrixXd b = demand_set.project(surrogate);
    int it = 0;
    for (; it < max_iter; ++it) {
        Eigen::MatrixXd next = b;
        project_surrogate(next);
        Eigen::MatrixXd b_next = demand_set.project(next);
        const double change = n > 0 ? std::max((next - surrogate).cwiseAbs().maxCoeff(),
                                               (b_next - b).cwiseAbs().maxCoeff())
                                    : 0.0;
        surrogate = std::move(next);
        b = std::move(b_next);
        if (change <= tol)
            break;
    }
    res.iterations = it + 1;
    res.schedule = ChargingSchedule(b);
    res.surrogate = ChargingSchedule(surrogate);
    res.distance = (b - surrogate).squaredNorm();
    return res;
}

} // namespace evsched
