// SPDX-License-Identifier: Apache-2.0
#include "evsched/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evsched {

void project_capped_simplex(std::span<double> x, double total, std::span<const double> upper) {
    const std::size_t n = x.size();
    if (upper.size() != n)
        throw std::invalid_argument("project_capped_simplex: size mismatch");
    if (n == 0) {
        if (total > 0.0)
            throw std::invalid_argument("project_capped_simplex: positive total over empty set");
        return;
    }

    double capacity = 0.0;
    for (double u : upper)
        capacity += u;
    if (total <= 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return;
    }
    if (total >= capacity) {
        std::copy(upper.begin(), upper.end(), x.begin());
        return;
    }

    // g(tau) = sum_j clamp(x_j - tau, 0, u_j) is non-increasing and linear
    // between breakpoints {x_j - u_j} U {x_j}.
    std::vector<double> breaks;
    breaks.reserve(2 * n);
    for (std::size_t j = 0; j < n; ++j) {
        breaks.push_back(x[j] - upper[j]);
        breaks.push_back(x[j]);
    }
    std::sort(breaks.begin(), breaks.end());
    auto g = [&](double tau) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += std::clamp(x[j] - tau, 0.0, upper[j]);
        return s;
    };

    // g(breaks.front()) == capacity > total >= 0 == g(breaks.back()); find the
    // segment [lo, hi] with g(lo) >= total >= g(hi).
    std::size_t lo = 0, hi = breaks.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (g(breaks[mid]) >= total)
            lo = mid;
        else
            hi = mid;
    }
    const double g_lo = g(breaks[lo]);
    const double g_hi = g(breaks[hi]);
    double tau = breaks[lo];
    if (g_lo > g_hi)
        tau = breaks[lo] + (g_lo - total) * (breaks[hi] - breaks[lo]) / (g_lo - g_hi);
    for (std::size_t j = 0; j < n; ++j)
        x[j] = std::clamp(x[j] - tau, 0.0, upper[j]);

    // fix the last ulp-level drift on a free coordinate
    double drift = total;
    for (double v : x)
        drift -= v;
    for (std::size_t j = 0; j < n && drift != 0.0; ++j) {
        const double moved = std::clamp(x[j] + drift, 0.0, upper[j]);
        drift -= moved - x[j];
        x[j] = moved;
    }
}

void project_sum_at_most(std::span<double> x, double cap) {
    if (x.empty())
        return;
    double sum = 0.0;
    for (double v : x)
        sum += v;
    if (sum <= cap)
        return;
    const double shift = (sum - cap) / static_cast<double>(x.size());
    for (double& v : x)
        v -= shift;
}

DemandSetProjector::DemandSetProjector(std::vector<RowWindow> rows, int cols, std::vector<double> column_cap,
                                       double tol, int max_iter)
    : rows_(std::move(rows)), cols_(cols), caps_(std::move(column_cap)), tol_(tol), max_iter_(max_iter) {
    for (const auto& r : rows_) {
        if (r.first < 0 || r.last >= cols_ || r.first > r.last + 1)
            throw std::invalid_argument("DemandSetProjector: window outside columns");
        if (r.demand > r.upper * (r.last - r.first + 1) * (1.0 + 1e-12) + 1e-12)
            throw std::invalid_argument("DemandSetProjector: demand exceeds window capacity");
    }
    if (!caps_.empty() && static_cast<int>(caps_.size()) != cols_)
        throw std::invalid_argument("DemandSetProjector: one cap per column required");
    // drop caps that can never bind
    if (!caps_.empty()) {
        bool any = false;
        for (int t = 0; t < cols_; ++t) {
            double reach = 0.0;
            for (const auto& r : rows_)
                if (r.first <= t && t <= r.last)
                    reach += r.upper;
            if (caps_[t] < reach)
                any = true;
        }
        if (!any)
            caps_.clear();
    }
}

void DemandSetProjector::project_rows(Eigen::MatrixXd& x) const {
    std::vector<double> buf, upper;
    for (int i = 0; i < rows(); ++i) {
        const auto& r = rows_[i];
        for (int t = 0; t < cols_; ++t)
            if (t < r.first || t > r.last)
                x(i, t) = 0.0;
        const int len = r.last - r.first + 1;
        if (len <= 0)
            continue;
        buf.resize(len);
        upper.assign(len, r.upper);
        for (int k = 0; k < len; ++k)
            buf[k] = x(i, r.first + k);
        project_capped_simplex(buf, std::min(r.demand, r.upper * len), upper);
        for (int k = 0; k < len; ++k)
            x(i, r.first + k) = buf[k];
    }
}

void DemandSetProjector::project_columns(Eigen::MatrixXd& x) const {
    std::vector<double> buf;
    std::vector<int> idx;
    for (int t = 0; t < cols_; ++t) {
        idx.clear();
        for (int i = 0; i < rows(); ++i)
            if (rows_[i].first <= t && t <= rows_[i].last)
                idx.push_back(i);
        buf.resize(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k)
            buf[k] = x(idx[k], t);
        project_sum_at_most(buf, caps_[t]);
        for (std::size_t k = 0; k < idx.size(); ++k)
            x(idx[k], t) = buf[k];
    }
}

double DemandSetProjector::cap_excess(const Eigen::MatrixXd& x) const {
    double worst = 0.0;
    for (int t = 0; t < cols_; ++t)
        worst = std::max(worst, x.col(t).sum() - caps_[t]);
    return worst;
}

Eigen::MatrixXd DemandSetProjector::project(const Eigen::MatrixXd& y) const {
    Eigen::MatrixXd x = y;
    project_rows(x);
    if (caps_.empty() || cap_excess(x) <= tol_)
        return x;

    // Dykstra between the row set (closed form) and the column half-spaces.
    Eigen::MatrixXd cur = y;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(y.rows(), y.cols());
    Eigen::MatrixXd q = p;
    Eigen::MatrixXd u = x;
    for (int it = 0; it < max_iter_; ++it) {
        u = cur + p;
        project_rows(u);
        p = cur + p - u;
        Eigen::MatrixXd next = u + q;
        project_columns(next);
        q = u + q - next;
        const double change = (next - cur).cwiseAbs().maxCoeff();
        cur = std::move(next);
        if (change <= tol_ && cap_excess(u) <= tol_)
            break;
    }
    return u;
}

} // namespace evsched
