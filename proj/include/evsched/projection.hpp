// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <limits>
#include <span>
#include <vector>

namespace evsched {

/// Euclidean projection of x onto {z : sum(z) = total, 0 <= z <= upper}, in
/// place. Exact: sorts the breakpoints of the piecewise-linear sum function.
/// Requires 0 <= total <= sum(upper).
void project_capped_simplex(std::span<double> x, double total, std::span<const double> upper);

/// Projection onto the half-space {z : sum(z) <= cap}, in place.
void project_sum_at_most(std::span<double> x, double cap);

/// A block of consecutive slots [first, last] in which one row must deliver
/// `demand` with per-slot amounts in [0, upper].
struct RowWindow {
    int first = 0;
    int last = -1;
    double demand = 0.0;
    double upper = 0.0;
};

/// Projects onto { X : each row meets its window demand within its box,
/// zero outside the window, and every column sum <= column_cap }.
/// Column caps are handled with Dykstra's alternating scheme; rows come out
/// exactly demand-feasible, column caps hold to `tol`.
class DemandSetProjector {
public:
    DemandSetProjector(std::vector<RowWindow> rows, int cols,
                       std::vector<double> column_cap = {}, double tol = 1e-10, int max_iter = 20000);

    Eigen::MatrixXd project(const Eigen::MatrixXd& y) const;

    /// Projection ignoring the column caps.
    void project_rows(Eigen::MatrixXd& x) const;

    int rows() const { return static_cast<int>(rows_.size()); }
    int cols() const { return cols_; }
    const std::vector<RowWindow>& windows() const { return rows_; }
    bool has_column_caps() const { return !caps_.empty(); }

private:
    void project_columns(Eigen::MatrixXd& x) const;
    double cap_excess(const Eigen::MatrixXd& x) const;

    std::vector<RowWindow> rows_;
    int cols_;
    std::vector<double> caps_;
    double tol_;
    int max_iter_;
};

} // namespace evsched
