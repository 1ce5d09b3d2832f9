#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "bess/lp/model.hpp"

namespace bess::lp {

struct SimplexOptions {
    int max_iterations = 2'000'000;
    double primal_tolerance = 1e-9;
    double dual_tolerance = 1e-9;
    double pivot_tolerance = 1e-9;
    /// Pivots between basis reinversions; 0 selects max(200, 2 * rows).
    int refactor_interval = 0;
    /// Consecutive non-improving pivots before switching to Bland's rule.
    int stall_limit = 200;
};

namespace detail {

/// Bounded-variable revised primal simplex with an explicit dense basis
/// inverse. Every row i becomes  a_i x - s_i + sign_i * art_i = 0  with the
/// slack s_i carrying the row bounds; artificials start in the basis where
/// the slack cannot absorb the initial residual and are driven out by a
/// phase-one objective.
class BoundedSimplex {
public:
    BoundedSimplex(const Model& model, const SimplexOptions& options)
        : options_(options),
          m_(model.num_rows()),
          n_struct_(model.num_cols()),
          n_total_(model.num_cols() + 2 * model.num_rows()),
          refactor_interval_(options.refactor_interval > 0 ? options.refactor_interval
                                                           : std::max(200, 2 * model.num_rows())) {
        build_columns(model);
        lower_.resize(static_cast<std::size_t>(n_total_));
        upper_.resize(static_cast<std::size_t>(n_total_));
        original_cost_.assign(static_cast<std::size_t>(n_total_), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            lower_[j] = model.col_lower()[j];
            upper_[j] = model.col_upper()[j];
            original_cost_[j] = model.cost()[j];
        }
        for (int i = 0; i < m_; ++i) {
            lower_[slack(i)] = model.row_lower()[i];
            upper_[slack(i)] = model.row_upper()[i];
            lower_[artificial(i)] = 0.0;
            upper_[artificial(i)] = kInf;
        }
    }

    Solution run(const Model& model) {
        Solution result;
        crash();

        // Phase one: minimise the sum of artificials.
        cost_.assign(static_cast<std::size_t>(n_total_), 0.0);
        for (int i = 0; i < m_; ++i) {
            cost_[artificial(i)] = 1.0;
        }
        Status status = iterate();
        if (status != Status::Optimal) {
            result.status = status == Status::Unbounded ? Status::NumericalFailure : status;
            result.iterations = iterations_;
            return result;
        }
        double infeasibility = 0.0;
        for (int i = 0; i < m_; ++i) {
            infeasibility += x_[artificial(i)];
        }
        if (infeasibility > 1e-7 * std::max(1.0, magnitude_)) {
            result.status = Status::Infeasible;
            result.iterations = iterations_;
            return result;
        }
        for (int i = 0; i < m_; ++i) {
            const int a = artificial(i);
            lower_[a] = upper_[a] = 0.0;
            if (position_[a] < 0) {
                x_[a] = 0.0;
                state_[a] = At::Lower;
            }
        }

        // Phase two.
        cost_ = original_cost_;
        status = iterate();
        result.iterations = iterations_;
        if (status != Status::Optimal) {
            result.status = status;
            return result;
        }

        result.x.assign(x_.begin(), x_.begin() + n_struct_);
        for (int j = 0; j < n_struct_; ++j) {
            // Snap values within tolerance of a finite bound.
            if (std::abs(result.x[j] - lower_[j]) <= options_.primal_tolerance) result.x[j] = lower_[j];
            if (std::abs(result.x[j] - upper_[j]) <= options_.primal_tolerance) result.x[j] = upper_[j];
        }
        result.objective = model.objective(result.x);
        result.status = Status::Optimal;
        return result;
    }

private:
    enum class At : unsigned char { Lower, Upper, Zero, Basic };

    int slack(int i) const { return n_struct_ + i; }
    int artificial(int i) const { return n_struct_ + m_ + i; }

    void build_columns(const Model& model) {
        std::vector<std::vector<std::pair<int, double>>> cols(static_cast<std::size_t>(n_struct_));
        for (const auto& c : model.coefficients()) {
            cols[static_cast<std::size_t>(c.col)].emplace_back(c.row, c.value);
        }
        col_start_.assign(1, 0);
        for (auto& col : cols) {
            std::sort(col.begin(), col.end());
            int last_row = -1;
            for (const auto& [row, value] : col) {
                if (row == last_row) {
                    values_.back() += value;
                } else {
                    rows_.push_back(row);
                    values_.push_back(value);
                    last_row = row;
                }
            }
            col_start_.push_back(static_cast<int>(rows_.size()));
        }
        for (int i = 0; i < m_; ++i) {
            rows_.push_back(i);
            values_.push_back(-1.0);
            col_start_.push_back(static_cast<int>(rows_.size()));
        }
        for (int i = 0; i < m_; ++i) {
            rows_.push_back(i);
            values_.push_back(1.0); // sign fixed in crash()
            col_start_.push_back(static_cast<int>(rows_.size()));
        }
        magnitude_ = 1.0;
        for (double v : model.row_lower()) if (std::isfinite(v)) magnitude_ = std::max(magnitude_, std::abs(v));
        for (double v : model.row_upper()) if (std::isfinite(v)) magnitude_ = std::max(magnitude_, std::abs(v));
        for (double v : model.col_lower()) if (std::isfinite(v)) magnitude_ = std::max(magnitude_, std::abs(v));
        for (double v : model.col_upper()) if (std::isfinite(v)) magnitude_ = std::max(magnitude_, std::abs(v));
    }

    static double nearest_bound(double lower, double upper, double target) {
        if (std::isfinite(lower) && std::isfinite(upper)) return std::clamp(target, lower, upper);
        if (std::isfinite(lower)) return std::max(lower, target);
        if (std::isfinite(upper)) return std::min(upper, target);
        return target;
    }

    void set_nonbasic_at_bound(int j) {
        if (std::isfinite(lower_[j])) {
            x_[j] = lower_[j];
            state_[j] = At::Lower;
        } else if (std::isfinite(upper_[j])) {
            x_[j] = upper_[j];
            state_[j] = At::Upper;
        } else {
            x_[j] = 0.0;
            state_[j] = At::Zero;
        }
    }

    void crash() {
        x_.assign(static_cast<std::size_t>(n_total_), 0.0);
        state_.assign(static_cast<std::size_t>(n_total_), At::Lower);
        position_.assign(static_cast<std::size_t>(n_total_), -1);
        basis_.assign(static_cast<std::size_t>(m_), -1);
        for (int j = 0; j < n_struct_; ++j) {
            set_nonbasic_at_bound(j);
        }
        std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            if (x_[j] == 0.0) continue;
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
                activity[rows_[k]] += values_[k] * x_[j];
            }
        }
        for (int i = 0; i < m_; ++i) {
            const int s = slack(i);
            const int a = artificial(i);
            const double target = nearest_bound(lower_[s], upper_[s], activity[i]);
            if (target == activity[i]) {
                // Slack absorbs the row: basic slack, artificial fixed out.
                x_[s] = activity[i];
                make_basic(s, i);
                lower_[a] = upper_[a] = 0.0;
                x_[a] = 0.0;
                state_[a] = At::Lower;
            } else {
                x_[s] = target;
                state_[s] = target == lower_[s] ? At::Lower : At::Upper;
                const double residual = target - activity[i];
                values_[col_start_[a]] = residual >= 0.0 ? 1.0 : -1.0;
                x_[a] = std::abs(residual);
                make_basic(a, i);
            }
        }
        refactor();
    }

    void make_basic(int j, int row) {
        basis_[row] = j;
        position_[j] = row;
        state_[j] = At::Basic;
    }

    void refactor() {
        Eigen::MatrixXd basis_matrix = Eigen::MatrixXd::Zero(m_, m_);
        for (int r = 0; r < m_; ++r) {
            const int j = basis_[r];
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
                basis_matrix(rows_[k], r) = values_[k];
            }
        }
        binv_ = basis_matrix.partialPivLu().inverse();
        recompute_basics();
        since_refactor_ = 0;
    }

    void recompute_basics() {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
        for (int j = 0; j < n_total_; ++j) {
            if (state_[j] == At::Basic || x_[j] == 0.0) continue;
            for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
                rhs[rows_[k]] -= values_[k] * x_[j];
            }
        }
        const Eigen::VectorXd xb = binv_ * rhs;
        for (int r = 0; r < m_; ++r) {
            x_[basis_[r]] = xb[r];
        }
    }

    double reduced_cost(int j, const Eigen::VectorXd& y) const {
        double d = cost_[j];
        for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) {
            d -= y[rows_[k]] * values_[k];
        }
        return d;
    }

    bool eligible(int j, double d) const {
        switch (state_[j]) {
        case At::Lower: return d < -options_.dual_tolerance && upper_[j] > lower_[j];
        case At::Upper: return d > options_.dual_tolerance && upper_[j] > lower_[j];
        case At::Zero: return std::abs(d) > options_.dual_tolerance;
        case At::Basic: return false;
        }
        return false;
    }

    Status iterate() {
        int stalled = 0;
        bool bland = false;
        Eigen::VectorXd cb(m_);
        Eigen::VectorXd column(m_);
        while (true) {
            if (iterations_ >= options_.max_iterations) return Status::IterationLimit;
            for (int r = 0; r < m_; ++r) cb[r] = cost_[basis_[r]];
            const Eigen::VectorXd y = binv_.transpose() * cb;

            int entering = -1;
            double entering_d = 0.0;
            double best = 0.0;
            for (int j = 0; j < n_total_; ++j) {
                if (state_[j] == At::Basic) continue;
                const double d = reduced_cost(j, y);
                if (!eligible(j, d)) continue;
                if (bland) {
                    entering = j;
                    entering_d = d;
                    break;
                }
                if (std::abs(d) > best) {
                    best = std::abs(d);
                    entering = j;
                    entering_d = d;
                }
            }
            if (entering < 0) {
                if (since_refactor_ == 0) return Status::Optimal;
                // Confirm optimality on a fresh factorisation.
                refactor();
                continue;
            }

            const double direction = entering_d < 0.0 ? 1.0 : -1.0;
            column.setZero();
            for (int k = col_start_[entering]; k < col_start_[entering + 1]; ++k) {
                column.noalias() += values_[k] * binv_.col(rows_[k]);
            }

            // Ratio test (Harris two-pass unless in Bland mode).
            const double tol = options_.primal_tolerance;
            double limit = upper_[entering] - lower_[entering]; // bound flip
            if (!std::isfinite(limit)) limit = kInf;
            double relaxed = limit;
            for (int r = 0; r < m_; ++r) {
                const double delta = direction * column[r];
                if (std::abs(column[r]) <= options_.pivot_tolerance) continue;
                const int b = basis_[r];
                if (delta > 0.0 && std::isfinite(lower_[b])) {
                    relaxed = std::min(relaxed, (x_[b] - lower_[b] + (bland ? 0.0 : tol)) / delta);
                } else if (delta < 0.0 && std::isfinite(upper_[b])) {
                    relaxed = std::min(relaxed, (upper_[b] - x_[b] + (bland ? 0.0 : tol)) / -delta);
                }
            }
            if (!std::isfinite(relaxed)) return Status::Unbounded;

            int leaving_row = -1;
            double step = limit;
            if (limit > relaxed) {
                double best_pivot = 0.0;
                for (int r = 0; r < m_; ++r) {
                    const double delta = direction * column[r];
                    if (std::abs(column[r]) <= options_.pivot_tolerance) continue;
                    const int b = basis_[r];
                    double ratio = kInf;
                    if (delta > 0.0 && std::isfinite(lower_[b])) {
                        ratio = (x_[b] - lower_[b]) / delta;
                    } else if (delta < 0.0 && std::isfinite(upper_[b])) {
                        ratio = (upper_[b] - x_[b]) / -delta;
                    }
                    if (ratio > relaxed) continue;
                    const bool better = bland
                        ? (leaving_row < 0 || ratio < step - 1e-15 ||
                           (ratio <= step + 1e-15 && b < basis_[leaving_row]))
                        : std::abs(column[r]) > best_pivot;
                    if (better) {
                        best_pivot = std::abs(column[r]);
                        leaving_row = r;
                        step = ratio;
                    }
                }
                step = std::max(step, 0.0);
            }

            ++iterations_;
            const double gain = std::abs(entering_d) * step;
            if (gain <= 1e-12) {
                if (++stalled > options_.stall_limit) bland = true;
            } else {
                stalled = 0;
                bland = false;
            }

            // Move the entering variable and update basics.
            x_[entering] += direction * step;
            for (int r = 0; r < m_; ++r) {
                x_[basis_[r]] -= direction * step * column[r];
            }

            if (leaving_row < 0) {
                // Bound flip.
                if (direction > 0.0) {
                    x_[entering] = upper_[entering];
                    state_[entering] = At::Upper;
                } else {
                    x_[entering] = lower_[entering];
                    state_[entering] = At::Lower;
                }
                continue;
            }

            const int leaving = basis_[leaving_row];
            const double delta = direction * column[leaving_row];
            position_[leaving] = -1;
            if (delta > 0.0) {
                x_[leaving] = lower_[leaving];
                state_[leaving] = At::Lower;
            } else {
                x_[leaving] = upper_[leaving];
                state_[leaving] = At::Upper;
            }
            if (lower_[leaving] == upper_[leaving]) state_[leaving] = At::Lower;
            make_basic(entering, leaving_row);

            const double pivot = column[leaving_row];
            const Eigen::RowVectorXd pivot_row = binv_.row(leaving_row) / pivot;
            binv_.noalias() -= column * pivot_row;
            binv_.row(leaving_row) = pivot_row;

            if (++since_refactor_ >= refactor_interval_) {
                refactor();
            }
        }
    }

    SimplexOptions options_;
    int m_;
    int n_struct_;
    int n_total_;
    int refactor_interval_;
    std::vector<int> col_start_;
    std::vector<int> rows_;
    std::vector<double> values_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> cost_;
    std::vector<double> original_cost_;
    std::vector<double> x_;
    std::vector<At> state_;
    std::vector<int> position_;
    std::vector<int> basis_;
    Eigen::MatrixXd binv_;
    double magnitude_ = 1.0;
    int iterations_ = 0;
    int since_refactor_ = 0;
};

} // namespace detail

/// Solve with the bounded revised simplex. Returns a basic (vertex) solution.
inline Solution solve_simplex(const Model& model, const SimplexOptions& options = {}) {
    detail::BoundedSimplex simplex(model, options);
    return simplex.run(model);
}

} // namespace bess::lp
