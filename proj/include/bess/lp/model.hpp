#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bess::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// A linear program in bounded row/column form:
///
///     min  c'x + offset
///     s.t. row_lower <= A x <= row_upper
///          col_lower <=   x <= col_upper
///
/// Infinite bounds are expressed with +/-kInf. Coefficients are stored as
/// triplets; duplicates are summed when the solvers assemble A.
class Model {
public:
    struct Coefficient {
        int row;
        int col;
        double value;
    };

    int add_column(double cost, double lower, double upper) {
        if (std::isnan(cost) || std::isnan(lower) || std::isnan(upper) || lower > upper) {
            throw std::invalid_argument("lp::Model: invalid column bounds or cost");
        }
        cost_.push_back(cost);
        col_lower_.push_back(lower);
        col_upper_.push_back(upper);
        return static_cast<int>(cost_.size()) - 1;
    }

    int add_row(double lower, double upper) {
        if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
            throw std::invalid_argument("lp::Model: invalid row bounds");
        }
        row_lower_.push_back(lower);
        row_upper_.push_back(upper);
        return static_cast<int>(row_lower_.size()) - 1;
    }

    void add_coefficient(int row, int col, double value) {
        if (row < 0 || row >= num_rows() || col < 0 || col >= num_cols()) {
            throw std::out_of_range("lp::Model: coefficient index out of range");
        }
        if (value != 0.0) {
            entries_.push_back({row, col, value});
        }
    }

    void set_cost(int col, double cost) { cost_.at(static_cast<std::size_t>(col)) = cost; }
    void set_col_bounds(int col, double lower, double upper) {
        col_lower_.at(static_cast<std::size_t>(col)) = lower;
        col_upper_.at(static_cast<std::size_t>(col)) = upper;
    }

    double objective_offset = 0.0;

    int num_rows() const { return static_cast<int>(row_lower_.size()); }
    int num_cols() const { return static_cast<int>(cost_.size()); }
    const std::vector<double>& cost() const { return cost_; }
    const std::vector<double>& col_lower() const { return col_lower_; }
    const std::vector<double>& col_upper() const { return col_upper_; }
    const std::vector<double>& row_lower() const { return row_lower_; }
    const std::vector<double>& row_upper() const { return row_upper_; }
    const std::vector<Coefficient>& coefficients() const { return entries_; }

    double objective(const std::vector<double>& x) const {
        double value = objective_offset;
        for (std::size_t j = 0; j < cost_.size(); ++j) {
            value += cost_[j] * x[j];
        }
        return value;
    }

    std::vector<double> row_activity(const std::vector<double>& x) const {
        std::vector<double> activity(row_lower_.size(), 0.0);
        for (const auto& e : entries_) {
            activity[static_cast<std::size_t>(e.row)] += e.value * x[static_cast<std::size_t>(e.col)];
        }
        return activity;
    }

    /// Largest absolute violation of any row or column bound at x.
    double max_violation(const std::vector<double>& x) const {
        double worst = 0.0;
        for (std::size_t j = 0; j < cost_.size(); ++j) {
            worst = std::max({worst, col_lower_[j] - x[j], x[j] - col_upper_[j]});
        }
        const auto activity = row_activity(x);
        for (std::size_t i = 0; i < activity.size(); ++i) {
            worst = std::max({worst, row_lower_[i] - activity[i], activity[i] - row_upper_[i]});
        }
        return worst;
    }

private:
    std::vector<double> cost_;
    std::vector<double> col_lower_;
    std::vector<double> col_upper_;
    std::vector<double> row_lower_;
    std::vector<double> row_upper_;
    std::vector<Coefficient> entries_;
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit, NumericalFailure };

inline std::string_view to_string(Status status) {
    switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration-limit";
    case Status::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

struct Solution {
    Status status = Status::NumericalFailure;
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
};

} // namespace bess::lp
