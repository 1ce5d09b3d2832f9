#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "bess/lp/model.hpp"

namespace bess::lp {

struct InteriorPointOptions {
    int max_iterations = 200;
    /// Relative primal/dual infeasibility and duality-gap target.
    double tolerance = 1e-10;
    double step_fraction = 0.995;
    double regularization = 1e-11;
    int refinement_steps = 2;
};

namespace detail {

/// Mehrotra predictor-corrector on
///
///     min c'x  s.t.  A x = b,  l <= x <= u
///
/// where inequality rows carry an explicit slack column and fixed columns
/// are substituted out. Newton systems are solved in the quasidefinite
/// augmented form  [-D  A'; A  0]  with a sparse LDL' factorisation, which
/// keeps dense columns (a shared peak variable) from filling in.
class InteriorPoint {
public:
    InteriorPoint(const Model& model, const InteriorPointOptions& options) : options_(options) {
        standardize(model);
        scale();
    }

    Solution run(const Model& model) {
        Solution result;
        if (nv_ == 0) {
            result.status = Status::Optimal;
            result.x = recover(Eigen::VectorXd());
            result.objective = model.objective(result.x);
            return result;
        }
        initialize();
        assemble_pattern();

        Eigen::VectorXd dx(nv_), dy(m_), dzl(nv_), dzu(nv_);
        Eigen::VectorXd ax(nv_), ay(m_), azl(nv_), azu(nv_);
        Eigen::VectorXd rp(m_), rd(nv_), rvz(nv_), rws(nv_);
        Status status = Status::IterationLimit;
        int iteration = 0;
        for (; iteration < options_.max_iterations; ++iteration) {
            rp = b_ - A_ * x_;
            rd = c_ - At_ * y_ - zl_ + zu_;
            double comp = 0.0;
            for (int j = 0; j < nv_; ++j) {
                if (has_l_[j]) comp += (x_[j] - l_[j]) * zl_[j];
                if (has_u_[j]) comp += (u_[j] - x_[j]) * zu_[j];
            }
            const double mu = n_bounds_ > 0 ? comp / n_bounds_ : 0.0;
            const double pobj = c_.dot(x_);
            double dobj = b_.dot(y_);
            for (int j = 0; j < nv_; ++j) {
                if (has_l_[j]) dobj += l_[j] * zl_[j];
                if (has_u_[j]) dobj -= u_[j] * zu_[j];
            }
            const double primal_res = rp.lpNorm<Eigen::Infinity>() / (1.0 + b_norm_);
            const double dual_res = rd.lpNorm<Eigen::Infinity>() / (1.0 + c_norm_);
            const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj));
            if (primal_res <= options_.tolerance && dual_res <= options_.tolerance &&
                gap <= options_.tolerance) {
                status = Status::Optimal;
                break;
            }
            if (x_.lpNorm<Eigen::Infinity>() > 1e14) {
                status = Status::Unbounded;
                break;
            }
            if (y_.lpNorm<Eigen::Infinity>() > 1e14 || zl_.lpNorm<Eigen::Infinity>() > 1e14 ||
                zu_.lpNorm<Eigen::Infinity>() > 1e14) {
                status = Status::Infeasible;
                break;
            }

            // Newton matrix diagonal.
            for (int j = 0; j < nv_; ++j) {
                double d = 0.0;
                if (has_l_[j]) d += zl_[j] / (x_[j] - l_[j]);
                if (has_u_[j]) d += zu_[j] / (u_[j] - x_[j]);
                diag_[j] = d;
            }
            if (!factorize()) {
                status = Status::NumericalFailure;
                break;
            }

            // Predictor.
            for (int j = 0; j < nv_; ++j) {
                rvz[j] = has_l_[j] ? -(x_[j] - l_[j]) * zl_[j] : 0.0;
                rws[j] = has_u_[j] ? -(u_[j] - x_[j]) * zu_[j] : 0.0;
            }
            solve_newton(rp, rd, rvz, rws, ax, ay, azl, azu);
            const double ap_aff = primal_step(ax);
            const double ad_aff = dual_step(azl, azu);
            double comp_aff = 0.0;
            for (int j = 0; j < nv_; ++j) {
                if (has_l_[j]) comp_aff += (x_[j] - l_[j] + ap_aff * ax[j]) * (zl_[j] + ad_aff * azl[j]);
                if (has_u_[j]) comp_aff += (u_[j] - x_[j] - ap_aff * ax[j]) * (zu_[j] + ad_aff * azu[j]);
            }
            const double mu_aff = n_bounds_ > 0 ? comp_aff / n_bounds_ : 0.0;
            const double sigma = mu > 0.0 ? std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3) : 0.0;

            // Corrector.
            for (int j = 0; j < nv_; ++j) {
                rvz[j] = has_l_[j] ? sigma * mu - (x_[j] - l_[j]) * zl_[j] - ax[j] * azl[j] : 0.0;
                rws[j] = has_u_[j] ? sigma * mu - (u_[j] - x_[j]) * zu_[j] + ax[j] * azu[j] : 0.0;
            }
            solve_newton(rp, rd, rvz, rws, dx, dy, dzl, dzu);
            const double ap = std::min(1.0, options_.step_fraction * primal_step(dx));
            const double ad = std::min(1.0, options_.step_fraction * dual_step(dzl, dzu));
            x_ += ap * dx;
            y_ += ad * dy;
            zl_ += ad * dzl;
            zu_ += ad * dzu;
            keep_interior();
        }

        result.iterations = iteration;
        if (status == Status::IterationLimit) {
            const double primal_res = (b_ - A_ * x_).lpNorm<Eigen::Infinity>() / (1.0 + b_norm_);
            if (primal_res > 1e-6) status = Status::Infeasible;
        }
        result.status = status;
        if (status == Status::Optimal) {
            result.x = recover(x_);
            const auto& lo = model.col_lower();
            const auto& hi = model.col_upper();
            for (std::size_t j = 0; j < result.x.size(); ++j) {
                result.x[j] = std::clamp(result.x[j], lo[j], hi[j]);
            }
            result.objective = model.objective(result.x);
        }
        return result;
    }

private:
    void standardize(const Model& model) {
        const int n = model.num_cols();
        const int m = model.num_rows();
        fixed_value_.assign(static_cast<std::size_t>(n), 0.0);
        var_of_col_.assign(static_cast<std::size_t>(n), -1);
        std::vector<double> lo, hi, cost;
        for (int j = 0; j < n; ++j) {
            if (model.col_lower()[j] == model.col_upper()[j]) {
                fixed_value_[j] = model.col_lower()[j];
            } else {
                var_of_col_[j] = static_cast<int>(lo.size());
                lo.push_back(model.col_lower()[j]);
                hi.push_back(model.col_upper()[j]);
                cost.push_back(model.cost()[j]);
            }
        }
        n_struct_ = static_cast<int>(lo.size());

        std::vector<double> fixed_activity(static_cast<std::size_t>(m), 0.0);
        for (const auto& e : model.coefficients()) {
            if (var_of_col_[e.col] < 0) fixed_activity[e.row] += e.value * fixed_value_[e.col];
        }
        std::vector<int> row_map(static_cast<std::size_t>(m), -1);
        std::vector<double> rhs;
        std::vector<Eigen::Triplet<double>> triplets;
        for (int i = 0; i < m; ++i) {
            const double rl = model.row_lower()[i];
            const double ru = model.row_upper()[i];
            if (!std::isfinite(rl) && !std::isfinite(ru)) continue;
            const int r = static_cast<int>(rhs.size());
            row_map[i] = r;
            if (rl == ru) {
                rhs.push_back(rl - fixed_activity[i]);
            } else {
                rhs.push_back(0.0);
                const int s = static_cast<int>(lo.size());
                lo.push_back(rl - fixed_activity[i]);
                hi.push_back(ru - fixed_activity[i]);
                cost.push_back(0.0);
                triplets.emplace_back(r, s, -1.0);
            }
        }
        for (const auto& e : model.coefficients()) {
            const int r = row_map[e.row];
            const int v = var_of_col_[e.col];
            if (r >= 0 && v >= 0) triplets.emplace_back(r, v, e.value);
        }
        m_ = static_cast<int>(rhs.size());
        nv_ = static_cast<int>(lo.size());
        A_.resize(m_, nv_);
        A_.setFromTriplets(triplets.begin(), triplets.end());
        A_.makeCompressed();
        b_ = Eigen::Map<Eigen::VectorXd>(rhs.data(), m_);
        c_ = Eigen::Map<Eigen::VectorXd>(cost.data(), nv_);
        l_ = Eigen::Map<Eigen::VectorXd>(lo.data(), nv_);
        u_ = Eigen::Map<Eigen::VectorXd>(hi.data(), nv_);
    }

    /// Geometric row/column equilibration followed by objective and
    /// bound normalisation. x_original = col_scale * bound_scale * x_scaled.
    void scale() {
        row_scale_ = Eigen::VectorXd::Ones(m_);
        col_scale_ = Eigen::VectorXd::Ones(nv_);
        for (int pass = 0; pass < 8; ++pass) {
            Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m_);
            Eigen::VectorXd rmin = Eigen::VectorXd::Constant(m_, kInf);
            for (int j = 0; j < nv_; ++j) {
                for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
                    const double a = std::abs(it.value());
                    rmax[it.row()] = std::max(rmax[it.row()], a);
                    rmin[it.row()] = std::min(rmin[it.row()], a);
                }
            }
            Eigen::VectorXd rs(m_);
            for (int i = 0; i < m_; ++i) rs[i] = rmax[i] > 0.0 ? 1.0 / std::sqrt(rmax[i] * rmin[i]) : 1.0;
            A_ = rs.asDiagonal() * A_;
            Eigen::VectorXd cs(nv_);
            for (int j = 0; j < nv_; ++j) {
                double cmax = 0.0;
                double cmin = kInf;
                for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
                    cmax = std::max(cmax, std::abs(it.value()));
                    cmin = std::min(cmin, std::abs(it.value()));
                }
                cs[j] = cmax > 0.0 ? 1.0 / std::sqrt(cmax * cmin) : 1.0;
            }
            A_ = A_ * cs.asDiagonal();
            row_scale_ = row_scale_.cwiseProduct(rs);
            col_scale_ = col_scale_.cwiseProduct(cs);
        }
        A_.makeCompressed();
        b_ = row_scale_.cwiseProduct(b_);
        c_ = col_scale_.cwiseProduct(c_);
        for (int j = 0; j < nv_; ++j) {
            l_[j] /= col_scale_[j];
            u_[j] /= col_scale_[j];
        }
        cost_scale_ = std::max(c_.lpNorm<Eigen::Infinity>(), 1e-12);
        if (c_.lpNorm<Eigen::Infinity>() == 0.0) cost_scale_ = 1.0;
        c_ /= cost_scale_;
        bound_scale_ = std::max(1.0, b_.lpNorm<Eigen::Infinity>());
        for (int j = 0; j < nv_; ++j) {
            if (std::isfinite(l_[j])) bound_scale_ = std::max(bound_scale_, std::abs(l_[j]));
            if (std::isfinite(u_[j])) bound_scale_ = std::max(bound_scale_, std::abs(u_[j]));
        }
        b_ /= bound_scale_;
        l_ /= bound_scale_;
        u_ /= bound_scale_;
        At_ = A_.transpose();
        b_norm_ = b_.lpNorm<Eigen::Infinity>();
        c_norm_ = c_.lpNorm<Eigen::Infinity>();
    }

    std::vector<double> recover(const Eigen::VectorXd& xs) const {
        std::vector<double> x = fixed_value_;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const int v = var_of_col_[j];
            if (v >= 0) x[j] = xs[v] * col_scale_[v] * bound_scale_;
        }
        return x;
    }

    void initialize() {
        has_l_.assign(static_cast<std::size_t>(nv_), false);
        has_u_.assign(static_cast<std::size_t>(nv_), false);
        n_bounds_ = 0;
        x_.resize(nv_);
        zl_ = Eigen::VectorXd::Zero(nv_);
        zu_ = Eigen::VectorXd::Zero(nv_);
        y_ = Eigen::VectorXd::Zero(m_);
        diag_ = Eigen::VectorXd::Zero(nv_);
        for (int j = 0; j < nv_; ++j) {
            has_l_[j] = std::isfinite(l_[j]);
            has_u_[j] = std::isfinite(u_[j]);
            n_bounds_ += has_l_[j] + has_u_[j];
            if (has_l_[j] && has_u_[j]) {
                x_[j] = 0.5 * (l_[j] + u_[j]);
            } else if (has_l_[j]) {
                x_[j] = l_[j] + 1.0;
            } else if (has_u_[j]) {
                x_[j] = u_[j] - 1.0;
            } else {
                x_[j] = 0.0;
            }
            if (has_l_[j]) zl_[j] = 1.0;
            if (has_u_[j]) zu_[j] = 1.0;
        }
    }

    void assemble_pattern() {
        std::vector<Eigen::Triplet<double>> triplets;
        triplets.reserve(static_cast<std::size_t>(nv_ + m_ + A_.nonZeros()));
        for (int j = 0; j < nv_; ++j) triplets.emplace_back(j, j, 1.0);
        for (int i = 0; i < m_; ++i) triplets.emplace_back(nv_ + i, nv_ + i, 1.0);
        for (int j = 0; j < nv_; ++j) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
                triplets.emplace_back(nv_ + static_cast<int>(it.row()), j, it.value());
            }
        }
        K_.resize(nv_ + m_, nv_ + m_);
        K_.setFromTriplets(triplets.begin(), triplets.end());
        K_.makeCompressed();
        // Locate diagonal entries for in-place updates.
        diag_index_.assign(static_cast<std::size_t>(nv_ + m_), -1);
        for (int col = 0; col < nv_ + m_; ++col) {
            for (int k = K_.outerIndexPtr()[col]; k < K_.outerIndexPtr()[col + 1]; ++k) {
                if (K_.innerIndexPtr()[k] == col) diag_index_[col] = k;
            }
        }
        solver_.analyzePattern(K_);
    }

    bool factorize() {
        const double reg = options_.regularization;
        double* values = K_.valuePtr();
        for (int j = 0; j < nv_; ++j) values[diag_index_[j]] = -(diag_[j] + reg);
        for (int i = 0; i < m_; ++i) values[diag_index_[nv_ + i]] = reg;
        solver_.factorize(K_);
        return solver_.info() == Eigen::Success;
    }

    /// K_true * [dx; dy] with the unregularised diagonal.
    Eigen::VectorXd apply_true(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(nv_ + m_);
        const auto vx = v.head(nv_);
        const auto vy = v.tail(m_);
        out.head(nv_) = -diag_.cwiseProduct(vx) + At_ * vy;
        out.tail(m_) = A_ * vx;
        return out;
    }

    void solve_newton(const Eigen::VectorXd& rp, const Eigen::VectorXd& rd, const Eigen::VectorXd& rvz,
                      const Eigen::VectorXd& rws, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                      Eigen::VectorXd& dzl, Eigen::VectorXd& dzu) {
        Eigen::VectorXd rhs(nv_ + m_);
        for (int j = 0; j < nv_; ++j) {
            double r = rd[j];
            if (has_l_[j]) r -= rvz[j] / (x_[j] - l_[j]);
            if (has_u_[j]) r += rws[j] / (u_[j] - x_[j]);
            rhs[j] = r;
        }
        rhs.tail(m_) = rp;
        Eigen::VectorXd sol = solver_.solve(rhs);
        for (int k = 0; k < options_.refinement_steps; ++k) {
            const Eigen::VectorXd residual = rhs - apply_true(sol);
            sol += solver_.solve(residual);
        }
        dx = sol.head(nv_);
        dy = sol.tail(m_);
        for (int j = 0; j < nv_; ++j) {
            dzl[j] = has_l_[j] ? (rvz[j] - zl_[j] * dx[j]) / (x_[j] - l_[j]) : 0.0;
            dzu[j] = has_u_[j] ? (rws[j] + zu_[j] * dx[j]) / (u_[j] - x_[j]) : 0.0;
        }
    }

    double primal_step(const Eigen::VectorXd& dx) const {
        double alpha = kInf;
        for (int j = 0; j < nv_; ++j) {
            if (has_l_[j] && dx[j] < 0.0) alpha = std::min(alpha, -(x_[j] - l_[j]) / dx[j]);
            if (has_u_[j] && dx[j] > 0.0) alpha = std::min(alpha, (u_[j] - x_[j]) / dx[j]);
        }
        return std::min(alpha, 1e300);
    }

    double dual_step(const Eigen::VectorXd& dzl, const Eigen::VectorXd& dzu) const {
        double alpha = kInf;
        for (int j = 0; j < nv_; ++j) {
            if (has_l_[j] && dzl[j] < 0.0) alpha = std::min(alpha, -zl_[j] / dzl[j]);
            if (has_u_[j] && dzu[j] < 0.0) alpha = std::min(alpha, -zu_[j] / dzu[j]);
        }
        return std::min(alpha, 1e300);
    }

    void keep_interior() {
        for (int j = 0; j < nv_; ++j) {
            if (has_l_[j]) {
                x_[j] = std::max(x_[j], l_[j] + 1e-300);
                zl_[j] = std::max(zl_[j], 1e-300);
            }
            if (has_u_[j]) {
                x_[j] = std::min(x_[j], u_[j] - 1e-300);
                zu_[j] = std::max(zu_[j], 1e-300);
            }
        }
    }

    InteriorPointOptions options_;
    int m_ = 0;
    int nv_ = 0;
    int n_struct_ = 0;
    int n_bounds_ = 0;
    Eigen::SparseMatrix<double> A_;
    Eigen::SparseMatrix<double> At_;
    Eigen::VectorXd b_, c_, l_, u_;
    Eigen::VectorXd row_scale_, col_scale_;
    double cost_scale_ = 1.0;
    double bound_scale_ = 1.0;
    double b_norm_ = 0.0;
    double c_norm_ = 0.0;
    std::vector<double> fixed_value_;
    std::vector<int> var_of_col_;
    std::vector<bool> has_l_, has_u_;
    Eigen::VectorXd x_, y_, zl_, zu_, diag_;
    Eigen::SparseMatrix<double> K_;
    std::vector<int> diag_index_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> solver_;
};

} // namespace detail

/// Solve with the primal-dual interior-point method. The returned point is
/// optimal to the configured relative tolerance but generally not a vertex.
inline Solution solve_interior_point(const Model& model, const InteriorPointOptions& options = {}) {
    detail::InteriorPoint ipm(model, options);
    return ipm.run(model);
}

} // namespace bess::lp
