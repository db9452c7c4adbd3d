#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "quantshape/solvers.hpp"

namespace quantshape {

std::string to_string(SolverOutcome outcome) {
    switch (outcome) {
        case SolverOutcome::Optimal:
            return "optimal";
        case SolverOutcome::Infeasible:
            return "infeasible";
        case SolverOutcome::Unbounded:
            return "unbounded";
        case SolverOutcome::MaxIter:
            return "max_iter";
    }
    return "unknown";
}

LpProblem::LpProblem(Eigen::Index num_vars)
    : objective(Eigen::VectorXd::Zero(num_vars)),
      lower(Eigen::VectorXd::Zero(num_vars)),
      upper(Eigen::VectorXd::Constant(num_vars, kInf)) {}

void LpProblem::add_constraint(Eigen::VectorXd coeffs, Relation relation, double rhs) {
    constraints.push_back({std::move(coeffs), relation, rhs});
}

void LpProblem::validate() const {
    const auto n = num_vars();
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("LpProblem: bound vectors size mismatch");
    if (!objective.allFinite()) throw std::invalid_argument("LpProblem: non-finite objective");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j) || lower(j) == kInf ||
            upper(j) == -kInf) {
            throw std::invalid_argument("LpProblem: invalid bounds on variable " + std::to_string(j));
        }
    }
    for (std::size_t i = 0; i < constraints.size(); ++i) {
        const auto& row = constraints[i];
        if (row.coeffs.size() != n) {
            throw std::invalid_argument("LpProblem: constraint " + std::to_string(i) + " has wrong dimension");
        }
        if (!row.coeffs.allFinite() || !std::isfinite(row.rhs)) {
            throw std::invalid_argument("LpProblem: constraint " + std::to_string(i) + " is not finite");
        }
    }
}

double LpProblem::max_violation(const Eigen::VectorXd& x) const {
    double worst = 0.0;
    for (const auto& row : constraints) {
        const double lhs = row.coeffs.dot(x);
        double v = 0.0;
        switch (row.relation) {
            case Relation::LessEqual:
                v = lhs - row.rhs;
                break;
            case Relation::GreaterEqual:
                v = row.rhs - lhs;
                break;
            case Relation::Equal:
                v = std::abs(lhs - row.rhs);
                break;
        }
        worst = std::max(worst, v);
    }
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        worst = std::max({worst, lower(j) - x(j), x(j) - upper(j)});
    }
    return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kHarrisTol = 1e-9;

enum class Phase { One, Two };

/// Dense tableau over structural, slack and artificial columns.
class BoundedSimplex {
   public:
    BoundedSimplex(const LpProblem& p, const LpOptions& opt) : opt_(opt), n_(p.num_vars()) {
        m_ = static_cast<Eigen::Index>(p.constraints.size());
        row_scale_.resize(m_);
        Eigen::MatrixXd a(m_, n_);
        Eigen::VectorXd b(m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto& row = p.constraints[static_cast<std::size_t>(i)];
            double s = row.coeffs.cwiseAbs().maxCoeff();
            if (!(s > 0.0)) s = 1.0;
            row_scale_(i) = s;
            a.row(i) = row.coeffs.transpose() / s;
            b(i) = row.rhs / s;
        }

        // nonbasic structurals start at a finite bound, or 0 when free
        lo_ = Eigen::VectorXd(n_ + m_);
        up_ = Eigen::VectorXd(n_ + m_);
        lo_.head(n_) = p.lower;
        up_.head(n_) = p.upper;
        for (Eigen::Index i = 0; i < m_; ++i) {
            switch (p.constraints[static_cast<std::size_t>(i)].relation) {
                case Relation::LessEqual:
                    lo_(n_ + i) = 0.0;
                    up_(n_ + i) = kInf;
                    break;
                case Relation::GreaterEqual:
                    lo_(n_ + i) = -kInf;
                    up_(n_ + i) = 0.0;
                    break;
                case Relation::Equal:
                    lo_(n_ + i) = 0.0;
                    up_(n_ + i) = 0.0;
                    break;
            }
        }

        Eigen::VectorXd xs(n_);
        for (Eigen::Index j = 0; j < n_; ++j) xs(j) = start_value(lo_(j), up_(j));
        const Eigen::VectorXd residual = b - a * xs;

        // rows whose slack cannot absorb the residual get an artificial column
        std::vector<Eigen::Index> art_rows;
        std::vector<double>       art_sign;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double r = residual(i);
            if (r < lo_(n_ + i) - opt_.feasibility_tol || r > up_(n_ + i) + opt_.feasibility_tol) {
                art_rows.push_back(i);
                art_sign.push_back(r >= 0.0 ? 1.0 : -1.0);
            }
        }
        n_art_ = static_cast<Eigen::Index>(art_rows.size());
        cols_ = n_ + m_ + n_art_;

        lo_.conservativeResize(cols_);
        up_.conservativeResize(cols_);
        for (Eigen::Index k = 0; k < n_art_; ++k) {
            lo_(n_ + m_ + k) = 0.0;
            up_(n_ + m_ + k) = kInf;
        }

        tab_ = Eigen::MatrixXd::Zero(m_, cols_);
        tab_.leftCols(n_) = a;
        tab_.middleCols(n_, m_).setIdentity();
        b_ = b;
        a_full_ = Eigen::MatrixXd::Zero(m_, cols_);

        value_ = Eigen::VectorXd::Zero(cols_);
        value_.head(n_) = xs;
        basis_.assign(static_cast<std::size_t>(m_), -1);
        init_col_.assign(static_cast<std::size_t>(m_), -1);
        init_sign_ = Eigen::VectorXd::Ones(m_);

        std::vector<bool> has_art(static_cast<std::size_t>(m_), false);
        for (Eigen::Index k = 0; k < n_art_; ++k) {
            const auto i = art_rows[static_cast<std::size_t>(k)];
            has_art[static_cast<std::size_t>(i)] = true;
            tab_(i, n_ + m_ + k) = art_sign[static_cast<std::size_t>(k)];
        }
        a_full_ = tab_;

        for (Eigen::Index i = 0; i < m_; ++i) {
            const double r = residual(i);
            if (!has_art[static_cast<std::size_t>(i)]) {
                basis_[static_cast<std::size_t>(i)] = n_ + i;
                init_col_[static_cast<std::size_t>(i)] = n_ + i;
                value_(n_ + i) = r;
            }
        }
        for (Eigen::Index k = 0; k < n_art_; ++k) {
            const auto   i = art_rows[static_cast<std::size_t>(k)];
            const double sgn = art_sign[static_cast<std::size_t>(k)];
            const auto   col = n_ + m_ + k;
            // slack parks at its bound nearest the residual (always 0 here)
            value_(n_ + i) = std::clamp(residual(i), lo_(n_ + i), up_(n_ + i));
            basis_[static_cast<std::size_t>(i)] = col;
            init_col_[static_cast<std::size_t>(i)] = col;
            init_sign_(i) = sgn;
            tab_.row(i) *= sgn;  // B^{-1} = diag(sgn)
            value_(col) = std::abs(residual(i) - value_(n_ + i));
        }
        is_basic_.assign(static_cast<std::size_t>(cols_), false);
        for (auto j : basis_) is_basic_[static_cast<std::size_t>(j)] = true;

        cost2_ = Eigen::VectorXd::Zero(cols_);
        cost2_.head(n_) = p.objective;
    }

    SolveStatus run(const LpProblem& p) {
        SolveStatus status;
        if (n_art_ > 0) {
            Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(cols_);
            cost1.tail(n_art_).setOnes();
            const auto outcome = optimize(cost1, Phase::One);
            if (outcome == SolverOutcome::MaxIter) return finish(p, SolverOutcome::MaxIter);
            refresh_basic_values();
            if (value_.tail(n_art_).sum() > opt_.feasibility_tol * std::max<double>(1.0, static_cast<double>(m_))) {
                return finish(p, SolverOutcome::Infeasible);
            }
            retire_artificials();
        }
        const auto outcome = optimize(cost2_, Phase::Two);
        refresh_basic_values();
        status = finish(p, outcome);
        return status;
    }

   private:
    static double start_value(double lo, double up) {
        if (std::isfinite(lo)) return lo;
        if (std::isfinite(up)) return up;
        return 0.0;
    }

    bool fixed(Eigen::Index j) const { return lo_(j) == up_(j); }

    // Pivots until optimal for the given costs. Reduced costs are maintained in d_.
    SolverOutcome optimize(const Eigen::VectorXd& cost, Phase phase) {
        recompute_reduced_costs(cost);
        std::size_t degenerate_run = 0;
        bool        bland = false;
        for (;;) {
            if (pivots_ >= opt_.max_pivots) return SolverOutcome::MaxIter;
            if (pivots_ % 64 == 63) recompute_reduced_costs(cost);

            Eigen::Index entering = -1;
            double       direction = 0.0;
            double       best = 0.0;
            for (Eigen::Index j = 0; j < cols_; ++j) {
                if (is_basic_[static_cast<std::size_t>(j)] || fixed(j)) continue;
                const double dj = d_(j);
                double       dir = 0.0;
                const bool   at_lower = std::isfinite(lo_(j)) && value_(j) <= lo_(j);
                const bool   at_upper = std::isfinite(up_(j)) && value_(j) >= up_(j);
                if (dj < -opt_.optimality_tol && !at_upper) dir = 1.0;
                if (dj > opt_.optimality_tol && !at_lower) dir = -1.0;
                if (dir == 0.0) continue;
                if (bland) {
                    entering = j;
                    direction = dir;
                    break;
                }
                if (std::abs(dj) > best) {
                    best = std::abs(dj);
                    entering = j;
                    direction = dir;
                }
            }
            if (entering < 0) return SolverOutcome::Optimal;

            // Harris two-pass ratio test: bound the step with relaxed limits, then take the
            // largest pivot among rows that block within that bound.
            const double col_max = tab_.col(entering).cwiseAbs().maxCoeff();
            const double piv_tol = std::max(kPivotTol, 1e-9 * col_max);
            auto limit_of = [&](Eigen::Index i, double alpha, double relax) {
                const auto bj = basis_[static_cast<std::size_t>(i)];
                if (alpha > 0.0 && std::isfinite(lo_(bj))) return std::max(0.0, value_(bj) - lo_(bj) + relax) / alpha;
                if (alpha < 0.0 && std::isfinite(up_(bj))) return std::max(0.0, up_(bj) - value_(bj) + relax) / -alpha;
                return kInf;
            };
            double relaxed = kInf;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double alpha = direction * tab_(i, entering);
                if (std::abs(alpha) > piv_tol) relaxed = std::min(relaxed, limit_of(i, alpha, kHarrisTol));
            }
            double       theta = up_(entering) - lo_(entering);  // bound flip
            Eigen::Index leave_row = -1;
            double       leave_alpha = 0.0;
            if (!(theta <= relaxed)) {
                for (Eigen::Index i = 0; i < m_; ++i) {
                    const double alpha = direction * tab_(i, entering);
                    if (std::abs(alpha) <= piv_tol) continue;
                    const double limit = limit_of(i, alpha, 0.0);
                    if (!(limit <= relaxed)) continue;
                    const auto bj = basis_[static_cast<std::size_t>(i)];
                    const bool better = leave_row < 0 ||
                                        (bland ? bj < basis_[static_cast<std::size_t>(leave_row)]
                                               : std::abs(alpha) > std::abs(leave_alpha));
                    if (better) {
                        theta = limit;
                        leave_row = i;
                        leave_alpha = alpha;
                    }
                }
            }
            if (!std::isfinite(theta)) {
                // phase 1 is bounded below by zero, so this only happens in phase 2
                return phase == Phase::One ? SolverOutcome::Infeasible : SolverOutcome::Unbounded;
            }

            ++pivots_;
            if (theta <= 1e-12) {
                if (++degenerate_run >= opt_.degenerate_limit) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }

            const double step = direction * theta;
            value_(entering) += step;
            for (Eigen::Index i = 0; i < m_; ++i) {
                value_(basis_[static_cast<std::size_t>(i)]) -= step * tab_(i, entering);
            }

            if (leave_row < 0) {
                // entering variable moved to its opposite bound
                value_(entering) = direction > 0.0 ? up_(entering) : lo_(entering);
                continue;
            }

            const auto leaving = basis_[static_cast<std::size_t>(leave_row)];
            value_(leaving) = leave_alpha > 0.0 ? lo_(leaving) : up_(leaving);
            pivot(leave_row, entering);
        }
    }

    void pivot(Eigen::Index r, Eigen::Index j) {
        const double piv = tab_(r, j);
        tab_.row(r) /= piv;
        for (Eigen::Index i = 0; i < m_; ++i) {
            if (i == r) continue;
            const double f = tab_(i, j);
            if (f != 0.0) tab_.row(i) -= f * tab_.row(r);
        }
        const double fd = d_(j);
        if (fd != 0.0) d_ -= fd * tab_.row(r).transpose();
        is_basic_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = false;
        is_basic_[static_cast<std::size_t>(j)] = true;
        basis_[static_cast<std::size_t>(r)] = j;
    }

    void recompute_reduced_costs(const Eigen::VectorXd& cost) {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
        d_ = cost - tab_.transpose() * cb;
        for (Eigen::Index i = 0; i < m_; ++i) d_(basis_[static_cast<std::size_t>(i)]) = 0.0;
    }

    Eigen::MatrixXd basis_inverse() const {
        Eigen::MatrixXd binv(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) {
            binv.col(i) = tab_.col(init_col_[static_cast<std::size_t>(i)]) * init_sign_(i);
        }
        return binv;
    }

    // x_B = B^{-1} (b - N x_N), removing accumulated drift.
    void refresh_basic_values() {
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < cols_; ++j) {
            if (!is_basic_[static_cast<std::size_t>(j)] && value_(j) != 0.0) rhs -= a_full_.col(j) * value_(j);
        }
        const Eigen::VectorXd xb = basis_inverse() * rhs;
        for (Eigen::Index i = 0; i < m_; ++i) value_(basis_[static_cast<std::size_t>(i)]) = xb(i);
    }

    // Fix artificials at zero and pivot basic ones out where a nonzero entry allows.
    void retire_artificials() {
        for (Eigen::Index k = 0; k < n_art_; ++k) {
            const auto col = n_ + m_ + k;
            up_(col) = 0.0;
            if (!is_basic_[static_cast<std::size_t>(col)]) value_(col) = 0.0;
        }
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto bj = basis_[static_cast<std::size_t>(i)];
            if (bj < n_ + m_) continue;
            Eigen::Index best = -1;
            double       mag = 1e-7;
            for (Eigen::Index j = 0; j < n_ + m_; ++j) {
                if (is_basic_[static_cast<std::size_t>(j)]) continue;
                if (std::abs(tab_(i, j)) > mag) {
                    mag = std::abs(tab_(i, j));
                    best = j;
                }
            }
            if (best >= 0) {
                d_ = Eigen::VectorXd::Zero(cols_);
                pivot(i, best);
                value_(bj) = 0.0;
            }
        }
        refresh_basic_values();
    }

    SolveStatus finish(const LpProblem& p, SolverOutcome outcome) {
        SolveStatus s;
        s.outcome = outcome;
        s.iterations = pivots_;
        s.x = value_.head(n_);
        s.objective = p.objective.dot(s.x);

        double worst = 0.0;
        for (Eigen::Index i = 0; i < m_; ++i) {
            const auto&  row = p.constraints[static_cast<std::size_t>(i)];
            const double lhs = row.coeffs.dot(s.x) / row_scale_(i);
            const double rhs = row.rhs / row_scale_(i);
            if (row.relation != Relation::GreaterEqual) worst = std::max(worst, lhs - rhs);
            if (row.relation != Relation::LessEqual) worst = std::max(worst, rhs - lhs);
        }
        for (Eigen::Index j = 0; j < n_; ++j) worst = std::max({worst, p.lower(j) - s.x(j), s.x(j) - p.upper(j)});
        s.residual = worst;

        if (outcome == SolverOutcome::Optimal) {
            Eigen::VectorXd cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i) cb(i) = cost2_(basis_[static_cast<std::size_t>(i)]);
            const Eigen::VectorXd y = basis_inverse().transpose() * cb;
            s.duals = y.cwiseQuotient(row_scale_);
        }
        return s;
    }

    const LpOptions& opt_;
    Eigen::Index     n_ = 0;
    Eigen::Index     m_ = 0;
    Eigen::Index     n_art_ = 0;
    Eigen::Index     cols_ = 0;
    Eigen::VectorXd  row_scale_;
    Eigen::MatrixXd  tab_;     // B^{-1} [A I art]
    Eigen::MatrixXd  a_full_;  // [A I art] in scaled row space
    Eigen::VectorXd  b_;
    Eigen::VectorXd  lo_, up_, value_, cost2_, d_;
    Eigen::VectorXd  init_sign_;
    std::vector<Eigen::Index> basis_;
    std::vector<Eigen::Index> init_col_;
    std::vector<bool>         is_basic_;
    std::size_t               pivots_ = 0;
};

}  // namespace

SolveStatus solve_lp(const LpProblem& problem, const LpOptions& options) {
    problem.validate();
    if (options.dump_path) dump_problem(problem, *options.dump_path);
    BoundedSimplex simplex(problem, options);
    return simplex.run(problem);
}

}  // namespace quantshape
