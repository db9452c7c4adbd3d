#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "quantshape/solvers.hpp"

namespace quantshape {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd LmiBlock::evaluate(const VectorXd& x) const {
    MatrixXd f = constant;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const double xi = x(static_cast<Index>(i));
        if (xi != 0.0) f += xi * coeffs[i];
    }
    return f;
}

void SdpProblem::validate() const {
    const auto n = num_vars();
    if (!objective.allFinite()) throw std::invalid_argument("SdpProblem: non-finite objective");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        const auto  p = blk.size();
        if (blk.constant.cols() != p) throw std::invalid_argument("SdpProblem: block " + std::to_string(b) + " not square");
        if (static_cast<Index>(blk.coeffs.size()) != n) {
            throw std::invalid_argument("SdpProblem: block " + std::to_string(b) + " has wrong coefficient count");
        }
        auto check = [&](const MatrixXd& m) {
            if (m.rows() != p || m.cols() != p) {
                throw std::invalid_argument("SdpProblem: block " + std::to_string(b) + " coefficient size mismatch");
            }
            if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff())) {
                throw std::invalid_argument("SdpProblem: block " + std::to_string(b) + " is not symmetric");
            }
        };
        check(blk.constant);
        for (const auto& c : blk.coeffs) check(c);
    }
}

double SdpProblem::min_eigenvalue(const VectorXd& x) const {
    double worst = kInf;
    for (const auto& blk : blocks) worst = std::min(worst, min_eig_residual(blk.evaluate(x)));
    return worst;
}

double min_eig_residual(const MatrixXd& block) {
    if (block.rows() != block.cols()) throw std::invalid_argument("min_eig_residual: matrix is not square");
    if (block.size() == 0) return kInf;
    const double scale = 1.0 + block.cwiseAbs().maxCoeff();
    if ((block - block.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("min_eig_residual: matrix is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (block + block.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

namespace {

// Internal barrier problem: blocks with an identity shift applied to the
// constant term, optional extra variable s entering every block as s*I.
struct BarrierProblem {
    VectorXd              cost;
    std::vector<LmiBlock> blocks;
    Index                 total_dim = 0;
};

struct NewtonState {
    VectorXd    x;
    double      t = 1.0;
    std::size_t newton_steps = 0;
};

// Cholesky factors of every block at x; false if any block is not positive definite.
bool factorize(const BarrierProblem& bp, const VectorXd& x, std::vector<Eigen::LLT<MatrixXd>>& factors) {
    factors.resize(bp.blocks.size());
    for (std::size_t b = 0; b < bp.blocks.size(); ++b) {
        factors[b].compute(bp.blocks[b].evaluate(x));
        if (factors[b].info() != Eigen::Success) return false;
        const auto& l = factors[b].matrixLLT();
        if (l.diagonal().minCoeff() <= 0.0 || !l.allFinite()) return false;
    }
    return true;
}

double barrier_value(const BarrierProblem& bp, const VectorXd& x, double t,
                     std::vector<Eigen::LLT<MatrixXd>>& factors) {
    if (!factorize(bp, x, factors)) return kInf;
    double v = t * bp.cost.dot(x);
    for (const auto& f : factors) v -= 2.0 * f.matrixLLT().diagonal().array().log().sum();
    return v;
}

enum class CenterResult { Converged, StepFailure, Budget, EarlyExit };

// Damped Newton minimization of t c'x - sum log det F(x) from a strictly feasible x.
template <typename ExitCheck>
CenterResult center(const BarrierProblem& bp, NewtonState& st, std::size_t max_steps, ExitCheck&& early_exit) {
    const Index                        n = bp.cost.size();
    std::vector<Eigen::LLT<MatrixXd>> factors;
    std::vector<Eigen::LLT<MatrixXd>> trial_factors;
    std::vector<MatrixXd>              scaled(static_cast<std::size_t>(n));

    double value = barrier_value(bp, st.x, st.t, factors);
    if (!std::isfinite(value)) return CenterResult::StepFailure;

    for (std::size_t it = 0; it < 200; ++it) {
        if (st.newton_steps >= max_steps) return CenterResult::Budget;
        ++st.newton_steps;

        VectorXd grad = st.t * bp.cost;
        MatrixXd hess = MatrixXd::Zero(n, n);
        for (std::size_t b = 0; b < bp.blocks.size(); ++b) {
            const auto& blk = bp.blocks[b];
            const auto& l = factors[b].matrixL();
            for (Index i = 0; i < n; ++i) {
                // L^{-1} A_i L^{-T}
                MatrixXd m = l.solve(blk.coeffs[static_cast<std::size_t>(i)]);
                m = l.solve(m.transpose()).transpose();
                scaled[static_cast<std::size_t>(i)] = m;
                grad(i) -= m.trace();
            }
            for (Index i = 0; i < n; ++i) {
                const auto& mi = scaled[static_cast<std::size_t>(i)];
                for (Index k = 0; k <= i; ++k) {
                    const double h = mi.cwiseProduct(scaled[static_cast<std::size_t>(k)]).sum();
                    hess(i, k) += h;
                    if (k != i) hess(k, i) += h;
                }
            }
        }

        Eigen::LDLT<MatrixXd> ldlt(hess);
        VectorXd              step = ldlt.solve(-grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            const double reg = 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff());
            step = (hess + reg * MatrixXd::Identity(n, n)).ldlt().solve(-grad);
            if (!step.allFinite()) return CenterResult::StepFailure;
        }
        const double decrement = -grad.dot(step);
        if (decrement < 0.0) return CenterResult::StepFailure;
        if (decrement / 2.0 < 1e-9) return CenterResult::Converged;

        // damped step keeps the iterate inside the cone, then Armijo backtracking
        double alpha = decrement > 0.25 ? 1.0 / (1.0 + std::sqrt(decrement)) : 1.0;
        double trial_value = kInf;
        VectorXd trial;
        for (int ls = 0; ls < 60; ++ls) {
            trial = st.x + alpha * step;
            trial_value = barrier_value(bp, trial, st.t, trial_factors);
            if (trial_value <= value - 0.25 * alpha * decrement) break;
            alpha *= 0.5;
        }
        if (!std::isfinite(trial_value) || trial_value > value) {
            return CenterResult::StepFailure;
        }
        st.x = trial;
        value = trial_value;
        factors.swap(trial_factors);
        // backtracking on a nearly centered point means rounding limits further progress
        if (alpha < 1.0 && decrement / 2.0 < 1e-6) return CenterResult::Converged;
        if (early_exit(st.x)) return CenterResult::EarlyExit;
    }
    return CenterResult::Converged;
}

LmiBlock shifted(const LmiBlock& blk, double shift, bool add_shift_var) {
    LmiBlock out;
    out.constant = blk.constant;
    out.constant.diagonal().array() += shift;
    out.coeffs = blk.coeffs;
    if (add_shift_var) out.coeffs.push_back(MatrixXd::Identity(blk.size(), blk.size()));
    return out;
}

}  // namespace

SolveStatus solve_sdp(const SdpProblem& problem, const SdpOptions& options) {
    problem.validate();
    if (options.dump_path) dump_problem(problem, *options.dump_path);

    const Index n = problem.num_vars();
    const auto  nblocks = static_cast<double>(problem.blocks.size());
    SolveStatus status;
    VectorXd    x = options.initial_point.value_or(VectorXd::Zero(n));
    if (x.size() != n) throw std::invalid_argument("solve_sdp: initial point has wrong dimension");

    auto relaxed_min_eig = [&](const VectorXd& v) { return problem.min_eigenvalue(v) + options.relaxation; };
    std::size_t newton_total = 0;

    // Phase 1: minimize s subject to F(x) + s I >= 0 and s >= -1.
    if (!(relaxed_min_eig(x) > 0.0)) {
        BarrierProblem p1;
        p1.cost = VectorXd::Zero(n + 1);
        p1.cost(n) = 1.0;
        for (const auto& blk : problem.blocks) {
            p1.blocks.push_back(shifted(blk, options.relaxation, true));
            p1.total_dim += blk.size();
        }
        LmiBlock floor_block;
        floor_block.constant = MatrixXd::Constant(1, 1, 1.0);
        floor_block.coeffs.assign(static_cast<std::size_t>(n), MatrixXd::Zero(1, 1));
        floor_block.coeffs.push_back(MatrixXd::Constant(1, 1, 1.0));
        p1.blocks.push_back(floor_block);
        p1.total_dim += 1;

        NewtonState st;
        st.x = VectorXd(n + 1);
        st.x.head(n) = x;
        st.x(n) = std::max(0.0, -relaxed_min_eig(x)) + 1.0;
        st.t = options.initial_t;

        auto found = [&](const VectorXd& z) { return z(n) < 0.0 && relaxed_min_eig(z.head(n)) > 0.0; };
        bool feasible = false;
        for (;;) {
            const auto r = center(p1, st, options.max_newton, found);
            if (r == CenterResult::EarlyExit) {
                feasible = true;
                break;
            }
            if (r == CenterResult::Budget) {
                status.outcome = SolverOutcome::MaxIter;
                status.x = st.x.head(n);
                status.iterations = st.newton_steps;
                return status;
            }
            if (r == CenterResult::StepFailure || static_cast<double>(p1.total_dim) / st.t < 1e-10) break;
            st.t *= options.t_growth;
        }
        newton_total = st.newton_steps;
        if (!feasible) {
            status.outcome = SolverOutcome::Infeasible;
            status.x = st.x.head(n);
            status.objective = problem.objective.dot(status.x);
            status.residual = std::max(0.0, -problem.min_eigenvalue(status.x));
            status.iterations = newton_total;
            return status;
        }
        x = st.x.head(n);
    }

    // Phase 2: central path.
    BarrierProblem p2;
    p2.cost = problem.objective;
    for (const auto& blk : problem.blocks) {
        p2.blocks.push_back(shifted(blk, options.relaxation, false));
        p2.total_dim += blk.size();
    }
    NewtonState st;
    st.x = x;
    st.t = options.initial_t;
    st.newton_steps = newton_total;
    const double gap_target = options.gap_tol * std::max(1.0, nblocks);
    auto         never = [](const VectorXd&) { return false; };

    SolverOutcome outcome = SolverOutcome::MaxIter;
    for (;;) {
        const auto r = center(p2, st, options.max_newton + newton_total, never);
        if (r == CenterResult::Budget) break;
        if (problem.objective.dot(st.x) < -1e12) {
            outcome = SolverOutcome::Unbounded;
            break;
        }
        const double gap = static_cast<double>(p2.total_dim) / st.t;
        if (gap < gap_target) {
            outcome = SolverOutcome::Optimal;
            break;
        }
        if (r == CenterResult::StepFailure) {
            // numerical floor: accept when already close to the target gap
            if (gap < 1e3 * gap_target) outcome = SolverOutcome::Optimal;
            break;
        }
        st.t *= options.t_growth;
    }

    status.outcome = outcome;
    status.x = st.x;
    status.objective = problem.objective.dot(st.x);
    status.residual = std::max(0.0, -problem.min_eigenvalue(st.x));
    status.iterations = st.newton_steps;
    return status;
}

}  // namespace quantshape
