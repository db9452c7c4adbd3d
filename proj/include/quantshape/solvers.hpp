#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace quantshape {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class SolverOutcome { Optimal, Infeasible, Unbounded, MaxIter };

std::string to_string(SolverOutcome outcome);

struct SolveStatus {
    SolverOutcome   outcome = SolverOutcome::MaxIter;
    double          objective = 0.0;
    Eigen::VectorXd x;
    // Sensitivities d(objective)/d(rhs_i), one per constraint (LP only).
    Eigen::VectorXd duals;
    // LP: largest constraint or bound violation. SDP: most negative block eigenvalue, clipped at 0.
    double      residual = 0.0;
    std::size_t iterations = 0;

    bool optimal() const { return outcome == SolverOutcome::Optimal; }
};

// ---------------------------------------------------------------------------
// Linear programming

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LpConstraint {
    Eigen::VectorXd coeffs;
    Relation        relation = Relation::LessEqual;
    double          rhs = 0.0;
};

/// minimize c'x subject to the constraint rows and lower <= x <= upper.
struct LpProblem {
    Eigen::VectorXd           objective;
    std::vector<LpConstraint> constraints;
    Eigen::VectorXd           lower;  // -kInf for unbounded
    Eigen::VectorXd           upper;  // +kInf for unbounded

    explicit LpProblem(Eigen::Index num_vars = 0);

    Eigen::Index num_vars() const { return objective.size(); }
    void         add_constraint(Eigen::VectorXd coeffs, Relation relation, double rhs);
    void         validate() const;

    /// Largest violation of rows and bounds at x.
    double max_violation(const Eigen::VectorXd& x) const;
};

struct LpOptions {
    std::size_t max_pivots = 200000;
    // Consecutive degenerate pivots before switching to Bland's rule.
    std::size_t degenerate_limit = 50;
    double      feasibility_tol = 1e-9;
    double      optimality_tol = 1e-10;
    std::optional<std::filesystem::path> dump_path;
};

/// Two-phase bounded-variable primal simplex on an equilibrated dense tableau.
SolveStatus solve_lp(const LpProblem& problem, const LpOptions& options = {});

// ---------------------------------------------------------------------------
// Semidefinite programming

/// Affine symmetric matrix map x -> constant + sum_i x_i coeffs[i].
struct LmiBlock {
    Eigen::MatrixXd              constant;
    std::vector<Eigen::MatrixXd> coeffs;

    Eigen::Index    size() const { return constant.rows(); }
    Eigen::MatrixXd evaluate(const Eigen::VectorXd& x) const;
};

/// minimize c'x subject to every block(x) being positive semidefinite.
struct SdpProblem {
    Eigen::VectorXd       objective;
    std::vector<LmiBlock> blocks;

    Eigen::Index num_vars() const { return objective.size(); }
    void         validate() const;

    /// Smallest eigenvalue over all blocks at x.
    double min_eigenvalue(const Eigen::VectorXd& x) const;
};

struct SdpOptions {
    // Stop once the barrier gap surrogate (total block dimension / t) is below gap_tol * block count.
    double      gap_tol = 1e-8;
    double      t_growth = 10.0;
    double      initial_t = 1.0;
    std::size_t max_newton = 4000;
    // Blocks are solved as block(x) + relaxation * I >= 0.
    double relaxation = 0.0;
    std::optional<Eigen::VectorXd>       initial_point;
    std::optional<std::filesystem::path> dump_path;
};

/**
 * Log-det barrier method with damped Newton steps.
 *
 * Phase 1 minimizes a uniform shift s with block(x) + s I >= 0 (s bounded
 * below by -1); a negative optimum yields a strictly feasible start,
 * otherwise the problem is reported Infeasible. Phase 2 follows the
 * central path of t c'x - sum log det block(x). Both phases assume the
 * feasible set is bounded; add explicit bound blocks otherwise.
 */
SolveStatus solve_sdp(const SdpProblem& problem, const SdpOptions& options = {});

/// Smallest eigenvalue of a symmetric matrix; throws std::invalid_argument if not symmetric.
double min_eig_residual(const Eigen::MatrixXd& block);

// JSON snapshots of problem instances for offline inspection.
void dump_problem(const LpProblem& problem, const std::filesystem::path& path);
void dump_problem(const SdpProblem& problem, const std::filesystem::path& path);

}  // namespace quantshape
