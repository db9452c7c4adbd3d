#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "quantshape/fir_design.hpp"
#include "quantshape/solvers.hpp"
#include "quantshape/statespace.hpp"

namespace quantshape {

// The design SDP also imposes M_P <= kLyapunovBound I and mu_eps <= kLyapunovBound.
// Without them the feasible set is unbounded (P_g -> inf with the filter state
// copying the plant state, mu_eps -> inf), which the barrier method cannot handle.
inline constexpr double kLyapunovBound = 1e6;

/// Decision variables of the convexified invariant-ellipsoid design (filter order = plant order n).
struct LmiVariables {
    Matrix    P_f;    // n x n, symmetric
    Matrix    P_g;    // n x n, symmetric
    RowVector W_f;    // 1 x n
    Vector    W_g;    // n x 1
    Matrix    L_mat;  // n x n
    double    mu_eps = 0.0;
    double    mu_eta = 0.0;

    static LmiVariables zero(Eigen::Index n);
};

/**
 * Packing of LmiVariables into the SDP vector:
 * [P_f (upper triangle, column by column) | P_g (same) | W_f | W_g | L_mat (column-major) | mu_eps | mu_eta?].
 * mu_eta is omitted when it is held fixed.
 */
struct LmiLayout {
    Eigen::Index n = 0;
    bool         has_mu_eta = true;

    Eigen::Index sym_size() const { return n * (n + 1) / 2; }
    Eigen::Index num_vars() const { return 2 * sym_size() + 2 * n + n * n + 1 + (has_mu_eta ? 1 : 0); }
    Eigen::Index mu_eps_index() const { return 2 * sym_size() + 2 * n + n * n; }

    Vector       pack(const LmiVariables& v) const;
    // mu_eta is set to fixed_mu_eta when the layout omits it.
    LmiVariables unpack(const Vector& x, double fixed_mu_eta = 0.0) const;
};

/// The three LMI blocks evaluated numerically at a variable assignment.
struct LmiBlockValues {
    Matrix invariance;  // 4n + 1
    Matrix eps;         // 2n + 1
    Matrix eta;         // 2n + 1
};

LmiBlockValues lmi_blocks(const StateSpace& plant, const LmiVariables& vars, double alpha);

/// All three blocks as an SDP in the full layout (mu_eta free), objective mu_eps.
SdpProblem assemble_lmis(const StateSpace& plant, double alpha);

/// Thrown when a single alpha point yields no usable filter.
class IirPointRejected : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

struct IirDesignReport {
    StateSpace              realization;  // R[z] with D_r = 1
    double                  alpha_star = 0.0;
    double                  mu_eps = 0.0;
    double                  mu_eta = 0.0;
    std::optional<double>   mu_eta_cap;
    double                  plant_feedthrough = 0.0;
    double                  true_hr_norm = 0.0;
    double                  true_r1_norm = 0.0;
    double                  objective = 0.0;        // c true_hr_norm + true_r1_norm
    double                  bound_objective = 0.0;  // c (|D_h| + sqrt(mu_eps)) + sqrt(mu_eta)
    LmiVariables            vars;
    std::vector<double>     certificate;  // min eigenvalue of each replayed block
    SolveStatus             sdp_status;

    double certificate_residual() const;
};

/// Upper end of the admissible alpha interval (0, 1 - rho(A_h)^2).
double alpha_upper(const StateSpace& plant);

/// grid_size interior points alpha_max (i + 1) / (grid_size + 1).
std::vector<double> alpha_grid(const StateSpace& plant, std::size_t grid_size);

/**
 * Minimizes mu_eps at fixed alpha; with a cap the eta block is imposed with
 * mu_eta = cap, without one it is dropped and mu_eta is reported as
 * the smallest value the solution certifies. Recovers (A_r, B_r, C_r).
 * Throws IirPointRejected on infeasibility, S_f not positive definite or an unstable filter.
 */
IirDesignReport solve_fixed_alpha(const DesignSpec& spec, double alpha, std::optional<double> mu_eta_cap);

enum class AlphaCriterion { MuEps, BoundObjective };

IirDesignReport line_search_alpha(const DesignSpec& spec, std::span<const double> alphas,
                                  std::optional<double> mu_eta_cap, AlphaCriterion criterion = AlphaCriterion::MuEps,
                                  unsigned threads = 1);

IirDesignReport line_search_alpha(const DesignSpec& spec, std::size_t grid_size, std::optional<double> mu_eta_cap,
                                  AlphaCriterion criterion = AlphaCriterion::MuEps, unsigned threads = 1);

struct IirSweepEntry {
    std::optional<double>          cap;
    std::optional<IirDesignReport> report;  // empty when every alpha failed
};

struct IirDesignResult {
    IirDesignReport            best;  // smallest post-hoc objective over the caps
    std::vector<IirSweepEntry> sweep;
};

/// Bit-allocation flow: one alpha line search per mu_eta cap (nullopt = uncapped).
IirDesignResult design_iir(const DesignSpec& spec, std::size_t grid_size, std::span<const std::optional<double>> caps,
                           unsigned threads = 1);

/// Default mu_eta caps: uncapped followed by log-spaced values.
std::vector<std::optional<double>> default_mu_eta_caps(std::size_t count = 12);

struct EllipsoidBounds {
    double eps_bound = 0.0;
    double eta_bound = 0.0;
};

/// ||eps|| <= d/2 (|D_h| + sqrt(mu_eps)), ||eta|| <= d/2 sqrt(mu_eta).
EllipsoidBounds ellipsoid_error_bounds(const IirDesignReport& report, double d);

}  // namespace quantshape
