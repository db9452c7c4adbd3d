#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace quantshape {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Systems with spectral radius at or above 1 - kStabilityTol are treated as unstable.
inline constexpr double kStabilityTol = 1e-9;

/**
 * @brief Discrete-time SISO state-space realization.
 *
 *   x_{k+1} = A x_k + B u_k
 *   y_k     = C x_k + D u_k
 *
 * A zero-order system (empty state) is a static gain D.
 */
class StateSpace {
   public:
    StateSpace() = default;
    StateSpace(Matrix A, Vector B, RowVector C, double D);

    static StateSpace gain(double d);

    const Matrix&    A() const { return A_; }
    const Vector&    B() const { return B_; }
    const RowVector& C() const { return C_; }
    double           D() const { return D_; }

    Eigen::Index order() const { return A_.rows(); }

    double spectral_radius() const;
    bool   is_stable() const;

    // Same dynamics with the direct feedthrough replaced.
    StateSpace with_feedthrough(double d) const;

   private:
    Matrix    A_ = Matrix(0, 0);
    Vector    B_ = Vector(0);
    RowVector C_ = RowVector(0);
    double    D_ = 0.0;
};

/// Monic noise-shaping filter R[z] = 1 + sum_{k=1}^{n} r_k z^{-k}.
class FirFilter {
   public:
    FirFilter() = default;
    explicit FirFilter(std::vector<double> taps);

    const std::vector<double>& taps() const { return taps_; }
    std::size_t                order() const { return taps_.size(); }

    /// ||R - 1|| = sum |r_k|; exact, no truncation.
    double feedback_norm() const;

    /// Impulse response [1, r_1, ..., r_n].
    std::vector<double> impulse() const;

   private:
    std::vector<double> taps_;
};

// Which subsystem occupies the leading block of the composite state. Both
// layouts realize the same SISO product H[z] R[z].
enum class SeriesOrder {
    FilterFirst,  // x = [x_r; x_h], A = [A_r  B_r C_h; 0  A_h], B = [B_r D_h; B_h]
    PlantFirst,   // x = [x_h; x_r], A = [A_h  B_h C_r; 0  A_r], B = [B_h D_r; B_r]
};

/// Shift-register canonical form of R[z]: A_r upper shift, B_r = e_n, C_r = [r_n ... r_1], D_r = 1.
StateSpace fir_realization(const FirFilter& filter);

/// Realization of the product H[z] R[z].
StateSpace series(const StateSpace& h, const StateSpace& r, SeriesOrder order = SeriesOrder::FilterFirst);

/// Impulse samples f_0..f_m, obtained by iterating the state.
std::vector<double> impulse_response(const StateSpace& s, std::size_t m);

struct L1Norm {
    double      value = 0.0;
    std::size_t samples = 0;  // index m of the last sample included
};

/**
 * Induced l-infinity gain (l1 norm of the impulse response).
 *
 * Samples are accumulated until a geometric envelope c q^k fitted over the
 * most recent window certifies that the remaining tail is below tol.
 * Throws std::domain_error for unstable systems and std::runtime_error if
 * the tail does not certify within max_samples.
 */
L1Norm l1_norm(const StateSpace& s, double tol = 1e-12, std::size_t max_samples = 100000);

double spectral_radius(const Matrix& a);

/// Discrete convolution of two finite sequences.
std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace quantshape
