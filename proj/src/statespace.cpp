#include "quantshape/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace quantshape {

StateSpace::StateSpace(Matrix A, Vector B, RowVector C, double D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(D) {
    const auto n = A_.rows();
    if (A_.cols() != n || B_.size() != n || C_.size() != n) {
        throw std::invalid_argument("StateSpace: inconsistent dimensions (A " + std::to_string(A_.rows()) + "x" +
                                    std::to_string(A_.cols()) + ", B " + std::to_string(B_.size()) + ", C " +
                                    std::to_string(C_.size()) + ")");
    }
    if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite() || !std::isfinite(D_)) {
        throw std::invalid_argument("StateSpace: non-finite entries");
    }
}

StateSpace StateSpace::gain(double d) { return StateSpace(Matrix(0, 0), Vector(0), RowVector(0), d); }

double StateSpace::spectral_radius() const { return quantshape::spectral_radius(A_); }

bool StateSpace::is_stable() const { return spectral_radius() < 1.0 - kStabilityTol; }

StateSpace StateSpace::with_feedthrough(double d) const { return StateSpace(A_, B_, C_, d); }

FirFilter::FirFilter(std::vector<double> taps) : taps_(std::move(taps)) {
    for (double t : taps_) {
        if (!std::isfinite(t)) throw std::invalid_argument("FirFilter: non-finite tap");
    }
}

double FirFilter::feedback_norm() const {
    double s = 0.0;
    for (double t : taps_) s += std::abs(t);
    return s;
}

std::vector<double> FirFilter::impulse() const {
    std::vector<double> out;
    out.reserve(taps_.size() + 1);
    out.push_back(1.0);
    out.insert(out.end(), taps_.begin(), taps_.end());
    return out;
}

StateSpace fir_realization(const FirFilter& filter) {
    const auto n = static_cast<Eigen::Index>(filter.order());
    if (n == 0) return StateSpace::gain(1.0);

    Matrix a = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) a(i, i + 1) = 1.0;
    Vector b = Vector::Zero(n);
    b(n - 1) = 1.0;
    RowVector c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = filter.taps()[static_cast<std::size_t>(n - 1 - i)];
    return StateSpace(std::move(a), std::move(b), std::move(c), 1.0);
}

StateSpace series(const StateSpace& h, const StateSpace& r, SeriesOrder order) {
    const auto nh = h.order();
    const auto nr = r.order();
    const auto n = nh + nr;
    Matrix a = Matrix::Zero(n, n);
    Vector b(n);
    RowVector c(n);

    if (order == SeriesOrder::FilterFirst) {
        a.topLeftCorner(nr, nr) = r.A();
        a.topRightCorner(nr, nh) = r.B() * h.C();
        a.bottomRightCorner(nh, nh) = h.A();
        // input drives H, whose output drives R
        b << r.B() * h.D(), h.B();
        c << r.C(), r.D() * h.C();
    } else {
        a.topLeftCorner(nh, nh) = h.A();
        a.topRightCorner(nh, nr) = h.B() * r.C();
        a.bottomRightCorner(nr, nr) = r.A();
        // input drives R, whose output drives H
        b << h.B() * r.D(), r.B();
        c << h.C(), h.D() * r.C();
    }
    return StateSpace(std::move(a), std::move(b), std::move(c), h.D() * r.D());
}

std::vector<double> impulse_response(const StateSpace& s, std::size_t m) {
    std::vector<double> f;
    f.reserve(m + 1);
    f.push_back(s.D());
    Vector x = s.B();
    Vector next(x.size());
    for (std::size_t k = 1; k <= m; ++k) {
        f.push_back(s.C().dot(x));
        next.noalias() = s.A() * x;
        x.swap(next);
    }
    return f;
}

L1Norm l1_norm(const StateSpace& s, double tol, std::size_t max_samples) {
    if (s.order() == 0) return {std::abs(s.D()), 0};

    const double rho = s.spectral_radius();
    if (rho >= 1.0 - kStabilityTol) {
        throw std::domain_error("l1_norm: system is not stable (spectral radius " + std::to_string(rho) + ")");
    }
    const double q = rho + 0.05 * (1.0 - rho);
    const double log_q = std::log(q);
    const std::size_t window = std::max<std::size_t>(16, 4 * static_cast<std::size_t>(s.order()));

    std::vector<double> recent(window, 0.0);
    double sum = std::abs(s.D());
    Vector x = s.B();
    Vector next(x.size());

    for (std::size_t k = 1; k <= max_samples; ++k) {
        const double fk = s.C().dot(x);
        sum += std::abs(fk);
        recent[k % window] = std::abs(fk);
        next.noalias() = s.A() * x;
        x.swap(next);

        if (x.isZero(0.0)) return {sum, k};

        if (k >= window && k % window == 0) {
            // envelope c q^j over the window, evaluated in log space
            double log_c = -std::numeric_limits<double>::infinity();
            for (std::size_t j = k - window + 1; j <= k; ++j) {
                const double v = recent[j % window];
                if (v > 0.0) log_c = std::max(log_c, std::log(v) - static_cast<double>(j) * log_q);
            }
            const double tail = std::exp(log_c + static_cast<double>(k + 1) * log_q) / (1.0 - q);
            if (tail < tol) return {sum, k};
        }
    }
    throw std::runtime_error("l1_norm: tail bound did not reach tolerance within " + std::to_string(max_samples) +
                             " samples");
}

double spectral_radius(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("spectral_radius: matrix is not square");
    if (!a.allFinite()) throw std::invalid_argument("spectral_radius: non-finite entries");
    if (a.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> solver(a, false);
    if (solver.info() != Eigen::Success) throw std::runtime_error("spectral_radius: eigenvalue iteration failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

}  // namespace quantshape
