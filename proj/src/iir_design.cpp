#include "quantshape/iir_design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

namespace quantshape {

namespace {

using Eigen::Index;

void check_alpha(const StateSpace& plant, double alpha) {
    if (!(alpha > 0.0) || !(alpha < alpha_upper(plant))) {
        throw std::invalid_argument("alpha = " + std::to_string(alpha) + " outside (0, " +
                                    std::to_string(alpha_upper(plant)) + ")");
    }
}

// Affine map x -> blocks(layout.unpack(x)) written out as an SdpProblem.
// A positive bound adds the block bound I - diag(M_P, mu_eps) >= 0.
SdpProblem affine_sdp(const StateSpace& plant, double alpha, const LmiLayout& layout, double fixed_mu_eta,
                      bool with_eta, double bound = 0.0) {
    const Index nv = layout.num_vars();
    const Index n = layout.n;
    auto        eval = [&](const Vector& x) {
        const auto          v = layout.unpack(x, fixed_mu_eta);
        const auto          b = lmi_blocks(plant, v, alpha);
        std::vector<Matrix> out{b.invariance, b.eps};
        if (with_eta) out.push_back(b.eta);
        if (bound > 0.0) {
            Matrix cap = bound * Matrix::Identity(2 * n + 1, 2 * n + 1);
            cap.topLeftCorner(n, n) -= v.P_f;
            cap.block(n, n, n, n) -= v.P_g;
            cap.block(0, n, n, n) -= Matrix::Identity(n, n);
            cap.block(n, 0, n, n) -= Matrix::Identity(n, n);
            cap(2 * n, 2 * n) -= v.mu_eps;
            out.push_back(std::move(cap));
        }
        return out;
    };
    const auto base = eval(Vector::Zero(nv));

    SdpProblem sdp;
    sdp.objective = Vector::Zero(nv);
    sdp.objective(layout.mu_eps_index()) = 1.0;
    for (const auto& m : base) {
        LmiBlock blk;
        blk.constant = m;
        sdp.blocks.push_back(std::move(blk));
    }
    for (Index i = 0; i < nv; ++i) {
        const auto vals = eval(Vector::Unit(nv, i));
        for (std::size_t k = 0; k < vals.size(); ++k) sdp.blocks[k].coeffs.push_back(vals[k] - base[k]);
    }
    return sdp;
}

bool positive_definite(const Matrix& m) {
    Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
    return llt.info() == Eigen::Success;
}

double criterion_value(const IirDesignReport& r, AlphaCriterion criterion) {
    return criterion == AlphaCriterion::MuEps ? r.mu_eps : r.bound_objective;
}

}  // namespace

LmiVariables LmiVariables::zero(Index n) {
    LmiVariables v;
    v.P_f = Matrix::Zero(n, n);
    v.P_g = Matrix::Zero(n, n);
    v.W_f = RowVector::Zero(n);
    v.W_g = Vector::Zero(n);
    v.L_mat = Matrix::Zero(n, n);
    return v;
}

Vector LmiLayout::pack(const LmiVariables& v) const {
    Vector x(num_vars());
    Index  k = 0;
    for (const Matrix* p : {&v.P_f, &v.P_g}) {
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i <= j; ++i) x(k++) = (*p)(i, j);
        }
    }
    for (Index i = 0; i < n; ++i) x(k++) = v.W_f(i);
    for (Index i = 0; i < n; ++i) x(k++) = v.W_g(i);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) x(k++) = v.L_mat(i, j);
    }
    x(k++) = v.mu_eps;
    if (has_mu_eta) x(k++) = v.mu_eta;
    return x;
}

LmiVariables LmiLayout::unpack(const Vector& x, double fixed_mu_eta) const {
    if (x.size() != num_vars()) throw std::invalid_argument("LmiLayout::unpack: wrong vector length");
    LmiVariables v = LmiVariables::zero(n);
    Index        k = 0;
    for (Matrix* p : {&v.P_f, &v.P_g}) {
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i <= j; ++i) {
                (*p)(i, j) = x(k);
                (*p)(j, i) = x(k);
                ++k;
            }
        }
    }
    for (Index i = 0; i < n; ++i) v.W_f(i) = x(k++);
    for (Index i = 0; i < n; ++i) v.W_g(i) = x(k++);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) v.L_mat(i, j) = x(k++);
    }
    v.mu_eps = x(k++);
    v.mu_eta = has_mu_eta ? x(k++) : fixed_mu_eta;
    return v;
}

LmiBlockValues lmi_blocks(const StateSpace& plant, const LmiVariables& v, double alpha) {
    const Index n = plant.order();
    if (n == 0) throw std::invalid_argument("lmi_blocks: plant must have at least one state");
    if (v.P_f.rows() != n || v.P_f.cols() != n || v.P_g.rows() != n || v.P_g.cols() != n || v.W_f.size() != n ||
        v.W_g.size() != n || v.L_mat.rows() != n || v.L_mat.cols() != n) {
        throw std::invalid_argument("lmi_blocks: variable dimensions do not match the plant order");
    }
    const Matrix&    A = plant.A();
    const Vector&    B = plant.B();
    const RowVector& C = plant.C();
    const Matrix     I = Matrix::Identity(n, n);

    Matrix mp(2 * n, 2 * n);
    mp << v.P_f, I, I, v.P_g;
    Matrix ma(2 * n, 2 * n);
    ma << A * v.P_f + B * v.W_f, A, v.L_mat, v.P_g * A;
    Vector mb(2 * n);
    mb << B, v.W_g;
    RowVector mc(2 * n);
    mc << C * v.P_f + plant.D() * v.W_f, C;
    RowVector mct = RowVector::Zero(2 * n);
    mct.head(n) = v.W_f;

    LmiBlockValues out;
    const Index    m = 2 * n;
    out.invariance = Matrix::Zero(2 * m + 1, 2 * m + 1);
    out.invariance.topLeftCorner(m, m) = (1.0 - alpha) * mp;
    out.invariance(m, m) = alpha;
    out.invariance.block(0, m + 1, m, m) = ma.transpose();
    out.invariance.block(m, m + 1, 1, m) = mb.transpose();
    out.invariance.block(m + 1, 0, m, m) = ma;
    out.invariance.block(m + 1, m, m, 1) = mb;
    out.invariance.bottomRightCorner(m, m) = mp;

    auto output_block = [&](const RowVector& row, double mu) {
        Matrix blk(m + 1, m + 1);
        blk.topLeftCorner(m, m) = mp;
        blk.topRightCorner(m, 1) = row.transpose();
        blk.bottomLeftCorner(1, m) = row;
        blk(m, m) = mu;
        return blk;
    };
    out.eps = output_block(mc, v.mu_eps);
    out.eta = output_block(mct, v.mu_eta);
    return out;
}

SdpProblem assemble_lmis(const StateSpace& plant, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("assemble_lmis: alpha must lie in (0, 1)");
    if (!plant.is_stable()) throw std::domain_error("assemble_lmis: plant is not stable");
    return affine_sdp(plant, alpha, LmiLayout{plant.order(), true}, 0.0, true);
}

double IirDesignReport::certificate_residual() const {
    double worst = kInf;
    for (double e : certificate) worst = std::min(worst, e);
    return worst;
}

double alpha_upper(const StateSpace& plant) {
    const double rho = plant.spectral_radius();
    return 1.0 - rho * rho;
}

std::vector<double> alpha_grid(const StateSpace& plant, std::size_t grid_size) {
    if (grid_size == 0) throw std::invalid_argument("alpha_grid: grid must be non-empty");
    if (!plant.is_stable()) throw std::domain_error("alpha_grid: plant is not stable");
    const double        hi = alpha_upper(plant);
    std::vector<double> out;
    for (std::size_t i = 0; i < grid_size; ++i) {
        out.push_back(hi * static_cast<double>(i + 1) / static_cast<double>(grid_size + 1));
    }
    return out;
}

IirDesignReport solve_fixed_alpha(const DesignSpec& spec, double alpha, std::optional<double> mu_eta_cap) {
    spec.validate();
    const StateSpace& plant = spec.plant;
    const Index       n = plant.order();
    if (n == 0) throw std::invalid_argument("solve_fixed_alpha: plant must have at least one state");
    check_alpha(plant, alpha);
    if (mu_eta_cap && (!(*mu_eta_cap > 0.0) || !std::isfinite(*mu_eta_cap))) {
        throw std::invalid_argument("solve_fixed_alpha: mu_eta cap must be finite and > 0");
    }

    const LmiLayout layout{n, false};
    const double    fixed = mu_eta_cap.value_or(0.0);
    SdpProblem      sdp = affine_sdp(plant, alpha, layout, fixed, mu_eta_cap.has_value(), kLyapunovBound);

    SdpOptions opts;
    opts.relaxation = -1e-8;
    SolveStatus status = solve_sdp(sdp, opts);
    if (!status.optimal()) {
        throw IirPointRejected("SDP at alpha = " + std::to_string(alpha) + ": " + to_string(status.outcome));
    }

    IirDesignReport rep;
    rep.alpha_star = alpha;
    rep.mu_eta_cap = mu_eta_cap;
    rep.plant_feedthrough = plant.D();
    rep.vars = layout.unpack(status.x, fixed);
    LmiVariables& v = rep.vars;

    if (!positive_definite(v.P_g)) throw IirPointRejected("recovery: P_g not positive definite");
    const Matrix pg_inv = v.P_g.ldlt().solve(Matrix::Identity(n, n));
    const Matrix s_f = v.P_f - pg_inv;
    if (!positive_definite(s_f)) throw IirPointRejected("recovery: S_f = P_f - P_g^-1 not positive definite");
    const auto   sf_lu = s_f.partialPivLu();
    const Matrix a_r = sf_lu.solve((plant.A() * v.P_f + plant.B() * v.W_f - pg_inv * v.L_mat).transpose()).transpose();
    const Vector b_r = plant.B() - pg_inv * v.W_g;
    const RowVector c_r = sf_lu.solve(v.W_f.transpose()).transpose();
    if (!a_r.allFinite() || !b_r.allFinite() || !c_r.allFinite()) throw IirPointRejected("recovery: non-finite filter");
    rep.realization = StateSpace(a_r, b_r, c_r, 1.0);
    if (!rep.realization.is_stable()) {
        throw IirPointRejected("recovered filter unstable, rho(A_r) = " + std::to_string(rep.realization.spectral_radius()));
    }

    rep.mu_eps = v.mu_eps;
    if (!mu_eta_cap) {
        Matrix mp(2 * n, 2 * n);
        mp << v.P_f, Matrix::Identity(n, n), Matrix::Identity(n, n), v.P_g;
        RowVector mct = RowVector::Zero(2 * n);
        mct.head(n) = v.W_f;
        v.mu_eta = mct.dot(mp.ldlt().solve(mct.transpose()));
    }
    rep.mu_eta = v.mu_eta;

    const auto blocks = lmi_blocks(plant, v, alpha);
    rep.certificate = {min_eig_residual(blocks.invariance), min_eig_residual(blocks.eps), min_eig_residual(blocks.eta)};

    try {
        rep.true_hr_norm = l1_norm(series(plant, rep.realization, SeriesOrder::PlantFirst), spec.tail_tol).value;
        rep.true_r1_norm = l1_norm(rep.realization.with_feedthrough(0.0), spec.tail_tol).value;
    } catch (const std::exception& e) {
        throw IirPointRejected(std::string("post-hoc norms: ") + e.what());
    }
    rep.objective = spec.c() * rep.true_hr_norm + rep.true_r1_norm;
    rep.bound_objective = spec.c() * (std::abs(plant.D()) + std::sqrt(std::max(0.0, rep.mu_eps))) +
                          std::sqrt(std::max(0.0, rep.mu_eta));
    rep.sdp_status = std::move(status);
    return rep;
}

IirDesignReport line_search_alpha(const DesignSpec& spec, std::span<const double> alphas,
                                  std::optional<double> mu_eta_cap, AlphaCriterion criterion, unsigned threads) {
    if (alphas.empty()) throw std::invalid_argument("line_search_alpha: empty alpha grid");
    const double hi = alpha_upper(spec.plant);
    if (std::none_of(alphas.begin(), alphas.end(), [hi](double a) { return a > 0.0 && a < hi; })) {
        throw std::invalid_argument("line_search_alpha: no alpha inside the admissible interval (0, " +
                                    std::to_string(hi) + ")");
    }

    std::vector<std::optional<IirDesignReport>> results(alphas.size());
    std::vector<std::string>                     errors(alphas.size());
    std::atomic<std::size_t>                     next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < alphas.size(); i = next++) {
            try {
                results[i] = solve_fixed_alpha(spec, alphas[i], mu_eta_cap);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const unsigned workers = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(alphas.size()));
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (!results[i]) continue;
        if (!best || criterion_value(*results[i], criterion) < criterion_value(*results[*best], criterion)) best = i;
    }
    if (!best) {
        std::string msg = "line_search_alpha: every alpha point failed";
        for (const auto& e : errors) {
            if (!e.empty()) {
                msg += " (first failure: " + e + ")";
                break;
            }
        }
        throw std::runtime_error(msg);
    }
    return std::move(*results[*best]);
}

IirDesignReport line_search_alpha(const DesignSpec& spec, std::size_t grid_size, std::optional<double> mu_eta_cap,
                                  AlphaCriterion criterion, unsigned threads) {
    if (grid_size < 2) throw std::invalid_argument("line_search_alpha: grid size must be at least 2");
    const auto alphas = alpha_grid(spec.plant, grid_size);
    return line_search_alpha(spec, alphas, mu_eta_cap, criterion, threads);
}

IirDesignResult design_iir(const DesignSpec& spec, std::size_t grid_size, std::span<const std::optional<double>> caps,
                           unsigned threads) {
    if (caps.empty()) throw std::invalid_argument("design_iir: no mu_eta caps given");
    IirDesignResult            result;
    std::optional<std::size_t> best;
    for (const auto& cap : caps) {
        IirSweepEntry entry;
        entry.cap = cap;
        try {
            entry.report = line_search_alpha(spec, grid_size, cap, AlphaCriterion::BoundObjective, threads);
        } catch (const std::runtime_error&) {
            entry.report.reset();
        }
        result.sweep.push_back(std::move(entry));
        const auto& r = result.sweep.back().report;
        if (r && (!best || r->objective < result.sweep[*best].report->objective)) best = result.sweep.size() - 1;
    }
    if (!best) throw std::runtime_error("design_iir: no feasible design for any mu_eta cap");
    result.best = *result.sweep[*best].report;
    return result;
}

std::vector<std::optional<double>> default_mu_eta_caps(std::size_t count) {
    std::vector<std::optional<double>> caps{std::nullopt};
    const double lo = 0.25;
    const double hi = 64.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        caps.emplace_back(lo * std::pow(hi / lo, f));
    }
    return caps;
}

EllipsoidBounds ellipsoid_error_bounds(const IirDesignReport& report, double d) {
    if (!(d > 0.0)) throw std::invalid_argument("ellipsoid_error_bounds: d must be > 0");
    EllipsoidBounds b;
    b.eps_bound = 0.5 * d * (std::abs(report.plant_feedthrough) + std::sqrt(std::max(0.0, report.mu_eps)));
    b.eta_bound = 0.5 * d * std::sqrt(std::max(0.0, report.mu_eta));
    return b;
}

}  // namespace quantshape
