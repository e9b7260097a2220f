#include "homog/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "homog/parallel.hpp"

namespace homog {

StencilSolver::StencilSolver(int nx, int ny, std::vector<double> west,
                             std::vector<double> south, std::vector<double> diag)
    : nx_(nx), ny_(ny), n_(std::int64_t(nx) * ny), aw_(std::move(west)),
      as_(std::move(south)), ad_(std::move(diag)) {
    // MIC(0) pivots: dropped fill is lumped into the diagonal, which keeps
    // row sums and sharpens the spectrum for grid Laplacians
    mic_d_.assign(n_, 0.0);
    for (std::int64_t i = 0; i < n_; ++i) {
        double d = ad_[i];
        const double w = aw_[i], s = as_[i];
        if (w != 0.0) {
            const double an_im1 = (i - 1 + nx_ < n_) ? as_[i - 1 + nx_] : 0.0;
            d -= w * (w + an_im1) / mic_d_[i - 1];
        }
        if (i >= nx_ && s != 0.0) {
            const double ae_imN = ((i - nx_ + 1) % nx_ != 0) ? aw_[i - nx_ + 1] : 0.0;
            d -= s * (s + ae_imN) / mic_d_[i - nx_];
        }
        if (d <= 0.0) throw std::runtime_error("MIC(0) breakdown");
        mic_d_[i] = d;
    }
}

void StencilSolver::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(n_);
    const double* aw = aw_.data();
    const double* as = as_.data();
    const double* ad = ad_.data();
    const double* xp = x.data();
    const int nx = nx_;
    parallel_for(n_, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            double s = ad[i] * xp[i];
            if (aw[i] != 0.0) s += aw[i] * xp[i - 1];
            if (i + 1 < n_ && aw[i + 1] != 0.0) s += aw[i + 1] * xp[i + 1];
            if (as[i] != 0.0) s += as[i] * xp[i - nx];
            if (i + nx < n_ && as[i + nx] != 0.0) s += as[i + nx] * xp[i + nx];
            y[i] = s;
        }
    });
}

void StencilSolver::precondition(const std::vector<double>& r, std::vector<double>& z) const {
    z.resize(n_);
    const double* aw = aw_.data();
    const double* as = as_.data();
    const double* d = mic_d_.data();
    const int nx = nx_;
    // (D + L) y = r, diag-scaled, then (D + L^T) z = D y
    for (std::int64_t i = 0; i < n_; ++i) {
        double s = r[i];
        if (aw[i] != 0.0) s -= aw[i] * z[i - 1];
        if (as[i] != 0.0) s -= as[i] * z[i - nx];
        z[i] = s / d[i];
    }
    for (std::int64_t i = n_ - 1; i >= 0; --i) {
        double s = 0.0;
        if (i + 1 < n_ && aw[i + 1] != 0.0) s += aw[i + 1] * z[i + 1];
        if (i + nx < n_ && as[i + nx] != 0.0) s += as[i + nx] * z[i + nx];
        z[i] -= s / d[i];
    }
}

int StencilSolver::solve(std::vector<double>& x, const std::vector<double>& rhs, double tol,
                         std::int64_t max_iter) const {
    std::vector<double> r(n_), z(n_), p(n_), ap(n_);
    apply(x, r);
    for (std::int64_t i = 0; i < n_; ++i) r[i] = rhs[i] - r[i];
    const double bnorm = std::max(std::sqrt(det_dot(rhs.data(), rhs.data(), n_)), 1e-300);
    double rnorm = std::sqrt(det_dot(r.data(), r.data(), n_));
    if (rnorm / bnorm <= tol) return 0;
    precondition(r, z);
    p = z;
    double rz = det_dot(r.data(), z.data(), n_);
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        apply(p, ap);
        const double pap = det_dot(p.data(), ap.data(), n_);
        if (pap <= 0.0) break;
        const double alpha = rz / pap;
        parallel_for(n_, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t k = lo; k < hi; ++k) {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
        });
        rnorm = std::sqrt(det_dot(r.data(), r.data(), n_));
        if (rnorm / bnorm <= tol) return static_cast<int>(it);
        precondition(r, z);
        const double rz_new = det_dot(r.data(), z.data(), n_);
        const double beta = rz_new / rz;
        rz = rz_new;
        parallel_for(n_, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t k = lo; k < hi; ++k) p[k] = z[k] + beta * p[k];
        });
    }
    throw std::runtime_error("micro step: CG did not converge");
}

void MicroConfig::validate() const {
    if (d_h <= 0.0) throw std::invalid_argument("D_h must be positive");
    if (d_l < 0.0) throw std::invalid_argument("D_l must be nonnegative");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (horizon < 0.0) throw std::invalid_argument("T must be nonnegative");
    if (sample_every <= 0) throw std::invalid_argument("sample_every must be positive");
}

MicroOperator::MicroOperator(const MediumGeometry& geom, const MicroConfig& cfg)
    : geom_(&geom), cfg_(cfg) {
    cfg_.validate();
    const Grid2& g = geom.grid();
    const double h = g.h;
    const double eps = geom.epsilon();
    const std::int64_t n = g.num_cells();
    const double dl_eff = eps * eps * cfg_.d_l;

    // boundary monotonicity check (B2): sampled on the step grid
    if (cfg_.horizon > 0.0) {
        const int nsteps = static_cast<int>(std::lround(cfg_.horizon / cfg_.dt));
        const int stride = std::max(1, nsteps / 16);
        for (int s = 0; s + stride <= nsteps; s += stride) {
            for (int e = 0; e < 8; ++e) {
                const Vec2 x{g.box.ax + g.box.width() * e / 7.0, g.box.ay};
                if (cfg_.boundary(x, (s + stride) * cfg_.dt) >
                    cfg_.boundary(x, s * cfg_.dt) + 1e-12)
                    throw std::invalid_argument("boundary data must be non-increasing in time");
            }
        }
    }

    // face-normal velocities from stream-function corner differences; the
    // discrete divergence then telescopes to zero exactly
    qx_.assign(static_cast<size_t>(g.nx + 1) * g.ny, 0.0);
    qy_.assign(static_cast<size_t>(g.nx) * (g.ny + 1), 0.0);
    if (cfg_.velocity.active()) {
        auto corner = [&](int i, int j) {
            return Vec2{g.box.ax + i * h, g.box.ay + j * h};
        };
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                qx_[static_cast<size_t>(j) * (g.nx + 1) + i] =
                    (cfg_.velocity.psi(corner(i, j + 1)) - cfg_.velocity.psi(corner(i, j))) / h;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                qy_[static_cast<size_t>(j) * g.nx + i] =
                    -(cfg_.velocity.psi(corner(i + 1, j)) - cfg_.velocity.psi(corner(i, j))) / h;
    }

    auto diffusivity = [&](int i, int j) {
        return geom.is_low(i, j) ? dl_eff : cfg_.d_h;
    };
    auto face_d = [&](double a, double b) {
        const double s = a + b;
        return s > 0.0 ? 2.0 * a * b / s : 0.0;  // harmonic mean
    };

    std::vector<std::int64_t> rows, cols;
    std::vector<double> vals;
    rows.reserve(5 * n);
    cols.reserve(5 * n);
    vals.reserve(5 * n);
    const double inv_h2 = 1.0 / (h * h);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::int64_t p = g.index(i, j);
            const bool low_p = geom.is_low(i, j);
            const double dp = diffusivity(i, j);
            double diag = 0.0;
            auto couple = [&](int ni, int nj, double q_out) {
                const std::int64_t q = g.index(ni, nj);
                const double cf = face_d(dp, diffusivity(ni, nj)) * inv_h2;
                diag += cf;
                double off = -cf;
                // upwind advection, high-high faces only, inflow form
                if (!low_p && !geom.is_low(ni, nj) && q_out < 0.0) {
                    diag += -q_out / h;
                    off += q_out / h;
                }
                rows.push_back(p);
                cols.push_back(q);
                vals.push_back(off);
            };
            if (i + 1 < g.nx) couple(i + 1, j, qx_[static_cast<size_t>(j) * (g.nx + 1) + i + 1]);
            if (i > 0) couple(i - 1, j, -qx_[static_cast<size_t>(j) * (g.nx + 1) + i]);
            if (j + 1 < g.ny) couple(i, j + 1, qy_[static_cast<size_t>(j + 1) * g.nx + i]);
            if (j > 0) couple(i, j - 1, -qy_[static_cast<size_t>(j) * g.nx + i]);
            // domain-boundary faces: strong Dirichlet through half-cell flux;
            // the stream function vanishes on the boundary so there is no
            // advective boundary term
            auto bface = [&](const Vec2& fc) {
                const double cb = 2.0 * dp * inv_h2;
                diag += cb;
                bfaces_.push_back({p, cb, fc});
            };
            const Vec2 c = g.center(i, j);
            if (i == 0) bface({g.box.ax, c.y});
            if (i + 1 == g.nx) bface({g.box.bx, c.y});
            if (j == 0) bface({c.x, g.box.ay});
            if (j + 1 == g.ny) bface({c.x, g.box.by});
            rows.push_back(p);
            cols.push_back(p);
            vals.push_back(diag);
        }
    }
    a_ = CsrMatrix::from_triplets(n, rows, cols, vals);

    // stepping matrix I + dt A
    for (auto& v : vals) v *= cfg_.dt;
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(rows.size()); ++k)
        if (rows[k] == cols[k]) vals[k] += 1.0;
    b_ = CsrMatrix::from_triplets(n, std::move(rows), std::move(cols), std::move(vals));

    if (symmetric()) {
        // shifted-stencil storage of B for the MIC-preconditioned hot path
        std::vector<double> west(n, 0.0), south(n, 0.0), diag(n, 0.0);
        const auto& rp = b_.row_ptr();
        const auto& ci = b_.col_idx();
        const auto& bv = b_.values();
        for (std::int64_t row = 0; row < n; ++row) {
            for (std::int64_t k = rp[row]; k < rp[row + 1]; ++k) {
                if (ci[k] == row) diag[row] = bv[k];
                else if (ci[k] == row - 1) west[row] = bv[k];
                else if (ci[k] == row - g.nx) south[row] = bv[k];
            }
        }
        stencil_ = StencilSolver(g.nx, g.ny, std::move(west), std::move(south), std::move(diag));
    }
}

double MicroOperator::max_velocity_divergence() const {
    const Grid2& g = geom_->grid();
    double worst = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (geom_->is_low(i, j)) continue;
            const double div = (qx_[static_cast<size_t>(j) * (g.nx + 1) + i + 1] -
                                qx_[static_cast<size_t>(j) * (g.nx + 1) + i] +
                                qy_[static_cast<size_t>(j + 1) * g.nx + i] -
                                qy_[static_cast<size_t>(j) * g.nx + i]) /
                               g.h;
            worst = std::max(worst, std::abs(div));
        }
    }
    return worst;
}

std::vector<double> MicroOperator::boundary_values(double t) const {
    std::vector<double> vals(bfaces_.size());
    for (size_t k = 0; k < bfaces_.size(); ++k) vals[k] = cfg_.boundary(bfaces_[k].center, t);
    return vals;
}

std::vector<double> MicroOperator::step_rhs(const std::vector<double>& u_old, double t_new) const {
    std::vector<double> rhs = u_old;
    for (const auto& f : bfaces_) rhs[f.cell] += cfg_.dt * f.coeff * cfg_.boundary(f.center, t_new);
    return rhs;
}

MicroOperator assemble_micro(const MediumGeometry& geom, const MicroConfig& cfg) {
    return MicroOperator(geom, cfg);
}

MicroState step_micro(const MicroState& state, const MicroOperator& op,
                      const std::vector<double>* guess) {
    const double t_new = state.time + op.cfg_.dt;
    const std::vector<double> rhs = op.step_rhs(state.field, t_new);

    MicroState out;
    out.time = t_new;
    out.geom = state.geom;
    if (op.symmetric()) {
        std::vector<double> x = guess ? *guess : state.field;
        op.stencil_.solve(x, rhs, op.cfg_.solver_tol, 10 * op.b_.rows());
        out.field = std::move(x);
    } else {
        SparseSystem sys;
        sys.matrix = op.b_;
        sys.rhs = rhs;
        SolverOptions opts;
        opts.tol = op.cfg_.solver_tol;
        opts.precond = Precond::jacobi;
        opts.initial_guess = guess ? guess : &state.field;
        auto [x, stats] = bicgstab_solve(sys, opts);
        if (!stats.converged) throw std::runtime_error("micro step: BiCGStab did not converge");
        out.field = std::move(x);
    }
    return out;
}

MicroTrajectory run_micro(const MediumGeometry& geom, const MicroConfig& cfg) {
    MicroOperator op(geom, cfg);
    const Grid2& g = geom.grid();

    MicroState state;
    state.time = 0.0;
    state.geom = &geom;
    state.field.resize(g.num_cells());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 x = g.center(i, j);
            state.field[g.index(i, j)] = geom.is_low(i, j) ? cfg.initial_v(x) : cfg.initial_u(x);
        }
    }

    MicroTrajectory traj;
    traj.dt = cfg.dt;
    const int nsteps = cfg.horizon > 0.0 ? static_cast<int>(std::lround(cfg.horizon / cfg.dt)) : 0;
    if (nsteps > 0 && std::abs(nsteps * cfg.dt - cfg.horizon) > 1e-9 * cfg.horizon)
        throw std::invalid_argument("dt must divide the time horizon T");
    traj.steps = nsteps;

    // data hull for the maximum-principle invariant
    double lo = state.field.empty() ? 0.0 : *std::min_element(state.field.begin(), state.field.end());
    double hi = state.field.empty() ? 0.0 : *std::max_element(state.field.begin(), state.field.end());
    {
        const auto bv = op.boundary_values(0.0);
        for (double v : bv) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    traj.snapshots.push_back(state);
    std::vector<double> prev_field;
    std::vector<double> guess;
    for (int s = 1; s <= nsteps; ++s) {
        // linear extrapolation of the last two levels as the solver start
        const std::vector<double>* start = nullptr;
        if (!prev_field.empty()) {
            guess.resize(state.field.size());
            for (size_t k = 0; k < guess.size(); ++k)
                guess[k] = 2.0 * state.field[k] - prev_field[k];
            start = &guess;
        }
        prev_field = state.field;
        MicroState next = step_micro(state, op, start);
        const auto bv = op.boundary_values(next.time);
        for (double v : bv) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double slack = 1e-9 * std::max(1.0, hi - lo) + 1e-12;
        for (double v : next.field)
            if (v < lo - slack || v > hi + slack) ++traj.hull_violations;
        state = std::move(next);
        if (s % cfg.sample_every == 0 || s == nsteps) traj.snapshots.push_back(state);
    }
    traj.hull_lo = lo;
    traj.hull_hi = hi;
    return traj;
}

void write_micro_csv(const MicroState& state, const std::string& path,
                     const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    if (!header_comment.empty()) out << header_comment << "\n";
    out << "x,y,value,phase\n";
    out.precision(17);
    const Grid2& g = state.geom->grid();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.center(i, j);
            out << c.x << ',' << c.y << ',' << state.field[g.index(i, j)] << ','
                << (state.geom->is_low(i, j) ? "low" : "high") << '\n';
        }
    }
}

}  // namespace homog
