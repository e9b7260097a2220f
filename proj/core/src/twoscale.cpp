#include "homog/twoscale.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "homog/parallel.hpp"

namespace homog {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void TwoScaleConfig::validate() const {
    if (macro_h <= 0.0) throw std::invalid_argument("H must be positive");
    if (radial_m < 2) throw std::invalid_argument("radial resolution m must be >= 2");
    if (d_l < 0.0) throw std::invalid_argument("D_l must be nonnegative");
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    if (!table) throw std::invalid_argument("effective table is required");
}

double TwoScaleState::radial(int i, int j, int k) const {
    const Grid2& g = op->grid;
    return v0[(g.index(i, j)) * op->m + k];
}

double TwoScaleState::trace(int i, int j) const { return u0[op->grid.index(i, j)]; }

TwoScaleOperator::TwoScaleOperator(const TwoScaleConfig& cfg_in) : cfg(cfg_in) {
    cfg.validate();
    grid = Grid2(cfg.omega, cfg.macro_h);
    m = cfg.radial_m;
    const std::int64_t n = grid.num_cells();
    const double H = grid.h;
    const double dt = cfg.dt;

    radius_at.resize(n);
    theta_at.resize(n);
    double r_min = 1.0;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double r = cfg.radius(grid.center(i, j));
            radius_at[grid.index(i, j)] = r;
            theta_at[grid.index(i, j)] = porosity(r);
            if (r > 0.0) r_min = std::min(r_min, r);
        }
    }
    // resolution constraint on the radius variation between neighbors
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i + 1 < grid.nx; ++i) {
            const double dr = std::abs(radius_at[grid.index(i, j)] - radius_at[grid.index(i + 1, j)]);
            if (dr > 0.0 && dr > 0.25 * r_min)
                throw std::invalid_argument("macro grid too coarse for the radius variation");
        }
    }
    for (int j = 0; j + 1 < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
            const double dr = std::abs(radius_at[grid.index(i, j)] - radius_at[grid.index(i, j + 1)]);
            if (dr > 0.0 && dr > 0.25 * r_min)
                throw std::invalid_argument("macro grid too coarse for the radius variation");
        }

    // Radial tridiagonal systems, factored once (Thomas); the boundary
    // coupling 4 pi m D_l is radius-independent.
    c_rb = 4.0 * kPi * m * cfg.d_l;
    tri_sub.assign(n * m, 0.0);
    tri_diag.assign(n * m, 0.0);
    tri_sup.assign(n * m, 0.0);
    hom_response.assign(n * m, 0.0);
    mass_coef.assign(n * m, 0.0);
    alpha.assign(n, 0.0);
    std::vector<double> w(m), dprime(m), y(m);
    for (std::int64_t c = 0; c < n; ++c) {
        const double r = radius_at[c];
        if (r <= 0.0 || cfg.d_l == 0.0) {
            alpha[c] = 0.0;
            continue;  // no micro structure attached (or frozen inclusions)
        }
        const double delta = r / m;
        double* sub = &tri_sub[c * m];
        double* diag = &tri_diag[c * m];
        double* sup = &tri_sup[c * m];
        double* area = &mass_coef[c * m];
        for (int k = 0; k < m; ++k) {
            area[k] = kPi * (2 * k + 1) * delta * delta;
            const double c_in = (k > 0) ? 2.0 * kPi * k * cfg.d_l : 0.0;
            const double c_out = (k + 1 < m) ? 2.0 * kPi * (k + 1) * cfg.d_l : c_rb;
            diag[k] = area[k] / dt + c_in + c_out;
            sub[k] = -c_in;
            sup[k] = (k + 1 < m) ? -2.0 * kPi * (k + 1) * cfg.d_l : 0.0;
        }
        // factor in place: keep (w, d') for repeated solves
        dprime[0] = diag[0];
        for (int k = 1; k < m; ++k) {
            w[k] = sub[k] / dprime[k - 1];
            dprime[k] = diag[k] - w[k] * sup[k - 1];
        }
        // unit-boundary response: rhs = c_rb * e_{m-1}
        std::fill(y.begin(), y.end(), 0.0);
        y[m - 1] = c_rb;
        for (int k = 1; k < m; ++k) y[k] -= w[k] * y[k - 1];
        double* hom = &hom_response[c * m];
        hom[m - 1] = y[m - 1] / dprime[m - 1];
        for (int k = m - 2; k >= 0; --k) hom[k] = (y[k] - sup[k] * hom[k + 1]) / dprime[k];
        alpha[c] = c_rb * (1.0 - hom[m - 1]);
        // overwrite sub/diag with the factorization for the stepping path
        for (int k = 0; k < m; ++k) {
            sub[k] = (k > 0) ? w[k] : 0.0;
            diag[k] = dprime[k];
        }
    }

    // Face velocities of the macroscopic advection (stream preset).
    std::vector<double> qx(static_cast<size_t>(grid.nx + 1) * grid.ny, 0.0);
    std::vector<double> qy(static_cast<size_t>(grid.nx) * (grid.ny + 1), 0.0);
    if (cfg.velocity.active()) {
        auto corner = [&](int i, int j) {
            return Vec2{grid.box.ax + i * H, grid.box.ay + j * H};
        };
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i <= grid.nx; ++i)
                qx[static_cast<size_t>(j) * (grid.nx + 1) + i] =
                    (cfg.velocity.psi(corner(i, j + 1)) - cfg.velocity.psi(corner(i, j))) / H;
        for (int j = 0; j <= grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                qy[static_cast<size_t>(j) * grid.nx + i] =
                    -(cfg.velocity.psi(corner(i + 1, j)) - cfg.velocity.psi(corner(i, j))) / H;
    }

    // Condensed macro system (theta H^2/dt + H^2 alpha) I + K.
    auto tensor_at = [&](const Vec2& x) { return cfg.table->tensor(cfg.radius(x)); };
    std::vector<std::int64_t> rows, cols;
    std::vector<double> vals;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const std::int64_t p = grid.index(i, j);
            double diag = theta_at[p] * H * H / dt + H * H * alpha[p];
            auto couple = [&](int ni, int nj, int axis, double q_out) {
                const std::int64_t q = grid.index(ni, nj);
                const Vec2 fc = (grid.center(i, j) + grid.center(ni, nj)) * 0.5;
                // off-diagonal tensor entries are isotropy noise for discs
                const double df = tensor_at(fc)[axis][axis];
                diag += df;
                double off = -df;
                if (q_out < 0.0) {
                    diag += -q_out * H;
                    off += q_out * H;
                }
                rows.push_back(p);
                cols.push_back(q);
                vals.push_back(off);
            };
            if (i + 1 < grid.nx) couple(i + 1, j, 0, qx[static_cast<size_t>(j) * (grid.nx + 1) + i + 1]);
            if (i > 0) couple(i - 1, j, 0, -qx[static_cast<size_t>(j) * (grid.nx + 1) + i]);
            if (j + 1 < grid.ny) couple(i, j + 1, 1, qy[static_cast<size_t>(j + 1) * grid.nx + i]);
            if (j > 0) couple(i, j - 1, 1, -qy[static_cast<size_t>(j) * grid.nx + i]);
            auto bface = [&](const Vec2& fc, int axis) {
                const double cb = 2.0 * tensor_at(fc)[axis][axis];
                diag += cb;
                bfaces.push_back({p, cb, fc});
            };
            const Vec2 c = grid.center(i, j);
            if (i == 0) bface({grid.box.ax, c.y}, 0);
            if (i + 1 == grid.nx) bface({grid.box.bx, c.y}, 0);
            if (j == 0) bface({c.x, grid.box.ay}, 1);
            if (j + 1 == grid.ny) bface({c.x, grid.box.by}, 1);
            rows.push_back(p);
            cols.push_back(p);
            vals.push_back(diag);
        }
    }
    macro_matrix = CsrMatrix::from_triplets(n, std::move(rows), std::move(cols), std::move(vals));
    if (!cfg.velocity.active()) ic = std::make_unique<Ic0Factor>(macro_matrix);
}

double TwoScaleOperator::total_mass(const TwoScaleState& s) const {
    const double H2 = grid.h * grid.h;
    double mass = 0.0;
    for (std::int64_t c = 0; c < grid.num_cells(); ++c) {
        double micro = 0.0;
        const double* area = &mass_coef[c * m];
        for (int k = 0; k < m; ++k) micro += area[k] * s.v0[c * m + k];
        mass += H2 * (theta_at[c] * s.u0[c] + micro);
    }
    return mass;
}

double TwoScaleOperator::boundary_flux(const TwoScaleState& s) const {
    double flux = 0.0;
    for (const auto& f : bfaces) flux += f.coeff * (cfg.boundary(f.center, s.time) - s.u0[f.cell]);
    return flux;
}

TwoScaleState initial_state(const TwoScaleOperator& op) {
    TwoScaleState s;
    s.op = &op;
    s.time = 0.0;
    const std::int64_t n = op.grid.num_cells();
    s.u0.resize(n);
    s.v0.assign(n * op.m, 0.0);
    for (int j = 0; j < op.grid.ny; ++j) {
        for (int i = 0; i < op.grid.nx; ++i) {
            const std::int64_t c = op.grid.index(i, j);
            const Vec2 x = op.grid.center(i, j);
            s.u0[c] = op.cfg.initial_u(x);
            const double vi = op.cfg.initial_v(x);
            for (int k = 0; k < op.m; ++k) s.v0[c * op.m + k] = vi;
        }
    }
    return s;
}

TwoScaleState step_twoscale(const TwoScaleState& state, const TwoScaleOperator& op) {
    const std::int64_t n = op.grid.num_cells();
    const int m = op.m;
    const double H2 = op.grid.h * op.grid.h;
    const double t_new = state.time + op.cfg.dt;

    // (i) particular radial solves with the frozen factorization
    std::vector<double> vpart(n * m, 0.0);
    std::vector<double> beta(n, 0.0);
    for (std::int64_t c = 0; c < n; ++c) {
        if (op.radius_at[c] <= 0.0 || op.cfg.d_l == 0.0) continue;
        const double* sub = &op.tri_sub[c * m];   // Thomas multipliers
        const double* diag = &op.tri_diag[c * m]; // pivots
        const double* sup = &op.tri_sup[c * m];
        const double* area = &op.mass_coef[c * m];
        double* vp = &vpart[c * m];
        for (int k = 0; k < m; ++k) vp[k] = area[k] / op.cfg.dt * state.v0[c * m + k];
        for (int k = 1; k < m; ++k) vp[k] -= sub[k] * vp[k - 1];
        vp[m - 1] /= diag[m - 1];
        for (int k = m - 2; k >= 0; --k) vp[k] = (vp[k] - sup[k] * vp[k + 1]) / diag[k];
        beta[c] = op.c_rb * vp[m - 1];
    }

    // (ii) condensed macro solve
    std::vector<double> rhs(n);
    for (std::int64_t c = 0; c < n; ++c)
        rhs[c] = op.theta_at[c] * H2 / op.cfg.dt * state.u0[c] + H2 * beta[c];
    for (const auto& f : op.bfaces) rhs[f.cell] += f.coeff * op.cfg.boundary(f.center, t_new);

    TwoScaleState out;
    out.op = &op;
    out.time = t_new;
    if (!op.cfg.velocity.active() && op.ic) {
        // reuse the cached IC(0) factor through the operator interface
        auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
            op.macro_matrix.apply(x, y);
        };
        const std::vector<double>& b = rhs;
        std::vector<double> x = state.u0;
        std::vector<double> r(n), z(n), p(n), ap(n);
        apply(x, r);
        for (std::int64_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        const double bnorm = std::max(std::sqrt(det_dot(b.data(), b.data(), n)), 1e-300);
        double rnorm = std::sqrt(det_dot(r.data(), r.data(), n));
        if (rnorm / bnorm > op.cfg.solver_tol) {
            op.ic->solve(r, z);
            p = z;
            double rz = det_dot(r.data(), z.data(), n);
            for (std::int64_t it = 1; it <= 10 * n; ++it) {
                apply(p, ap);
                const double pap = det_dot(p.data(), ap.data(), n);
                if (pap <= 0.0) break;
                const double a = rz / pap;
                for (std::int64_t i = 0; i < n; ++i) {
                    x[i] += a * p[i];
                    r[i] -= a * ap[i];
                }
                rnorm = std::sqrt(det_dot(r.data(), r.data(), n));
                if (rnorm / bnorm <= op.cfg.solver_tol) break;
                op.ic->solve(r, z);
                const double rz_new = det_dot(r.data(), z.data(), n);
                const double bta = rz_new / rz;
                rz = rz_new;
                for (std::int64_t i = 0; i < n; ++i) p[i] = z[i] + bta * p[i];
            }
            if (rnorm / bnorm > op.cfg.solver_tol)
                throw std::runtime_error("two-scale macro solve did not converge");
        }
        out.u0 = std::move(x);
    } else {
        SparseSystem sys;
        sys.matrix = op.macro_matrix;
        sys.rhs = rhs;
        SolverOptions opts;
        opts.tol = op.cfg.solver_tol;
        opts.precond = Precond::jacobi;
        opts.initial_guess = &state.u0;
        auto [x, stats] = bicgstab_solve(sys, opts);
        if (!stats.converged)
            throw std::runtime_error("two-scale macro solve did not converge");
        out.u0 = std::move(x);
    }

    // (iii) radial back-substitution restores the trace coupling exactly
    out.v0.resize(n * m);
    for (std::int64_t c = 0; c < n; ++c) {
        if (op.radius_at[c] <= 0.0 || op.cfg.d_l == 0.0) {
            for (int k = 0; k < m; ++k) out.v0[c * m + k] = state.v0[c * m + k];
            continue;
        }
        const double* hom = &op.hom_response[c * m];
        for (int k = 0; k < m; ++k) out.v0[c * m + k] = hom[k] * out.u0[c] + vpart[c * m + k];
    }
    return out;
}

namespace {

/// Radial profile sample with linear interpolation between cell-centered
/// nodes, flat at the center, tied to u0 at the boundary.
double profile_value(const TwoScaleOperator& op, const TwoScaleState& s, std::int64_t c,
                     double rho) {
    const double r = op.radius_at[c];
    if (r <= 0.0) return s.u0[c];
    const int m = op.m;
    const double delta = r / m;
    const double* v = &s.v0[c * m];
    if (rho <= 0.5 * delta) return v[0];
    if (rho >= r) return s.u0[c];
    const double g = rho / delta - 0.5;
    const int k = static_cast<int>(std::floor(g));
    if (k >= m - 1) {
        // between the outermost stored node and the boundary trace
        const double t = (rho - (m - 0.5) * delta) / (0.5 * delta);
        return (1.0 - t) * v[m - 1] + t * s.u0[c];
    }
    const double t = g - k;
    return (1.0 - t) * v[k] + t * v[k + 1];
}

}  // namespace

double sample_v0(const TwoScaleState& state, const Vec2& x, const Vec2& y) {
    const TwoScaleOperator& op = *state.op;
    const double rho = y.norm();
    if (rho > op.cfg.radius(x) + 1e-12)
        throw std::invalid_argument("sample_v0: |y| exceeds r(x)");
    const Grid2& g = op.grid;
    // bilinear over the cell-center lattice, clamped at the boundary
    const double gx = (x.x - g.box.ax) / g.h - 0.5;
    const double gy = (x.y - g.box.ay) / g.h - 0.5;
    int i0 = static_cast<int>(std::floor(gx));
    int j0 = static_cast<int>(std::floor(gy));
    double tx = gx - i0, ty = gy - j0;
    if (i0 < 0) { i0 = 0; tx = 0.0; }
    if (j0 < 0) { j0 = 0; ty = 0.0; }
    if (i0 >= g.nx - 1) { i0 = g.nx - 2 >= 0 ? g.nx - 2 : 0; tx = g.nx > 1 ? 1.0 : 0.0; }
    if (j0 >= g.ny - 1) { j0 = g.ny - 2 >= 0 ? g.ny - 2 : 0; ty = g.ny > 1 ? 1.0 : 0.0; }
    const int i1 = std::min(i0 + 1, g.nx - 1), j1 = std::min(j0 + 1, g.ny - 1);
    const double w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty), w01 = (1 - tx) * ty,
                 w11 = tx * ty;
    double s = 0.0;
    s += w00 * profile_value(op, state, g.index(i0, j0), std::min(rho, op.radius_at[g.index(i0, j0)]));
    s += w10 * profile_value(op, state, g.index(i1, j0), std::min(rho, op.radius_at[g.index(i1, j0)]));
    s += w01 * profile_value(op, state, g.index(i0, j1), std::min(rho, op.radius_at[g.index(i0, j1)]));
    s += w11 * profile_value(op, state, g.index(i1, j1), std::min(rho, op.radius_at[g.index(i1, j1)]));
    return s;
}

namespace {

/// Cell value with ghost reflection through the Dirichlet wall data.
double ghosted_u0(const TwoScaleState& s, int i, int j) {
    const TwoScaleOperator& op = *s.op;
    const Grid2& g = op.grid;
    auto wall = [&](const Vec2& p) { return op.cfg.boundary(p, s.time); };
    int ii = i, jj = j;
    double corr = 0.0;
    int refl = 0;
    if (ii < 0) {
        const Vec2 p{g.box.ax, g.box.ay + (jj + 0.5) * g.h};
        corr += 2.0 * wall({p.x, std::min(std::max(p.y, g.box.ay), g.box.by)});
        ii = 0;
        ++refl;
    } else if (ii >= g.nx) {
        const Vec2 p{g.box.bx, g.box.ay + (jj + 0.5) * g.h};
        corr += 2.0 * wall({p.x, std::min(std::max(p.y, g.box.ay), g.box.by)});
        ii = g.nx - 1;
        ++refl;
    }
    if (jj < 0) {
        const Vec2 p{g.box.ax + (i + 0.5) * g.h, g.box.ay};
        corr += 2.0 * wall({std::min(std::max(p.x, g.box.ax), g.box.bx), p.y});
        jj = 0;
        ++refl;
    } else if (jj >= g.ny) {
        const Vec2 p{g.box.ax + (i + 0.5) * g.h, g.box.by};
        corr += 2.0 * wall({std::min(std::max(p.x, g.box.ax), g.box.bx), p.y});
        jj = g.ny - 1;
        ++refl;
    }
    const double inner = s.u0[g.index(ii, jj)];
    if (refl == 0) return inner;
    if (refl == 1) return corr - inner;
    return corr / 2.0 - inner;  // corner ghost: average of the two reflections
}

}  // namespace

double sample_u0(const TwoScaleState& state, const Vec2& x) {
    const Grid2& g = state.op->grid;
    const double gx = (x.x - g.box.ax) / g.h - 0.5;
    const double gy = (x.y - g.box.ay) / g.h - 0.5;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double tx = gx - i0, ty = gy - j0;
    const double v00 = ghosted_u0(state, i0, j0);
    const double v10 = ghosted_u0(state, i0 + 1, j0);
    const double v01 = ghosted_u0(state, i0, j0 + 1);
    const double v11 = ghosted_u0(state, i0 + 1, j0 + 1);
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

Vec2 sample_grad_u0(const TwoScaleState& state, const Vec2& x) {
    const Grid2& g = state.op->grid;
    const double gx = (x.x - g.box.ax) / g.h - 0.5;
    const double gy = (x.y - g.box.ay) / g.h - 0.5;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double tx = gx - i0, ty = gy - j0;
    auto grad_at = [&](int i, int j) {
        return Vec2{(ghosted_u0(state, i + 1, j) - ghosted_u0(state, i - 1, j)) / (2 * g.h),
                    (ghosted_u0(state, i, j + 1) - ghosted_u0(state, i, j - 1)) / (2 * g.h)};
    };
    const Vec2 g00 = grad_at(i0, j0), g10 = grad_at(i0 + 1, j0), g01 = grad_at(i0, j0 + 1),
               g11 = grad_at(i0 + 1, j0 + 1);
    const double w00 = (1 - tx) * (1 - ty), w10 = tx * (1 - ty), w01 = (1 - tx) * ty,
                 w11 = tx * ty;
    return {w00 * g00.x + w10 * g10.x + w01 * g01.x + w11 * g11.x,
            w00 * g00.y + w10 * g10.y + w01 * g01.y + w11 * g11.y};
}

TwoScaleTrajectory run_twoscale(const TwoScaleOperator& op) {
    TwoScaleTrajectory traj;
    traj.dt = op.cfg.dt;
    const int nsteps =
        op.cfg.horizon > 0.0 ? static_cast<int>(std::lround(op.cfg.horizon / op.cfg.dt)) : 0;
    if (nsteps > 0 && std::abs(nsteps * op.cfg.dt - op.cfg.horizon) > 1e-9 * op.cfg.horizon)
        throw std::invalid_argument("dt must divide the time horizon T");
    traj.steps = nsteps;

    TwoScaleState state = initial_state(op);
    traj.snapshots.push_back(state);
    double mass = op.total_mass(state);
    const double mass_scale = std::abs(mass) + 1.0;
    for (int s = 1; s <= nsteps; ++s) {
        TwoScaleState next = step_twoscale(state, op);
        const double mass_new = op.total_mass(next);
        const double flux = op.boundary_flux(next);
        const double defect = std::abs(mass_new - mass - op.cfg.dt * flux);
        const double denom = std::max(std::abs(op.cfg.dt * flux), 1e-9 * mass_scale);
        traj.max_mass_audit = std::max(traj.max_mass_audit, defect / denom);
        mass = mass_new;
        state = std::move(next);
        if (s % op.cfg.sample_every == 0 || s == nsteps) traj.snapshots.push_back(state);
    }
    return traj;
}

void write_twoscale_csv(const TwoScaleState& state, const std::string& path_u,
                        const std::string& path_v, const std::string& header_comment) {
    const TwoScaleOperator& op = *state.op;
    const Grid2& g = op.grid;
    {
        std::ofstream out(path_u);
        if (!out) throw std::runtime_error("cannot open " + path_u);
        if (!header_comment.empty()) out << header_comment << "\n";
        out << "x,y,u0\n";
        out.precision(17);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const Vec2 c = g.center(i, j);
                out << c.x << ',' << c.y << ',' << state.u0[g.index(i, j)] << '\n';
            }
    }
    {
        std::ofstream out(path_v);
        if (!out) throw std::runtime_error("cannot open " + path_v);
        if (!header_comment.empty()) out << header_comment << "\n";
        out << "x,y,rho,v0\n";
        out.precision(17);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::int64_t c = g.index(i, j);
                const double r = op.radius_at[c];
                if (r <= 0.0) continue;
                const Vec2 xc = g.center(i, j);
                const double delta = r / op.m;
                for (int k = 0; k < op.m; ++k)
                    out << xc.x << ',' << xc.y << ',' << (k + 0.5) * delta << ','
                        << state.v0[c * op.m + k] << '\n';
            }
    }
}

}  // namespace homog
