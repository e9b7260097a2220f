#include "homog/numerics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "homog/parallel.hpp"

namespace homog {

namespace {

double wall_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double norm2(const std::vector<double>& v) {
    return std::sqrt(det_dot(v.data(), v.data(), static_cast<std::int64_t>(v.size())));
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) y[i] += a * x[i];
    });
}

}  // namespace

CsrMatrix CsrMatrix::from_triplets(std::int64_t n, std::vector<std::int64_t> rows,
                                   std::vector<std::int64_t> cols,
                                   std::vector<double> vals) {
    if (rows.size() != cols.size() || rows.size() != vals.size())
        throw std::invalid_argument("triplet arrays must have equal length");
    CsrMatrix m;
    m.n_ = n;
    const size_t nnz_in = vals.size();
    std::vector<std::int64_t> count(n + 1, 0);
    for (size_t k = 0; k < nnz_in; ++k) {
        if (rows[k] < 0 || rows[k] >= n || cols[k] < 0 || cols[k] >= n)
            throw std::invalid_argument("triplet index out of range");
        ++count[rows[k] + 1];
    }
    std::partial_sum(count.begin(), count.end(), count.begin());
    std::vector<std::int64_t> order(nnz_in);
    {
        std::vector<std::int64_t> next(count.begin(), count.end() - 1);
        for (size_t k = 0; k < nnz_in; ++k) order[next[rows[k]]++] = static_cast<std::int64_t>(k);
    }
    m.row_ptr_.assign(n + 1, 0);
    m.col_idx_.reserve(nnz_in);
    m.val_.reserve(nnz_in);
    for (std::int64_t r = 0; r < n; ++r) {
        const std::int64_t lo = count[r], hi = count[r + 1];
        std::sort(order.begin() + lo, order.begin() + hi,
                  [&](std::int64_t a, std::int64_t b) { return cols[a] < cols[b]; });
        for (std::int64_t k = lo; k < hi; ++k) {
            const std::int64_t src = order[k];
            const auto c = static_cast<std::int32_t>(cols[src]);
            if (static_cast<std::int64_t>(m.col_idx_.size()) > m.row_ptr_[r] &&
                m.col_idx_.back() == c) {
                m.val_.back() += vals[src];
            } else {
                m.col_idx_.push_back(c);
                m.val_.push_back(vals[src]);
            }
        }
        m.row_ptr_[r + 1] = static_cast<std::int64_t>(m.col_idx_.size());
    }
    return m;
}

void CsrMatrix::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.resize(x.size());
    parallel_for(n_, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            double s = 0.0;
            for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                s += val_[k] * x[col_idx_[k]];
            y[r] = s;
        }
    });
}

void CsrMatrix::apply_scaled(double alpha, const std::vector<double>& x, double beta,
                             std::vector<double>& y) const {
    parallel_for(n_, [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t r = lo; r < hi; ++r) {
            double s = 0.0;
            for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
                s += val_[k] * x[col_idx_[k]];
            y[r] = alpha * s + beta * y[r];
        }
    });
}

std::vector<double> CsrMatrix::diagonal() const {
    std::vector<double> d(n_, 0.0);
    for (std::int64_t r = 0; r < n_; ++r)
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            if (col_idx_[k] == r) d[r] = val_[k];
    return d;
}

bool CsrMatrix::pattern_symmetric() const {
    for (std::int64_t r = 0; r < n_; ++r) {
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const std::int32_t c = col_idx_[k];
            const auto lo = col_idx_.begin() + row_ptr_[c];
            const auto hi = col_idx_.begin() + row_ptr_[c + 1];
            if (!std::binary_search(lo, hi, static_cast<std::int32_t>(r))) return false;
        }
    }
    return true;
}

bool CsrMatrix::value_symmetric(double tol) const {
    for (std::int64_t r = 0; r < n_; ++r) {
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const std::int32_t c = col_idx_[k];
            const auto lo = col_idx_.begin() + row_ptr_[c];
            const auto hi = col_idx_.begin() + row_ptr_[c + 1];
            const auto it = std::lower_bound(lo, hi, static_cast<std::int32_t>(r));
            if (it == hi || *it != r) return false;
            const double vt = val_[it - col_idx_.begin()];
            if (std::abs(vt - val_[k]) > tol * (1.0 + std::abs(val_[k]))) return false;
        }
    }
    return true;
}

void SparseSystem::validate() const {
    const std::int64_t n = matrix.rows();
    if (static_cast<std::int64_t>(rhs.size()) != n)
        throw std::invalid_argument("rhs size does not match matrix dimension");
    const auto d = matrix.diagonal();
    for (std::int64_t i = 0; i < n; ++i)
        if (d[i] == 0.0) throw std::invalid_argument("zero diagonal entry at row " + std::to_string(i));
    if (!matrix.pattern_symmetric())
        throw std::invalid_argument("matrix pattern is not symmetric");
}

Ic0Factor::Ic0Factor(const CsrMatrix& a) {
    n_ = a.rows();
    const auto& arp = a.row_ptr();
    const auto& aci = a.col_idx();
    const auto& av = a.values();

    // Copy the strict lower triangle pattern; diagonal kept separately.
    row_ptr_.assign(n_ + 1, 0);
    for (std::int64_t r = 0; r < n_; ++r) {
        std::int64_t c = 0;
        for (std::int64_t k = arp[r]; k < arp[r + 1]; ++k)
            if (aci[k] < r) ++c;
        row_ptr_[r + 1] = row_ptr_[r] + c;
    }
    col_idx_.resize(row_ptr_[n_]);
    val_.resize(row_ptr_[n_]);
    inv_diag_.assign(n_, 0.0);
    std::vector<double> diag(n_, 0.0);
    for (std::int64_t r = 0; r < n_; ++r) {
        std::int64_t pos = row_ptr_[r];
        for (std::int64_t k = arp[r]; k < arp[r + 1]; ++k) {
            if (aci[k] < r) {
                col_idx_[pos] = aci[k];
                val_[pos] = av[k];
                ++pos;
            } else if (aci[k] == r) {
                diag[r] = av[k];
            }
        }
    }

    // Standard IC(0): for each row, update with previously factored rows
    // sharing the sparsity pattern.
    std::vector<double> dense_col(n_, 0.0);  // scratch for current row values by column
    for (std::int64_t r = 0; r < n_; ++r) {
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            dense_col[col_idx_[k]] = val_[k];
        double d = diag[r];
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const std::int32_t c = col_idx_[k];
            double s = dense_col[c];
            // subtract sum_{j<c} L_rj * L_cj
            std::int64_t pr = row_ptr_[r], pc = row_ptr_[c];
            while (pr < row_ptr_[r + 1] && pc < row_ptr_[c + 1]) {
                if (col_idx_[pr] == col_idx_[pc]) {
                    if (col_idx_[pr] >= c) break;
                    s -= val_[pr] * val_[pc];
                    ++pr;
                    ++pc;
                } else if (col_idx_[pr] < col_idx_[pc]) {
                    ++pr;
                } else {
                    ++pc;
                }
            }
            const double lrc = s * inv_diag_[c];
            val_[k] = lrc;
            d -= lrc * lrc;
        }
        for (std::int64_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            dense_col[col_idx_[k]] = 0.0;
        if (d <= 0.0)
            throw std::runtime_error("IC(0) breakdown: matrix not positive definite");
        const double lrr = std::sqrt(d);
        inv_diag_[r] = 1.0 / lrr;
    }
}

void Ic0Factor::solve(const std::vector<double>& r, std::vector<double>& z) const {
    z.resize(r.size());
    // forward solve L y = r
    for (std::int64_t i = 0; i < n_; ++i) {
        double s = r[i];
        for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            s -= val_[k] * z[col_idx_[k]];
        z[i] = s * inv_diag_[i];
    }
    // backward solve L^T z = y, scattering column updates from finalized rows
    for (std::int64_t i = n_ - 1; i >= 0; --i) {
        z[i] *= inv_diag_[i];
        const double zi = z[i];
        for (std::int64_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            z[col_idx_[k]] -= val_[k] * zi;
    }
}

namespace {

/// Shared preconditioner application wrapper.
struct Preconditioner {
    Precond kind = Precond::none;
    std::vector<double> inv_diag;
    const Ic0Factor* ic = nullptr;

    void apply(const std::vector<double>& r, std::vector<double>& z) const {
        switch (kind) {
            case Precond::none:
                z = r;
                break;
            case Precond::jacobi: {
                z.resize(r.size());
                const std::int64_t n = static_cast<std::int64_t>(r.size());
                parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
                    for (std::int64_t i = lo; i < hi; ++i) z[i] = r[i] * inv_diag[i];
                });
                break;
            }
            case Precond::ic0:
                ic->solve(r, z);
                break;
        }
    }
};

Preconditioner make_precond(const CsrMatrix& a, Precond kind, const Ic0Factor*& owned) {
    Preconditioner p;
    p.kind = kind;
    if (kind == Precond::jacobi) {
        auto d = a.diagonal();
        p.inv_diag.resize(d.size());
        for (size_t i = 0; i < d.size(); ++i) {
            if (d[i] == 0.0) throw std::invalid_argument("jacobi preconditioner: zero diagonal");
            p.inv_diag[i] = 1.0 / d[i];
        }
    } else if (kind == Precond::ic0) {
        owned = new Ic0Factor(a);
        p.ic = owned;
    }
    return p;
}

}  // namespace

std::pair<std::vector<double>, SolveStats> cg_solve(const SparseSystem& system,
                                                    const SolverOptions& opts) {
    const CsrMatrix& a = system.matrix;
    const std::vector<double>& b = system.rhs;
    const std::int64_t n = a.rows();
    system.validate();
    const std::int64_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

    const Ic0Factor* owned = nullptr;
    Preconditioner prec = make_precond(a, opts.precond, owned);

    SolveStats stats;
    const double t0 = wall_seconds();
    std::vector<double> x = opts.initial_guess ? *opts.initial_guess
                                               : std::vector<double>(n, 0.0);
    std::vector<double> r(n), z(n), p(n), ap(n);
    a.apply(x, r);
    for (std::int64_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    const double bnorm = std::max(norm2(b), 1e-300);
    double rnorm = norm2(r);
    if (rnorm / bnorm <= opts.tol) {
        stats.converged = true;
        stats.residual = rnorm / bnorm;
        stats.seconds = wall_seconds() - t0;
        delete owned;
        return {std::move(x), stats};
    }
    prec.apply(r, z);
    p = z;
    double rz = det_dot(r.data(), z.data(), n);
    for (std::int64_t it = 1; it <= max_iter; ++it) {
        a.apply(p, ap);
        const double pap = det_dot(p.data(), ap.data(), n);
        if (pap <= 0.0) break;  // not SPD (or breakdown)
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        rnorm = norm2(r);
        stats.iterations = static_cast<int>(it);
        if (rnorm / bnorm <= opts.tol) {
            stats.converged = true;
            break;
        }
        prec.apply(r, z);
        const double rz_new = det_dot(r.data(), z.data(), n);
        const double beta = rz_new / rz;
        rz = rz_new;
        parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
            for (std::int64_t i = lo; i < hi; ++i) p[i] = z[i] + beta * p[i];
        });
    }
    stats.residual = rnorm / bnorm;
    stats.seconds = wall_seconds() - t0;
    delete owned;
    return {std::move(x), stats};
}

std::pair<std::vector<double>, SolveStats> bicgstab_solve(const SparseSystem& system,
                                                          const SolverOptions& opts) {
    const CsrMatrix& a = system.matrix;
    const std::vector<double>& b = system.rhs;
    const std::int64_t n = a.rows();
    system.validate();
    const std::int64_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

    const Ic0Factor* owned = nullptr;
    Preconditioner prec = make_precond(a, opts.precond == Precond::ic0 ? Precond::jacobi
                                                                       : opts.precond,
                                       owned);

    SolveStats stats;
    const double t0 = wall_seconds();
    std::vector<double> x = opts.initial_guess ? *opts.initial_guess
                                               : std::vector<double>(n, 0.0);
    std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), phat(n), shat(n);
    a.apply(x, r);
    for (std::int64_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    r0 = r;
    const double bnorm = std::max(norm2(b), 1e-300);
    double rnorm = norm2(r);
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (std::int64_t it = 1; it <= max_iter && rnorm / bnorm > opts.tol; ++it) {
        const double rho_new = det_dot(r0.data(), r.data(), n);
        if (rho_new == 0.0) break;  // breakdown
        if (it == 1) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            parallel_for(n, [&](std::int64_t lo, std::int64_t hi) {
                for (std::int64_t i = lo; i < hi; ++i)
                    p[i] = r[i] + beta * (p[i] - omega * v[i]);
            });
        }
        rho = rho_new;
        prec.apply(p, phat);
        a.apply(phat, v);
        const double r0v = det_dot(r0.data(), v.data(), n);
        if (r0v == 0.0) break;
        alpha = rho / r0v;
        s = r;
        axpy(-alpha, v, s);
        if (norm2(s) / bnorm <= opts.tol) {
            axpy(alpha, phat, x);
            rnorm = norm2(s);
            stats.iterations = static_cast<int>(it);
            stats.converged = true;
            break;
        }
        prec.apply(s, shat);
        a.apply(shat, t);
        const double tt = det_dot(t.data(), t.data(), n);
        if (tt == 0.0) break;
        omega = det_dot(t.data(), s.data(), n) / tt;
        axpy(alpha, phat, x);
        axpy(omega, shat, x);
        r = s;
        axpy(-omega, t, r);
        rnorm = norm2(r);
        stats.iterations = static_cast<int>(it);
        if (rnorm / bnorm <= opts.tol) {
            stats.converged = true;
            break;
        }
        if (omega == 0.0) break;
    }
    stats.residual = rnorm / bnorm;
    stats.converged = stats.converged || (rnorm / bnorm <= opts.tol);
    stats.seconds = wall_seconds() - t0;
    delete owned;
    return {std::move(x), stats};
}

std::pair<std::vector<double>, SolveStats> cg_solve_operator(
    std::int64_t n,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply_a,
    const std::vector<double>& rhs, double tol, std::int64_t max_iter,
    const std::vector<double>* diag, const std::vector<double>* initial_guess) {
    if (max_iter <= 0) max_iter = 10 * n;
    std::vector<double> inv_diag;
    if (diag) {
        inv_diag.resize(diag->size());
        for (size_t i = 0; i < diag->size(); ++i) inv_diag[i] = 1.0 / (*diag)[i];
    }
    SolveStats stats;
    const double t0 = wall_seconds();
    std::vector<double> x = initial_guess ? *initial_guess : std::vector<double>(n, 0.0);
    std::vector<double> r(n), z(n), p(n), ap(n);
    apply_a(x, r);
    for (std::int64_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
    const double bnorm = std::max(norm2(rhs), 1e-300);
    double rnorm = norm2(r);
    auto precond = [&](const std::vector<double>& rr, std::vector<double>& zz) {
        if (inv_diag.empty()) {
            zz = rr;
        } else {
            zz.resize(rr.size());
            for (size_t i = 0; i < rr.size(); ++i) zz[i] = rr[i] * inv_diag[i];
        }
    };
    if (rnorm / bnorm > tol) {
        precond(r, z);
        p = z;
        double rz = det_dot(r.data(), z.data(), n);
        for (std::int64_t it = 1; it <= max_iter; ++it) {
            apply_a(p, ap);
            const double pap = det_dot(p.data(), ap.data(), n);
            if (pap <= 0.0) break;
            const double alpha = rz / pap;
            axpy(alpha, p, x);
            axpy(-alpha, ap, r);
            rnorm = norm2(r);
            stats.iterations = static_cast<int>(it);
            if (rnorm / bnorm <= tol) break;
            precond(r, z);
            const double rz_new = det_dot(r.data(), z.data(), n);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (std::int64_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
    }
    stats.residual = rnorm / bnorm;
    stats.converged = stats.residual <= tol;
    stats.seconds = wall_seconds() - t0;
    return {std::move(x), stats};
}

std::vector<double> implicit_euler_step(
    const std::vector<double>& mass,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& stiffness_apply,
    const std::vector<double>& state, double dt, double tol,
    const std::vector<double>& source) {
    if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
    const std::int64_t n = static_cast<std::int64_t>(state.size());
    std::vector<double> rhs(n);
    for (std::int64_t i = 0; i < n; ++i)
        rhs[i] = mass[i] * state[i] + (source.empty() ? 0.0 : dt * source[i]);
    auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
        stiffness_apply(x, y);
        for (std::int64_t i = 0; i < n; ++i) y[i] = mass[i] * x[i] + dt * y[i];
    };
    std::vector<double> diag_guess(n);
    {
        // Probe the operator diagonal cheaply is not possible in general;
        // use the mass as a preconditioner surrogate.
        for (std::int64_t i = 0; i < n; ++i) diag_guess[i] = mass[i];
    }
    auto [w, stats] = cg_solve_operator(n, apply, rhs, tol, 10 * n, &diag_guess, &state);
    if (!stats.converged)
        throw std::runtime_error("implicit Euler step: linear solver did not converge");
    return w;
}

}  // namespace homog
