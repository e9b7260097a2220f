#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace homog {

/// Row-compressed sparse matrix. Rows are kept sorted by column.
class CsrMatrix {
  public:
    CsrMatrix() = default;

    /// Assemble from triplets; duplicate entries are summed.
    static CsrMatrix from_triplets(std::int64_t n,
                                   std::vector<std::int64_t> rows,
                                   std::vector<std::int64_t> cols,
                                   std::vector<double> vals);

    std::int64_t rows() const { return n_; }
    void apply(const std::vector<double>& x, std::vector<double>& y) const;

    std::vector<double> diagonal() const;
    bool pattern_symmetric() const;
    bool value_symmetric(double tol) const;

    const std::vector<std::int64_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::int32_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return val_; }
    std::vector<double>& values() { return val_; }

    /// y = alpha*A*x + beta*y
    void apply_scaled(double alpha, const std::vector<double>& x, double beta,
                      std::vector<double>& y) const;

  private:
    std::int64_t n_ = 0;
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> col_idx_;
    std::vector<double> val_;
};

/// Linear system A x = b.
struct SparseSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;

    /// Throws if a diagonal entry is missing/zero or the pattern is not
    /// structurally symmetric.
    void validate() const;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;  // final relative residual |Ax-b|/|b|
    double seconds = 0.0;
    bool converged = false;
};

enum class Precond { none, jacobi, ic0 };

/// Incomplete Cholesky factorization with zero fill-in, for SPD M-matrices.
class Ic0Factor {
  public:
    explicit Ic0Factor(const CsrMatrix& a);
    /// z = (L L^T)^{-1} r
    void solve(const std::vector<double>& r, std::vector<double>& z) const;

  private:
    std::int64_t n_ = 0;
    std::vector<std::int64_t> row_ptr_;
    std::vector<std::int32_t> col_idx_;
    std::vector<double> val_;       // strictly lower triangle of L, row-wise
    std::vector<double> inv_diag_;  // 1/L_ii
};

struct SolverOptions {
    double tol = 1e-10;            // relative residual target
    std::int64_t max_iter = 0;     // 0 -> 10*n
    Precond precond = Precond::jacobi;
    const std::vector<double>* initial_guess = nullptr;
};

/// Preconditioned conjugate gradient for SPD systems.
std::pair<std::vector<double>, SolveStats> cg_solve(const SparseSystem& system,
                                                    const SolverOptions& opts = {});

/// Preconditioned BiCGStab for nonsymmetric systems.
std::pair<std::vector<double>, SolveStats> bicgstab_solve(const SparseSystem& system,
                                                          const SolverOptions& opts = {});

/// Matrix-free CG: apply_a computes y = A x. Jacobi preconditioning is used
/// when a diagonal is supplied.
std::pair<std::vector<double>, SolveStats> cg_solve_operator(
    std::int64_t n,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& apply_a,
    const std::vector<double>& rhs, double tol, std::int64_t max_iter,
    const std::vector<double>* diag = nullptr,
    const std::vector<double>* initial_guess = nullptr);

/// One implicit Euler step: solves (M + dt*A) w = M*state + dt*source with a
/// lumped mass vector M. `source` may be empty (treated as zero).
std::vector<double> implicit_euler_step(
    const std::vector<double>& mass,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& stiffness_apply,
    const std::vector<double>& state, double dt, double tol,
    const std::vector<double>& source = {});

}  // namespace homog
