#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "homog/grid.hpp"

namespace homog {

using Tensor2 = std::array<std::array<double, 2>, 2>;

/// Solution of the periodic cell problem on the perforated unit cell
/// Y = U \ B(r), discretized by a masked finite-volume Laplacian on an
/// n x n grid. M_j is normalized to zero mean over Y.
class CellSolution {
  public:
    CellSolution() = default;
    CellSolution(double r, int n, double tol, std::int64_t max_iter);

    double radius() const { return r_; }
    int resolution() const { return n_; }
    double spacing() const { return h_; }

    bool solid(int i, int j) const { return solid_[idx(i, j)] != 0; }
    std::int64_t fluid_count() const { return fluid_count_; }

    /// M_j value at cell (i,j); zero on solid cells.
    double value(int dir, int i, int j) const { return m_[dir][idx(i, j)]; }
    const std::vector<double>& field(int dir) const { return m_[dir]; }

    /// Periodic bilinear interpolation of M_dir at y in U. Solid corners
    /// are dropped from the stencil (weights renormalized); returns 0 deep
    /// inside B.
    double value_at(int dir, const Vec2& y) const;

    /// Cell-centered gradient d/dy_i of M_dir from open-face differences.
    Vec2 gradient(int dir, int i, int j) const;

    /// Periodic bilinear interpolation of the cell-centered gradient field,
    /// solid corners dropped from the stencil; zero deep inside B.
    Vec2 gradient_at(int dir, const Vec2& y) const;

    /// Mean of M_dir over fluid cells (should be ~0 after normalization).
    double mean(int dir) const;

    /// Max flux-balance defect |div_h(1_Y(grad M + e_dir))| over fluid cells.
    double fv_residual(int dir) const;

    /// Max mismatch of the periodic interpolant across opposite cell edges.
    double periodicity_residual() const;

    /// Midpoint-quadrature area of the solid mask.
    double mask_area() const { return (n_ * std::int64_t(n_) - fluid_count_) * h_ * h_; }

    /// Quadrature of (I + grad_y M) over Y via face-dual midpoints; the
    /// effective tensor is D_h times this.
    Tensor2 averaged_gradient_tensor() const;

    /// Discrete energy of a periodic field w for direction dir:
    /// sum over open faces of h^2 (D_f w + e_dir . n_f)^2.
    double energy(int dir, const std::vector<double>& w) const;

    bool face_open_x(int i, int j) const;  // face between (i-1,j) and (i,j), periodic
    bool face_open_y(int i, int j) const;

    std::int64_t idx(int i, int j) const {
        return std::int64_t((j + n_) % n_) * n_ + ((i + n_) % n_);
    }
    Vec2 center(int i, int j) const { return {-0.5 + (i + 0.5) * h_, -0.5 + (j + 0.5) * h_}; }

    int solver_iterations(int dir) const { return iters_[dir]; }

  private:
    double r_ = 0.0;
    int n_ = 0;
    double h_ = 0.0;
    std::vector<std::uint8_t> solid_;
    std::int64_t fluid_count_ = 0;
    std::array<std::vector<double>, 2> m_;
    std::array<int, 2> iters_{0, 0};
};

CellSolution solve_cell(double r, int n, double tol = 1e-12, std::int64_t max_iter = 0);

/// Effective diffusivity from a cell solution: D_h * int_Y (I + grad_y M).
Tensor2 effective_tensor(const CellSolution& sol, double d_h);

/// Porosity of the unit cell, theta = 1 - pi r^2.
double porosity(double r);

/// Monotone cubic (PCHIP) interpolant on sorted knots.
class Pchip {
  public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double derivative(double x) const;

  private:
    std::vector<double> x_, y_, d_;
};

/// Tabulated porosity and effective tensor over radius samples, with the
/// cell solutions retained for reconstruction lookups.
class EffectiveTable {
  public:
    EffectiveTable() = default;
    EffectiveTable(std::vector<double> radii, int n, double d_h, double tol = 1e-12);

    double d_h() const { return d_h_; }
    int resolution() const { return n_; }
    const std::vector<double>& radii() const { return radii_; }

    double theta(double r) const { return porosity(r); }
    Tensor2 tensor(double r) const;

    const CellSolution& solution(size_t k) const { return cells_[k]; }
    size_t size() const { return cells_.size(); }

    /// M_dir(r; y) by linear interpolation in r between bracketing knot
    /// solutions (exact at knots). Throws if r is outside the table range.
    double m_at(int dir, double r, const Vec2& y) const;

    void write_csv(const std::string& path, const std::string& header_comment) const;

  private:
    std::vector<double> radii_;
    int n_ = 0;
    double d_h_ = 1.0;
    std::vector<CellSolution> cells_;
    std::array<std::array<Pchip, 2>, 2> interp_;  // per tensor component
    void bracket(double r, size_t& k, double& t) const;
};

EffectiveTable build_table(const std::vector<double>& radii, int n, double d_h);

}  // namespace homog
