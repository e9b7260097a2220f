#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/grid.hpp"

namespace homog {

enum class Phase : std::uint8_t { high = 0, low = 1 };

/// Inclusion radius as a function of the macroscopic position, selected by
/// name so configs stay text-only. Evaluation is a pure function of x.
struct RadiusSpec {
    enum class Kind { constant, linear, bump };
    Kind kind = Kind::constant;
    double r0 = 0.25;
    double a = 0.0;      // linear slope (in x1) / bump amplitude
    double sigma = 0.2;  // bump width
    Vec2 center{0.5, 0.5};

    static RadiusSpec constant(double r) { return {Kind::constant, r, 0.0, 0.2, {0.5, 0.5}}; }
    static RadiusSpec linear(double r, double slope) {
        return {Kind::linear, r, slope, 0.2, {0.5, 0.5}};
    }
    static RadiusSpec bump(double r, double amp, double sigma, Vec2 c = {0.5, 0.5}) {
        return {Kind::bump, r, amp, sigma, c};
    }

    double operator()(const Vec2& x) const;
    /// Analytic gradient of r(x).
    Vec2 gradient(const Vec2& x) const;
    std::string name() const;
};

/// Level-set description of the two-phase medium, S(x,y) = |y| - r(x) on
/// the unit cell. Inclusions are discs that never touch the cell frame.
struct LevelSetSpec {
    RadiusSpec radius;
    double r_min = 0.0;
    double r_max = 0.0;
    Rect omega;  // default unit square

    /// Validates 0 < r_min <= r(x) <= r_max < 1/2 on a dense sample of omega.
    /// r identically zero (no inclusions) is allowed as a degenerate case.
    void validate() const;
};

/// Unit-cell coordinate of x at scale eps: y = x/eps - round(x/eps), in
/// U = [-1/2, 1/2]^2, together with the owning lattice index j.
struct CellCoord {
    int jx = 0, jy = 0;
    Vec2 y;
};

CellCoord cell_coord(const Vec2& x, double epsilon);

/// First terms of the interface-normal expansion at a point of the
/// interface: nu0 is the unit cell-scale normal, nu1 the tangential
/// first-order correction, tau0 the unit tangent.
struct NormalExpansion {
    Vec2 nu0;
    Vec2 nu1;
    Vec2 tau0;
};

struct InterfaceFace {
    // Face between fine cells (i,j) and either (i+1,j) [vertical] or
    // (i,j+1) [horizontal]; the low cell is recorded together with the
    // lattice index of the inclusion that owns it.
    int i = 0, j = 0;
    bool vertical = false;
    int jx = 0, jy = 0;
};

/// The eps-resolved two-phase medium on a fine grid.
class MediumGeometry {
  public:
    MediumGeometry(const LevelSetSpec& spec, double epsilon, double h);

    const LevelSetSpec& spec() const { return spec_; }
    double epsilon() const { return eps_; }
    const Grid2& grid() const { return grid_; }

    Phase phase(int i, int j) const { return static_cast<Phase>(mask_[grid_.index(i, j)]); }
    bool is_low(int i, int j) const { return phase(i, j) == Phase::low; }
    const std::vector<std::uint8_t>& phase_mask() const { return mask_; }

    const std::vector<std::pair<int, int>>& cell_index_set() const { return lattice_; }
    bool lattice_retained(int jx, int jy) const;

    const std::vector<InterfaceFace>& interface_faces() const { return faces_; }
    /// Fine cells of the boundary ring Omega_1^eps (no inclusions there).
    const std::vector<std::int64_t>& boundary_ring() const { return ring_; }

    std::int64_t high_count() const { return high_count_; }
    std::int64_t low_count() const { return low_count_; }

    /// Level set S(x, x/eps) = |y| - r(x).
    double level_set(const Vec2& x) const;

    /// Interface length measured by marching squares on the node-sampled
    /// level set (second-order accurate for smooth interfaces).
    double interface_length() const;

    /// Sum over retained cells of 2*pi*eps*r(eps j).
    double analytic_interface_length() const;

    /// The nearest retained-lattice inclusion center, if any.
    bool nearest_inclusion(const Vec2& x, Vec2& center, double& radius) const;

  private:
    LevelSetSpec spec_;
    double eps_ = 0.0;
    Grid2 grid_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::pair<int, int>> lattice_;
    std::vector<std::uint8_t> lattice_mask_;  // indexed by (jx-j0) + nJx*(jy-j0)
    int j0x_ = 0, j0y_ = 0, njx_ = 0, njy_ = 0;
    std::vector<InterfaceFace> faces_;
    std::vector<std::int64_t> ring_;
    std::int64_t high_count_ = 0, low_count_ = 0;
};

MediumGeometry build_medium(const LevelSetSpec& spec, double epsilon, double h);

/// Phase of an arbitrary point of Omega. Throws if x is outside Omega.
Phase classify_point(const MediumGeometry& geom, const Vec2& x);

/// Smooth cutoff vanishing on the boundary ring, equal to one past the
/// first row of inclusions. Stored per grid node with analytic gradient
/// and Laplacian.
struct CutoffField {
    Grid2 grid;
    std::vector<double> values;
    std::vector<double> grad_x, grad_y;
    std::vector<double> laplacian;

    double l2_one_minus_chi() const;
    double l2_gradient() const;
    double l2_laplacian() const;
    double max_gradient() const;
    double max_laplacian() const;
};

CutoffField build_cutoff(const MediumGeometry& geom);

/// Normal expansion at an interface point (|S| below h/(2 eps)); throws on
/// degenerate level sets (y = 0) or points far from the interface.
NormalExpansion normal_expansion(const LevelSetSpec& spec, const Vec2& x, double epsilon,
                                 double interface_tol);

/// Writes "x,y,phase,chi" per grid node.
void write_geometry_csv(const MediumGeometry& geom, const CutoffField& chi,
                        const std::string& path, const std::string& header_comment);

}  // namespace homog
