#pragma once

#include <vector>
#include <vector>

#include "homog/geometry.hpp"
#include "homog/numerics.hpp"
#include "homog/problem_data.hpp"

namespace homog {

struct MicroConfig {
    double d_h = 1.0;
    double d_l = 1.0;  // the equation carries eps^2 * d_l in the low phase
    double dt = 0.0;
    double horizon = 0.25;  // T
    VelocitySpec velocity;
    BoundaryData boundary = BoundaryData::constant(1.0);
    ScalarField initial_u = ScalarField::constant(1.0);
    ScalarField initial_v = ScalarField::constant(1.0);
    int sample_every = 10;  // snapshot cadence in steps (plus t=T)
    double solver_tol = 1e-12;

    void validate() const;
};

/// One time level of the eps-resolved field: u_eps on high cells, v_eps on
/// low cells, stored as a single continuous grid field.
struct MicroState {
    double time = 0.0;
    std::vector<double> field;
    const MediumGeometry* geom = nullptr;
};

/// Symmetric 5-point implicit-Euler system on the structured grid with a
/// modified-incomplete-Cholesky preconditioner; this is the hot path of the
/// ladder runs, so coefficients are stored as shifted stencil arrays.
class StencilSolver {
  public:
    StencilSolver() = default;
    /// west/south couplings (zero across blocked directions and on the
    /// domain edge) and the diagonal; the matrix is B = diag + shifts.
    StencilSolver(int nx, int ny, std::vector<double> west, std::vector<double> south,
                  std::vector<double> diag);

    void apply(const std::vector<double>& x, std::vector<double>& y) const;
    /// Preconditioned CG; returns iterations, throws on non-convergence.
    int solve(std::vector<double>& x, const std::vector<double>& rhs, double tol,
              std::int64_t max_iter) const;

  private:
    int nx_ = 0, ny_ = 0;
    std::int64_t n_ = 0;
    std::vector<double> aw_, as_, ad_;
    std::vector<double> mic_d_;  // MIC(0) pivots

    void precondition(const std::vector<double>& r, std::vector<double>& z) const;
};

/// Assembled spatial operator A (per unit volume) with implicit-Euler
/// system I + dt A prepared once; Dirichlet data enters via a time-dependent
/// right-hand side.
class MicroOperator {
  public:
    MicroOperator(const MediumGeometry& geom, const MicroConfig& cfg);

    const CsrMatrix& spatial_matrix() const { return a_; }
    const CsrMatrix& stepping_matrix() const { return b_; }
    const MediumGeometry& geometry() const { return *geom_; }
    const MicroConfig& config() const { return cfg_; }

    /// Max |discrete divergence| of the face velocity over high cells.
    double max_velocity_divergence() const;

    /// rhs of (I + dt A) u_new = u_old + dt b(t_new)
    std::vector<double> step_rhs(const std::vector<double>& u_old, double t_new) const;

    /// Boundary-coupling diagonal entries and the matching u_b weights are
    /// kept for rhs assembly.
    std::vector<double> boundary_values(double t) const;

    bool symmetric() const { return !cfg_.velocity.active(); }

  private:
    const MediumGeometry* geom_;
    MicroConfig cfg_;
    CsrMatrix a_;  // spatial operator
    CsrMatrix b_;  // I + dt A
    StencilSolver stencil_;  // fast path when the operator is symmetric
    // boundary face bookkeeping: cell index, coupling coefficient, face center
    struct BoundaryFace {
        std::int64_t cell;
        double coeff;
        Vec2 center;
    };
    std::vector<BoundaryFace> bfaces_;
    std::vector<double> qx_, qy_;  // face-normal velocities

    friend MicroState step_micro(const MicroState& state, const MicroOperator& op,
                                 const std::vector<double>* guess);
};

MicroOperator assemble_micro(const MediumGeometry& geom, const MicroConfig& cfg);

/// One implicit Euler step; the state time advances by cfg.dt. An optional
/// initial guess (e.g. an extrapolation of previous states) shortens the
/// solve without changing the result.
MicroState step_micro(const MicroState& state, const MicroOperator& op,
                      const std::vector<double>* guess = nullptr);

struct MicroTrajectory {
    std::vector<MicroState> snapshots;  // at steps {0, k, 2k, ..., nsteps}
    double dt = 0.0;
    int steps = 0;
    double hull_lo = 0.0, hull_hi = 0.0;  // running data hull
    int hull_violations = 0;              // counted with round-off slack
};

MicroTrajectory run_micro(const MediumGeometry& geom, const MicroConfig& cfg);

/// Writes "x,y,value,phase" for one state.
void write_micro_csv(const MicroState& state, const std::string& path,
                     const std::string& header_comment);

}  // namespace homog
