#pragma once

#include <memory>
#include <vector>

#include "homog/cell.hpp"
#include "homog/geometry.hpp"
#include "homog/numerics.hpp"
#include "homog/problem_data.hpp"

namespace homog {

struct TwoScaleConfig {
    double macro_h = 1.0 / 32.0;  // H
    int radial_m = 16;            // radial cells on [0, r(x)]
    double d_l = 1.0;
    double dt = 0.0;
    double horizon = 0.25;
    RadiusSpec radius;
    const EffectiveTable* table = nullptr;
    VelocitySpec velocity;  // macroscopic q-bar (stream preset, div-free)
    BoundaryData boundary = BoundaryData::constant(1.0);
    ScalarField initial_u = ScalarField::constant(1.0);
    ScalarField initial_v = ScalarField::constant(1.0);
    Rect omega;
    int sample_every = 10;
    double solver_tol = 1e-12;

    void validate() const;
};

/// Macro field u0 on the coarse grid plus one radial micro profile per
/// macro node; the profile's boundary value is u0 by construction.
struct TwoScaleState {
    double time = 0.0;
    std::vector<double> u0;       // macro cells
    std::vector<double> v0;       // macro cells x m radial cells
    const struct TwoScaleOperator* op = nullptr;

    /// v0 at macro node (i,j), radial cell k.
    double radial(int i, int j, int k) const;
    /// Outermost stored radial value (== u0 after a step by trace coupling).
    double trace(int i, int j) const;
};

/// Static data of the coupled step: per-node radial factorizations and the
/// condensed macro matrix (radial unknowns eliminated by their discrete
/// Dirichlet-to-Neumann response).
struct TwoScaleOperator {
    TwoScaleOperator(const TwoScaleConfig& cfg);

    TwoScaleConfig cfg;
    Grid2 grid;       // macro grid
    int m = 0;        // radial cells
    std::vector<double> radius_at;  // r at macro centers
    std::vector<double> theta_at;

    // radial tridiagonal factorization per macro cell (Thomas):
    // sub/diag/sup plus the precomputed unit-boundary response
    std::vector<double> tri_sub, tri_diag, tri_sup;
    std::vector<double> hom_response;  // v_hom per cell (m entries each)
    std::vector<double> alpha;         // condensed exchange coefficient
    std::vector<double> mass_coef;     // radial CV areas a_k / dt, per cell
    double c_rb = 0.0;                 // boundary coupling 4 pi m D_l

    CsrMatrix macro_matrix;  // condensed implicit-Euler system
    std::unique_ptr<Ic0Factor> ic;
    struct BoundaryFace {
        std::int64_t cell;
        double coeff;
        Vec2 center;
    };
    std::vector<BoundaryFace> bfaces;

    /// Total mass int(theta u0 + int_B v0) of a state.
    double total_mass(const TwoScaleState& s) const;
    /// Discrete boundary flux of D grad u0 (+ advective, zero for presets)
    /// through the outer boundary at the state's time.
    double boundary_flux(const TwoScaleState& s) const;
};

TwoScaleState initial_state(const TwoScaleOperator& op);

TwoScaleState step_twoscale(const TwoScaleState& state, const TwoScaleOperator& op);

/// Point sample of v0(x, y) for |y| <= r(x): bilinear in x across macro
/// nodes, linear in |y| along the radial profile.
double sample_v0(const TwoScaleState& state, const Vec2& x, const Vec2& y);

/// Macro field sample u0(x): bilinear on cell centers with boundary values
/// pinned to u_b.
double sample_u0(const TwoScaleState& state, const Vec2& x);

/// Central-difference macro gradient of u0 at cell centers (ghost cells
/// from the Dirichlet face values), bilinear at arbitrary points.
Vec2 sample_grad_u0(const TwoScaleState& state, const Vec2& x);

struct TwoScaleTrajectory {
    std::vector<TwoScaleState> snapshots;
    double dt = 0.0;
    int steps = 0;
    double max_mass_audit = 0.0;  // max per-step conservation discrepancy (relative)
};

TwoScaleTrajectory run_twoscale(const TwoScaleOperator& op);

void write_twoscale_csv(const TwoScaleState& state, const std::string& path_u,
                        const std::string& path_v, const std::string& header_comment);

}  // namespace homog
