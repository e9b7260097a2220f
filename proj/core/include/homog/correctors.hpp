#pragma once

#include <optional>
#include <string>
#include <vector>

#include "homog/cell.hpp"
#include "homog/geometry.hpp"
#include "homog/microsim.hpp"
#include "homog/twoscale.hpp"

namespace homog {

/// Macroscopic reconstructions on the fine grid for one time level:
/// u0_eps on high cells, v0_eps on low cells, and the first-order corrected
/// field u1_eps = u0_eps + eps M(x, x/eps) . grad u0 on high cells.
struct Reconstruction {
    double time = 0.0;
    std::vector<double> u0_eps;
    std::vector<double> v0_eps;
    std::vector<double> u1_eps;
};

struct ReconstructionTrajectory {
    std::vector<Reconstruction> snapshots;
};

ReconstructionTrajectory reconstruct(const TwoScaleTrajectory& two_scale,
                                     const EffectiveTable& table, const MediumGeometry& geom);

/// Phase-restricted discrete norms used by the corrector study.
double l2_phase(const MediumGeometry& geom, const std::vector<double>& f, Phase phase);
double h1_semi_phase(const MediumGeometry& geom, const std::vector<double>& f, Phase phase);

/// One ladder row: the four corrector norms of the rate estimate, with the
/// H1 norms recorded in both max-in-time and L2-in-time variants.
struct LadderRow {
    double eps = 0.0;
    double n1 = 0.0;       // |u - u0_eps| in Linf(I, L2(high))
    double n2 = 0.0;       // |v - v0_eps| in Linf(I, L2(low))
    double n3_linf = 0.0;  // |u - u1_eps| in Linf(I, H1(high))
    double n3_l2 = 0.0;    // .. and L2(I, H1(high))
    double n4_linf = 0.0;  // eps |v - v0_eps| in Linf(I, H1(low))
    double n4_l2 = 0.0;
};

LadderRow corrector_norms(const MicroTrajectory& micro, const ReconstructionTrajectory& recon,
                          const MediumGeometry& geom);

struct FitResult {
    double order = 0.0;     // fitted exponent p
    double constant = 0.0;  // fitted prefactor c
};

/// Least squares of log(norm) = log(c) + p log(eps). Requires >= 3 rows
/// and positive norms.
FitResult rate_fit(const std::vector<std::pair<double, double>>& rows);

struct LadderConfig {
    std::vector<double> eps_list{1.0 / 8, 1.0 / 16, 1.0 / 32};
    RadiusSpec radius = RadiusSpec::constant(0.25);
    double r_min = 0.25, r_max = 0.25;
    double d_h = 1.0;
    double d_l = 1.0;
    int h_ratio = 32;  // h = eps / h_ratio, dt = h
    double horizon = 0.25;
    double macro_h = 1.0 / 64.0;
    int radial_m = 24;
    int cell_resolution = 256;
    std::vector<double> table_radii;  // defaults to a bracket around the preset
    VelocitySpec velocity;
    BoundaryData boundary = BoundaryData::decay(1.0, 1.0);
    ScalarField initial_u = ScalarField::sine(1.0, 0.5);
    ScalarField initial_v = ScalarField::sine(1.0, 0.5);
    int sample_every = 10;
    bool subtract_floor = true;
    Rect omega;
};

struct RateReport {
    std::vector<LadderRow> rows;        // sorted by eps descending
    std::vector<LadderRow> floor_rows;  // r = 0 ladder (scheme-error floor)
    FitResult fit_n1, fit_n2, fit_n3_l2, fit_n3_linf, fit_n4_l2;
    FitResult fit_n3_l2_adjusted;  // after floor subtraction
    double wall_seconds = 0.0;
};

RateReport run_ladder(const LadderConfig& cfg);

void write_rates_csv(const RateReport& report, const std::string& path,
                     const std::string& header_comment);

}  // namespace homog
