#include "homog/correctors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace homog {

namespace {

/// Macro node-grid interpolant frozen from one two-scale snapshot: values
/// and central-difference gradients at the (NH+1)^2 macro nodes, Dirichlet
/// data pinned on the boundary nodes.
class MacroInterp {
  public:
    MacroInterp(const TwoScaleState& s) : op_(*s.op), grid_(op_.grid) {
        const int nx = grid_.nx, ny = grid_.ny;
        val_.resize(static_cast<size_t>(nx + 1) * (ny + 1));
        gx_.resize(val_.size());
        gy_.resize(val_.size());
        for (int j = 0; j <= ny; ++j) {
            for (int i = 0; i <= nx; ++i) {
                // node value: mean of the four surrounding (ghosted) cells;
                // on the wall this reduces to the boundary datum
                const double v = 0.25 * (cell(s, i - 1, j - 1) + cell(s, i, j - 1) +
                                         cell(s, i - 1, j) + cell(s, i, j));
                const double dx = 0.5 *
                                  ((cell(s, i, j - 1) + cell(s, i, j)) -
                                   (cell(s, i - 1, j - 1) + cell(s, i - 1, j))) /
                                  grid_.h;
                const double dy = 0.5 *
                                  ((cell(s, i - 1, j) + cell(s, i, j)) -
                                   (cell(s, i - 1, j - 1) + cell(s, i, j - 1))) /
                                  grid_.h;
                val_[node(i, j)] = v;
                gx_[node(i, j)] = dx;
                gy_[node(i, j)] = dy;
            }
        }
    }

    double value(const Vec2& x) const { return bilinear(val_, x); }
    Vec2 gradient(const Vec2& x) const { return {bilinear(gx_, x), bilinear(gy_, x)}; }

  private:
    const TwoScaleOperator& op_;
    const Grid2& grid_;
    std::vector<double> val_, gx_, gy_;

    size_t node(int i, int j) const { return static_cast<size_t>(j) * (grid_.nx + 1) + i; }

    double cell(const TwoScaleState& s, int i, int j) const {
        const Grid2& g = grid_;
        const bool in_x = i >= 0 && i < g.nx;
        const bool in_y = j >= 0 && j < g.ny;
        if (in_x && in_y) return s.u0[g.index(i, j)];
        auto clampx = [&](double v) { return std::min(std::max(v, g.box.ax), g.box.bx); };
        auto clampy = [&](double v) { return std::min(std::max(v, g.box.ay), g.box.by); };
        const int ic = std::min(std::max(i, 0), g.nx - 1);
        const int jc = std::min(std::max(j, 0), g.ny - 1);
        const double inner = s.u0[g.index(ic, jc)];
        // reflect through the wall value (corner ghosts average both walls)
        double wall_sum = 0.0;
        int walls = 0;
        if (!in_x) {
            const double wx = i < 0 ? g.box.ax : g.box.bx;
            wall_sum += op_.cfg.boundary({wx, clampy(g.box.ay + (j + 0.5) * g.h)}, s.time);
            ++walls;
        }
        if (!in_y) {
            const double wy = j < 0 ? g.box.ay : g.box.by;
            wall_sum += op_.cfg.boundary({clampx(g.box.ax + (i + 0.5) * g.h), wy}, s.time);
            ++walls;
        }
        return 2.0 * wall_sum / walls - inner;
    }

    double bilinear(const std::vector<double>& a, const Vec2& x) const {
        const double gx = (x.x - grid_.box.ax) / grid_.h;
        const double gy = (x.y - grid_.box.ay) / grid_.h;
        int i0 = static_cast<int>(std::floor(gx));
        int j0 = static_cast<int>(std::floor(gy));
        i0 = std::min(std::max(i0, 0), grid_.nx - 1);
        j0 = std::min(std::max(j0, 0), grid_.ny - 1);
        const double tx = gx - i0, ty = gy - j0;
        return (1 - tx) * (1 - ty) * a[node(i0, j0)] + tx * (1 - ty) * a[node(i0 + 1, j0)] +
               (1 - tx) * ty * a[node(i0, j0 + 1)] + tx * ty * a[node(i0 + 1, j0 + 1)];
    }
};

}  // namespace

ReconstructionTrajectory reconstruct(const TwoScaleTrajectory& two_scale,
                                     const EffectiveTable& table, const MediumGeometry& geom) {
    ReconstructionTrajectory out;
    out.snapshots.reserve(two_scale.snapshots.size());
    const Grid2& g = geom.grid();
    const double eps = geom.epsilon();
    const std::int64_t n = g.num_cells();

    for (const TwoScaleState& ts : two_scale.snapshots) {
        MacroInterp macro(ts);
        Reconstruction rec;
        rec.time = ts.time;
        rec.u0_eps.assign(n, 0.0);
        rec.v0_eps.assign(n, 0.0);
        rec.u1_eps.assign(n, 0.0);
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                const std::int64_t k = g.index(i, j);
                const Vec2 x = g.center(i, j);
                if (geom.is_low(i, j)) {
                    const CellCoord cc = cell_coord(x, eps);
                    const double rloc = geom.spec().radius(x);
                    Vec2 y = cc.y;
                    const double rho = y.norm();
                    if (rho > rloc && rho > 0.0) y = y * (rloc / rho);  // staircase guard
                    rec.v0_eps[k] = sample_v0(ts, x, y);
                } else {
                    const double u0 = macro.value(x);
                    const Vec2 du = macro.gradient(x);
                    const CellCoord cc = cell_coord(x, eps);
                    const double rloc = geom.spec().radius(x);
                    const double m1 = table.m_at(0, rloc, cc.y);
                    const double m2 = table.m_at(1, rloc, cc.y);
                    rec.u0_eps[k] = u0;
                    rec.u1_eps[k] = u0 + eps * (m1 * du.x + m2 * du.y);
                }
            }
        }
        out.snapshots.push_back(std::move(rec));
    }
    return out;
}

double l2_phase(const MediumGeometry& geom, const std::vector<double>& f, Phase phase) {
    const Grid2& g = geom.grid();
    const auto want = static_cast<std::uint8_t>(phase);
    const auto& mask = geom.phase_mask();
    double s = 0.0;
    for (std::int64_t k = 0; k < g.num_cells(); ++k)
        if (mask[k] == want) s += f[k] * f[k];
    return std::sqrt(s * g.h * g.h);
}

double h1_semi_phase(const MediumGeometry& geom, const std::vector<double>& f, Phase phase) {
    const Grid2& g = geom.grid();
    const auto want = static_cast<std::uint8_t>(phase);
    const auto& mask = geom.phase_mask();
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const std::int64_t k = g.index(i, j);
            if (mask[k] != want) continue;
            if (i + 1 < g.nx && mask[g.index(i + 1, j)] == want) {
                const double d = (f[g.index(i + 1, j)] - f[k]) / g.h;
                s += d * d;
            }
            if (j + 1 < g.ny && mask[g.index(i, j + 1)] == want) {
                const double d = (f[g.index(i, j + 1)] - f[k]) / g.h;
                s += d * d;
            }
        }
    }
    return std::sqrt(s * g.h * g.h);
}

LadderRow corrector_norms(const MicroTrajectory& micro, const ReconstructionTrajectory& recon,
                          const MediumGeometry& geom) {
    if (micro.snapshots.size() != recon.snapshots.size())
        throw std::invalid_argument("micro and reconstruction trajectories are misaligned");
    const std::int64_t n = geom.grid().num_cells();
    LadderRow row;
    row.eps = geom.epsilon();

    std::vector<double> time, h1u, h1v;
    std::vector<double> diff(n);
    for (size_t s = 0; s < micro.snapshots.size(); ++s) {
        const MicroState& ms = micro.snapshots[s];
        const Reconstruction& rc = recon.snapshots[s];
        if (std::abs(ms.time - rc.time) > 1e-9)
            throw std::invalid_argument("time grids of the trajectories do not match");

        for (std::int64_t k = 0; k < n; ++k) diff[k] = ms.field[k] - rc.u0_eps[k];
        row.n1 = std::max(row.n1, l2_phase(geom, diff, Phase::high));

        for (std::int64_t k = 0; k < n; ++k) diff[k] = ms.field[k] - rc.v0_eps[k];
        const double l2v = l2_phase(geom, diff, Phase::low);
        const double h1v_semi = h1_semi_phase(geom, diff, Phase::low);
        row.n2 = std::max(row.n2, l2v);
        h1v.push_back(row.eps * std::sqrt(l2v * l2v + h1v_semi * h1v_semi));

        for (std::int64_t k = 0; k < n; ++k) diff[k] = ms.field[k] - rc.u1_eps[k];
        const double l2c = l2_phase(geom, diff, Phase::high);
        const double h1c = h1_semi_phase(geom, diff, Phase::high);
        h1u.push_back(std::sqrt(l2c * l2c + h1c * h1c));

        time.push_back(ms.time);
    }
    auto linf = [](const std::vector<double>& v) {
        return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    };
    auto l2t = [&](const std::vector<double>& v) {
        if (time.size() < 2) return v.empty() ? 0.0 : v.front();
        double s = 0.0;
        for (size_t k = 0; k + 1 < v.size(); ++k)
            s += 0.5 * (v[k] * v[k] + v[k + 1] * v[k + 1]) * (time[k + 1] - time[k]);
        return std::sqrt(s);
    };
    row.n3_linf = linf(h1u);
    row.n3_l2 = l2t(h1u);
    row.n4_linf = linf(h1v);
    row.n4_l2 = l2t(h1v);
    return row;
}

FitResult rate_fit(const std::vector<std::pair<double, double>>& rows) {
    if (rows.size() < 3) throw std::invalid_argument("rate fit needs at least 3 rows");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [eps, norm] : rows) {
        if (norm <= 0.0 || eps <= 0.0)
            throw std::invalid_argument("rate fit requires positive eps and norms");
        const double lx = std::log(eps), ly = std::log(norm);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double m = static_cast<double>(rows.size());
    FitResult fit;
    fit.order = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.constant = std::exp((sy - fit.order * sx) / m);
    return fit;
}

namespace {

std::vector<LadderRow> run_rows(const LadderConfig& cfg, const RadiusSpec& radius, double r_min,
                                double r_max, const EffectiveTable& table) {
    std::vector<LadderRow> rows;
    for (double eps : cfg.eps_list) {
        const double h = eps / cfg.h_ratio;
        LevelSetSpec spec{radius, r_min, r_max, cfg.omega};
        MediumGeometry geom(spec, eps, h);

        MicroConfig mc;
        mc.d_h = cfg.d_h;
        mc.d_l = cfg.d_l;
        mc.dt = h;
        mc.horizon = cfg.horizon;
        mc.velocity = cfg.velocity;
        mc.boundary = cfg.boundary;
        mc.initial_u = cfg.initial_u;
        mc.initial_v = cfg.initial_v;
        mc.sample_every = cfg.sample_every;
        MicroTrajectory micro = run_micro(geom, mc);

        TwoScaleConfig tc;
        tc.macro_h = cfg.macro_h;
        tc.radial_m = cfg.radial_m;
        tc.d_l = cfg.d_l;
        tc.dt = h;
        tc.horizon = cfg.horizon;
        tc.radius = radius;
        tc.table = &table;
        tc.velocity = cfg.velocity;  // q-bar = theta q holds for the constant-porosity presets
        tc.boundary = cfg.boundary;
        tc.initial_u = cfg.initial_u;
        tc.initial_v = cfg.initial_v;
        tc.omega = cfg.omega;
        tc.sample_every = cfg.sample_every;
        TwoScaleOperator op(tc);
        TwoScaleTrajectory macro = run_twoscale(op);

        ReconstructionTrajectory recon = reconstruct(macro, table, geom);
        rows.push_back(corrector_norms(micro, recon, geom));
    }
    return rows;
}

}  // namespace

RateReport run_ladder(const LadderConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (cfg.eps_list.size() < 3)
        throw std::invalid_argument("ladder needs at least 3 eps values");

    std::vector<double> radii = cfg.table_radii;
    if (radii.empty()) {
        // bracket the radius range of the preset, with r = 0 for the floor
        const double lo = cfg.r_min, hi = cfg.r_max;
        radii = {0.0, std::max(0.5 * lo, 0.02), lo, hi, std::min(hi + 0.1, 0.45)};
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                    radii.end());
    }
    EffectiveTable table(radii, cfg.cell_resolution, cfg.d_h);

    RateReport report;
    report.rows = run_rows(cfg, cfg.radius, cfg.r_min, cfg.r_max, table);
    if (cfg.subtract_floor)
        report.floor_rows = run_rows(cfg, RadiusSpec::constant(0.0), 0.0, 0.0, table);

    auto collect = [&](auto&& get) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : report.rows) pts.emplace_back(r.eps, get(r));
        return pts;
    };
    report.fit_n1 = rate_fit(collect([](const LadderRow& r) { return r.n1; }));
    report.fit_n2 = rate_fit(collect([](const LadderRow& r) { return r.n2; }));
    report.fit_n3_l2 = rate_fit(collect([](const LadderRow& r) { return r.n3_l2; }));
    report.fit_n3_linf = rate_fit(collect([](const LadderRow& r) { return r.n3_linf; }));
    report.fit_n4_l2 = rate_fit(collect([](const LadderRow& r) { return r.n4_l2; }));

    std::vector<std::pair<double, double>> adjusted;
    for (size_t k = 0; k < report.rows.size(); ++k) {
        double v = report.rows[k].n3_l2;
        if (cfg.subtract_floor && k < report.floor_rows.size())
            v = std::max(v - report.floor_rows[k].n3_l2, 1e-15);
        adjusted.emplace_back(report.rows[k].eps, v);
    }
    report.fit_n3_l2_adjusted = rate_fit(adjusted);

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void write_rates_csv(const RateReport& report, const std::string& path,
                     const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    if (!header_comment.empty()) out << header_comment << "\n";
    out << "eps,N1,N2,N3_Linf,N3_L2,N4_Linf,N4_L2\n";
    out.precision(17);
    auto emit = [&](const LadderRow& r) {
        out << r.eps << ',' << r.n1 << ',' << r.n2 << ',' << r.n3_linf << ',' << r.n3_l2 << ','
            << r.n4_linf << ',' << r.n4_l2 << '\n';
    };
    for (const auto& r : report.rows) emit(r);
    if (!report.floor_rows.empty()) {
        out << "# floor rows (r = 0)\n";
        for (const auto& r : report.floor_rows) emit(r);
    }
    out << "# fit N1 p=" << report.fit_n1.order << " c=" << report.fit_n1.constant << "\n";
    out << "# fit N2 p=" << report.fit_n2.order << " c=" << report.fit_n2.constant << "\n";
    out << "# fit N3_L2 p=" << report.fit_n3_l2.order << " c=" << report.fit_n3_l2.constant
        << "\n";
    out << "# fit N3_Linf p=" << report.fit_n3_linf.order << " c=" << report.fit_n3_linf.constant
        << "\n";
    out << "# fit N4_L2 p=" << report.fit_n4_l2.order << " c=" << report.fit_n4_l2.constant
        << "\n";
    out << "# fit N3_L2_floor_adjusted p=" << report.fit_n3_l2_adjusted.order
        << " c=" << report.fit_n3_l2_adjusted.constant << "\n";
}

}  // namespace homog
