#include "homog/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "homog/correctors.hpp"

namespace homog {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

AnalyticField AnalyticField::sin_cos() {
    AnalyticField f;
    f.name = "sin_cos";
    f.value = [](const Vec2& x) { return std::sin(kPi * x.x) * std::cos(kPi * x.y); };
    f.gradient = [](const Vec2& x) {
        return Vec2{kPi * std::cos(kPi * x.x) * std::cos(kPi * x.y),
                    -kPi * std::sin(kPi * x.x) * std::sin(kPi * x.y)};
    };
    f.hessian = [](const Vec2& x) {
        const double s1 = std::sin(kPi * x.x), c1 = std::cos(kPi * x.x);
        const double s2 = std::sin(kPi * x.y), c2 = std::cos(kPi * x.y);
        return Tensor2{{{-kPi * kPi * s1 * c2, -kPi * kPi * c1 * s2},
                        {-kPi * kPi * c1 * s2, -kPi * kPi * s1 * c2}}};
    };
    return f;
}

AnalyticField AnalyticField::sine_sine() {
    AnalyticField f;
    f.name = "sine_sine";
    f.value = [](const Vec2& x) { return std::sin(kPi * x.x) * std::sin(kPi * x.y); };
    f.gradient = [](const Vec2& x) {
        return Vec2{kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y),
                    kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y)};
    };
    f.hessian = [](const Vec2& x) {
        const double s1 = std::sin(kPi * x.x), c1 = std::cos(kPi * x.x);
        const double s2 = std::sin(kPi * x.y), c2 = std::cos(kPi * x.y);
        return Tensor2{{{-kPi * kPi * s1 * s2, kPi * kPi * c1 * c2},
                        {kPi * kPi * c1 * c2, -kPi * kPi * s1 * s2}}};
    };
    return f;
}

AnalyticField AnalyticField::cos_cos() {
    AnalyticField f;
    f.name = "cos_cos";
    f.value = [](const Vec2& x) { return std::cos(kPi * x.x) * std::cos(kPi * x.y); };
    f.gradient = [](const Vec2& x) {
        return Vec2{-kPi * std::sin(kPi * x.x) * std::cos(kPi * x.y),
                    -kPi * std::cos(kPi * x.x) * std::sin(kPi * x.y)};
    };
    f.hessian = [](const Vec2& x) {
        const double s1 = std::sin(kPi * x.x), c1 = std::cos(kPi * x.x);
        const double s2 = std::sin(kPi * x.y), c2 = std::cos(kPi * x.y);
        return Tensor2{{{-kPi * kPi * c1 * c2, kPi * kPi * s1 * s2},
                        {kPi * kPi * s1 * s2, -kPi * kPi * c1 * c2}}};
    };
    return f;
}

AnalyticField AnalyticField::x1_squared() {
    AnalyticField f;
    f.name = "x1_squared";
    f.value = [](const Vec2& x) { return x.x * x.x; };
    f.gradient = [](const Vec2& x) { return Vec2{2.0 * x.x, 0.0}; };
    f.hessian = [](const Vec2&) {
        return Tensor2{{{2.0, 0.0}, {0.0, 0.0}}};
    };
    return f;
}

AnalyticField AnalyticField::constant(double c) {
    AnalyticField f;
    f.name = "constant";
    f.value = [c](const Vec2&) { return c; };
    f.gradient = [](const Vec2&) { return Vec2{0.0, 0.0}; };
    f.hessian = [](const Vec2&) { return Tensor2{{{0.0, 0.0}, {0.0, 0.0}}}; };
    return f;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Newton iteration from the Chebyshev initial guess
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p0 = 0.0, p1 = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
            }
            const double dp = n * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        p1 = 0.0;
        p0 = 1.0;
        for (int k = 0; k < n; ++k) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
        }
        const double dp = n * (x * p0 - p1) / (x * x - 1.0);
        nodes[i] = 0.5 * (a + b) + 0.5 * (b - a) * x;
        weights[i] = (b - a) / ((1.0 - x * x) * dp * dp);
    }
}

namespace {

double rect_integral(const AnalyticField& f, const AnalyticField& g, int component,
                     double ax, double bx, double ay, double by, int npts) {
    // int f_grad[component] * g over the rectangle (component < 0: f * g)
    std::vector<double> nx, wx, ny, wy;
    gauss_legendre(npts, ax, bx, nx, wx);
    gauss_legendre(npts, ay, by, ny, wy);
    double s = 0.0;
    for (int j = 0; j < npts; ++j) {
        for (int i = 0; i < npts; ++i) {
            const Vec2 x{nx[i], ny[j]};
            double fv;
            if (component < 0)
                fv = f.value(x);
            else {
                const Vec2 gr = f.gradient(x);
                fv = component == 0 ? gr.x : gr.y;
            }
            s += wx[i] * wy[j] * fv * g.value(x);
        }
    }
    return s;
}

double h1_norm_analytic(const AnalyticField& f, const Rect& om, int npts) {
    std::vector<double> nx, wx, ny, wy;
    gauss_legendre(npts, om.ax, om.bx, nx, wx);
    gauss_legendre(npts, om.ay, om.by, ny, wy);
    double s = 0.0;
    for (int j = 0; j < npts; ++j)
        for (int i = 0; i < npts; ++i) {
            const Vec2 x{nx[i], ny[j]};
            const double v = f.value(x);
            const Vec2 g = f.gradient(x);
            s += wx[i] * wy[j] * (v * v + g.x * g.x + g.y * g.y);
        }
    return std::sqrt(s);
}

}  // namespace

Lemma51Report check_lemma_5_1(const Lemma51Config& cfg) {
    // the identity is trivial when r is constant (nu_1 = 0 and no x-dependence)
    bool varying = false;
    for (double x1 : cfg.x1_samples)
        for (double x2 : cfg.x2_samples)
            if (cfg.radius.gradient({x1, x2}).norm() > 1e-14) varying = true;
    if (!varying)
        throw std::invalid_argument("lemma 5.1 check needs a varying radius preset");

    // knot table: every sampled r(x) and its two x-difference neighbors
    // land exactly on a knot, so the transport derivatives never mix the
    // staircase masks of different knot solutions
    std::map<long long, CellSolution> knots;
    auto key_of = [](double r) { return std::llround(r * 1e9); };
    auto knot = [&](double r) -> const CellSolution& {
        const long long key = key_of(r);
        auto it = knots.find(key);
        if (it == knots.end()) it = knots.emplace(key, solve_cell(r, cfg.cell_n, 1e-12)).first;
        return it->second;
    };

    const double h_c = 1.0 / cfg.cell_n;
    Lemma51Report report;
    for (int level = 0; level < cfg.levels; ++level) {
        const int nq = cfg.base_q << level;
        const double hq = 1.0 / nq;

        double sq_sum = 0.0;
        int count = 0;
        for (double x1 : cfg.x1_samples) {
            // r varies along x1 only; the interface and volume integrals are
            // shared by all x2 samples at this station
            const Vec2 xs0{x1, cfg.x2_samples.empty() ? 0.5 : cfg.x2_samples.front()};
            const double r = cfg.radius(xs0);
            const Vec2 g = cfg.radius.gradient(xs0);
            const double dr = cfg.delta_r;
            const CellSolution& c0 = knot(r);
            const CellSolution& cp = knot(r + dr);
            const CellSolution& cm = knot(r - dr);

            // volume terms on the level's midpoint grid:
            // Q1 = int_{Y(r)} d/dr (grad M), T' = d/dr int_{Y} (I + grad M).
            // Midpoint quadrature with center classification: the boundary
            // sliver error is the first-order term the refinement study
            // tracks.
            auto fluid_w = [&](double rho, double radius) {
                return rho >= radius ? 1.0 : 0.0;
            };
            Tensor2 q1{{{0, 0}, {0, 0}}};
            Tensor2 tp{{{0, 0}, {0, 0}}}, tm{{{0, 0}, {0, 0}}};
            for (int j = 0; j < nq; ++j) {
                for (int i = 0; i < nq; ++i) {
                    const Vec2 y{-0.5 + (i + 0.5) * hq, -0.5 + (j + 0.5) * hq};
                    const double rho = y.norm();
                    const double w0 = fluid_w(rho, r);
                    const double wp = fluid_w(rho, r + dr);
                    const double wm = fluid_w(rho, r - dr);
                    for (int dir = 0; dir < 2; ++dir) {
                        if (w0 > 0.0) {
                            Vec2 dg;
                            if (rho >= r + dr) {
                                dg = (cp.gradient_at(dir, y) - cm.gradient_at(dir, y)) *
                                     (1.0 / (2.0 * dr));
                            } else {  // annulus: one-sided into the fluid
                                dg = (c0.gradient_at(dir, y) - cm.gradient_at(dir, y)) *
                                     (1.0 / dr);
                            }
                            q1[0][dir] += w0 * hq * hq * dg.x;
                            q1[1][dir] += w0 * hq * hq * dg.y;
                        }
                        if (wp > 0.0) {
                            const Vec2 gp = cp.gradient_at(dir, y);
                            tp[0][dir] += wp * hq * hq * (gp.x + (dir == 0 ? 1.0 : 0.0));
                            tp[1][dir] += wp * hq * hq * (gp.y + (dir == 1 ? 1.0 : 0.0));
                        }
                        if (wm > 0.0) {
                            const Vec2 gm = cm.gradient_at(dir, y);
                            tm[0][dir] += wm * hq * hq * (gm.x + (dir == 0 ? 1.0 : 0.0));
                            tm[1][dir] += wm * hq * hq * (gm.y + (dir == 1 ? 1.0 : 0.0));
                        }
                    }
                }
            }
            Tensor2 tprime;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) tprime[a][b] = (tp[a][b] - tm[a][b]) / (2.0 * dr);

            // interface term R_kj = int tau_k (tau_j + d_phi M_j / rho) r dphi;
            // traces are read at two offsets outside the staircase and
            // extrapolated back to the circle. The trace kink density is set
            // by the knot resolution, so the rule is kept converged while
            // the volume grid refines.
            const int nphi = 8 * cfg.cell_n;
            const double dphi = 2.0 * kPi / nphi;
            const double rho1 = r + 8.0 * h_c, rho2 = r + 16.0 * h_c;
            std::vector<double> m1[2], m2[2];
            for (int dir = 0; dir < 2; ++dir) {
                m1[dir].resize(nphi);
                m2[dir].resize(nphi);
                for (int q = 0; q < nphi; ++q) {
                    const double phi = q * dphi;
                    const Vec2 e{std::cos(phi), std::sin(phi)};
                    m1[dir][q] = c0.value_at(dir, e * rho1);
                    m2[dir][q] = c0.value_at(dir, e * rho2);
                }
            }
            Tensor2 rint{{{0, 0}, {0, 0}}};
            for (int q = 0; q < nphi; ++q) {
                const double phi = q * dphi;
                const Vec2 tau{-std::sin(phi), std::cos(phi)};
                for (int dir = 0; dir < 2; ++dir) {
                    const double dm1 = (m1[dir][(q + 1) % nphi] - m1[dir][(q + nphi - 1) % nphi]) /
                                       (2.0 * dphi);
                    const double dm2 = (m2[dir][(q + 1) % nphi] - m2[dir][(q + nphi - 1) % nphi]) /
                                       (2.0 * dphi);
                    const double dm = 2.0 * dm1 / rho1 - dm2 / rho2;  // extrapolate to rho = r
                    const double tangential = (dir == 0 ? tau.x : tau.y) + dm;
                    rint[0][dir] += dphi * r * tau.x * tangential;
                    rint[1][dir] += dphi * r * tau.y * tangential;
                }
            }

            for (double x2 : cfg.x2_samples) {
                const Vec2 du = cfg.u0.gradient({x1, x2});
                double lhs = 0.0, rhs = 0.0;
                const double gv[2] = {g.x, g.y};
                const double dv[2] = {du.x, du.y};
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) {
                        lhs += (q1[a][b] - tprime[a][b]) * gv[a] * dv[b];
                        rhs += rint[a][b] * gv[a] * dv[b];
                    }
                sq_sum += (lhs - rhs) * (lhs - rhs);
                ++count;
            }
        }
        report.resolutions.push_back(nq);
        report.residuals.push_back(std::sqrt(sq_sum / count));
    }
    return report;
}

namespace {

/// Integral of f over a disc by polar Gauss x trapezoid quadrature.
double disc_integral(const std::function<double(const Vec2&)>& f, const Vec2& center,
                     double radius, int nr = 8, int nphi = 32) {
    std::vector<double> rn, rw;
    gauss_legendre(nr, 0.0, radius, rn, rw);
    double s = 0.0;
    for (int q = 0; q < nphi; ++q) {
        const double phi = 2.0 * kPi * q / nphi;
        const double cphi = std::cos(phi), sphi = std::sin(phi);
        for (int k = 0; k < nr; ++k)
            s += rw[k] * rn[k] * (2.0 * kPi / nphi) *
                 f({center.x + rn[k] * cphi, center.y + rn[k] * sphi});
    }
    return s;
}

}  // namespace

Lemma52Report check_lemma_5_2(const Lemma52Config& cfg) {
    Lemma52Report report;
    report.expected_compatible = cfg.pair != Lemma52Pair::incompatible;
    const double r = cfg.r;
    const double theta = porosity(r);

    // boundary-trace check for the test function space H^1(.; dOmega)
    for (int k = 0; k <= 32; ++k) {
        const double t = k / 32.0;
        if (std::abs(cfg.phi.value({t, 0.0})) > 1e-10 ||
            std::abs(cfg.phi.value({t, 1.0})) > 1e-10 ||
            std::abs(cfg.phi.value({0.0, t})) > 1e-10 ||
            std::abs(cfg.phi.value({1.0, t})) > 1e-10)
            throw std::invalid_argument("phi must vanish on the outer boundary");
    }

    // oscillatory pair data: cell-solution gradient on the per-cell lattice
    // of fine-cell offsets, centered to exact zero fluid mean
    std::vector<std::array<std::array<double, 2>, 2>> blat;
    std::vector<std::uint8_t> lat_fluid;
    const int lat = cfg.h_ratio;
    CellSolution cell_sol;
    if (cfg.pair == Lemma52Pair::oscillatory) {
        cell_sol = solve_cell(r, cfg.cell_n, 1e-12);
        blat.resize(static_cast<size_t>(lat) * lat);
        lat_fluid.resize(blat.size());
        std::array<std::array<double, 2>, 2> mean{{{0, 0}, {0, 0}}};
        int fluid_count = 0;
        for (int jj = 0; jj < lat; ++jj) {
            for (int ii = 0; ii < lat; ++ii) {
                const Vec2 y{(ii + 0.5) / lat - 0.5, (jj + 0.5) / lat - 0.5};
                const bool fluid = y.norm() >= r;
                lat_fluid[jj * lat + ii] = fluid;
                auto& b = blat[jj * lat + ii];
                // nearest cell gradient of the reference solution
                int ci = static_cast<int>(std::floor((y.x + 0.5) * cfg.cell_n));
                int cj = static_cast<int>(std::floor((y.y + 0.5) * cfg.cell_n));
                ci = std::min(std::max(ci, 0), cfg.cell_n - 1);
                cj = std::min(std::max(cj, 0), cfg.cell_n - 1);
                for (int dir = 0; dir < 2; ++dir) {
                    const Vec2 gm = fluid ? cell_sol.gradient(dir, ci, cj) : Vec2{0.0, 0.0};
                    b[0][dir] = (dir == 0 ? 1.0 : 0.0) + gm.x;
                    b[1][dir] = (dir == 1 ? 1.0 : 0.0) + gm.y;
                }
                if (fluid) {
                    ++fluid_count;
                    for (int a = 0; a < 2; ++a)
                        for (int bb = 0; bb < 2; ++bb) mean[a][bb] += b[a][bb];
                }
            }
        }
        for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb) mean[a][bb] /= fluid_count;
        double compat = 0.0;
        for (auto& b : blat)
            for (int a = 0; a < 2; ++a)
                for (int bb = 0; bb < 2; ++bb) b[a][bb] -= mean[a][bb];
        // exact fluid-lattice zero mean by construction; record the defect
        std::array<std::array<double, 2>, 2> resid{{{0, 0}, {0, 0}}};
        for (size_t k = 0; k < blat.size(); ++k)
            if (lat_fluid[k])
                for (int a = 0; a < 2; ++a)
                    for (int bb = 0; bb < 2; ++bb) resid[a][bb] += blat[k][a][bb];
        for (int a = 0; a < 2; ++a)
            for (int bb = 0; bb < 2; ++bb) compat = std::max(compat, std::abs(resid[a][bb]));
        report.compat_residual = compat;
    } else if (cfg.pair == Lemma52Pair::unit_average || cfg.pair == Lemma52Pair::radial_flux) {
        report.compat_residual = 0.0;  // exact by construction
    } else {
        report.compat_residual = theta;  // int_Y 1 dy vs zero surface term
    }
    if (report.expected_compatible && report.compat_residual > 1e-6)
        throw std::invalid_argument("pair violates the prescribed-average condition");

    for (double eps : cfg.eps_list) {
        const double h = eps / cfg.h_ratio;
        LevelSetSpec spec{RadiusSpec::constant(r), r, r, Rect{}};
        MediumGeometry geom(spec, eps, h);
        const Grid2& g = geom.grid();

        // discrete H1 norm of phi over the high phase
        std::vector<double> phi_grid(g.num_cells());
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) phi_grid[g.index(i, j)] = cfg.phi.value(g.center(i, j));
        const double l2 = l2_phase(geom, phi_grid, Phase::high);
        const double h1s = h1_semi_phase(geom, phi_grid, Phase::high);
        const double phi_h1 = std::sqrt(l2 * l2 + h1s * h1s);

        double volume = 0.0, surface = 0.0;
        if (cfg.pair == Lemma52Pair::oscillatory) {
            // oscillating zero-average integrand: direct mask quadrature;
            // fine-cell offsets repeat with period lat, shifted half a cell
            // because inclusion centers sit on the eps lattice
            for (int j = 0; j < g.ny; ++j) {
                for (int i = 0; i < g.nx; ++i) {
                    if (geom.is_low(i, j)) continue;
                    const Vec2 x = g.center(i, j);
                    const int ii = (i + lat / 2) % lat;
                    const int jj = (j + lat / 2) % lat;
                    const auto& b = blat[jj * lat + ii];
                    const Tensor2 hess = cfg.u0.hessian(x);
                    double q = 0.0;
                    for (int a = 0; a < 2; ++a)
                        for (int bb = 0; bb < 2; ++bb) q += b[a][bb] * hess[a][bb];
                    volume += h * h * q * cfg.phi.value(x);
                }
            }
        } else {
            // y-constant Q: full-domain midpoint minus exact disc quadrature
            std::function<double(const Vec2&)> qfun;
            switch (cfg.pair) {
                case Lemma52Pair::unit_average:
                case Lemma52Pair::incompatible:
                    qfun = [](const Vec2&) { return 1.0; };
                    break;
                case Lemma52Pair::radial_flux:
                    qfun = [&](const Vec2& x) {
                        return 4.0 * kPi * cfg.gfun.value(x) * r * r / theta;
                    };
                    break;
                default:
                    break;
            }
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const Vec2 x = g.center(i, j);
                    volume += h * h * qfun(x) * cfg.phi.value(x);
                }
            for (const auto& [jx, jy] : geom.cell_index_set()) {
                const Vec2 c{jx * eps, jy * eps};
                volume -= disc_integral([&](const Vec2& x) { return qfun(x) * cfg.phi.value(x); },
                                        c, eps * r);
            }
        }

        if (cfg.pair == Lemma52Pair::unit_average || cfg.pair == Lemma52Pair::radial_flux) {
            const int nphi = 64;
            for (const auto& [jx, jy] : geom.cell_index_set()) {
                const Vec2 c{jx * eps, jy * eps};
                const double rad = eps * r;
                double ring = 0.0;
                for (int q = 0; q < nphi; ++q) {
                    const double phi = 2.0 * kPi * q / nphi;
                    const Vec2 x{c.x + rad * std::cos(phi), c.y + rad * std::sin(phi)};
                    double p;
                    if (cfg.pair == Lemma52Pair::unit_average)
                        p = theta / (2.0 * kPi * r);
                    else
                        p = 2.0 * cfg.gfun.value(x) * r;
                    ring += (2.0 * kPi * rad / nphi) * p * cfg.phi.value(x);
                }
                surface += ring;
            }
        }

        report.eps.push_back(eps);
        report.ratios.push_back(std::abs(volume - eps * surface) / (eps * phi_h1));
    }
    return report;
}

Lemma53Report check_lemma_5_3(const Lemma53Config& cfg) {
    for (int k = 0; k <= 32; ++k) {
        const double t = k / 32.0;
        if (std::abs(cfg.phi.value({t, 0.0})) > 1e-10 ||
            std::abs(cfg.phi.value({t, 1.0})) > 1e-10 ||
            std::abs(cfg.phi.value({0.0, t})) > 1e-10 ||
            std::abs(cfg.phi.value({1.0, t})) > 1e-10)
            throw std::invalid_argument("phi must vanish on the outer boundary");
    }
    Lemma53Report report;
    const double phi_h1 = h1_norm_analytic(cfg.phi, Rect{}, 48);
    for (double eps : cfg.eps_list) {
        const double w = 0.5 * std::sqrt(2.0) * eps;  // strip width
        double ix = 0.0, iy = 0.0;
        // strip integral = full square minus the interior rectangle
        ix = rect_integral(cfg.u0, cfg.phi, 0, 0, 1, 0, 1, 48) -
             rect_integral(cfg.u0, cfg.phi, 0, w, 1 - w, w, 1 - w, 48);
        iy = rect_integral(cfg.u0, cfg.phi, 1, 0, 1, 0, 1, 48) -
             rect_integral(cfg.u0, cfg.phi, 1, w, 1 - w, w, 1 - w, 48);
        report.eps.push_back(eps);
        report.ratios.push_back(std::hypot(ix, iy) / phi_h1);
    }
    bool positive = true;
    for (double v : report.ratios)
        if (v <= 0.0) positive = false;
    if (positive && report.ratios.size() >= 3) {
        std::vector<std::pair<double, double>> pts;
        for (size_t k = 0; k < report.eps.size(); ++k)
            pts.emplace_back(report.eps[k], report.ratios[k]);
        report.fitted_exponent = rate_fit(pts).order;
    }
    return report;
}

}  // namespace homog
