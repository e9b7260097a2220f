#include "homog/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace homog {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Quintic smoothstep: C^2 ramp from 0 to 1 on [0,1].
double smooth5(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}
double smooth5_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * t * (30.0 + t * (-60.0 + 30.0 * t));
}
double smooth5_d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return t * (60.0 + t * (-180.0 + 120.0 * t));
}

}  // namespace

double RadiusSpec::operator()(const Vec2& x) const {
    switch (kind) {
        case Kind::constant:
            return r0;
        case Kind::linear:
            return r0 + a * x.x;
        case Kind::bump: {
            const Vec2 d = x - center;
            return r0 + a * std::exp(-d.dot(d) / (sigma * sigma));
        }
    }
    return r0;
}

Vec2 RadiusSpec::gradient(const Vec2& x) const {
    switch (kind) {
        case Kind::constant:
            return {0.0, 0.0};
        case Kind::linear:
            return {a, 0.0};
        case Kind::bump: {
            const Vec2 d = x - center;
            const double e = std::exp(-d.dot(d) / (sigma * sigma));
            const double c = -2.0 * a * e / (sigma * sigma);
            return {c * d.x, c * d.y};
        }
    }
    return {0.0, 0.0};
}

std::string RadiusSpec::name() const {
    switch (kind) {
        case Kind::constant:
            return "constant";
        case Kind::linear:
            return "linear";
        case Kind::bump:
            return "bump";
    }
    return "constant";
}

void LevelSetSpec::validate() const {
    if (r_max >= 0.5) throw std::invalid_argument("r_max must be < 0.5");
    if (r_min < 0.0) throw std::invalid_argument("r_min must be >= 0");
    if (r_min > r_max) throw std::invalid_argument("r_min must be <= r_max");
    if (r_min == 0.0 && r_max > 0.0)
        throw std::invalid_argument("positive inclusions require r_min > 0");
    const int ns = 101;
    for (int j = 0; j < ns; ++j) {
        for (int i = 0; i < ns; ++i) {
            const Vec2 x{omega.ax + omega.width() * i / (ns - 1),
                         omega.ay + omega.height() * j / (ns - 1)};
            const double r = (*this).radius(x);
            if (r < r_min - 1e-12 || r > r_max + 1e-12)
                throw std::invalid_argument("radius function violates [r_min, r_max] bounds");
        }
    }
}

CellCoord cell_coord(const Vec2& x, double epsilon) {
    CellCoord c;
    c.jx = static_cast<int>(std::lround(x.x / epsilon));
    c.jy = static_cast<int>(std::lround(x.y / epsilon));
    c.y = {x.x / epsilon - c.jx, x.y / epsilon - c.jy};
    return c;
}

MediumGeometry::MediumGeometry(const LevelSetSpec& spec, double epsilon, double h)
    : spec_(spec), eps_(epsilon) {
    spec_.validate();
    const double inv_eps = 1.0 / epsilon;
    if (epsilon <= 0.0 || std::abs(inv_eps - std::lround(inv_eps)) > 1e-9)
        throw std::invalid_argument("1/epsilon must be a positive integer");
    const double ratio = epsilon / h;
    if (h <= 0.0 || std::abs(ratio - std::lround(ratio)) > 1e-9)
        throw std::invalid_argument("h must divide epsilon");
    if (spec_.r_max > 0.0 && epsilon * spec_.r_min < 4.0 * h - 1e-12)
        throw std::invalid_argument("under-resolved inclusions: need eps*r_min >= 4h");

    grid_ = Grid2(spec_.omega, h);

    // Retained lattice: cell centers eps*j at least eps/sqrt(2) from the
    // outer boundary, so every retained cell lies inside Omega with margin.
    const double margin = epsilon * std::sqrt(0.5) - 1e-12 * epsilon;
    const Rect& om = spec_.omega;
    const int jlox = static_cast<int>(std::ceil(om.ax / epsilon - 1e-9));
    const int jhix = static_cast<int>(std::floor(om.bx / epsilon + 1e-9));
    const int jloy = static_cast<int>(std::ceil(om.ay / epsilon - 1e-9));
    const int jhiy = static_cast<int>(std::floor(om.by / epsilon + 1e-9));
    j0x_ = jlox;
    j0y_ = jloy;
    njx_ = jhix - jlox + 1;
    njy_ = jhiy - jloy + 1;
    lattice_mask_.assign(static_cast<size_t>(njx_) * njy_, 0);
    for (int jy = jloy; jy <= jhiy; ++jy) {
        for (int jx = jlox; jx <= jhix; ++jx) {
            const Vec2 c{jx * epsilon, jy * epsilon};
            if (om.boundary_distance(c) >= margin) {
                lattice_.emplace_back(jx, jy);
                lattice_mask_[(jx - j0x_) + std::int64_t(njx_) * (jy - j0y_)] = 1;
            }
        }
    }

    // Phase mask per fine cell center.
    mask_.assign(grid_.num_cells(), static_cast<std::uint8_t>(Phase::high));
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            const Vec2 x = grid_.center(i, j);
            const CellCoord cc = cell_coord(x, epsilon);
            if (!lattice_retained(cc.jx, cc.jy)) {
                ring_.push_back(grid_.index(i, j));
                continue;
            }
            const double r = spec_.radius(x);
            if (cc.y.norm() < r) mask_[grid_.index(i, j)] = static_cast<std::uint8_t>(Phase::low);
        }
    }
    for (auto m : mask_) (m == static_cast<std::uint8_t>(Phase::low)) ? ++low_count_ : ++high_count_;

    // Interface faces (one high cell, one low cell).
    auto owner = [&](int i, int j) {
        const CellCoord cc = cell_coord(grid_.center(i, j), epsilon);
        return std::pair<int, int>{cc.jx, cc.jy};
    };
    for (int j = 0; j < grid_.ny; ++j) {
        for (int i = 0; i < grid_.nx; ++i) {
            if (i + 1 < grid_.nx && is_low(i, j) != is_low(i + 1, j)) {
                const auto [jx, jy] = is_low(i, j) ? owner(i, j) : owner(i + 1, j);
                faces_.push_back({i, j, true, jx, jy});
            }
            if (j + 1 < grid_.ny && is_low(i, j) != is_low(i, j + 1)) {
                const auto [jx, jy] = is_low(i, j) ? owner(i, j) : owner(i, j + 1);
                faces_.push_back({i, j, false, jx, jy});
            }
        }
    }
}

bool MediumGeometry::lattice_retained(int jx, int jy) const {
    if (jx < j0x_ || jx >= j0x_ + njx_ || jy < j0y_ || jy >= j0y_ + njy_) return false;
    return lattice_mask_[(jx - j0x_) + std::int64_t(njx_) * (jy - j0y_)] != 0;
}

double MediumGeometry::level_set(const Vec2& x) const {
    const CellCoord cc = cell_coord(x, eps_);
    if (!lattice_retained(cc.jx, cc.jy)) {
        // No inclusion in this cell; report a positive sentinel distance.
        return cc.y.norm() + 0.5;
    }
    return cc.y.norm() - spec_.radius(x);
}

double MediumGeometry::interface_length() const {
    // Marching squares on the node-sampled level set.
    const int nx = grid_.nx, ny = grid_.ny;
    const double h = grid_.h;
    std::vector<double> node(static_cast<size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            node[static_cast<size_t>(j) * (nx + 1) + i] =
                level_set({spec_.omega.ax + i * h, spec_.omega.ay + j * h});
    auto nv = [&](int i, int j) { return node[static_cast<size_t>(j) * (nx + 1) + i]; };
    double length = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            // corner values: 0:(i,j) 1:(i+1,j) 2:(i+1,j+1) 3:(i,j+1)
            const double v0 = nv(i, j), v1 = nv(i + 1, j), v2 = nv(i + 1, j + 1), v3 = nv(i, j + 1);
            int code = (v0 < 0 ? 1 : 0) | (v1 < 0 ? 2 : 0) | (v2 < 0 ? 4 : 0) | (v3 < 0 ? 8 : 0);
            if (code == 0 || code == 15) continue;
            auto frac = [](double a, double b) { return a / (a - b); };
            // edge crossing points in cell-local coordinates
            Vec2 pts[4];
            int np = 0;
            if ((v0 < 0) != (v1 < 0)) pts[np++] = {frac(v0, v1), 0.0};
            if ((v1 < 0) != (v2 < 0)) pts[np++] = {1.0, frac(v1, v2)};
            if ((v3 < 0) != (v2 < 0)) pts[np++] = {frac(v3, v2), 1.0};
            if ((v0 < 0) != (v3 < 0)) pts[np++] = {0.0, frac(v0, v3)};
            if (np == 2) {
                length += h * (pts[1] - pts[0]).norm();
            } else if (np == 4) {
                // ambiguous saddle: pair edges by the cell-center sign
                const double vc = 0.25 * (v0 + v1 + v2 + v3);
                if ((vc < 0) == (v0 < 0)) {
                    length += h * ((pts[0] - pts[3]).norm() + (pts[1] - pts[2]).norm());
                } else {
                    length += h * ((pts[0] - pts[1]).norm() + (pts[2] - pts[3]).norm());
                }
            }
        }
    }
    return length;
}

double MediumGeometry::analytic_interface_length() const {
    double s = 0.0;
    for (const auto& [jx, jy] : lattice_)
        s += 2.0 * kPi * eps_ * spec_.radius({jx * eps_, jy * eps_});
    return s;
}

bool MediumGeometry::nearest_inclusion(const Vec2& x, Vec2& center, double& radius) const {
    const CellCoord cc = cell_coord(x, eps_);
    if (!lattice_retained(cc.jx, cc.jy)) return false;
    center = {cc.jx * eps_, cc.jy * eps_};
    radius = eps_ * spec_.radius(x);
    return true;
}

MediumGeometry build_medium(const LevelSetSpec& spec, double epsilon, double h) {
    return MediumGeometry(spec, epsilon, h);
}

Phase classify_point(const MediumGeometry& geom, const Vec2& x) {
    if (!geom.spec().omega.contains(x)) throw std::invalid_argument("point outside Omega");
    const CellCoord cc = cell_coord(x, geom.epsilon());
    if (!geom.lattice_retained(cc.jx, cc.jy)) return Phase::high;
    return cc.y.norm() < geom.spec().radius(x) ? Phase::low : Phase::high;
}

CutoffField build_cutoff(const MediumGeometry& geom) {
    const Grid2& g = geom.grid();
    const double eps = geom.epsilon();
    const LevelSetSpec& spec = geom.spec();

    // The retained cells tile the sub-rectangle at distance eps/2 from the
    // boundary; chi ramps from 0 there to 1 over half the inclusion-to-ring
    // gap so gradients stay clear of Gamma^eps.
    const Rect& om = spec.omega;
    const double lox = om.ax + 0.5 * eps, hix = om.bx - 0.5 * eps;
    const double loy = om.ay + 0.5 * eps, hiy = om.by - 0.5 * eps;
    const double w = 0.5 * eps * (0.5 - spec.r_max);

    auto g1 = [&](double t, double lo, double hi, double& d1, double& d2) {
        const double dlo = (t - lo) / w, dhi = (hi - t) / w;
        double v, vd1, vd2, sgn;
        if (dlo < dhi) {
            v = smooth5(dlo);
            vd1 = smooth5_d1(dlo);
            vd2 = smooth5_d2(dlo);
            sgn = 1.0;
        } else {
            v = smooth5(dhi);
            vd1 = smooth5_d1(dhi);
            vd2 = smooth5_d2(dhi);
            sgn = -1.0;
        }
        d1 = sgn * vd1 / w;
        d2 = vd2 / (w * w);
        return v;
    };

    CutoffField f;
    f.grid = g;
    const std::int64_t n = g.num_cells();
    f.values.resize(n);
    f.grad_x.resize(n);
    f.grad_y.resize(n);
    f.laplacian.resize(n);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 x = g.center(i, j);
            double gx1, gx2, gy1, gy2;
            const double gx = g1(x.x, lox, hix, gx1, gx2);
            const double gy = g1(x.y, loy, hiy, gy1, gy2);
            const std::int64_t k = g.index(i, j);
            f.values[k] = gx * gy;
            f.grad_x[k] = gx1 * gy;
            f.grad_y[k] = gx * gy1;
            f.laplacian[k] = gx2 * gy + gx * gy2;
        }
    }
    return f;
}

double CutoffField::l2_one_minus_chi() const {
    double s = 0.0;
    for (double v : values) s += (1.0 - v) * (1.0 - v);
    return std::sqrt(s * grid.h * grid.h);
}
double CutoffField::l2_gradient() const {
    double s = 0.0;
    for (size_t k = 0; k < values.size(); ++k) s += grad_x[k] * grad_x[k] + grad_y[k] * grad_y[k];
    return std::sqrt(s * grid.h * grid.h);
}
double CutoffField::l2_laplacian() const {
    double s = 0.0;
    for (double v : laplacian) s += v * v;
    return std::sqrt(s * grid.h * grid.h);
}
double CutoffField::max_gradient() const {
    double m = 0.0;
    for (size_t k = 0; k < values.size(); ++k)
        m = std::max(m, std::hypot(grad_x[k], grad_y[k]));
    return m;
}
double CutoffField::max_laplacian() const {
    double m = 0.0;
    for (double v : laplacian) m = std::max(m, std::abs(v));
    return m;
}

NormalExpansion normal_expansion(const LevelSetSpec& spec, const Vec2& x, double epsilon,
                                 double interface_tol) {
    const CellCoord cc = cell_coord(x, epsilon);
    const double rho = cc.y.norm();
    if (rho < 1e-14) throw std::invalid_argument("degenerate level set: |grad_y S| = 0");
    const double s = rho - spec.radius(x);
    if (std::abs(s) > interface_tol)
        throw std::invalid_argument("point is not on the interface");
    NormalExpansion ne;
    ne.nu0 = cc.y * (1.0 / rho);                 // grad_y S / |grad_y S|, |grad_y S| = 1
    ne.tau0 = {-ne.nu0.y, ne.nu0.x};
    const Vec2 grad_x_s = spec.radius.gradient(x) * (-1.0);  // grad_x S = -grad r
    ne.nu1 = ne.tau0 * ne.tau0.dot(grad_x_s);
    return ne;
}

void write_geometry_csv(const MediumGeometry& geom, const CutoffField& chi,
                        const std::string& path, const std::string& header_comment) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    if (!header_comment.empty()) out << header_comment << "\n";
    out << "x,y,phase,chi\n";
    const Grid2& g = geom.grid();
    out.precision(17);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 c = g.center(i, j);
            out << c.x << ',' << c.y << ',' << (geom.is_low(i, j) ? "low" : "high") << ','
                << chi.values[g.index(i, j)] << '\n';
        }
    }
}

}  // namespace homog
