#include <doctest.h>

#include <cmath>
#include <random>

#include "homog/geometry.hpp"
#include "support.hpp"

using namespace homog;

namespace {
constexpr double kPi = 3.14159265358979323846;

LevelSetSpec unit_spec(double r) {
    LevelSetSpec s;
    s.radius = RadiusSpec::constant(r);
    s.r_min = r;
    s.r_max = r;
    return s;
}
}  // namespace

TEST_CASE("retained lattice: interior 3x3 of the 4x4 lattice at eps=1/4") {
    // oracle: enumerate the lattice and keep centers whose cells fit inside
    const double eps = 0.25;
    int expected = 0;
    for (int jx = 0; jx <= 4; ++jx)
        for (int jy = 0; jy <= 4; ++jy) {
            const double d = std::min({jx * eps, 1 - jx * eps, jy * eps, 1 - jy * eps});
            if (d >= eps * std::sqrt(0.5)) ++expected;
        }
    CHECK(expected == 9);

    MediumGeometry geom(unit_spec(0.25), eps, 1.0 / 64.0);
    CHECK(geom.cell_index_set().size() == 9);
    for (const auto& [jx, jy] : geom.cell_index_set()) {
        CHECK(jx >= 1);
        CHECK(jx <= 3);
        CHECK(jy >= 1);
        CHECK(jy <= 3);
    }
}

TEST_CASE("low-phase area converges to the disc total") {
    const double eps = 0.25, r = 0.25, h = 1.0 / 256.0;
    MediumGeometry geom(unit_spec(r), eps, h);
    const double area = static_cast<double>(geom.low_count()) * h * h;
    const double exact = geom.cell_index_set().size() * kPi * (eps * r) * (eps * r);
    CHECK(std::abs(area - exact) / exact <= 2.0 * h / (eps * r));
}

TEST_CASE("under-resolved inclusions are rejected") {
    CHECK_THROWS_AS(MediumGeometry(unit_spec(0.25), 1.0 / 8.0, 1.0 / 8.0), std::invalid_argument);
}

TEST_CASE("grid spacing must divide eps and 1/eps must be integer") {
    CHECK_THROWS_AS(MediumGeometry(unit_spec(0.25), 0.25, 0.11), std::invalid_argument);
    CHECK_THROWS_AS(MediumGeometry(unit_spec(0.25), 0.3, 0.01), std::invalid_argument);
}

TEST_CASE("radius bounds are validated") {
    LevelSetSpec bad = unit_spec(0.25);
    bad.r_max = 0.6;
    bad.radius = RadiusSpec::constant(0.6);
    bad.r_min = 0.6;
    CHECK_THROWS_AS(MediumGeometry(bad, 0.25, 1.0 / 64.0), std::invalid_argument);
}

TEST_CASE("classify_point distinguishes inclusion, frame and ring") {
    const double eps = 0.25;
    MediumGeometry geom(unit_spec(0.25), eps, 1.0 / 64.0);
    // center of a retained cell
    CHECK(classify_point(geom, {2 * eps, 2 * eps}) == Phase::low);
    // cell frame: level set positive there
    CHECK(classify_point(geom, {2 * eps + eps / 2, 2 * eps}) == Phase::high);
    // boundary ring carries no inclusions
    CHECK(classify_point(geom, {0.01, 0.5}) == Phase::high);
    CHECK_THROWS_AS(classify_point(geom, {1.5, 0.5}), std::invalid_argument);
}

TEST_CASE("phase mask partitions the grid and inclusions are separated") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 128.0);
    CHECK(geom.high_count() + geom.low_count() == geom.grid().num_cells());
    const int comps = testsup::component_count(geom.phase_mask(), geom.grid().nx,
                                               geom.grid().ny, 1);
    CHECK(comps == static_cast<int>(geom.cell_index_set().size()));
}

TEST_CASE("interface faces separate phases; measure approaches the circle total") {
    const double eps = 0.25;
    MediumGeometry geom(unit_spec(0.25), eps, eps / 32.0);
    for (const auto& f : geom.interface_faces()) {
        const bool a = geom.is_low(f.i, f.j);
        const bool b = f.vertical ? geom.is_low(f.i + 1, f.j) : geom.is_low(f.i, f.j + 1);
        CHECK(a != b);
    }
    const double measured = geom.interface_length();
    const double exact = geom.analytic_interface_length();
    CHECK(std::abs(measured - exact) / exact <= 0.05);
}

TEST_CASE("ring cells carry no inclusions") {
    MediumGeometry geom(unit_spec(0.3), 0.125, 1.0 / 128.0);
    for (std::int64_t k : geom.boundary_ring())
        CHECK(geom.phase_mask()[k] == static_cast<std::uint8_t>(Phase::high));
}

TEST_CASE("cutoff vanishes on the ring, is one inside, and has bounded scalings") {
    double prev_grad_scale = 0.0, prev_lap_scale = 0.0;
    for (double eps : {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0}) {
        MediumGeometry geom(unit_spec(0.25), eps, eps / 32.0);
        CutoffField chi = build_cutoff(geom);
        for (std::int64_t k : geom.boundary_ring()) CHECK(chi.values[k] == 0.0);
        double lo = 1e300, hi = -1e300;
        for (double v : chi.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        CHECK(lo >= 0.0);
        CHECK(hi <= 1.0);
        // chi == 1 well inside (at the domain center)
        const Grid2& g = chi.grid;
        CHECK(chi.values[g.index(g.nx / 2, g.ny / 2)] == doctest::Approx(1.0));
        // eps-uniform bounds on the scaled derivatives
        const double gs = eps * chi.max_gradient();
        const double ls = eps * eps * chi.max_laplacian();
        CHECK(gs <= 16.0);
        CHECK(ls <= 800.0);
        if (prev_grad_scale > 0.0) {
            CHECK(gs == doctest::Approx(prev_grad_scale).epsilon(0.05));
            CHECK(ls == doctest::Approx(prev_lap_scale).epsilon(0.05));
        }
        prev_grad_scale = gs;
        prev_lap_scale = ls;
    }
}

TEST_CASE("cutoff norm scalings fit the expected exponents") {
    // log-log slopes over a short ladder; the acceptance suite runs the
    // full one down to 1/64
    std::vector<double> eps_list{1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
    std::vector<double> n_one, n_grad, n_lap;
    for (double eps : eps_list) {
        MediumGeometry geom(unit_spec(0.25), eps, eps / 32.0);
        CutoffField chi = build_cutoff(geom);
        n_one.push_back(chi.l2_one_minus_chi());
        n_grad.push_back(chi.l2_gradient());
        n_lap.push_back(chi.l2_laplacian());
    }
    auto slope = [&](const std::vector<double>& v) {
        // two-point fit over the extreme rungs
        return std::log(v.back() / v.front()) / std::log(eps_list.back() / eps_list.front());
    };
    CHECK(slope(n_one) == doctest::Approx(0.5).epsilon(0.4));
    CHECK(slope(n_grad) == doctest::Approx(-0.5).epsilon(0.4));
    CHECK(slope(n_lap) == doctest::Approx(-1.5).epsilon(0.15));
}

TEST_CASE("normal expansion: constant radius has no tangential correction") {
    LevelSetSpec spec = unit_spec(0.25);
    const double eps = 0.125;
    const Vec2 x{3 * eps + eps * 0.25, 3 * eps};  // on the circle of cell (3,3)
    NormalExpansion ne = normal_expansion(spec, x, eps, 1e-9);
    CHECK(ne.nu0.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ne.nu1.norm() <= 1e-14);
    CHECK(std::abs(ne.nu0.x - 1.0) <= 1e-12);  // radial direction
}

TEST_CASE("normal expansion: nu1 is tangential for a varying radius") {
    LevelSetSpec spec;
    spec.radius = RadiusSpec::linear(0.2, 0.05);
    spec.r_min = 0.2;
    spec.r_max = 0.25;
    const double eps = 0.125;
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    int tested = 0;
    while (tested < 100) {
        const int jx = 1 + static_cast<int>(uni(rng) * 6.99);
        const int jy = 1 + static_cast<int>(uni(rng) * 6.99);
        const double phi = 2.0 * kPi * uni(rng);
        // fixed-point for |x/eps - j| = r(x) along the ray
        Vec2 x{jx * eps, jy * eps};
        double rho = 0.2;
        for (int it = 0; it < 60; ++it) {
            x = Vec2{jx * eps + eps * rho * std::cos(phi), jy * eps + eps * rho * std::sin(phi)};
            rho = spec.radius(x);
        }
        NormalExpansion ne = normal_expansion(spec, x, eps, 1e-9);
        CHECK(std::abs(ne.nu1.dot(ne.nu0)) <= 1e-14);
        CHECK(ne.nu0.norm() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(ne.tau0.dot(ne.nu0)) <= 1e-14);
        ++tested;
    }
}

TEST_CASE("normal expansion rejects degenerate and off-interface points") {
    LevelSetSpec spec = unit_spec(0.25);
    CHECK_THROWS_AS(normal_expansion(spec, {0.5, 0.5}, 0.25, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(normal_expansion(spec, {0.5 + 0.1 * 0.25, 0.5}, 0.25, 1e-6),
                    std::invalid_argument);
}

TEST_CASE("cell coordinate map lands in the centered unit cell") {
    const CellCoord c = cell_coord({0.37, 0.81}, 0.125);
    CHECK(c.y.x >= -0.5);
    CHECK(c.y.x <= 0.5);
    CHECK(c.y.y >= -0.5);
    CHECK(c.y.y <= 0.5);
    CHECK(c.jx * 0.125 + c.y.x * 0.125 == doctest::Approx(0.37).epsilon(1e-14));
    CHECK(c.jy * 0.125 + c.y.y * 0.125 == doctest::Approx(0.81).epsilon(1e-14));
}

TEST_CASE("radius specs are deterministic and their gradients match") {
    RadiusSpec spec = RadiusSpec::bump(0.2, 0.05, 0.3);
    const Vec2 x{0.4, 0.7};
    CHECK(spec(x) == spec(x));
    const double d = 1e-6;
    const Vec2 g = spec.gradient(x);
    const double gx = (spec({x.x + d, x.y}) - spec({x.x - d, x.y})) / (2 * d);
    const double gy = (spec({x.x, x.y + d}) - spec({x.x, x.y - d})) / (2 * d);
    CHECK(g.x == doctest::Approx(gx).epsilon(1e-6));
    CHECK(g.y == doctest::Approx(gy).epsilon(1e-6));
}
