#include <doctest.h>

#include <cmath>
#include <random>

#include "homog/cell.hpp"

using namespace homog;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("no inclusion: cell solution vanishes and the tensor is exact") {
    CellSolution sol = solve_cell(0.0, 32);
    for (int dir = 0; dir < 2; ++dir)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < 32; ++i) CHECK(sol.value(dir, i, j) == 0.0);
    const Tensor2 t = effective_tensor(sol, 2.5);
    CHECK(t[0][0] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(t[1][1] == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(t[0][1] == 0.0);
    CHECK(t[1][0] == 0.0);
}

TEST_CASE("invalid radius or resolution")
{
    CHECK_THROWS_AS(solve_cell(0.5, 64), std::invalid_argument);
    CHECK_THROWS_AS(solve_cell(0.25, 16), std::invalid_argument);
}

TEST_CASE("cell solution invariants at r=0.25, n=128") {
    CellSolution sol = solve_cell(0.25, 128);
    const int n = sol.resolution();

    // zero mean over the fluid part
    CHECK(std::abs(sol.mean(0)) <= 1e-10);
    CHECK(std::abs(sol.mean(1)) <= 1e-10);

    // flux-balance residual in the finite-volume sense
    CHECK(sol.fv_residual(0) <= 1e-8);
    CHECK(sol.fv_residual(1) <= 1e-8);

    // periodic interpolation across opposite edges
    CHECK(sol.periodicity_residual() <= 1e-10);

    // disc symmetry: M1 odd in y1, even in y2; M2 is the transpose pattern
    double sym = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (sol.solid(i, j)) continue;
            sym = std::max(sym, std::abs(sol.value(0, i, j) + sol.value(0, n - 1 - i, j)));
            sym = std::max(sym, std::abs(sol.value(0, i, j) - sol.value(0, i, n - 1 - j)));
            sym = std::max(sym, std::abs(sol.value(1, i, j) - sol.value(0, j, i)));
        }
    CHECK(sym <= 1e-10);
}

TEST_CASE("interface flux defect decreases under refinement") {
    // radial flux (grad M + e_1) . nu0 read out just outside the staircase;
    // the Neumann condition holds on the circle, so the defect is O(h)
    auto boundary_flux = [](const CellSolution& sol) {
        const int n = sol.resolution();
        const double h = 1.0 / n;
        const double rho = 0.25 + 3.0 * h;
        double worst = 0.0;
        for (int q = 0; q < 256; ++q) {
            const double phi = 2.0 * kPi * q / 256.0;
            const Vec2 nu{std::cos(phi), std::sin(phi)};
            const double mp = sol.value_at(0, nu * (rho + h));
            const double mm = sol.value_at(0, nu * (rho - h));
            worst = std::max(worst, std::abs((mp - mm) / (2.0 * h) + nu.x));
        }
        return worst;
    };
    const double f64 = boundary_flux(solve_cell(0.25, 64));
    const double f256 = boundary_flux(solve_cell(0.25, 256));
    CHECK(f256 <= 0.6 * f64);
}

TEST_CASE("effective tensor: dilute limit and isotropy") {
    const double f = 0.05;
    const double r = std::sqrt(f / kPi);
    CellSolution sol = solve_cell(r, 256);
    const Tensor2 t = effective_tensor(sol, 1.0);
    const double mg = (1.0 - f) / (1.0 + f);  // dilute two-phase estimate
    CHECK(std::abs(t[0][0] - mg) <= 0.01);

    CellSolution iso = solve_cell(0.25, 128);
    const Tensor2 ti = effective_tensor(iso, 1.0);
    CHECK(std::abs(ti[0][1]) <= 1e-3);
    CHECK(std::abs(ti[1][0]) <= 1e-3);
    CHECK(std::abs(ti[0][0] - ti[1][1]) <= 1e-3);
}

TEST_CASE("energy identity and minimality of the cell solution") {
    CellSolution sol = solve_cell(0.25, 64);
    const Tensor2 t = sol.averaged_gradient_tensor();
    for (int dir = 0; dir < 2; ++dir) {
        const double e0 = sol.energy(dir, sol.field(dir));
        CHECK(e0 == doctest::Approx(t[dir][dir]).epsilon(1e-8));
        std::mt19937 rng(31 + dir);
        std::uniform_real_distribution<double> uni(-0.05, 0.05);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> w = sol.field(dir);
            for (auto& v : w) v += uni(rng);
            CHECK(sol.energy(dir, w) >= e0 - 1e-12);
        }
    }
}

TEST_CASE("mask area is within 2h of the disc area") {
    for (int n : {64, 128}) {
        CellSolution sol = solve_cell(0.3, n);
        CHECK(std::abs(sol.mask_area() - kPi * 0.09) <= 2.0 / n);
    }
}

TEST_CASE("grid convergence of the normalized diffusivity") {
    const double d64 = effective_tensor(solve_cell(0.25, 64), 1.0)[0][0];
    const double d128 = effective_tensor(solve_cell(0.25, 128), 1.0)[0][0];
    const double d256 = effective_tensor(solve_cell(0.25, 256), 1.0)[0][0];
    CHECK(std::abs(d128 - d256) < std::abs(d64 - d128));
}

TEST_CASE("porosity formula and the tabulated values") {
    CHECK(porosity(0.0) == doctest::Approx(1.0));
    CHECK(porosity(0.1) == doctest::Approx(0.9686).epsilon(5e-5));
    CHECK(porosity(0.2) == doctest::Approx(0.8743).epsilon(5e-5));
    CHECK(porosity(0.3) == doctest::Approx(0.7173).epsilon(5e-5));
}

TEST_CASE("effective table: knots are exact, midpoints are close, errors rejected") {
    CHECK_THROWS_AS(EffectiveTable({0.2, 0.1, 0.3, 0.4}, 64, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(EffectiveTable({0.1, 0.1, 0.3, 0.4}, 64, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(EffectiveTable({0.1, 0.2, 0.3}, 64, 1.0), std::invalid_argument);

    EffectiveTable table({0.0, 0.1, 0.2, 0.3}, 128, 1.0);
    for (size_t k = 0; k < table.size(); ++k) {
        const Tensor2 direct = effective_tensor(table.solution(k), 1.0);
        const Tensor2 interp = table.tensor(table.radii()[k]);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                CHECK(interp[a][b] == doctest::Approx(direct[a][b]).epsilon(1e-12));
    }
    const double mid = table.tensor(0.15)[0][0];
    const double direct = effective_tensor(solve_cell(0.15, 128), 1.0)[0][0];
    CHECK(std::abs(mid - direct) <= 0.005);

    CHECK_THROWS_AS(table.tensor(0.45), std::out_of_range);
    CHECK_THROWS_AS(table.m_at(0, 0.45, {0.0, 0.0}), std::out_of_range);

    // d(r) = D11/D_h decreasing with d(0) = 1
    double prev = 2.0;
    for (double r : table.radii()) {
        const double d = table.tensor(r)[0][0];
        CHECK(d < prev);
        prev = d;
    }
    CHECK(table.tensor(0.0)[0][0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("m_at interpolates the stored solutions in radius") {
    EffectiveTable table({0.1, 0.2, 0.3, 0.4}, 64, 1.0);
    const Vec2 y{0.35, 0.1};
    const double at_knot = table.m_at(0, 0.2, y);
    CHECK(at_knot == doctest::Approx(table.solution(1).value_at(0, y)).epsilon(1e-13));
    const double a = table.solution(1).value_at(0, y);
    const double b = table.solution(2).value_at(0, y);
    CHECK(table.m_at(0, 0.25, y) == doctest::Approx(0.5 * (a + b)).epsilon(1e-12));
}
