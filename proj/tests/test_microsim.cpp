#include <doctest.h>

#include <cmath>
#include <random>

#include "homog/microsim.hpp"
#include "support.hpp"

using namespace homog;

namespace {

LevelSetSpec unit_spec(double r) {
    LevelSetSpec s;
    s.radius = RadiusSpec::constant(r);
    s.r_min = r;
    s.r_max = r;
    return s;
}

MicroConfig base_config(double dt) {
    MicroConfig mc;
    mc.dt = dt;
    mc.horizon = 0.0;
    mc.boundary = BoundaryData::constant(1.0);
    mc.initial_u = ScalarField::constant(1.0);
    mc.initial_v = ScalarField::constant(1.0);
    return mc;
}

double csr_entry(const CsrMatrix& m, std::int64_t r, std::int64_t c) {
    for (std::int64_t k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k)
        if (m.col_idx()[k] == c) return m.values()[k];
    return 0.0;
}

MicroState initial_micro_state(const MediumGeometry& geom, const MicroConfig& mc) {
    MicroState s;
    s.time = 0.0;
    s.geom = &geom;
    const Grid2& g = geom.grid();
    s.field.resize(g.num_cells());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            s.field[g.index(i, j)] =
                geom.is_low(i, j) ? mc.initial_v(g.center(i, j)) : mc.initial_u(g.center(i, j));
    return s;
}

}  // namespace

TEST_CASE("interface faces carry the harmonic-mean conductance") {
    const double eps = 0.25, h = 1.0 / 64.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(h);
    mc.d_h = 2.0;
    mc.d_l = 3.0;
    MicroOperator op(geom, mc);
    const double dl_eff = eps * eps * mc.d_l;
    const double expected = 2.0 * mc.d_h * dl_eff / (mc.d_h + dl_eff) / (h * h);
    const auto& f = geom.interface_faces().front();
    const Grid2& g = geom.grid();
    const std::int64_t a = g.index(f.i, f.j);
    const std::int64_t b = f.vertical ? g.index(f.i + 1, f.j) : g.index(f.i, f.j + 1);
    CHECK(csr_entry(op.spatial_matrix(), a, b) == doctest::Approx(-expected).epsilon(1e-13));
    CHECK(csr_entry(op.spatial_matrix(), b, a) == doctest::Approx(-expected).epsilon(1e-13));
}

TEST_CASE("equal effective diffusivities collapse to a uniform Laplacian") {
    const double eps = 0.25, h = 1.0 / 64.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(h);
    mc.d_h = 1.0;
    mc.d_l = 1.0 / (eps * eps);  // contrived: eps^2 D_l == D_h
    MicroOperator op(geom, mc);
    const double c = mc.d_h / (h * h);
    const Grid2& g = geom.grid();
    const std::int64_t row = g.index(g.nx / 2, g.ny / 2);
    CHECK(csr_entry(op.spatial_matrix(), row, row) == doctest::Approx(4.0 * c).epsilon(1e-13));
    CHECK(csr_entry(op.spatial_matrix(), row, row - 1) == doctest::Approx(-c).epsilon(1e-13));
}

TEST_CASE("interior row sums of the spatial operator vanish") {
    const double eps = 0.25, h = 1.0 / 64.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(h);
    mc.velocity = VelocitySpec::stream(1.5);
    MicroOperator op(geom, mc);
    const CsrMatrix& a = op.spatial_matrix();
    const Grid2& g = geom.grid();
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) {
            const std::int64_t row = g.index(i, j);
            double sum = 0.0;
            for (std::int64_t k = a.row_ptr()[row]; k < a.row_ptr()[row + 1]; ++k)
                sum += a.values()[k];
            CHECK(std::abs(sum) <= 1e-9);
        }
}

TEST_CASE("face velocity is discretely divergence free") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 64.0);
    MicroConfig mc = base_config(1.0 / 64.0);
    mc.velocity = VelocitySpec::stream(2.0);
    MicroOperator op(geom, mc);
    CHECK(op.max_velocity_divergence() <= 1e-12);
}

TEST_CASE("pure diffusion operator is symmetric") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 64.0);
    MicroOperator op(geom, base_config(1.0 / 64.0));
    CHECK(op.spatial_matrix().value_symmetric(1e-12));
    CHECK(op.symmetric());
}

TEST_CASE("constant data is a fixed point to 1e-12 over 100 steps") {
    const double eps = 0.25, h = 1.0 / 64.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(0.01);
    mc.horizon = 1.0;  // 100 steps
    mc.velocity = VelocitySpec::stream(1.0);
    mc.boundary = BoundaryData::constant(0.7);
    mc.initial_u = ScalarField::constant(0.7);
    mc.initial_v = ScalarField::constant(0.7);
    MicroTrajectory traj = run_micro(geom, mc);
    CHECK(traj.steps == 100);
    for (double v : traj.snapshots.back().field) CHECK(std::abs(v - 0.7) <= 1e-12);
}

TEST_CASE("frozen low phase when D_l = 0") {
    const double eps = 0.25, h = 1.0 / 64.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(0.01);
    mc.d_l = 0.0;
    mc.boundary = BoundaryData::decay(1.0, 2.0);
    mc.initial_u = ScalarField::sine(1.0, 0.4);
    mc.initial_v = ScalarField::sine(1.0, 0.4);
    MicroOperator op(geom, mc);
    MicroState s = initial_micro_state(geom, mc);
    MicroState s2 = step_micro(step_micro(s, op), op);
    const Grid2& g = geom.grid();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (geom.is_low(i, j))
                CHECK(s2.field[g.index(i, j)] ==
                      doctest::Approx(s.field[g.index(i, j)]).epsilon(1e-12));
}

TEST_CASE("maximum principle on randomized configurations") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double eps = trial % 2 == 0 ? 0.25 : 0.125;
        const double r = 0.15 + 0.2 * uni(rng);
        const double h = eps / 32.0;
        MediumGeometry geom(unit_spec(r), eps, h);
        MicroConfig mc = base_config(h);
        mc.horizon = 20 * h;
        mc.velocity = uni(rng) < 0.5 ? VelocitySpec::none() : VelocitySpec::stream(2.0 * uni(rng));
        mc.boundary = BoundaryData::decay(0.5 + uni(rng), 0.5 + uni(rng));
        const double a = uni(rng), b = 0.3 * uni(rng), c = 0.3 * uni(rng);
        mc.initial_u = ScalarField::custom([a, b, c](const Vec2& x) {
            return a + b * std::sin(7.0 * x.x) + c * std::cos(5.0 * x.y * x.x);
        });
        mc.initial_v = ScalarField::custom([a, c](const Vec2& x) {
            return a + c * std::sin(3.0 * x.x + 2.0 * x.y);
        });
        MicroTrajectory traj = run_micro(geom, mc);
        CHECK(traj.hull_violations == 0);
    }
}

TEST_CASE("energy contraction toward a steady boundary level") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        const double eps = 0.25, h = eps / 32.0;
        MediumGeometry geom(unit_spec(0.15 + 0.2 * uni(rng)), eps, h);
        MicroConfig mc = base_config(h);
        const double ub = uni(rng);
        mc.boundary = BoundaryData::constant(ub);
        const double b = uni(rng);
        mc.initial_u = ScalarField::custom(
            [b, ub](const Vec2& x) { return ub + b * std::sin(4.1 * x.x) * x.y; });
        mc.initial_v = mc.initial_u;
        MicroOperator op(geom, mc);
        MicroState s = initial_micro_state(geom, mc);
        auto dist = [&](const MicroState& st) {
            double sum = 0.0;
            for (double v : st.field) sum += (v - ub) * (v - ub);
            return sum;
        };
        double prev = dist(s);
        for (int step = 0; step < 10; ++step) {
            s = step_micro(s, op);
            const double cur = dist(s);
            CHECK(cur <= prev + 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("symmetric data yields a symmetric solution") {
    const double eps = 0.25, h = eps / 16.0;
    MediumGeometry geom(unit_spec(0.25), eps, h);
    MicroConfig mc = base_config(h);
    mc.horizon = 10 * h;
    mc.boundary = BoundaryData::decay(1.0, 1.0);
    mc.initial_u = ScalarField::sine(1.0, 0.5);  // symmetric under x1 <-> x2
    mc.initial_v = ScalarField::sine(1.0, 0.5);
    MicroTrajectory traj = run_micro(geom, mc);
    const MicroState& s = traj.snapshots.back();
    const Grid2& g = geom.grid();
    double asym = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            asym = std::max(asym, std::abs(s.field[g.index(i, j)] - s.field[g.index(j, i)]));
    CHECK(asym <= 1e-8);
}

TEST_CASE("decreasing boundary data keeps nonnegative fields nonnegative") {
    const double eps = 0.125, h = eps / 32.0;
    MediumGeometry geom(unit_spec(0.2), eps, h);
    MicroConfig mc = base_config(h);
    mc.horizon = 20 * h;
    mc.boundary = BoundaryData::decay(1.0, 3.0);
    mc.initial_u = ScalarField::sine(1.0, 0.9);
    mc.initial_v = ScalarField::sine(1.0, 0.9);
    MicroTrajectory traj = run_micro(geom, mc);
    for (const auto& s : traj.snapshots)
        for (double v : s.field) CHECK(v >= -1e-10);
}

TEST_CASE("refinement changes the solution norm at first order") {
    auto final_l2 = [](double h) {
        MediumGeometry geom(unit_spec(0.25), 0.25, h);
        MicroConfig mc;
        mc.dt = 1.0 / 64.0;  // fixed dt isolates the spatial error
        mc.horizon = 8.0 / 64.0;
        mc.boundary = BoundaryData::decay(1.0, 1.0);
        mc.initial_u = ScalarField::sine(1.0, 0.5);
        mc.initial_v = ScalarField::sine(1.0, 0.5);
        MicroTrajectory traj = run_micro(geom, mc);
        const MicroState& s = traj.snapshots.back();
        const Grid2& g = geom.grid();
        double sum = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (!geom.is_low(i, j)) sum += s.field[g.index(i, j)] * s.field[g.index(i, j)];
        return std::sqrt(sum * h * h);
    };
    // the norm settles at O(h) per halving (staircase reclassification
    // keeps successive differences from decaying monotonically)
    const double n1 = final_l2(1.0 / 64.0);
    const double n2 = final_l2(1.0 / 128.0);
    const double n3 = final_l2(1.0 / 256.0);
    CHECK(std::abs(n2 - n1) <= 0.5 / 64.0);
    CHECK(std::abs(n3 - n2) <= 0.5 / 128.0);
}

TEST_CASE("time horizon zero returns the initial state") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 64.0);
    MicroConfig mc = base_config(0.01);
    mc.initial_u = ScalarField::sine(2.0, 0.25);
    mc.initial_v = ScalarField::sine(2.0, 0.25);
    MicroTrajectory traj = run_micro(geom, mc);
    CHECK(traj.steps == 0);
    CHECK(traj.snapshots.size() == 1);
    CHECK(traj.snapshots.front().time == 0.0);
}

TEST_CASE("boundary data must be non-increasing in time") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 64.0);
    MicroConfig mc = base_config(0.01);
    mc.horizon = 0.1;
    mc.boundary = BoundaryData::custom([](const Vec2&, double t) { return 1.0 + t; });
    CHECK_THROWS_AS(MicroOperator(geom, mc), std::invalid_argument);
}

TEST_CASE("mismatched dt and horizon are rejected") {
    MediumGeometry geom(unit_spec(0.25), 0.25, 1.0 / 64.0);
    MicroConfig mc = base_config(0.013);
    mc.horizon = 0.1;
    CHECK_THROWS_AS(run_micro(geom, mc), std::invalid_argument);
}
