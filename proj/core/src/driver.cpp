#include "homog/driver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "homog/correctors.hpp"
#include "homog/lemmas.hpp"
#include "homog/microsim.hpp"
#include "homog/twoscale.hpp"

namespace homog {

namespace {

RadiusSpec radius_from_config(const RunConfig& cfg) {
    if (cfg.radius_kind == "linear") return RadiusSpec::linear(cfg.r0, cfg.radius_slope);
    if (cfg.radius_kind == "bump")
        return RadiusSpec::bump(cfg.r0, cfg.radius_amp, cfg.radius_sigma);
    return RadiusSpec::constant(cfg.r0);
}

LevelSetSpec level_set_from_config(const RunConfig& cfg) {
    LevelSetSpec spec;
    spec.radius = radius_from_config(cfg);
    if (cfg.r_min > 0.0 || cfg.r_max > 0.0) {
        spec.r_min = cfg.r_min;
        spec.r_max = cfg.r_max;
    } else {
        // derive bounds by dense sampling (deterministic)
        double lo = 1.0, hi = 0.0;
        for (int j = 0; j <= 100; ++j)
            for (int i = 0; i <= 100; ++i) {
                const double r = spec.radius({i / 100.0, j / 100.0});
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        spec.r_min = lo;
        spec.r_max = hi;
    }
    return spec;
}

BoundaryData boundary_from_config(const RunConfig& cfg) {
    if (cfg.boundary == "constant") return BoundaryData::constant(cfg.boundary_c);
    if (cfg.boundary == "ramp")
        return BoundaryData::ramp(cfg.boundary_c, cfg.boundary_slope, cfg.boundary_rate);
    return BoundaryData::decay(cfg.boundary_c, cfg.boundary_rate);
}

ScalarField initial_from_config(const RunConfig& cfg) {
    if (cfg.initial == "constant") return ScalarField::constant(cfg.initial_c);
    return ScalarField::sine(cfg.initial_c, cfg.initial_amp);
}

VelocitySpec velocity_from_config(const RunConfig& cfg) {
    if (cfg.velocity == "stream") return VelocitySpec::stream(cfg.velocity_amp);
    return VelocitySpec::none();
}

void echo_config(const RunConfig& cfg) {
    std::ofstream out(std::filesystem::path(cfg.out_dir) / "config_echo.txt");
    out << cfg.header_comment() << "\n" << cfg.canonical();
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

int run_cell(const RunConfig& cfg, std::ostream& out) {
    std::vector<double> radii = cfg.radii;
    if (radii.empty()) radii = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
    EffectiveTable table(radii, cfg.cell_n, cfg.d_h);
    table.write_csv(out_path(cfg, "table.csv"), cfg.header_comment());

    // symmetry report: odd/even symmetry of M1 and tensor isotropy per radius
    std::ofstream rep(out_path(cfg, "cell_report.csv"));
    rep << cfg.header_comment() << "\n";
    rep << "r,symmetry_residual,offdiag,aniso,fv_residual,mean_abs\n";
    rep.precision(17);
    for (size_t k = 0; k < table.size(); ++k) {
        const CellSolution& sol = table.solution(k);
        const int n = sol.resolution();
        double sym = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (sol.solid(i, j)) continue;
                sym = std::max(sym, std::abs(sol.value(0, i, j) + sol.value(0, n - 1 - i, j)));
                sym = std::max(sym, std::abs(sol.value(0, i, j) - sol.value(0, i, n - 1 - j)));
            }
        const Tensor2 t = effective_tensor(sol, cfg.d_h);
        rep << table.radii()[k] << ',' << sym << ',' << std::abs(t[0][1]) << ','
            << std::abs(t[0][0] - t[1][1]) << ','
            << std::max(sol.fv_residual(0), sol.fv_residual(1)) << ','
            << std::max(std::abs(sol.mean(0)), std::abs(sol.mean(1))) << '\n';
    }
    out << "cell: wrote " << out_path(cfg, "table.csv") << " (" << table.size() << " radii, n="
        << cfg.cell_n << ")\n";
    return exit_ok;
}

int run_micro_cmd(const RunConfig& cfg, std::ostream& out) {
    LevelSetSpec spec = level_set_from_config(cfg);
    const double h = cfg.h > 0.0 ? cfg.h : cfg.epsilon / cfg.h_ratio;
    MediumGeometry geom(spec, cfg.epsilon, h);

    MicroConfig mc;
    mc.d_h = cfg.d_h;
    mc.d_l = cfg.d_l;
    mc.dt = cfg.dt > 0.0 ? cfg.dt : h;
    mc.horizon = cfg.horizon;
    mc.velocity = velocity_from_config(cfg);
    mc.boundary = boundary_from_config(cfg);
    mc.initial_u = initial_from_config(cfg);
    mc.initial_v = initial_from_config(cfg);
    mc.sample_every = cfg.sample_every;
    MicroTrajectory traj = run_micro(geom, mc);

    const CutoffField chi = build_cutoff(geom);
    write_geometry_csv(geom, chi, out_path(cfg, "geometry.csv"), cfg.header_comment());
    for (size_t s = 0; s < traj.snapshots.size(); ++s) {
        std::ostringstream name;
        name << "micro_" << s << ".csv";
        write_micro_csv(traj.snapshots[s], out_path(cfg, name.str()), cfg.header_comment());
    }
    out << "micro: " << traj.steps << " steps, " << traj.snapshots.size()
        << " snapshots, hull violations " << traj.hull_violations << "\n";
    return traj.hull_violations == 0 ? exit_ok : (cfg.strict ? exit_acceptance_failure : exit_ok);
}

int run_macro_cmd(const RunConfig& cfg, std::ostream& out) {
    std::vector<double> radii = cfg.radii;
    LevelSetSpec spec = level_set_from_config(cfg);
    if (radii.empty()) {
        const double lo = spec.r_min, hi = std::max(spec.r_max, spec.r_min);
        radii = {0.0, std::max(0.5 * lo, 0.02), lo, hi, std::min(hi + 0.1, 0.45)};
        std::sort(radii.begin(), radii.end());
        radii.erase(std::unique(radii.begin(), radii.end(),
                                [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                    radii.end());
        if (radii.size() < 4) radii = {0.0, 0.15, 0.25, 0.35};
    }
    EffectiveTable table(radii, cfg.cell_n, cfg.d_h);

    TwoScaleConfig tc;
    tc.macro_h = cfg.macro_h;
    tc.radial_m = cfg.radial_m;
    tc.d_l = cfg.d_l;
    tc.dt = cfg.dt > 0.0 ? cfg.dt : cfg.macro_h;
    tc.horizon = cfg.horizon;
    tc.radius = spec.radius;
    tc.table = &table;
    tc.velocity = velocity_from_config(cfg);
    tc.boundary = boundary_from_config(cfg);
    tc.initial_u = initial_from_config(cfg);
    tc.initial_v = initial_from_config(cfg);
    tc.sample_every = cfg.sample_every;
    TwoScaleOperator op(tc);
    TwoScaleTrajectory traj = run_twoscale(op);

    write_twoscale_csv(traj.snapshots.back(), out_path(cfg, "macro_u0.csv"),
                       out_path(cfg, "macro_v0.csv"), cfg.header_comment());
    out << "macro: " << traj.steps << " steps, mass audit max defect "
        << traj.max_mass_audit << "\n";
    return exit_ok;
}

int run_correctors_cmd(const RunConfig& cfg, std::ostream& out) {
    LadderConfig lc;
    lc.eps_list = cfg.eps_list;
    LevelSetSpec spec = level_set_from_config(cfg);
    lc.radius = spec.radius;
    lc.r_min = spec.r_min;
    lc.r_max = spec.r_max;
    lc.d_h = cfg.d_h;
    lc.d_l = cfg.d_l;
    lc.h_ratio = cfg.h_ratio;
    lc.horizon = cfg.horizon;
    lc.macro_h = cfg.macro_h;
    lc.radial_m = cfg.radial_m;
    lc.cell_resolution = cfg.cell_n;
    lc.table_radii = cfg.radii;
    lc.velocity = velocity_from_config(cfg);
    lc.boundary = boundary_from_config(cfg);
    lc.initial_u = initial_from_config(cfg);
    lc.initial_v = initial_from_config(cfg);
    lc.sample_every = cfg.sample_every;
    RateReport report = run_ladder(lc);
    write_rates_csv(report, out_path(cfg, "rates.csv"), cfg.header_comment());

    bool decreasing = true;
    auto check_dec = [&](auto&& get) {
        for (size_t k = 0; k + 1 < report.rows.size(); ++k)
            if (get(report.rows[k + 1]) >= get(report.rows[k])) decreasing = false;
    };
    check_dec([](const LadderRow& r) { return r.n1; });
    check_dec([](const LadderRow& r) { return r.n2; });
    check_dec([](const LadderRow& r) { return r.n3_l2; });
    check_dec([](const LadderRow& r) { return r.n4_l2; });
    const double p = report.fit_n3_l2_adjusted.order;
    const bool pass = decreasing && p >= 0.4;

    out << "correctors: rows=" << report.rows.size() << " fit p(N3,L2,adjusted)=" << p
        << " decreasing=" << (decreasing ? "yes" : "no") << " wall=" << report.wall_seconds
        << "s -> " << (pass ? "PASS" : "FAIL") << "\n";
    for (const auto& r : report.rows)
        out << "  eps=" << r.eps << " N1=" << r.n1 << " N2=" << r.n2 << " N3_L2=" << r.n3_l2
            << " N4_L2=" << r.n4_l2 << "\n";
    if (!pass && cfg.strict) return exit_acceptance_failure;
    return exit_ok;
}

int run_lemmas_cmd(const RunConfig& cfg, std::ostream& out) {
    bool all_pass = true;

    {
        Lemma51Config c51;
        Lemma51Report r51 = check_lemma_5_1(c51);
        std::ofstream f(out_path(cfg, "lemma51.csv"));
        f << cfg.header_comment() << "\nn,residual\n";
        f.precision(17);
        for (size_t k = 0; k < r51.residuals.size(); ++k)
            f << r51.resolutions[k] << ',' << r51.residuals[k] << '\n';
        bool halves = true;
        for (size_t k = 0; k + 1 < r51.residuals.size(); ++k) {
            const double ratio = r51.residuals[k + 1] / r51.residuals[k];
            if (ratio < 0.4 || ratio > 0.6) halves = false;
        }
        out << "lemma 5.1: residuals";
        for (double v : r51.residuals) out << " " << v;
        out << " -> " << (halves ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && halves;
    }

    {
        std::ofstream f(out_path(cfg, "lemma52.csv"));
        f << cfg.header_comment() << "\npair,eps,ratio\n";
        f.precision(17);
        auto run_pair = [&](Lemma52Pair pair, const char* name) {
            Lemma52Config c;
            c.pair = pair;
            Lemma52Report r = check_lemma_5_2(c);
            for (size_t k = 0; k < r.eps.size(); ++k)
                f << name << ',' << r.eps[k] << ',' << r.ratios[k] << '\n';
            return r;
        };
        const Lemma52Report a = run_pair(Lemma52Pair::unit_average, "unit_average");
        const Lemma52Report b = run_pair(Lemma52Pair::oscillatory, "oscillatory");
        const Lemma52Report c = run_pair(Lemma52Pair::radial_flux, "radial_flux");
        const Lemma52Report d = run_pair(Lemma52Pair::incompatible, "incompatible");
        auto bounded = [](const Lemma52Report& r) {
            for (double v : r.ratios)
                if (v > 2.0 * r.ratios.front()) return false;
            return true;
        };
        auto grows = [](const Lemma52Report& r) {
            for (size_t k = 0; k + 1 < r.ratios.size(); ++k)
                if (r.ratios[k + 1] < 1.6 * r.ratios[k]) return false;
            return true;
        };
        const bool pass = bounded(a) && bounded(b) && bounded(c) && grows(d);
        out << "lemma 5.2: compatible bounded=" << (bounded(a) && bounded(b) && bounded(c))
            << " incompatible grows=" << grows(d) << " -> " << (pass ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && pass;
    }

    {
        Lemma53Config c53;
        Lemma53Report r53 = check_lemma_5_3(c53);
        std::ofstream f(out_path(cfg, "lemma53.csv"));
        f << cfg.header_comment() << "\neps,ratio\n";
        f.precision(17);
        for (size_t k = 0; k < r53.eps.size(); ++k) f << r53.eps[k] << ',' << r53.ratios[k] << '\n';
        f << "# fitted_exponent=" << r53.fitted_exponent << "\n";
        const bool pass = r53.fitted_exponent >= 1.35;
        out << "lemma 5.3: fitted exponent " << r53.fitted_exponent << " -> "
            << (pass ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && pass;
    }

    if (!all_pass && cfg.strict) return exit_acceptance_failure;
    return exit_ok;
}

}  // namespace

int orchestrate(const RunConfig& cfg, std::ostream& out) {
    std::vector<ConfigIssue> errors;
    std::vector<ConfigIssue> warnings;
    validate_config(cfg, errors, warnings);
    for (const auto& w : warnings) out << "warning: " << w.message << "\n";
    if (!errors.empty()) {
        for (const auto& e : errors) out << "config error: " << e.message << "\n";
        return exit_config_error;
    }
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    echo_config(cfg);
    try {
        if (cfg.subcommand == "cell") return run_cell(cfg, out);
        if (cfg.subcommand == "micro") return run_micro_cmd(cfg, out);
        if (cfg.subcommand == "macro") return run_macro_cmd(cfg, out);
        if (cfg.subcommand == "correctors") return run_correctors_cmd(cfg, out);
        if (cfg.subcommand == "lemmas") return run_lemmas_cmd(cfg, out);
    } catch (const std::invalid_argument& e) {
        out << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        out << "solver failure: " << e.what() << "\n";
        return exit_solver_failure;
    }
    out << "config error: unknown subcommand '" << cfg.subcommand << "'\n";
    return exit_config_error;
}

}  // namespace homog
