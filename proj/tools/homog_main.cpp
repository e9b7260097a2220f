// Command-line front end: subcommands cell | micro | macro | correctors |
// lemmas, each mirroring the config-file keys as flags. Flags override the
// config file.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homog/config.hpp"
#include "homog/driver.hpp"
#include "homog/version.hpp"

namespace {

struct FlagStore {
    std::vector<std::pair<std::string, std::string>> overrides;

    void add(CLI::App* app, const std::string& flag, const std::string& key,
             const std::string& desc) {
        auto opt = app->add_option_function<std::string>(
            flag, [this, key](const std::string& v) { overrides.emplace_back(key, v); }, desc);
        opt->expected(1);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"homog: locally-periodic two-phase homogenization toolkit"};
    app.set_version_flag("--version", std::string("homog ") + homog::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key-value config file")->expected(1);

    const std::vector<std::string> subnames = {"cell", "micro", "macro", "correctors", "lemmas"};
    std::vector<CLI::App*> subs;
    std::vector<FlagStore> stores(subnames.size());
    for (size_t k = 0; k < subnames.size(); ++k) {
        CLI::App* sub = app.add_subcommand(subnames[k]);
        FlagStore& fs = stores[k];
        fs.add(sub, "--radius-spec", "geometry.radius", "constant | linear | bump");
        fs.add(sub, "--r0", "geometry.r0", "base inclusion radius");
        fs.add(sub, "--radius-slope", "geometry.slope", "linear radius slope");
        fs.add(sub, "--radius-amp", "geometry.amp", "bump amplitude");
        fs.add(sub, "--radius-sigma", "geometry.sigma", "bump width");
        fs.add(sub, "--D-h", "physics.D_h", "high-phase diffusivity");
        fs.add(sub, "--D-l", "physics.D_l", "low-phase diffusivity");
        fs.add(sub, "--velocity", "physics.velocity", "none | stream");
        fs.add(sub, "--velocity-amp", "physics.velocity_amp", "stream amplitude");
        fs.add(sub, "--boundary", "physics.boundary", "constant | decay | ramp");
        fs.add(sub, "--boundary-c", "physics.boundary_c", "boundary level");
        fs.add(sub, "--boundary-rate", "physics.boundary_rate", "boundary decay rate");
        fs.add(sub, "--initial", "physics.initial", "constant | sine");
        fs.add(sub, "--epsilon", "discretization.epsilon", "scale parameter (1/integer)");
        fs.add(sub, "--h", "discretization.h", "fine grid spacing");
        fs.add(sub, "--h-ratio", "discretization.h_ratio", "eps/h when --h is absent");
        fs.add(sub, "--dt", "discretization.dt", "time step");
        fs.add(sub, "--H", "discretization.H", "macro grid spacing");
        fs.add(sub, "--m", "discretization.m", "radial resolution");
        fs.add(sub, "--n", "discretization.n", "unit-cell resolution");
        fs.add(sub, "--eps-list", "run.eps_list", "ladder, e.g. 1/8,1/16,1/32");
        fs.add(sub, "--radii", "run.radii", "cell-table radius samples");
        fs.add(sub, "--table", "run.radii", "alias of --radii");
        fs.add(sub, "--T", "run.T", "time horizon");
        fs.add(sub, "--out", "run.out_dir", "output directory");
        fs.add(sub, "--seed", "run.seed", "seed for randomized checks");
        fs.add(sub, "--sample-every", "run.sample_every", "snapshot cadence");
        sub->add_flag_callback(
            "--strict", [&fs]() { fs.overrides.emplace_back("run.strict", "true"); },
            "nonzero exit on acceptance violations");
        subs.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    std::string subcommand;
    FlagStore* store = nullptr;
    for (size_t k = 0; k < subs.size(); ++k) {
        if (subs[k]->parsed()) {
            subcommand = subnames[k];
            store = &stores[k];
        }
    }

    // parse the file first, then apply flag overrides, then validate once
    homog::ParseResult parsed = homog::parse_config(config_path, {}, /*validate=*/false);
    parsed.config.subcommand = subcommand;
    if (store)
        for (const auto& [key, value] : store->overrides)
            homog::apply_override(parsed.config, key, value, parsed.errors);
    homog::validate_config(parsed.config, parsed.errors, parsed.warnings);

    if (!parsed.errors.empty()) {
        for (const auto& e : parsed.errors) {
            if (e.line > 0)
                std::cerr << "config error (line " << e.line << "): " << e.message << "\n";
            else
                std::cerr << "config error: " << e.message << "\n";
        }
        return homog::exit_config_error;
    }
    for (const auto& w : parsed.warnings) std::cerr << "warning: " << w.message << "\n";

    return homog::orchestrate(parsed.config, std::cout);
}
