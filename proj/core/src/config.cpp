#include "homog/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "homog/version.hpp"

namespace homog {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& s, int& out) {
    try {
        size_t pos = 0;
        out = std::stoi(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_list(const std::string& s, std::vector<double>& out) {
    out.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) return false;
        // accept "1/8" fractions for eps ladders
        const auto slash = item.find('/');
        double v;
        if (slash != std::string::npos) {
            double num, den;
            if (!parse_double(item.substr(0, slash), num) ||
                !parse_double(item.substr(slash + 1), den) || den == 0.0)
                return false;
            v = num / den;
        } else if (!parse_double(item, v)) {
            return false;
        }
        out.push_back(v);
    }
    return !out.empty();
}

}  // namespace

void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value,
                    std::vector<ConfigIssue>& errors, int line) {
    auto err = [&](const std::string& m) { errors.push_back({line, m}); };
    auto num = [&](double& field) {
        if (!parse_double(value, field)) err("invalid number for " + dotted_key + ": " + value);
    };
    auto integer = [&](int& field) {
        if (!parse_int(value, field)) err("invalid integer for " + dotted_key + ": " + value);
    };
    auto list = [&](std::vector<double>& field) {
        if (!parse_list(value, field)) err("invalid list for " + dotted_key + ": " + value);
    };

    if (dotted_key == "geometry.radius") cfg.radius_kind = value;
    else if (dotted_key == "geometry.r0") num(cfg.r0);
    else if (dotted_key == "geometry.slope") num(cfg.radius_slope);
    else if (dotted_key == "geometry.amp") num(cfg.radius_amp);
    else if (dotted_key == "geometry.sigma") num(cfg.radius_sigma);
    else if (dotted_key == "geometry.r_min") num(cfg.r_min);
    else if (dotted_key == "geometry.r_max") num(cfg.r_max);
    else if (dotted_key == "physics.D_h") num(cfg.d_h);
    else if (dotted_key == "physics.D_l") num(cfg.d_l);
    else if (dotted_key == "physics.velocity") cfg.velocity = value;
    else if (dotted_key == "physics.velocity_amp") num(cfg.velocity_amp);
    else if (dotted_key == "physics.boundary") cfg.boundary = value;
    else if (dotted_key == "physics.boundary_c") num(cfg.boundary_c);
    else if (dotted_key == "physics.boundary_rate") num(cfg.boundary_rate);
    else if (dotted_key == "physics.boundary_slope") num(cfg.boundary_slope);
    else if (dotted_key == "physics.initial") cfg.initial = value;
    else if (dotted_key == "physics.initial_c") num(cfg.initial_c);
    else if (dotted_key == "physics.initial_amp") num(cfg.initial_amp);
    else if (dotted_key == "discretization.epsilon") {
        std::vector<double> one;
        if (parse_list(value, one) && one.size() == 1) cfg.epsilon = one[0];
        else err("invalid number for " + dotted_key + ": " + value);
    }
    else if (dotted_key == "discretization.h") num(cfg.h);
    else if (dotted_key == "discretization.h_ratio") integer(cfg.h_ratio);
    else if (dotted_key == "discretization.dt") num(cfg.dt);
    else if (dotted_key == "discretization.H") num(cfg.macro_h);
    else if (dotted_key == "discretization.m") integer(cfg.radial_m);
    else if (dotted_key == "discretization.n") integer(cfg.cell_n);
    else if (dotted_key == "run.eps_list") list(cfg.eps_list);
    else if (dotted_key == "run.radii") list(cfg.radii);
    else if (dotted_key == "run.T") num(cfg.horizon);
    else if (dotted_key == "run.out_dir") cfg.out_dir = value;
    else if (dotted_key == "run.seed") {
        int s = 0;
        if (!parse_int(value, s) || s < 0) err("invalid seed: " + value);
        else cfg.seed = static_cast<unsigned>(s);
    }
    else if (dotted_key == "run.strict") {
        if (value == "true" || value == "1") cfg.strict = true;
        else if (value == "false" || value == "0") cfg.strict = false;
        else err("invalid boolean for run.strict: " + value);
    }
    else if (dotted_key == "run.sample_every") integer(cfg.sample_every);
    else err("unknown key: " + dotted_key);
}

void validate_config(const RunConfig& cfg, std::vector<ConfigIssue>& errors,
                     std::vector<ConfigIssue>& warnings) {
    auto err = [&](const std::string& m) { errors.push_back({0, m}); };
    auto warn = [&](const std::string& m) { warnings.push_back({0, m}); };

    if (cfg.radius_kind != "constant" && cfg.radius_kind != "linear" && cfg.radius_kind != "bump")
        err("geometry.radius must be constant, linear or bump");
    if (cfg.r_max >= 0.5) err("r_max must be < 0.5");
    if (cfg.r0 < 0.0 || cfg.r0 >= 0.5) err("geometry.r0 must lie in [0, 0.5)");
    if (cfg.d_h <= 0.0) err("physics.D_h must be positive");
    if (cfg.d_l < 0.0) err("physics.D_l must be nonnegative");
    if (cfg.velocity != "none" && cfg.velocity != "stream")
        err("physics.velocity must be none or stream");
    if (cfg.boundary != "constant" && cfg.boundary != "decay" && cfg.boundary != "ramp")
        err("physics.boundary must be constant, decay or ramp");
    if (cfg.boundary == "ramp" && cfg.boundary_c < 0.0)
        err("ramp boundary offset must be >= 0 to keep d/dt u_b <= 0");
    if (cfg.initial != "constant" && cfg.initial != "sine")
        err("physics.initial must be constant or sine");

    const double inv_eps = cfg.epsilon > 0.0 ? 1.0 / cfg.epsilon : 0.0;
    if (cfg.epsilon <= 0.0 || std::abs(inv_eps - std::lround(inv_eps)) > 1e-9)
        err("1/epsilon must be a positive integer");
    const double h = cfg.h > 0.0 ? cfg.h : cfg.epsilon / cfg.h_ratio;
    if (h <= 0.0) {
        err("grid spacing must be positive");
    } else {
        const double ratio = cfg.epsilon / h;
        if (std::abs(ratio - std::lround(ratio)) > 1e-9) err("h must divide epsilon");
    }
    if (cfg.h_ratio <= 0) err("discretization.h_ratio must be positive");
    if (cfg.radial_m < 2) err("discretization.m must be >= 2");
    if (cfg.cell_n < 32) err("discretization.n must be >= 32");
    if (cfg.horizon < 0.0) err("run.T must be nonnegative");
    if (cfg.sample_every <= 0) err("run.sample_every must be positive");

    for (size_t k = 0; k + 1 < cfg.eps_list.size(); ++k) {
        if (cfg.eps_list[k + 1] >= cfg.eps_list[k]) {
            err("run.eps_list must be strictly decreasing");
            break;
        }
    }
    bool halving = true;
    for (size_t k = 0; k + 1 < cfg.eps_list.size(); ++k)
        if (std::abs(cfg.eps_list[k + 1] - 0.5 * cfg.eps_list[k]) > 1e-12) halving = false;
    if (!halving && cfg.eps_list.size() > 1)
        warn("eps list is not a halving ladder; the rate fit remains valid");

    for (size_t k = 0; k + 1 < cfg.radii.size(); ++k)
        if (cfg.radii[k] >= cfg.radii[k + 1]) {
            err("run.radii must be sorted and distinct");
            break;
        }
    if (!cfg.radii.empty() && (cfg.radii.front() < 0.0 || cfg.radii.back() >= 0.5))
        err("run.radii must lie in [0, 0.5)");
}

ParseResult parse_config(const std::string& path, const RunConfig& defaults, bool validate) {
    ParseResult result;
    result.config = defaults;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            result.errors.push_back({0, "cannot open config file: " + path});
            return result;
        }
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']') {
                section = trim(line.substr(1, line.size() - 2));
                if (section != "geometry" && section != "physics" &&
                    section != "discretization" && section != "run")
                    result.errors.push_back({lineno, "unknown section: [" + section + "]"});
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                result.errors.push_back({lineno, "expected key = value: " + line});
                continue;
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (section.empty()) {
                result.errors.push_back({lineno, "key outside any section: " + key});
                continue;
            }
            apply_override(result.config, section + "." + key, value, result.errors, lineno);
        }
    }
    if (validate) validate_config(result.config, result.errors, result.warnings);
    return result;
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    out.precision(17);
    out << "subcommand=" << subcommand << "\n";
    out << "[geometry]\n";
    out << "radius=" << radius_kind << "\nr0=" << r0 << "\nslope=" << radius_slope
        << "\namp=" << radius_amp << "\nsigma=" << radius_sigma << "\nr_min=" << r_min
        << "\nr_max=" << r_max << "\n";
    out << "[physics]\n";
    out << "D_h=" << d_h << "\nD_l=" << d_l << "\nvelocity=" << velocity
        << "\nvelocity_amp=" << velocity_amp << "\nboundary=" << boundary
        << "\nboundary_c=" << boundary_c << "\nboundary_rate=" << boundary_rate
        << "\nboundary_slope=" << boundary_slope << "\ninitial=" << initial
        << "\ninitial_c=" << initial_c << "\ninitial_amp=" << initial_amp << "\n";
    out << "[discretization]\n";
    out << "epsilon=" << epsilon << "\nh=" << h << "\nh_ratio=" << h_ratio << "\ndt=" << dt
        << "\nH=" << macro_h << "\nm=" << radial_m << "\nn=" << cell_n << "\n";
    out << "[run]\n";
    out << "eps_list=";
    for (size_t k = 0; k < eps_list.size(); ++k) out << (k ? "," : "") << eps_list[k];
    out << "\nradii=";
    for (size_t k = 0; k < radii.size(); ++k) out << (k ? "," : "") << radii[k];
    out << "\nT=" << horizon << "\nseed=" << seed << "\nstrict=" << (strict ? 1 : 0)
        << "\nsample_every=" << sample_every << "\n";
    return out.str();
}

std::string RunConfig::hash() const {
    const std::string s = canonical();
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunConfig::header_comment() const {
    return std::string("# homog ") + kVersion + " config=" + hash();
}

}  // namespace homog
