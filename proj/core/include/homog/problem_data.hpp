#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "homog/grid.hpp"

namespace homog {

/// Dirichlet boundary data u_b(x,t), restricted to non-increasing-in-time
/// profiles. Custom callables are accepted for tests.
struct BoundaryData {
    enum class Kind { constant, decay, ramp, custom };
    Kind kind = Kind::constant;
    double c = 1.0;
    double lambda = 1.0;  // decay rate
    double slope = 0.0;   // spatial slope for the ramp profile
    std::function<double(const Vec2&, double)> fn;

    static BoundaryData constant(double c0) {
        BoundaryData b;
        b.kind = Kind::constant;
        b.c = c0;
        return b;
    }
    static BoundaryData decay(double c0, double rate) {
        BoundaryData b;
        b.kind = Kind::decay;
        b.c = c0;
        b.lambda = rate;
        return b;
    }
    static BoundaryData ramp(double c0, double s, double rate) {
        if (c0 < 0.0) throw std::invalid_argument("ramp offset must be >= 0");
        BoundaryData b;
        b.kind = Kind::ramp;
        b.c = c0;
        b.slope = s;
        b.lambda = rate;
        return b;
    }
    static BoundaryData custom(std::function<double(const Vec2&, double)> f) {
        BoundaryData b;
        b.kind = Kind::custom;
        b.fn = std::move(f);
        return b;
    }

    double operator()(const Vec2& x, double t) const {
        switch (kind) {
            case Kind::constant:
                return c;
            case Kind::decay:
                return c * std::exp(-lambda * t);
            case Kind::ramp:
                return (c + slope * (x.x + x.y)) * std::exp(-lambda * t);
            case Kind::custom:
                return fn(x, t);
        }
        return c;
    }
    std::string name() const {
        switch (kind) {
            case Kind::constant: return "constant";
            case Kind::decay: return "decay";
            case Kind::ramp: return "ramp";
            case Kind::custom: return "custom";
        }
        return "constant";
    }
};

/// Macroscopic scalar field preset (initial data builders). The eps-level
/// initial data is this field sampled on the fine grid, which keeps it
/// trivially close to its own reconstruction.
struct ScalarField {
    enum class Kind { constant, sine, custom };
    Kind kind = Kind::constant;
    double c = 1.0;
    double amp = 0.0;
    std::function<double(const Vec2&)> fn;

    static ScalarField constant(double c0) {
        ScalarField f;
        f.kind = Kind::constant;
        f.c = c0;
        return f;
    }
    static ScalarField sine(double c0, double a) {
        ScalarField f;
        f.kind = Kind::sine;
        f.c = c0;
        f.amp = a;
        return f;
    }
    static ScalarField custom(std::function<double(const Vec2&)> g) {
        ScalarField f;
        f.kind = Kind::custom;
        f.fn = std::move(g);
        return f;
    }

    double operator()(const Vec2& x) const {
        constexpr double pi = 3.14159265358979323846;
        switch (kind) {
            case Kind::constant:
                return c;
            case Kind::sine:
                return c + amp * std::sin(pi * x.x) * std::sin(pi * x.y);
            case Kind::custom:
                return fn(x);
        }
        return c;
    }
    std::string name() const {
        switch (kind) {
            case Kind::constant: return "constant";
            case Kind::sine: return "sine";
            case Kind::custom: return "custom";
        }
        return "constant";
    }
};

/// Divergence-free velocity preset: zero, or the rotated gradient of the
/// stream function psi = sin(pi x1) sin(pi x2) scaled by an amplitude.
struct VelocitySpec {
    enum class Kind { none, stream };
    Kind kind = Kind::none;
    double amplitude = 0.0;

    static VelocitySpec none() { return {}; }
    static VelocitySpec stream(double a) {
        VelocitySpec v;
        v.kind = Kind::stream;
        v.amplitude = a;
        return v;
    }

    double psi(const Vec2& x) const {
        constexpr double pi = 3.14159265358979323846;
        if (kind == Kind::none) return 0.0;
        return amplitude * std::sin(pi * x.x) * std::sin(pi * x.y);
    }
    bool active() const { return kind == Kind::stream && amplitude != 0.0; }
    std::string name() const { return kind == Kind::none ? "none" : "stream"; }
};

}  // namespace homog
