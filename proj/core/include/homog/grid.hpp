#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace homog {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Axis-aligned rectangle, default unit square.
struct Rect {
    double ax = 0.0, ay = 0.0;
    double bx = 1.0, by = 1.0;

    double width() const { return bx - ax; }
    double height() const { return by - ay; }
    bool contains(const Vec2& p) const {
        return p.x >= ax && p.x <= bx && p.y >= ay && p.y <= by;
    }
    /// Euclidean distance from an interior point to the boundary.
    double boundary_distance(const Vec2& p) const {
        double d = p.x - ax;
        d = std::min(d, bx - p.x);
        d = std::min(d, p.y - ay);
        d = std::min(d, by - p.y);
        return d;
    }
};

/// Uniform cell-centered grid over a rectangle. Values live at cell
/// centers ("nodes"); faces separate neighboring cells.
struct Grid2 {
    Rect box;
    int nx = 0, ny = 0;
    double h = 0.0;

    Grid2() = default;
    Grid2(const Rect& box_, double h_) : box(box_), h(h_) {
        const double rx = box.width() / h, ry = box.height() / h;
        nx = static_cast<int>(std::lround(rx));
        ny = static_cast<int>(std::lround(ry));
        if (nx <= 0 || ny <= 0 || std::abs(rx - nx) > 1e-9 * nx ||
            std::abs(ry - ny) > 1e-9 * ny) {
            throw std::invalid_argument("grid spacing must divide the domain extent");
        }
    }

    std::int64_t num_cells() const { return std::int64_t(nx) * ny; }
    std::int64_t index(int i, int j) const { return std::int64_t(j) * nx + i; }
    Vec2 center(int i, int j) const {
        return {box.ax + (i + 0.5) * h, box.ay + (j + 0.5) * h};
    }
    bool valid(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }

    /// Cell containing a point (clamped to the index range).
    void locate(const Vec2& p, int& i, int& j) const {
        i = static_cast<int>(std::floor((p.x - box.ax) / h));
        j = static_cast<int>(std::floor((p.y - box.ay) / h));
        i = std::max(0, std::min(nx - 1, i));
        j = std::max(0, std::min(ny - 1, j));
    }
};

}  // namespace homog
