#pragma once

// Shared test utilities: a dense LU oracle independent of the sparse
// solvers, plus small helpers for random test data.

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace testsup {

/// Dense Gaussian elimination with partial pivoting; the brute-force
/// reference for every sparse-solver check.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a,
                                       std::vector<double> b) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw std::runtime_error("dense_solve: singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return x;
}

/// Random symmetric positive definite matrix (diagonally dominant).
inline std::vector<std::vector<double>> random_spd(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = uni(rng);
            a[i][j] = v;
            a[j][i] = v;
        }
    for (int i = 0; i < n; ++i) {
        double off = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) off += std::abs(a[i][j]);
        a[i][i] = off + 1.0 + std::abs(a[i][i]);
    }
    return a;
}

/// 4-connected component count of a boolean mask (independent check of
/// inclusion separation).
inline int component_count(const std::vector<std::uint8_t>& mask, int nx, int ny,
                           std::uint8_t want) {
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<std::int64_t> stack;
    int count = 0;
    for (std::int64_t start = 0; start < static_cast<std::int64_t>(mask.size()); ++start) {
        if (mask[start] != want || seen[start]) continue;
        ++count;
        stack.push_back(start);
        seen[start] = 1;
        while (!stack.empty()) {
            const std::int64_t k = stack.back();
            stack.pop_back();
            const int i = static_cast<int>(k % nx);
            const int j = static_cast<int>(k / nx);
            const int di[4] = {1, -1, 0, 0};
            const int dj[4] = {0, 0, 1, -1};
            for (int f = 0; f < 4; ++f) {
                const int ii = i + di[f], jj = j + dj[f];
                if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
                const std::int64_t kk = static_cast<std::int64_t>(jj) * nx + ii;
                if (mask[kk] == want && !seen[kk]) {
                    seen[kk] = 1;
                    stack.push_back(kk);
                }
            }
        }
    }
    return count;
}

}  // namespace testsup
