#include "homog/cell.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "homog/numerics.hpp"

namespace homog {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

CellSolution::CellSolution(double r, int n, double tol, std::int64_t max_iter) : r_(r), n_(n) {
    if (r < 0.0 || r >= 0.5) throw std::invalid_argument("cell radius must lie in [0, 1/2)");
    if (n < 32) throw std::invalid_argument("cell resolution must be >= 32");
    h_ = 1.0 / n;
    const std::int64_t nc = std::int64_t(n) * n;
    solid_.assign(nc, 0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (center(i, j).norm() < r) solid_[idx(i, j)] = 1;
    fluid_count_ = 0;
    for (auto s : solid_)
        if (!s) ++fluid_count_;

    // Reduced unknowns on fluid cells.
    std::vector<std::int64_t> unknown(nc, -1);
    {
        std::int64_t u = 0;
        for (std::int64_t k = 0; k < nc; ++k)
            if (!solid_[k]) unknown[k] = u++;
    }

    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    const double nrm[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};

    for (int dir = 0; dir < 2; ++dir) {
        std::vector<std::int64_t> rows, cols;
        std::vector<double> vals;
        std::vector<double> b(fluid_count_, 0.0);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                const std::int64_t k = idx(i, j);
                if (solid_[k]) continue;
                const std::int64_t row = unknown[k];
                double diag = 0.0;
                for (int f = 0; f < 4; ++f) {
                    const std::int64_t kn = idx(i + dx[f], j + dy[f]);
                    if (solid_[kn]) continue;  // blocked face: zero conductance
                    diag += 1.0;
                    rows.push_back(row);
                    cols.push_back(unknown[kn]);
                    vals.push_back(-1.0);
                    b[row] += h_ * nrm[f][dir];  // e_dir . n_f source on open faces
                }
                if (diag == 0.0) diag = 1.0;  // isolated cell (does not occur for r<1/2)
                rows.push_back(row);
                cols.push_back(row);
                vals.push_back(diag);
            }
        }
        SparseSystem sys;
        sys.matrix = CsrMatrix::from_triplets(fluid_count_, std::move(rows), std::move(cols),
                                              std::move(vals));
        sys.rhs = std::move(b);
        SolverOptions opts;
        opts.tol = tol;
        opts.max_iter = max_iter > 0 ? max_iter : 40 * fluid_count_;
        opts.precond = Precond::jacobi;
        auto [x, stats] = cg_solve(sys, opts);
        if (!stats.converged)
            throw std::runtime_error("cell problem solver did not converge (r=" +
                                     std::to_string(r) + ", n=" + std::to_string(n) + ")");
        iters_[dir] = stats.iterations;
        // zero-mean normalization over Y
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(fluid_count_);
        m_[dir].assign(nc, 0.0);
        for (std::int64_t k = 0; k < nc; ++k)
            if (!solid_[k]) m_[dir][k] = x[unknown[k]] - mean;
    }
}

bool CellSolution::face_open_x(int i, int j) const {
    return !solid_[idx(i - 1, j)] && !solid_[idx(i, j)];
}
bool CellSolution::face_open_y(int i, int j) const {
    return !solid_[idx(i, j - 1)] && !solid_[idx(i, j)];
}

double CellSolution::value_at(int dir, const Vec2& y) const {
    // locate the cell-center lattice square containing y (periodic)
    const double gx = (y.x + 0.5) / h_ - 0.5;
    const double gy = (y.y + 0.5) / h_ - 0.5;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double tx = gx - i0, ty = gy - j0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const std::int64_t k[4] = {idx(i0, j0), idx(i0 + 1, j0), idx(i0, j0 + 1), idx(i0 + 1, j0 + 1)};
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 4; ++c) {
        if (solid_[k[c]]) continue;
        num += w[c] * m_[dir][k[c]];
        den += w[c];
    }
    return den > 0.0 ? num / den : 0.0;
}

Vec2 CellSolution::gradient(int dir, int i, int j) const {
    Vec2 g{0.0, 0.0};
    const std::int64_t k = idx(i, j);
    if (solid_[k]) return g;
    const double v = m_[dir][k];
    // x component
    {
        double s = 0.0;
        int c = 0;
        if (face_open_x(i, j)) s += (v - m_[dir][idx(i - 1, j)]) / h_, ++c;
        if (face_open_x(i + 1, j)) s += (m_[dir][idx(i + 1, j)] - v) / h_, ++c;
        g.x = c ? s / c : 0.0;
    }
    {
        double s = 0.0;
        int c = 0;
        if (face_open_y(i, j)) s += (v - m_[dir][idx(i, j - 1)]) / h_, ++c;
        if (face_open_y(i, j + 1)) s += (m_[dir][idx(i, j + 1)] - v) / h_, ++c;
        g.y = c ? s / c : 0.0;
    }
    return g;
}

Vec2 CellSolution::gradient_at(int dir, const Vec2& y) const {
    const double gx = (y.x + 0.5) / h_ - 0.5;
    const double gy = (y.y + 0.5) / h_ - 0.5;
    const int i0 = static_cast<int>(std::floor(gx));
    const int j0 = static_cast<int>(std::floor(gy));
    const double tx = gx - i0, ty = gy - j0;
    const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
    const int ii[4] = {i0, i0 + 1, i0, i0 + 1};
    const int jj[4] = {j0, j0, j0 + 1, j0 + 1};
    Vec2 num{0.0, 0.0};
    double den = 0.0;
    for (int c = 0; c < 4; ++c) {
        if (solid_[idx(ii[c], jj[c])]) continue;
        const Vec2 g = gradient(dir, (ii[c] % n_ + n_) % n_, (jj[c] % n_ + n_) % n_);
        num = num + w[c] * g;
        den += w[c];
    }
    return den > 0.0 ? num * (1.0 / den) : Vec2{0.0, 0.0};
}

double CellSolution::mean(int dir) const {
    double s = 0.0;
    for (std::int64_t k = 0; k < std::int64_t(n_) * n_; ++k)
        if (!solid_[k]) s += m_[dir][k];
    return s / static_cast<double>(fluid_count_);
}

double CellSolution::fv_residual(int dir) const {
    const int dx[4] = {1, -1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    const double nrm[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    double worst = 0.0;
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) {
            const std::int64_t k = idx(i, j);
            if (solid_[k]) continue;
            double bal = 0.0;
            for (int f = 0; f < 4; ++f) {
                const std::int64_t kn = idx(i + dx[f], j + dy[f]);
                if (solid_[kn]) continue;
                bal += h_ * ((m_[dir][kn] - m_[dir][k]) / h_ + nrm[f][dir]);
            }
            worst = std::max(worst, std::abs(bal) / (h_ * h_));
        }
    }
    return worst;
}

double CellSolution::periodicity_residual() const {
    double worst = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        for (int s = 0; s <= 64; ++s) {
            const double t = -0.5 + s / 64.0;
            const double a = value_at(dir, {-0.5, t});
            const double b = value_at(dir, {0.5, t});
            const double c = value_at(dir, {t, -0.5});
            const double d = value_at(dir, {t, 0.5});
            worst = std::max({worst, std::abs(a - b), std::abs(c - d)});
        }
    }
    return worst;
}

Tensor2 CellSolution::averaged_gradient_tensor() const {
    Tensor2 t{{{0.0, 0.0}, {0.0, 0.0}}};
    const double h2 = h_ * h_;
    for (int dir = 0; dir < 2; ++dir) {
        double tx = 0.0, ty = 0.0;
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < n_; ++i) {
                if (face_open_x(i, j))
                    tx += h2 * ((m_[dir][idx(i, j)] - m_[dir][idx(i - 1, j)]) / h_ +
                                (dir == 0 ? 1.0 : 0.0));
                if (face_open_y(i, j))
                    ty += h2 * ((m_[dir][idx(i, j)] - m_[dir][idx(i, j - 1)]) / h_ +
                                (dir == 1 ? 1.0 : 0.0));
            }
        }
        t[0][dir] = tx;
        t[1][dir] = ty;
    }
    return t;
}

double CellSolution::energy(int dir, const std::vector<double>& w) const {
    const double h2 = h_ * h_;
    double e = 0.0;
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) {
            if (face_open_x(i, j)) {
                const double d = (w[idx(i, j)] - w[idx(i - 1, j)]) / h_ + (dir == 0 ? 1.0 : 0.0);
                e += h2 * d * d;
            }
            if (face_open_y(i, j)) {
                const double d = (w[idx(i, j)] - w[idx(i, j - 1)]) / h_ + (dir == 1 ? 1.0 : 0.0);
                e += h2 * d * d;
            }
        }
    }
    return e;
}

CellSolution solve_cell(double r, int n, double tol, std::int64_t max_iter) {
    return CellSolution(r, n, tol, max_iter);
}

Tensor2 effective_tensor(const CellSolution& sol, double d_h) {
    Tensor2 t = sol.averaged_gradient_tensor();
    for (auto& row : t)
        for (auto& v : row) v *= d_h;
    return t;
}

double porosity(double r) { return 1.0 - kPi * r * r; }

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("pchip needs >= 2 knots");
    d_.assign(n, 0.0);
    std::vector<double> hseg(n - 1), slope(n - 1);
    for (size_t k = 0; k + 1 < n; ++k) {
        hseg[k] = x_[k + 1] - x_[k];
        if (hseg[k] <= 0.0) throw std::invalid_argument("pchip knots must be strictly increasing");
        slope[k] = (y_[k + 1] - y_[k]) / hseg[k];
    }
    if (n == 2) {
        d_[0] = d_[1] = slope[0];
        return;
    }
    // Fritsch-Carlson interior slopes
    for (size_t k = 1; k + 1 < n; ++k) {
        if (slope[k - 1] * slope[k] <= 0.0) {
            d_[k] = 0.0;
        } else {
            const double w1 = 2.0 * hseg[k] + hseg[k - 1];
            const double w2 = hseg[k] + 2.0 * hseg[k - 1];
            d_[k] = (w1 + w2) / (w1 / slope[k - 1] + w2 / slope[k]);
        }
    }
    // one-sided ends (shape-preserving, Moler)
    auto end_slope = [](double h0, double h1, double s0, double s1) {
        double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0.0)
            d = 0.0;
        else if (s0 * s1 < 0.0 && std::abs(d) > 3.0 * std::abs(s0))
            d = 3.0 * s0;
        return d;
    };
    d_[0] = end_slope(hseg[0], hseg[1], slope[0], slope[1]);
    d_[n - 1] = end_slope(hseg[n - 2], hseg[n - 3], slope[n - 2], slope[n - 3]);
}

double Pchip::operator()(double x) const {
    const size_t n = x_.size();
    size_t k = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    k = std::min(std::max<size_t>(k, 1), n - 1) - 1;
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
    const double h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t);
    const double h11 = t * t * (t - 1);
    return h00 * y_[k] + h * h10 * d_[k] + h01 * y_[k + 1] + h * h11 * d_[k + 1];
}

double Pchip::derivative(double x) const {
    const size_t n = x_.size();
    size_t k = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    k = std::min(std::max<size_t>(k, 1), n - 1) - 1;
    const double h = x_[k + 1] - x_[k];
    const double t = (x - x_[k]) / h;
    const double g00 = 6 * t * (t - 1) / h;
    const double g10 = (1 - t) * (1 - 3 * t);
    const double g01 = -g00;
    const double g11 = t * (3 * t - 2);
    return g00 * y_[k] + g10 * d_[k] + g01 * y_[k + 1] + g11 * d_[k + 1];
}

EffectiveTable::EffectiveTable(std::vector<double> radii, int n, double d_h, double tol)
    : radii_(std::move(radii)), n_(n), d_h_(d_h) {
    if (radii_.size() < 4)
        throw std::invalid_argument("effective table needs at least 4 radius samples");
    for (size_t k = 0; k + 1 < radii_.size(); ++k)
        if (radii_[k] >= radii_[k + 1])
            throw std::invalid_argument("radius samples must be sorted and distinct");
    if (radii_.front() < 0.0 || radii_.back() >= 0.5)
        throw std::invalid_argument("radius samples must lie in [0, 1/2)");
    cells_.reserve(radii_.size());
    for (double r : radii_) cells_.push_back(solve_cell(r, n, tol));
    std::array<std::array<std::vector<double>, 2>, 2> comp;
    for (const auto& c : cells_) {
        const Tensor2 t = effective_tensor(c, d_h_);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) comp[i][j].push_back(t[i][j]);
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) interp_[i][j] = Pchip(radii_, comp[i][j]);
}

void EffectiveTable::bracket(double r, size_t& k, double& t) const {
    if (r < radii_.front() - 1e-12 || r > radii_.back() + 1e-12)
        throw std::out_of_range("radius outside table range");
    k = std::upper_bound(radii_.begin(), radii_.end(), r) - radii_.begin();
    k = std::min(std::max<size_t>(k, 1), radii_.size() - 1) - 1;
    t = (r - radii_[k]) / (radii_[k + 1] - radii_[k]);
    t = std::min(1.0, std::max(0.0, t));
}

Tensor2 EffectiveTable::tensor(double r) const {
    if (r < radii_.front() - 1e-12 || r > radii_.back() + 1e-12)
        throw std::out_of_range("radius outside table range");
    Tensor2 t;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t[i][j] = interp_[i][j](r);
    return t;
}

double EffectiveTable::m_at(int dir, double r, const Vec2& y) const {
    size_t k;
    double t;
    bracket(r, k, t);
    const double a = cells_[k].value_at(dir, y);
    if (t == 0.0) return a;
    const double b = cells_[k + 1].value_at(dir, y);
    return (1.0 - t) * a + t * b;
}

void EffectiveTable::write_csv(const std::string& path, const std::string& header_comment) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    if (!header_comment.empty()) out << header_comment << "\n";
    out << "# n=" << n_ << " D_h=" << d_h_ << "\n";
    out << "r,theta,D11,D12,D21,D22\n";
    out.precision(17);
    for (size_t k = 0; k < radii_.size(); ++k) {
        const Tensor2 t = effective_tensor(cells_[k], d_h_);
        out << radii_[k] << ',' << porosity(radii_[k]) << ',' << t[0][0] << ',' << t[0][1] << ','
            << t[1][0] << ',' << t[1][1] << '\n';
    }
}

EffectiveTable build_table(const std::vector<double>& radii, int n, double d_h) {
    return EffectiveTable(radii, n, d_h);
}

}  // namespace homog
