#include "spe/grid.hpp"

#include <cmath>

namespace spe {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

int padded_nodes(int nmode) {
    // Midpoint rule on q uniform cells integrates cos(p pi s / len) exactly
    // for p < 2q. Triple products of retained modes reach p = 3*nmode.
    return (3 * nmode) / 2 + 1;
}
}  // namespace

Grid::Grid(double L, double h, int nx, int nz) : L_(L), h_(h), nx_(nx), nz_(nz) {
    if (!(L > 0.0) || !(h > 0.0))
        throw config_error("grid: domain lengths must be positive");
    if (nx < 1 || nz < 1)
        throw config_error("grid: mode counts must be at least 1");

    qx_ = padded_nodes(nx_);
    qz_ = padded_nodes(nz_);
    pi_over_L_ = kPi / L_;
    pi_over_h_ = kPi / h_;

    xq_.resize(qx_);
    zq_.resize(qz_);
    for (int q = 0; q < qx_; ++q) xq_[q] = (q + 0.5) * L_ / qx_;
    for (int r = 0; r < qz_; ++r) zq_[r] = -h_ + (r + 0.5) * h_ / qz_;

    sin_x_.resize(static_cast<size_t>(qx_) * nx_);
    cos_x_.resize(static_cast<size_t>(qx_) * (nx_ + 1));
    cos_z_.resize(static_cast<size_t>(qz_) * (nz_ + 1));
    sin_z_.resize(static_cast<size_t>(qz_) * nz_);
    for (int q = 0; q < qx_; ++q) {
        for (int k = 1; k <= nx_; ++k) sin_x_[static_cast<size_t>(q) * nx_ + (k - 1)] = std::sin(k * pi_over_L_ * xq_[q]);
        for (int k = 0; k <= nx_; ++k) cos_x_[static_cast<size_t>(q) * (nx_ + 1) + k] = std::cos(k * pi_over_L_ * xq_[q]);
    }
    for (int r = 0; r < qz_; ++r) {
        for (int m = 0; m <= nz_; ++m) cos_z_[static_cast<size_t>(r) * (nz_ + 1) + m] = std::cos(m * pi_over_h_ * zq_[r]);
        for (int m = 1; m <= nz_; ++m) sin_z_[static_cast<size_t>(r) * nz_ + (m - 1)] = std::sin(m * pi_over_h_ * zq_[r]);
    }
}

Grid make_grid(double L, double h, int nx, int nz) { return Grid(L, h, nx, nz); }

bool Field::h_admissible(double tol) const {
    const int nz = grid_->nz();
    for (int k = 1; k <= grid_->nx(); ++k)
        if (std::abs(at(k, 0)) > tol) return false;
    (void)nz;
    return true;
}

Field& Field::operator+=(const Field& o) {
    if (!grid_->same_as(o.grid())) throw shape_error("field sum: grid mismatch");
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    if (!grid_->same_as(o.grid())) throw shape_error("field difference: grid mismatch");
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Field& Field::operator*=(double a) {
    for (double& x : c_) x *= a;
    return *this;
}

double eval_field(const Field& f, double x, double z) {
    const Grid& g = f.grid();
    if (x < 0.0 || x > g.L() || z < -g.h() || z > 0.0)
        throw std::domain_error("eval_field: point outside [0,L]x[-h,0]");
    double sum = 0.0;
    for (int k = 1; k <= g.nx(); ++k) {
        double sx = std::sin(k * g.pi_over_L() * x);
        if (sx == 0.0) continue;
        double inner = 0.0;
        for (int m = 0; m <= g.nz(); ++m) inner += f.at(k, m) * std::cos(m * g.pi_over_h() * z);
        sum += sx * inner;
    }
    return sum;
}

double eval_theta(const ThetaField& t, double x, double z) {
    const Grid& g = t.grid();
    if (x < 0.0 || x > g.L() || z < -g.h() || z > 0.0)
        throw std::domain_error("eval_theta: point outside [0,L]x[-h,0]");
    double sum = 0.0;
    for (int k = 0; k <= g.nx(); ++k) {
        double cx = std::cos(k * g.pi_over_L() * x);
        double inner = 0.0;
        for (int m = 1; m <= g.nz(); ++m) inner += t.at(k, m) * std::sin(m * g.pi_over_h() * z);
        sum += cx * inner;
    }
    return sum;
}

double l2_inner(const Field& u, const Field& v) {
    const Grid& g = u.grid();
    if (!g.same_as(v.grid())) throw shape_error("l2_inner: grid mismatch");
    double sum = 0.0;
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m) sum += u.at(k, m) * v.at(k, m) * g.weight(m);
    return sum;
}

Norms norms(const Field& v) {
    const Grid& g = v.grid();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m) {
            double lam = g.lambda(k, m);
            double cw = v.at(k, m) * v.at(k, m) * g.weight(m);
            s0 += cw;
            s1 += lam * cw;
            s2 += lam * lam * cw;
        }
    return {std::sqrt(s0), std::sqrt(s1), std::sqrt(s2)};
}

DzNorms dz_norms(const Field& v) {
    const Grid& g = v.grid();
    double s0 = 0.0, s1 = 0.0;
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 1; m <= g.nz(); ++m) {
            double dz = m * g.pi_over_h();
            // sin*sin mass is (L/2)(h/2) for every m>=1.
            double cw = dz * dz * v.at(k, m) * v.at(k, m) * 0.25 * g.L() * g.h();
            s0 += cw;
            s1 += g.lambda(k, m) * cw;
        }
    return {std::sqrt(s0), std::sqrt(s1)};
}

DzField dz_field(const Field& v) {
    const Grid& g = v.grid();
    DzField r(g);
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 1; m <= g.nz(); ++m) r.at(k, m) = -m * g.pi_over_h() * v.at(k, m);
    return r;
}

}  // namespace spe
