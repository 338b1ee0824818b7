#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace spe {

/// Thrown when a configuration value is out of range.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when two objects live on incompatible grids or have mismatched shapes.
struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an operation requires an H-admissible field (zero vertical mean).
struct constraint_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Spectral discretization of [0,L] x [-h,0].
//
// Velocity-like fields use sin(k pi x / L) cos(m pi z / h), k=1..nx, m=0..nz,
// which satisfies v=0 on the lateral walls and dv/dz=0 on top and bottom.
// The quadrature grid is a midpoint rule padded so products of any three
// retained basis functions are integrated exactly.
class Grid {
  public:
    Grid(double L, double h, int nx, int nz);

    double L() const { return L_; }
    double h() const { return h_; }
    int nx() const { return nx_; }
    int nz() const { return nz_; }
    int qx() const { return qx_; }
    int qz() const { return qz_; }

    // Stokes eigenvalue of mode (k,m): (k pi/L)^2 + (m pi/h)^2.
    double lambda(int k, int m) const {
        double a = k * pi_over_L_, b = m * pi_over_h_;
        return a * a + b * b;
    }
    // L2 mass of basis mode sin(k.) cos(m.): (L/2) * (h for m=0, h/2 otherwise).
    double weight(int m) const { return m == 0 ? 0.5 * L_ * h_ : 0.25 * L_ * h_; }

    double pi_over_L() const { return pi_over_L_; }
    double pi_over_h() const { return pi_over_h_; }
    double min_lambda() const { return lambda(1, 0) < lambda(1, 1) ? lambda(1, 0) : lambda(1, 1); }

    const std::vector<double>& xq() const { return xq_; }
    const std::vector<double>& zq() const { return zq_; }

    // Basis tables on the quadrature grid, row-major over nodes.
    // sin_x[q*nx + (k-1)] = sin(k pi x_q / L),  cos_x[q*(nx+1) + k] = cos(k pi x_q / L),
    // cos_z[r*(nz+1) + m] = cos(m pi z_r / h),  sin_z[r*nz + (m-1)] = sin(m pi z_r / h).
    const std::vector<double>& sin_x() const { return sin_x_; }
    const std::vector<double>& cos_x() const { return cos_x_; }
    const std::vector<double>& cos_z() const { return cos_z_; }
    const std::vector<double>& sin_z() const { return sin_z_; }

    bool same_as(const Grid& other) const { return this == &other; }

  private:
    double L_, h_;
    int nx_, nz_;
    int qx_, qz_;
    double pi_over_L_, pi_over_h_;
    std::vector<double> xq_, zq_;
    std::vector<double> sin_x_, cos_x_, cos_z_, sin_z_;
};

Grid make_grid(double L, double h, int nx, int nz);

// Velocity field v(x,z) = sum c[k][m] sin(k pi x/L) cos(m pi z/h),
// stored densely as c[(k-1)*(nz+1) + m], k=1..nx, m=0..nz.
class Field {
  public:
    Field() : grid_(nullptr) {}
    explicit Field(const Grid& g) : grid_(&g), c_(static_cast<size_t>(g.nx()) * (g.nz() + 1), 0.0) {}

    const Grid& grid() const { return *grid_; }
    bool valid() const { return grid_ != nullptr; }

    double& at(int k, int m) { return c_[idx(k, m)]; }
    double at(int k, int m) const { return c_[idx(k, m)]; }

    std::vector<double>& coeffs() { return c_; }
    const std::vector<double>& coeffs() const { return c_; }

    // True iff all m=0 coefficients vanish, i.e. the vertical mean is zero.
    bool h_admissible(double tol = 0.0) const;

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double a);
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(double a, Field f) { return f *= a; }

  private:
    size_t idx(int k, int m) const {
        if (k < 1 || k > grid_->nx() || m < 0 || m > grid_->nz())
            throw shape_error("Field coefficient index out of range");
        return static_cast<size_t>(k - 1) * (grid_->nz() + 1) + m;
    }
    const Grid* grid_;
    std::vector<double> c_;
};

// Vertical velocity theta(x,z) = sum d[k][m] cos(k pi x/L) sin(m pi z/h),
// k=0..nx, m=1..nz; vanishes on top and bottom boundaries by construction.
class ThetaField {
  public:
    ThetaField() : grid_(nullptr) {}
    explicit ThetaField(const Grid& g)
        : grid_(&g), d_(static_cast<size_t>(g.nx() + 1) * g.nz(), 0.0) {}

    const Grid& grid() const { return *grid_; }
    double& at(int k, int m) { return d_[idx(k, m)]; }
    double at(int k, int m) const { return d_[idx(k, m)]; }
    std::vector<double>& coeffs() { return d_; }
    const std::vector<double>& coeffs() const { return d_; }

  private:
    size_t idx(int k, int m) const {
        if (k < 0 || k > grid_->nx() || m < 1 || m > grid_->nz())
            throw shape_error("ThetaField coefficient index out of range");
        return static_cast<size_t>(k) * grid_->nz() + (m - 1);
    }
    const Grid* grid_;
    std::vector<double> d_;
};

// dv/dz expanded in sin(k pi x/L) sin(m pi z/h), k=1..nx, m=1..nz.
class DzField {
  public:
    DzField() : grid_(nullptr) {}
    explicit DzField(const Grid& g) : grid_(&g), e_(static_cast<size_t>(g.nx()) * g.nz(), 0.0) {}

    const Grid& grid() const { return *grid_; }
    double& at(int k, int m) { return e_[idx(k, m)]; }
    double at(int k, int m) const { return e_[idx(k, m)]; }
    std::vector<double>& coeffs() { return e_; }
    const std::vector<double>& coeffs() const { return e_; }

  private:
    size_t idx(int k, int m) const {
        if (k < 1 || k > grid_->nx() || m < 1 || m > grid_->nz())
            throw shape_error("DzField coefficient index out of range");
        return static_cast<size_t>(k - 1) * grid_->nz() + (m - 1);
    }
    const Grid* grid_;
    std::vector<double> e_;
};

double eval_field(const Field& f, double x, double z);
double eval_theta(const ThetaField& t, double x, double z);

double l2_inner(const Field& u, const Field& v);

struct Norms {
    double h_norm;      // |v|
    double v_seminorm;  // ||v||
    double h2_norm;     // |Av|
};
Norms norms(const Field& v);

// |dv/dz| and ||dv/dz|| computed directly from the coefficients of v.
struct DzNorms {
    double h_norm;
    double v_seminorm;
};
DzNorms dz_norms(const Field& v);

DzField dz_field(const Field& v);

}  // namespace spe
