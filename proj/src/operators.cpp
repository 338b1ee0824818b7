#include "spe/operators.hpp"

#include <cmath>
#include <vector>

namespace spe {

namespace {

// phys[q][r] = sum_k Bx[q][k] sum_m C[k][m] Bz[r][m].
// C is kdim x mdim row-major, Bx is qx x kdim, Bz is qz x mdim.
void synthesize(const std::vector<double>& C, int kdim, int mdim,
                const std::vector<double>& Bx, int qx,
                const std::vector<double>& Bz, int qz,
                std::vector<double>& phys, std::vector<double>& scratch) {
    scratch.assign(static_cast<size_t>(kdim) * qz, 0.0);
    for (int k = 0; k < kdim; ++k) {
        const double* crow = &C[static_cast<size_t>(k) * mdim];
        double* srow = &scratch[static_cast<size_t>(k) * qz];
        for (int r = 0; r < qz; ++r) {
            const double* bz = &Bz[static_cast<size_t>(r) * mdim];
            double acc = 0.0;
            for (int m = 0; m < mdim; ++m) acc += crow[m] * bz[m];
            srow[r] = acc;
        }
    }
    phys.assign(static_cast<size_t>(qx) * qz, 0.0);
    for (int q = 0; q < qx; ++q) {
        const double* bx = &Bx[static_cast<size_t>(q) * kdim];
        double* prow = &phys[static_cast<size_t>(q) * qz];
        for (int k = 0; k < kdim; ++k) {
            double w = bx[k];
            if (w == 0.0) continue;
            const double* srow = &scratch[static_cast<size_t>(k) * qz];
            for (int r = 0; r < qz; ++r) prow[r] += w * srow[r];
        }
    }
}

void require_admissible(const Field& v, const char* op) {
    if (!v.h_admissible())
        throw constraint_error(std::string(op) + ": field has nonzero vertical mean, project_H first");
}

}  // namespace

Field project_H(const Field& f) {
    Field out = f;
    for (int k = 1; k <= f.grid().nx(); ++k) out.at(k, 0) = 0.0;
    return out;
}

Field apply_A(const Field& v) {
    require_admissible(v, "apply_A");
    const Grid& g = v.grid();
    Field out(g);
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m) out.at(k, m) = g.lambda(k, m) * v.at(k, m);
    return out;
}

Field solve_helmholtz(const Field& f, double c) {
    require_admissible(f, "solve_helmholtz");
    if (c < 0.0) throw config_error("solve_helmholtz: c must be nonnegative");
    const Grid& g = f.grid();
    Field out(g);
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m) out.at(k, m) = f.at(k, m) / (1.0 + c * g.lambda(k, m));
    return out;
}

ThetaField phi(const Field& v) {
    require_admissible(v, "phi");
    const Grid& g = v.grid();
    ThetaField th(g);
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 1; m <= g.nz(); ++m)
            th.at(k, m) = -(k * g.pi_over_L()) / (m * g.pi_over_h()) * v.at(k, m);
    return th;
}

Field nonlinear_B(const Field& u, const Field& v) {
    const Grid& g = u.grid();
    if (!g.same_as(v.grid())) throw shape_error("nonlinear_B: grid mismatch");
    require_admissible(u, "nonlinear_B");
    require_admissible(v, "nonlinear_B");

    const int nx = g.nx(), nz = g.nz(), qx = g.qx(), qz = g.qz();

    std::vector<double> scratch, phys_u, phys_dxv, phys_phiu, phys_dzv;

    // u on sin_x x cos_z
    std::vector<double> cu(static_cast<size_t>(nx) * (nz + 1));
    for (int k = 1; k <= nx; ++k)
        for (int m = 0; m <= nz; ++m) cu[static_cast<size_t>(k - 1) * (nz + 1) + m] = u.at(k, m);
    synthesize(cu, nx, nz + 1, g.sin_x(), qx, g.cos_z(), qz, phys_u, scratch);

    // dx v on cos_x x cos_z (k=0 column unused, kept zero)
    std::vector<double> cdx(static_cast<size_t>(nx + 1) * (nz + 1), 0.0);
    for (int k = 1; k <= nx; ++k)
        for (int m = 0; m <= nz; ++m)
            cdx[static_cast<size_t>(k) * (nz + 1) + m] = k * g.pi_over_L() * v.at(k, m);
    synthesize(cdx, nx + 1, nz + 1, g.cos_x(), qx, g.cos_z(), qz, phys_dxv, scratch);

    // Phi(u) on cos_x x sin_z
    ThetaField th = phi(u);
    std::vector<double> cth(static_cast<size_t>(nx + 1) * nz, 0.0);
    for (int k = 0; k <= nx; ++k)
        for (int m = 1; m <= nz; ++m) cth[static_cast<size_t>(k) * nz + (m - 1)] = th.at(k, m);
    synthesize(cth, nx + 1, nz, g.cos_x(), qx, g.sin_z(), qz, phys_phiu, scratch);

    // dz v on sin_x x sin_z
    std::vector<double> cdz(static_cast<size_t>(nx) * nz);
    for (int k = 1; k <= nx; ++k)
        for (int m = 1; m <= nz; ++m)
            cdz[static_cast<size_t>(k - 1) * nz + (m - 1)] = -m * g.pi_over_h() * v.at(k, m);
    synthesize(cdz, nx, nz, g.sin_x(), qx, g.sin_z(), qz, phys_dzv, scratch);

    // pointwise advection term
    std::vector<double> integrand(static_cast<size_t>(qx) * qz);
    for (size_t i = 0; i < integrand.size(); ++i)
        integrand[i] = phys_u[i] * phys_dxv[i] + phys_phiu[i] * phys_dzv[i];

    // project back onto sin_x x cos_z; midpoint weights L/qx * h/qz
    std::vector<double> t1(static_cast<size_t>(nx) * qz, 0.0);
    for (int q = 0; q < qx; ++q) {
        const double* sx = &g.sin_x()[static_cast<size_t>(q) * nx];
        const double* row = &integrand[static_cast<size_t>(q) * qz];
        for (int k = 0; k < nx; ++k) {
            double w = sx[k];
            if (w == 0.0) continue;
            double* trow = &t1[static_cast<size_t>(k) * qz];
            for (int r = 0; r < qz; ++r) trow[r] += w * row[r];
        }
    }
    const double cell = (g.L() / qx) * (g.h() / qz);
    Field out(g);
    for (int k = 1; k <= nx; ++k) {
        const double* trow = &t1[static_cast<size_t>(k - 1) * qz];
        for (int m = 0; m <= nz; ++m) {
            double acc = 0.0;
            for (int r = 0; r < qz; ++r) acc += trow[r] * g.cos_z()[static_cast<size_t>(r) * (nz + 1) + m];
            out.at(k, m) = acc * cell / g.weight(m);
        }
    }
    return project_H(out);
}

double trilinear_b(const Field& u, const Field& v, const Field& w) {
    if (!u.grid().same_as(w.grid())) throw shape_error("trilinear_b: grid mismatch");
    require_admissible(w, "trilinear_b");
    return l2_inner(nonlinear_B(u, v), w);
}

Field drift_F(const Field& v, const EpsilonSplit& eps) {
    Field out = apply_A(v);
    out *= (1.0 - eps.eps);
    out += nonlinear_B(v, v);
    return out;
}

}  // namespace spe
