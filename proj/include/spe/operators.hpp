#pragma once

#include "spe/grid.hpp"

namespace spe {

// Splitting-viscosity parameter: the deterministic substep carries (1-eps),
// the stochastic substep carries eps.
struct EpsilonSplit {
    double eps = 0.0;
    explicit EpsilonSplit(double e = 0.0) : eps(e) {
        if (e < 0.0 || e >= 1.0) throw config_error("epsilon must lie in [0,1)");
    }
};

// Zeroes the barotropic (m=0) part. This is the Leray-type projection onto H
// and simultaneously removes the z-independent pressure gradient.
Field project_H(const Field& f);

// Stokes-type operator: coefficientwise multiplication by lambda(k,m).
Field apply_A(const Field& v);

// (I + c A)^{-1} f, coefficientwise.
Field solve_helmholtz(const Field& f, double c);

// Hydrostatic vertical velocity theta = -int_{-h}^z dx v dz'.
ThetaField phi(const Field& v);

// B(u,v) = P_H(u dx v + Phi(u) dz v), evaluated pseudo-spectrally on the
// padded quadrature grid (exact for the retained Galerkin modes).
Field nonlinear_B(const Field& u, const Field& v);

// b(u,v,w) = (B(u,v), w).
double trilinear_b(const Field& u, const Field& v, const Field& w);

// F_eps(v) = (1-eps) A v + B(v,v).
Field drift_F(const Field& v, const EpsilonSplit& eps);

}  // namespace spe
