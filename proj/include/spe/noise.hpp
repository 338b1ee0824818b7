#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spe/grid.hpp"

namespace spe {

enum class NoiseKind {
    Additive,               // psi(t,v) r_i = sigma_i e_i
    DiagonalMultiplicative, // psi(t,v) r_i = sigma_i Pi_i v  (spectral projection onto mode i)
    LowModeMultiplicative   // psi(t,v) r_i = sigma_i <v, e_i> e_i
};

NoiseKind noise_kind_from_string(const std::string& s);
std::string to_string(NoiseKind k);

// Declared growth/Lipschitz constants for the three hypothesis families.
// Built-in noise models have K2 = K4 = L2 = R2 = 0.
struct HypothesisConstants {
    double K0 = 0, K1 = 0, K2 = 0, K3 = 0, K4 = 0;
    double L0 = 0, L1 = 0, L2 = 0;
    double R0 = 0, R1 = 0, R2 = 0;
};

// Finite-rank noise operator over a truncated cylindrical Wiener process.
// The spatial shapes e_i are the m_W lowest-eigenvalue admissible basis modes,
// normalized to |e_i| = 1.
class NoiseModel {
  public:
    NoiseModel(NoiseKind kind, std::vector<double> sigma, const Grid& grid);

    NoiseKind kind() const { return kind_; }
    int mode_count() const { return static_cast<int>(sigma_.size()); }
    const std::vector<double>& sigma() const { return sigma_; }
    const Grid& grid() const { return *grid_; }
    const HypothesisConstants& declared() const { return declared_; }
    bool eps_coupled() const { return false; }  // no eps-graded growth in built-in families

    // wavenumber pair (k,m) of shape e_i, and its unit-normalizing coefficient
    struct Mode {
        int k, m;
        double coeff;  // e_i = coeff * sin(k.)cos(m.)
    };
    const std::vector<Mode>& modes() const { return modes_; }
    Field shape(int i) const;

    // i-th column psi(t,v) r_i as a Field.
    Field column(double t, const Field& v, int i) const;

    double hs_norm_sq(double t, const Field& v) const;       // ||psi(t,v)||_{L2(U;H)}^2
    double hs_norm_sq_dz(double t, const Field& v) const;    // ||dz psi(t,v)||_{L2(U;H)}^2
    double hs_norm_sq_V(double t, const Field& v) const;     // ||psi(t,v)||_{L2(U;V)}^2

  private:
    NoiseKind kind_;
    std::vector<double> sigma_;
    const Grid* grid_;
    std::vector<Mode> modes_;
    HypothesisConstants declared_;
};

NoiseModel make_noise(NoiseKind kind, int m_w, const std::vector<double>& sigma, const Grid& grid);

// Per-mode Wiener increments on the finest partition. Coarsening sums fine
// increments, so every coarser scheme sees the same underlying path.
struct BrownianPath {
    int m_w = 0;
    int n_fine = 0;
    double T = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> dw;  // dw[i * n_fine + j], mode i, interval j

    double increment(int mode, int j) const { return dw[static_cast<size_t>(mode) * n_fine + j]; }
};

BrownianPath sample_path(const NoiseModel& model, std::uint64_t seed, int n_fine, double T);

// Sum groups of `factor` fine increments; the result has n_fine/factor intervals.
BrownianPath coarsen(const BrownianPath& path, int factor);

// sum_i psi(t,v)(r_i) * dW[i]
Field apply_psi_increment(const NoiseModel& model, double t, const Field& v, const std::vector<double>& dW);

// Least-upper-envelope estimates of the hypothesis constants from random
// admissible sample fields. Declared constants are valid upper bounds, so the
// estimates should not exceed them beyond fitting tolerance.
struct EstimatedConstants {
    double K0 = 0, K1 = 0, K3 = 0;
    double L0 = 0, L1 = 0;
    double R0 = 0, R1 = 0;
};
EstimatedConstants estimate_constants(const NoiseModel& model, const Grid& grid, int samples, std::uint64_t seed);

// Counter-based standard normal keyed by (seed, stream, counter); the same key
// always yields the same draw regardless of evaluation order.
double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter);

}  // namespace spe
