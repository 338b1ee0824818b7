#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "spe/noise.hpp"
#include "spe/operators.hpp"

namespace spe {

/// Numerical explosion inside a time integrator, tagged with the interval.
struct blow_up_error : std::runtime_error {
    int interval;
    explicit blow_up_error(int interval_, const std::string& what)
        : std::runtime_error(what), interval(interval_) {}
};

struct SplitConfig {
    double T = 1.0;
    int n = 1;                 // number of splitting intervals
    EpsilonSplit eps{0.0};
    int micro_det = 8;         // micro-steps per interval, deterministic substep
    int micro_sto = 8;         // micro-steps per interval, stochastic substep
    const Grid* grid = nullptr;
    const NoiseModel* noise = nullptr;  // nullptr means psi == 0
    Field v0;
    bool nonlinear_enabled = true;      // false: linear test mode (B switched off)
    bool record_z_micro = false;        // keep per-micro-step integral snapshots for Z
    double blowup_factor = 1e6;

    void validate() const;
};

// d_n(t) = t_i, d*_n(t) = t_{i+1} for t in [t_i, t_{i+1}); the last interval is closed.
struct MeshMaps {
    double d_n;
    double d_star_n;
};
MeshMaps mesh_maps(double t, const SplitConfig& cfg);

// One trajectory of the scheme with all interval-boundary values, micro-step
// trajectories and accumulated monitor integrals.
struct SchemeHistory {
    double T = 0;
    int n = 0;
    double eps = 0;
    int micro_det = 0, micro_sto = 0;
    std::uint64_t seed = 0;     // path provenance
    int path_n_fine = 0;

    // one-sided limits at mesh points: v_plus[k] = v^n(t_k^+) (k=0..n, with the
    // final hand-off v^n(T^+) = eta^n(T^-)), v_minus[k] = v^n(t_k^-) (k=1..n),
    // eta_plus[i] = eta^n(t_i^+) (i=0..n-1), eta_minus[k] = eta^n(t_k^-) (k=0..n).
    std::vector<Field> v_plus, v_minus, eta_plus, eta_minus;

    // micro-step left-endpoint values, [interval][micro]
    std::vector<std::vector<Field>> v_micro, eta_micro;

    // left-endpoint monitor contributions on the micro grid
    std::vector<double> tau_micro;           // (|v^n|^2 ||v^n||^2 + |r^n| ||r^n||) * delta
    std::vector<double> sigma_micro;         // (||v^n||^2 + |r^n|^4) * delta
    std::vector<double> tau_interval;        // per-interval sums of tau_micro

    // per-interval dissipation integrals (closed form along the linear flow)
    std::vector<double> int_V_v, int_Vr_v, int_V_eta;

    // cumulative integral terms of the auxiliary process at mesh points:
    // Z^n(t_k) = v0 - zF[k] - eps * zAeta_dn[k] + zPsi[k]
    std::vector<Field> zF, zAeta_dn, zPsi;

    // per-micro-step cumulative increments within each interval (only when
    // record_z_micro is set)
    std::vector<std::vector<Field>> zf_partial, zpsi_partial, zaeta_partial;
};

// Single deterministic substep dv/dt + F_eps(v) = 0 on [t_start, t_end).
// Micro-steps combine an H-norm-conserving implicit-midpoint update of B with
// the exact flow of the (1-eps)A part.
Field deterministic_step(const Field& v_init, double t_start, double t_end, const SplitConfig& cfg);

// Single stochastic substep d eta + eps A eta dt = psi(t,eta) dW on
// [t_start, t_end), semi-implicit Euler-Maruyama. `increments` holds one dW
// array (length m_W) per micro-step.
Field stochastic_step(const Field& eta_init, double t_start, double t_end, const SplitConfig& cfg,
                      const std::vector<std::vector<double>>& increments);

SchemeHistory run_splitting(const SplitConfig& cfg, const BrownianPath& path);

struct ZValues {
    std::vector<Field> at_mesh;                  // Z^n(t_k), k=0..n
    std::vector<std::vector<Field>> at_micro;    // [interval][micro], empty unless recorded
};
ZValues compute_Z(const SchemeHistory& history);

struct MonitorResult {
    std::optional<double> tau_N_hit;
    std::optional<double> sigma_M_hit;
    bool omega_flag = true;
    bool reference_supplied = false;  // whether the ||v|| term entered sigma
};

// Stopping-time diagnostics. `ref_vnorm_micro`, when provided, supplies the
// reference trajectory's ||v(s)|| sampled at this history's micro grid.
MonitorResult monitor_stopping(const SchemeHistory& history, double N, double M,
                               const std::vector<double>* ref_vnorm_micro = nullptr);

}  // namespace spe
