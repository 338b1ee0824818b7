#pragma once

#include <cstdint>
#include <vector>

#include "spe/noise.hpp"
#include "spe/operators.hpp"
#include "spe/splitting.hpp"

namespace spe {

// Fine-resolution solver for the unsplit equation dv + (Av + B(v,v)) dt = psi dW,
// path-coupled to the splitting runs through the shared Brownian path.
struct ReferenceConfig {
    double T = 1.0;
    int n_ref = 16;        // fine partition count
    int micro = 2;         // additional micro-steps per fine interval
    int store_stride = 1;  // keep every store_stride-th field snapshot
    const Grid* grid = nullptr;
    const NoiseModel* noise = nullptr;
    Field v0;
    bool nonlinear_enabled = true;
    double blowup_factor = 1e6;

    int step_count() const { return n_ref * micro; }
    void validate() const;
};

struct ReferenceTrajectory {
    double T = 0;
    int steps = 0;         // total EM steps
    int store_stride = 1;
    std::uint64_t seed = 0;
    int path_n_fine = 0;

    // v at times j * (T/steps) for j = 0, stride, 2*stride, ..., steps
    std::vector<Field> v;
    // norm series at every step time j = 0..steps
    std::vector<double> h_norm, v_norm, dz_norm;

    int stored_count() const { return static_cast<int>(v.size()); }
    // field at step index j (must be a multiple of store_stride)
    const Field& at_step(int j) const;
};

ReferenceTrajectory run_reference(const ReferenceConfig& cfg, const BrownianPath& path);

}  // namespace spe
