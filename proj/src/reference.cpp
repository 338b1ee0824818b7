#include "spe/reference.hpp"

#include <cmath>

namespace spe {

void ReferenceConfig::validate() const {
    if (grid == nullptr) throw config_error("reference config: grid missing");
    if (!(T > 0.0)) throw config_error("reference config: horizon must be positive");
    if (n_ref < 1 || micro < 1) throw config_error("reference config: partition counts must be at least 1");
    if (store_stride < 1 || step_count() % store_stride != 0)
        throw config_error("reference config: store_stride must divide the step count");
    if (!v0.valid() || !v0.grid().same_as(*grid)) throw config_error("reference config: v0 missing or on wrong grid");
    if (!v0.h_admissible()) throw config_error("reference config: v0 must be H-admissible");
    if (noise != nullptr && !noise->grid().same_as(*grid))
        throw config_error("reference config: noise model on wrong grid");
}

const Field& ReferenceTrajectory::at_step(int j) const {
    if (j < 0 || j > steps || j % store_stride != 0)
        throw shape_error("reference trajectory: step index not stored");
    return v[j / store_stride];
}

namespace {

// Same micro-step construction as the deterministic substep of the scheme:
// H-norm-conserving implicit midpoint for B, then the exact heat flow.
Field det_micro(const Field& v, double delta, bool nonlinear) {
    Field u = v;
    if (nonlinear) {
        double scale = std::max(1.0, norms(v).h_norm);
        for (int it = 0; it < 100; ++it) {
            Field mid = v + u;
            mid *= 0.5;
            Field next = nonlinear_B(mid, mid);
            next *= -delta;
            next += v;
            Field diff = next - u;
            u = next;
            if (norms(diff).h_norm <= 1e-14 * scale) break;
        }
    }
    const Grid& g = u.grid();
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m)
            u.at(k, m) *= std::exp(-delta * g.lambda(k, m));
    return u;
}

}  // namespace

ReferenceTrajectory run_reference(const ReferenceConfig& cfg, const BrownianPath& path) {
    cfg.validate();
    const int steps = cfg.step_count();

    BrownianPath em_path;
    if (cfg.noise != nullptr) {
        if (path.n_fine % steps != 0)
            throw config_error("run_reference: path is not coarsenable to the reference step grid");
        em_path = coarsen(path, path.n_fine / steps);
    }

    ReferenceTrajectory traj;
    traj.T = cfg.T;
    traj.steps = steps;
    traj.store_stride = cfg.store_stride;
    traj.seed = path.seed;
    traj.path_n_fine = path.n_fine;

    const double delta = cfg.T / steps;
    Field v = cfg.v0;
    const double guard = cfg.blowup_factor * std::max(1.0, norms(cfg.v0).h_norm);

    auto record = [&](int j, const Field& f) {
        Norms nf = norms(f);
        DzNorms df = dz_norms(f);
        traj.h_norm.push_back(nf.h_norm);
        traj.v_norm.push_back(nf.v_seminorm);
        traj.dz_norm.push_back(df.h_norm);
        if (j % cfg.store_stride == 0) traj.v.push_back(f);
    };

    record(0, v);
    std::vector<double> dW(cfg.noise ? cfg.noise->mode_count() : 0);
    for (int j = 0; j < steps; ++j) {
        double t = j * delta;
        Field next = det_micro(v, delta, cfg.nonlinear_enabled);
        if (cfg.noise != nullptr) {
            for (int mode = 0; mode < cfg.noise->mode_count(); ++mode)
                dW[mode] = em_path.increment(mode, j);
            next += apply_psi_increment(*cfg.noise, t, v, dW);
        }
        v = next;
        double hn = norms(v).h_norm;
        if (!(hn < guard) || !std::isfinite(hn))
            throw blow_up_error(j, "reference solve blew up at step " + std::to_string(j));
        record(j + 1, v);
    }
    return traj;
}

}  // namespace spe
