#include "spe/splitting.hpp"

#include <cmath>
#include <limits>

namespace spe {

namespace {

struct DetStepRecord {
    std::vector<Field> micro_values;
    std::vector<double> tau_contrib, sigma_contrib;
    double int_V = 0.0, int_Vr = 0.0;
    Field f_integral;                    // consistent quadrature of int F_eps(v^n) ds
    std::vector<Field> f_partial;        // cumulative within the step (optional)
    double norm_guard = 0.0;
    int interval = -1;
};

// v <- exp(-(1-eps) * delta * A) v, also returning closed-form dissipation
// integrals int ||v||^2 ds and int ||dz v||^2 ds along the decay.
void exact_linear_flow(Field& v, double delta, double one_minus_eps, double& diss_v, double& diss_r) {
    const Grid& g = v.grid();
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 0; m <= g.nz(); ++m) {
            double lam = g.lambda(k, m);
            double c = v.at(k, m);
            if (c == 0.0) continue;
            double E = std::exp(-one_minus_eps * delta * lam);
            double mass = c * c * g.weight(m) * (1.0 - E * E) / (2.0 * one_minus_eps);
            diss_v += mass;
            double dzfac = m * g.pi_over_h();
            // dz swaps cos(m.) for sin(m.): mass (L/2)(h/2); for m=0 the term vanishes
            if (m > 0) diss_r += dzfac * dzfac * c * c * 0.25 * g.L() * g.h() * (1.0 - E * E) / (2.0 * one_minus_eps);
            v.at(k, m) = c * E;
        }
}

// Implicit midpoint step of du/dt + B(u,u) = 0; conserves |u| and |dz u|
// up to the fixed-point tolerance because b(w,w,w) = 0.
Field midpoint_nonlinear(const Field& v, double delta, Field& b_midpoint) {
    Field u = v;
    double scale = std::max(1.0, norms(v).h_norm);
    for (int it = 0; it < 100; ++it) {
        Field mid = v + u;
        mid *= 0.5;
        b_midpoint = nonlinear_B(mid, mid);
        Field next = b_midpoint;
        next *= -delta;
        next += v;
        Field diff = next - u;
        u = next;
        if (norms(diff).h_norm <= 1e-14 * scale) break;
    }
    return u;
}

DetStepRecord det_step_impl(const Field& v_init, double t_start, double t_end, const SplitConfig& cfg,
                            bool record_partials, int interval) {
    if (!(t_start < t_end)) throw config_error("deterministic_step: empty time window");
    if (!v_init.h_admissible()) throw constraint_error("deterministic_step: initial field not H-admissible");

    const int J = cfg.micro_det;
    const double delta = (t_end - t_start) / J;
    const double one_minus_eps = 1.0 - cfg.eps.eps;

    DetStepRecord rec;
    rec.interval = interval;
    rec.f_integral = Field(v_init.grid());
    rec.micro_values.reserve(J);
    Field v = v_init;
    const double guard = cfg.blowup_factor * std::max(1.0, norms(v_init).h_norm);

    for (int j = 0; j < J; ++j) {
        rec.micro_values.push_back(v);
        Norms nv = norms(v);
        DzNorms rv = dz_norms(v);
        rec.tau_contrib.push_back((nv.h_norm * nv.h_norm * nv.v_seminorm * nv.v_seminorm +
                                   rv.h_norm * rv.v_seminorm) * delta);
        rec.sigma_contrib.push_back((nv.v_seminorm * nv.v_seminorm +
                                     rv.h_norm * rv.h_norm * rv.h_norm * rv.h_norm) * delta);

        Field u = v;
        if (cfg.nonlinear_enabled) {
            Field b_mid(v.grid());
            u = midpoint_nonlinear(v, delta, b_mid);
            b_mid *= delta;
            rec.f_integral += b_mid;
        }
        Field before_linear = u;
        exact_linear_flow(u, delta, one_minus_eps, rec.int_V, rec.int_Vr);
        before_linear -= u;  // equals int (1-eps) A v ds along the linear flow
        rec.f_integral += before_linear;
        v = u;

        if (record_partials) rec.f_partial.push_back(rec.f_integral);

        double hn = norms(v).h_norm;
        if (!(hn < guard) || !std::isfinite(hn))
            throw blow_up_error(interval, "deterministic substep blew up in interval " + std::to_string(interval));
    }
    rec.norm_guard = guard;
    rec.micro_values.push_back(v);  // right endpoint kept for convenience; trimmed by caller
    return rec;
}

struct StoStepRecord {
    std::vector<Field> micro_values;
    double int_V_eta = 0.0;
    Field psi_integral, aeta_integral;
    std::vector<Field> psi_partial, aeta_partial;
};

StoStepRecord sto_step_impl(const Field& eta_init, double t_start, double t_end, const SplitConfig& cfg,
                            const std::vector<std::vector<double>>& increments, bool record_partials,
                            int interval) {
    if (!eta_init.h_admissible()) throw constraint_error("stochastic_step: initial field not H-admissible");
    const int J = static_cast<int>(increments.size());
    if (J < 1) throw shape_error("stochastic_step: no increments supplied");
    const double delta = (t_end - t_start) / J;
    const double eps = cfg.eps.eps;

    StoStepRecord rec;
    rec.psi_integral = Field(eta_init.grid());
    rec.aeta_integral = Field(eta_init.grid());
    Field eta = eta_init;
    const double guard = cfg.blowup_factor * std::max(1.0, norms(eta_init).h_norm);

    for (int j = 0; j < J; ++j) {
        rec.micro_values.push_back(eta);
        Norms ne = norms(eta);
        rec.int_V_eta += ne.v_seminorm * ne.v_seminorm * delta;

        double t = t_start + j * delta;
        Field next = eta;
        if (cfg.noise != nullptr) {
            Field kick = apply_psi_increment(*cfg.noise, t, eta, increments[j]);
            rec.psi_integral += kick;
            next += kick;
        }
        if (eps > 0.0) {
            next = solve_helmholtz(next, eps * delta);
            Field a_term = apply_A(next);
            a_term *= delta;
            rec.aeta_integral += a_term;
        }
        eta = next;
        if (record_partials) {
            rec.psi_partial.push_back(rec.psi_integral);
            rec.aeta_partial.push_back(rec.aeta_integral);
        }
        double hn = norms(eta).h_norm;
        if (!(hn < guard) || !std::isfinite(hn))
            throw blow_up_error(interval, "stochastic substep blew up in interval " + std::to_string(interval));
    }
    rec.micro_values.push_back(eta);
    return rec;
}

}  // namespace

void SplitConfig::validate() const {
    if (grid == nullptr) throw config_error("split config: grid missing");
    if (!(T > 0.0)) throw config_error("split config: horizon must be positive");
    if (n < 1) throw config_error("split config: interval count must be at least 1");
    if (micro_det < 1 || micro_sto < 1) throw config_error("split config: micro-step counts must be at least 1");
    if (!v0.valid() || !v0.grid().same_as(*grid)) throw config_error("split config: v0 missing or on wrong grid");
    if (!v0.h_admissible()) throw config_error("split config: v0 must be H-admissible");
    Norms n0 = norms(v0);
    if (!std::isfinite(n0.h_norm) || !std::isfinite(n0.v_seminorm))
        throw config_error("split config: v0 norms must be finite");
    if (noise != nullptr && !noise->grid().same_as(*grid))
        throw config_error("split config: noise model on wrong grid");
}

MeshMaps mesh_maps(double t, const SplitConfig& cfg) {
    if (t < 0.0 || t > cfg.T) throw std::domain_error("mesh_maps: t outside [0,T]");
    const double h = cfg.T / cfg.n;
    int i = static_cast<int>(t / h);
    if (i > cfg.n - 1) i = cfg.n - 1;  // t == T, or fp rounding at the right edge
    return {i * h, (i + 1) * h};
}

Field deterministic_step(const Field& v_init, double t_start, double t_end, const SplitConfig& cfg) {
    DetStepRecord rec = det_step_impl(v_init, t_start, t_end, cfg, false, -1);
    return rec.micro_values.back();
}

Field stochastic_step(const Field& eta_init, double t_start, double t_end, const SplitConfig& cfg,
                      const std::vector<std::vector<double>>& increments) {
    StoStepRecord rec = sto_step_impl(eta_init, t_start, t_end, cfg, increments, false, -1);
    return rec.micro_values.back();
}

SchemeHistory run_splitting(const SplitConfig& cfg, const BrownianPath& path) {
    cfg.validate();
    const int n = cfg.n;
    const int micro_grid = n * cfg.micro_sto;
    BrownianPath sto_path;
    if (cfg.noise != nullptr) {
        if (path.n_fine % micro_grid != 0)
            throw config_error("run_splitting: path is not coarsenable to the micro-step partition");
        sto_path = coarsen(path, path.n_fine / micro_grid);
    }

    SchemeHistory hist;
    hist.T = cfg.T;
    hist.n = n;
    hist.eps = cfg.eps.eps;
    hist.micro_det = cfg.micro_det;
    hist.micro_sto = cfg.micro_sto;
    hist.seed = path.seed;
    hist.path_n_fine = path.n_fine;

    const double h = cfg.T / n;
    Field zF_acc(*cfg.grid), zAeta_acc(*cfg.grid), zPsi_acc(*cfg.grid);
    Field eta_prev = cfg.v0;  // eta^n(t_0^-) = v0

    hist.eta_minus.push_back(eta_prev);
    hist.v_plus.push_back(eta_prev);  // v^n(t_0^+) = eta^n(t_0^-)
    hist.zF.push_back(zF_acc);
    hist.zPsi.push_back(zPsi_acc);
    hist.zAeta_dn.push_back(zAeta_acc);

    for (int i = 0; i < n; ++i) {
        const double t0 = i * h, t1 = (i + 1) * h;

        DetStepRecord det = det_step_impl(eta_prev, t0, t1, cfg, cfg.record_z_micro, i);
        Field v_end = det.micro_values.back();
        det.micro_values.pop_back();

        hist.v_minus.push_back(v_end);
        hist.v_micro.push_back(std::move(det.micro_values));
        hist.tau_interval.push_back(0.0);
        for (size_t j = 0; j < det.tau_contrib.size(); ++j) {
            hist.tau_micro.push_back(det.tau_contrib[j]);
            hist.sigma_micro.push_back(det.sigma_contrib[j]);
            hist.tau_interval.back() += det.tau_contrib[j];
        }
        hist.int_V_v.push_back(det.int_V);
        hist.int_Vr_v.push_back(det.int_Vr);
        zF_acc += det.f_integral;
        if (cfg.record_z_micro) hist.zf_partial.push_back(std::move(det.f_partial));

        // stochastic substep starts from the deterministic endpoint
        hist.eta_plus.push_back(v_end);
        std::vector<std::vector<double>> incs(cfg.micro_sto);
        for (int j = 0; j < cfg.micro_sto; ++j) {
            incs[j].resize(cfg.noise ? cfg.noise->mode_count() : 0);
            if (cfg.noise)
                for (int mode = 0; mode < cfg.noise->mode_count(); ++mode)
                    incs[j][mode] = sto_path.increment(mode, i * cfg.micro_sto + j);
        }
        StoStepRecord sto = sto_step_impl(v_end, t0, t1, cfg, incs, cfg.record_z_micro, i);
        Field eta_end = sto.micro_values.back();
        sto.micro_values.pop_back();
        hist.eta_micro.push_back(std::move(sto.micro_values));
        hist.int_V_eta.push_back(sto.int_V_eta);
        zPsi_acc += sto.psi_integral;
        Field zAeta_before = zAeta_acc;
        zAeta_acc += sto.aeta_integral;
        // d_n(t_{i+1}) = t_{i+1} except at the right edge where d_n(T) = t_{n-1}
        hist.zAeta_dn.push_back(i + 1 < n ? zAeta_acc : zAeta_before);
        if (cfg.record_z_micro) {
            hist.zpsi_partial.push_back(std::move(sto.psi_partial));
            hist.zaeta_partial.push_back(std::move(sto.aeta_partial));
        }

        hist.eta_minus.push_back(eta_end);
        if (i + 1 < n) hist.v_plus.push_back(eta_end);  // hand-off v^n(t_{i+1}^+) = eta^n(t_{i+1}^-)
        eta_prev = eta_end;

        hist.zF.push_back(zF_acc);
        hist.zPsi.push_back(zPsi_acc);
    }
    // final hand-off v^n(T^+) = eta^n(T^-)
    hist.v_plus.push_back(hist.eta_minus.back());
    return hist;
}

ZValues compute_Z(const SchemeHistory& history) {
    ZValues z;
    const Field& v0 = history.v_plus.front();
    for (int k = 0; k <= history.n; ++k) {
        Field zk = v0;
        zk -= history.zF[k];
        if (history.eps > 0.0) {
            Field a = history.zAeta_dn[k];
            a *= history.eps;
            zk -= a;
        }
        zk += history.zPsi[k];
        z.at_mesh.push_back(std::move(zk));
    }
    if (!history.zf_partial.empty()) {
        for (int i = 0; i < history.n; ++i) {
            std::vector<Field> row;
            for (size_t j = 0; j < history.zf_partial[i].size(); ++j) {
                Field zt = v0;
                zt -= history.zF[i];
                zt -= history.zf_partial[i][j];
                zt += history.zPsi[i];
                if (j < history.zpsi_partial[i].size()) zt += history.zpsi_partial[i][j];
                if (history.eps > 0.0) {
                    Field a = history.zAeta_dn[i];
                    a *= history.eps;
                    zt -= a;
                }
                row.push_back(std::move(zt));
            }
            z.at_micro.push_back(std::move(row));
        }
    }
    return z;
}

MonitorResult monitor_stopping(const SchemeHistory& history, double N, double M,
                               const std::vector<double>* ref_vnorm_micro) {
    MonitorResult res;
    res.reference_supplied = (ref_vnorm_micro != nullptr);
    const int J = history.micro_det;
    const double h = history.T / history.n;
    const double delta = h / J;
    const double tau_threshold = N / history.n;

    double sigma_running = 0.0;
    for (int i = 0; i < history.n && !res.tau_N_hit; ++i) {
        double interval_running = 0.0;
        for (int j = 0; j < J; ++j) {
            interval_running += history.tau_micro[static_cast<size_t>(i) * J + j];
            if (interval_running > tau_threshold) {
                res.tau_N_hit = i * h + (j + 1) * delta;
                break;
            }
        }
    }
    for (size_t g = 0; g < history.sigma_micro.size(); ++g) {
        sigma_running += history.sigma_micro[g];
        if (ref_vnorm_micro) sigma_running += (*ref_vnorm_micro)[g] * delta;
        if (sigma_running > M) {
            res.sigma_M_hit = (static_cast<double>(g) + 1) * delta;
            break;
        }
    }
    res.omega_flag = !res.tau_N_hit && !res.sigma_M_hit;
    return res;
}

}  // namespace spe
