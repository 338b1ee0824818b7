#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spe/reference.hpp"
#include "spe/splitting.hpp"

namespace spe {

/// Refusal to compare trajectories that were not driven by the same Wiener path.
struct coupling_error : std::logic_error {
    using std::logic_error::logic_error;
};

struct statistics_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Components of the pathwise error functional for one trajectory pair.
struct ErrorReport {
    double sup_v = 0;     // sup_k |v^n(t_k^+) - v(t_k)|
    double sup_eta = 0;   // sup_k |eta^n(t_k^-) - v(t_k)|
    double int_v = 0;     // (int_0^T ||v^n - v||^2 ds)^{1/2}
    double int_eta = 0;   // (int_0^T ||eta^n(s) - v(d*_n(s))||^2 ds)^{1/2}
    double e_n = 0;       // sum of the four components
    bool omega_flag = true;
    int n = 0;
    std::uint64_t seed = 0;

    // scalars needed to evaluate the stopping-time indicators afterwards
    double tau_max_interval = 0;  // max_i per-interval monitor integral
    double sigma_total = 0;       // int_0^T (||v|| + ||v^n||^2 + |r^n|^4) ds

    // moment-diagnostic samples
    double sup_eta_sq = 0;        // sup_k |eta^n(t_k)|^2
    double int_V_v = 0;           // int ||v^n||^2 ds
    double sup_dz_eta_sq = 0;     // sup_k |dz eta^n(t_k)|^2
    double int_Vr_v = 0;          // int ||dz v^n||^2 ds
};

ErrorReport error_e_n(const SchemeHistory& history, const ReferenceTrajectory& ref);

// Growth sequence l(n) for the tail probability threshold l(n)/sqrt(n).
class TailGrowth {
  public:
    static TailGrowth parse(const std::string& spec);  // "log", "sqrt-log", "power:<alpha>"
    double operator()(int n) const;
    const std::string& name() const { return name_; }

  private:
    std::string name_;
    double alpha_ = 0.0;
};

struct TailRow {
    int n;
    double threshold;
    int exceed_count;
    int total;
    double p_hat;
    double ci_low, ci_high;  // Wilson 95%
};

struct TailTable {
    std::vector<TailRow> rows;
    bool nonincreasing_within_ci = true;
};

TailTable probability_tail(const std::vector<ErrorReport>& reports, const TailGrowth& l_fn);

struct PerNSummary {
    int n;
    double mean_e, std_e;
    double mean_e_conditioned;  // over the omega-flag event
    double omega_fraction;
    int samples, excluded;
};

struct StudyResult {
    std::vector<PerNSummary> per_n;
    double rate = 0;       // positive decay rate: -d log E[e_n] / d log n
    double intercept = 0;
    double M_used = 0, N_used = 0;
    std::string status;    // "ok" or "noise-free floor"
    TailTable tails;
    std::string l_fn_name;
    std::uint64_t seed = 0;
    std::string config_hash;
};

struct MomentRow {
    int n;  // -1 marks the reference solution
    double mean_sup_eta_sq;
    double mean_int_V;
    double mean_sup_dz_sq;
    double mean_int_Vr;
};

struct MomentTable {
    std::vector<MomentRow> rows;
    bool bounded = true;  // every column varies by < 2x across n
};

// Full experiment configuration (flat key = value file; all keys optional).
struct StudyConfig {
    double grid_L = 3.141592653589793238462643383279502884;
    double grid_h = 3.141592653589793238462643383279502884;
    int grid_Nx = 32, grid_Nz = 16;
    std::string noise_kind = "additive";
    int noise_m_W = 16;
    std::vector<double> noise_sigma;       // empty: sigma_i = 0.05 / i^2
    double scheme_T = 0.5;
    double scheme_eps = 0.0;
    std::vector<int> scheme_n_list{4, 8, 16, 32, 64};
    int scheme_micro_steps = 8;
    int ref_n_ref_factor = 16;
    int ref_micro = 2;
    int study_paths = 32;
    std::uint64_t study_seed = 20240817;
    double study_M = 0.0;                  // <= 0: calibrated from the smallest n
    double study_N = 0.0;
    std::string study_l_fn = "log";
    double init_amplitude = 0.05;

    static StudyConfig from_file(const std::string& path);
    static StudyConfig from_string(const std::string& text);
    std::string canonical_text() const;    // normalized key=value dump
    std::string content_hash() const;      // FNV-1a over canonical_text

    std::vector<double> effective_sigma() const;
    Field initial_field(const Grid& grid) const;
};

struct MomentInputs {
    std::vector<ErrorReport> reports;             // all (path, n) trajectories
    std::vector<double> ref_sup_sq, ref_int_V;    // per path
};

StudyResult convergence_study(const StudyConfig& cfg, std::vector<ErrorReport>* all_reports = nullptr,
                              MomentInputs* moments_out = nullptr);

MomentTable moment_diagnostics(const MomentInputs& inputs);

void write_study_csv(std::ostream& os, const StudyResult& result);
void write_study_json(std::ostream& os, const StudyConfig& cfg, const StudyResult& result);

// CLI entry point: subcommands check / simulate / converge / hypotheses.
// Exit codes: 0 success, 2 config error, 3 numerical abort, 4 check failure.
int run_cli(int argc, const char* const* argv);

}  // namespace spe
