#include "spe/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace spe {

namespace {

double h_dist(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    return norms(d).h_norm;
}

double v_dist_sq(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    double s = norms(d).v_seminorm;
    return s * s;
}

}  // namespace

ErrorReport error_e_n(const SchemeHistory& history, const ReferenceTrajectory& ref) {
    if (history.seed != ref.seed || history.path_n_fine != ref.path_n_fine)
        throw coupling_error("error_e_n: scheme and reference were driven by different Wiener paths");
    if (std::abs(history.T - ref.T) > 1e-12 * std::max(1.0, ref.T))
        throw coupling_error("error_e_n: horizon mismatch between scheme and reference");

    const int n = history.n;
    const int det_grid = n * history.micro_det;
    const int sto_grid = n * history.micro_sto;
    if (ref.steps % det_grid != 0 || ref.steps % sto_grid != 0)
        throw coupling_error("error_e_n: reference step grid does not refine the scheme micro grids");
    const int det_ratio = ref.steps / det_grid;
    const int sto_ratio = ref.steps / sto_grid;
    const int mesh_ratio = ref.steps / n;
    if (det_ratio % ref.store_stride != 0 || sto_ratio % ref.store_stride != 0)
        throw coupling_error("error_e_n: reference snapshots are too sparse for the scheme micro grids");

    ErrorReport rep;
    rep.n = n;
    rep.seed = history.seed;

    // sup over mesh points of the one-sided limits against v(t_k)
    for (int k = 0; k <= n; ++k) {
        const Field& vk = ref.at_step(k * mesh_ratio);
        rep.sup_v = std::max(rep.sup_v, h_dist(history.v_plus[k], vk));
        rep.sup_eta = std::max(rep.sup_eta, h_dist(history.eta_minus[k], vk));
    }

    // left-endpoint Riemann sums of the squared V-seminorm differences
    const double delta_det = history.T / det_grid;
    double acc_v = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < history.micro_det; ++j) {
            int g = i * history.micro_det + j;
            acc_v += v_dist_sq(history.v_micro[i][j], ref.at_step(g * det_ratio)) * delta_det;
        }
    rep.int_v = std::sqrt(acc_v);

    // eta^n on [t_i, t_{i+1}) is anchored at the right mesh point (it starts
    // from v^n(t_{i+1}^-)), so its branch of the integral compares against
    // v(d*_n(s)) = v(t_{i+1}); this is what makes the noise-free scheme exact.
    const double delta_sto = history.T / sto_grid;
    double acc_eta = 0.0;
    for (int i = 0; i < n; ++i) {
        const Field& v_anchor = ref.at_step((i + 1) * mesh_ratio);
        for (int j = 0; j < history.micro_sto; ++j)
            acc_eta += v_dist_sq(history.eta_micro[i][j], v_anchor) * delta_sto;
    }
    rep.int_eta = std::sqrt(acc_eta);

    rep.e_n = rep.sup_v + rep.sup_eta + rep.int_v + rep.int_eta;

    // stopping-time monitor scalars (thresholds applied by the caller)
    rep.tau_max_interval = 0.0;
    for (double ti : history.tau_interval) rep.tau_max_interval = std::max(rep.tau_max_interval, ti);
    rep.sigma_total = 0.0;
    for (double s : history.sigma_micro) rep.sigma_total += s;
    for (int g = 0; g < det_grid; ++g) rep.sigma_total += ref.v_norm[static_cast<size_t>(g) * det_ratio] * delta_det;

    // moment-diagnostic samples
    for (int k = 0; k <= n; ++k) {
        double hn = norms(history.eta_minus[k]).h_norm;
        double dn = dz_norms(history.eta_minus[k]).h_norm;
        rep.sup_eta_sq = std::max(rep.sup_eta_sq, hn * hn);
        rep.sup_dz_eta_sq = std::max(rep.sup_dz_eta_sq, dn * dn);
    }
    rep.int_V_v = std::accumulate(history.int_V_v.begin(), history.int_V_v.end(), 0.0);
    rep.int_Vr_v = std::accumulate(history.int_Vr_v.begin(), history.int_Vr_v.end(), 0.0);
    return rep;
}

TailGrowth TailGrowth::parse(const std::string& spec) {
    TailGrowth g;
    if (spec == "log" || spec == "sqrt-log") {
        g.name_ = spec;
        return g;
    }
    if (spec.rfind("power:", 0) == 0) {
        try {
            g.alpha_ = std::stod(spec.substr(6));
        } catch (const std::exception&) {
            throw config_error("tail growth: cannot parse exponent in '" + spec + "'");
        }
        if (!(g.alpha_ > 0.0))
            throw config_error("tail growth: l(n) = n^a needs a > 0 so that l(n) diverges");
        g.name_ = spec;
        return g;
    }
    throw config_error("tail growth: unknown form '" + spec + "' (expected log, sqrt-log, power:<a>)");
}

double TailGrowth::operator()(int n) const {
    if (name_ == "log") return std::log(1.0 + n);
    if (name_ == "sqrt-log") return std::sqrt(std::log(1.0 + n));
    return std::pow(static_cast<double>(n), alpha_);
}

namespace {

void wilson_interval(int k, int m, double& lo, double& hi) {
    const double z = 1.959963984540054;  // 97.5% normal quantile
    double p = static_cast<double>(k) / m;
    double z2 = z * z;
    double denom = 1.0 + z2 / m;
    double center = (p + z2 / (2.0 * m)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / m + z2 / (4.0 * static_cast<double>(m) * m)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

}  // namespace

TailTable probability_tail(const std::vector<ErrorReport>& reports, const TailGrowth& l_fn) {
    std::map<int, std::pair<int, int>> counts;  // n -> (exceed, total)
    for (const ErrorReport& r : reports) {
        double threshold = l_fn(r.n) / std::sqrt(static_cast<double>(r.n));
        auto& c = counts[r.n];
        ++c.second;
        if (r.e_n >= threshold) ++c.first;
    }
    TailTable table;
    for (const auto& [n, c] : counts) {
        TailRow row;
        row.n = n;
        row.threshold = l_fn(n) / std::sqrt(static_cast<double>(n));
        row.exceed_count = c.first;
        row.total = c.second;
        row.p_hat = static_cast<double>(c.first) / c.second;
        wilson_interval(c.first, c.second, row.ci_low, row.ci_high);
        table.rows.push_back(row);
    }
    for (size_t i = 1; i < table.rows.size(); ++i) {
        const TailRow& prev = table.rows[i - 1];
        const TailRow& cur = table.rows[i];
        bool decreased = cur.p_hat <= prev.p_hat;
        bool ci_overlap = cur.ci_low <= prev.ci_high && prev.ci_low <= cur.ci_high;
        if (!decreased && !ci_overlap) table.nonincreasing_within_ci = false;
    }
    return table;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error("config: cannot parse number for " + key + ": '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw config_error("config: cannot parse integer for " + key + ": '" + v + "'");
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

StudyConfig StudyConfig::from_string(const std::string& text) {
    StudyConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));

        if (key == "grid.L") cfg.grid_L = parse_double(key, val);
        else if (key == "grid.h") cfg.grid_h = parse_double(key, val);
        else if (key == "grid.Nx") cfg.grid_Nx = static_cast<int>(parse_int(key, val));
        else if (key == "grid.Nz") cfg.grid_Nz = static_cast<int>(parse_int(key, val));
        else if (key == "noise.kind") cfg.noise_kind = val;
        else if (key == "noise.m_W") cfg.noise_m_W = static_cast<int>(parse_int(key, val));
        else if (key == "noise.sigma") {
            cfg.noise_sigma.clear();
            for (const std::string& s : split_list(val)) cfg.noise_sigma.push_back(parse_double(key, s));
        } else if (key == "scheme.T") cfg.scheme_T = parse_double(key, val);
        else if (key == "scheme.eps") cfg.scheme_eps = parse_double(key, val);
        else if (key == "scheme.n_list") {
            cfg.scheme_n_list.clear();
            for (const std::string& s : split_list(val)) cfg.scheme_n_list.push_back(static_cast<int>(parse_int(key, s)));
            if (cfg.scheme_n_list.empty()) throw config_error("config: scheme.n_list must be nonempty");
        } else if (key == "scheme.micro_steps") cfg.scheme_micro_steps = static_cast<int>(parse_int(key, val));
        else if (key == "ref.n_ref_factor") cfg.ref_n_ref_factor = static_cast<int>(parse_int(key, val));
        else if (key == "ref.micro") cfg.ref_micro = static_cast<int>(parse_int(key, val));
        else if (key == "study.paths") cfg.study_paths = static_cast<int>(parse_int(key, val));
        else if (key == "study.seed") cfg.study_seed = static_cast<std::uint64_t>(parse_int(key, val));
        else if (key == "study.M") cfg.study_M = parse_double(key, val);
        else if (key == "study.N") cfg.study_N = parse_double(key, val);
        else if (key == "study.l_fn") cfg.study_l_fn = val;
        else if (key == "init.amplitude") cfg.init_amplitude = parse_double(key, val);
        else throw config_error("config: unknown key '" + key + "'");
    }

    // early validation of everything checkable without building objects
    if (!(cfg.grid_L > 0) || !(cfg.grid_h > 0)) throw config_error("config: domain lengths must be positive");
    if (cfg.grid_Nx < 1 || cfg.grid_Nz < 1) throw config_error("config: grid resolution must be at least 1");
    noise_kind_from_string(cfg.noise_kind);
    if (cfg.noise_m_W < 1) throw config_error("config: noise.m_W must be at least 1");
    if (!(cfg.scheme_T > 0)) throw config_error("config: scheme.T must be positive");
    if (cfg.scheme_eps < 0.0 || cfg.scheme_eps >= 1.0) throw config_error("config: scheme.eps must lie in [0,1)");
    for (int n : cfg.scheme_n_list)
        if (n < 1) throw config_error("config: scheme.n_list entries must be positive");
    if (!std::is_sorted(cfg.scheme_n_list.begin(), cfg.scheme_n_list.end()))
        throw config_error("config: scheme.n_list must be increasing");
    if (cfg.scheme_micro_steps < 1) throw config_error("config: scheme.micro_steps must be at least 1");
    if (cfg.ref_n_ref_factor < 1 || cfg.ref_micro < 1)
        throw config_error("config: reference refinement factors must be at least 1");
    if (cfg.study_paths < 2) throw config_error("config: study.paths must be at least 2");
    TailGrowth::parse(cfg.study_l_fn);
    return cfg;
}

StudyConfig StudyConfig::from_file(const std::string& path) {
    if (path == "default" || path.empty()) return StudyConfig{};
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

std::vector<double> StudyConfig::effective_sigma() const {
    if (!noise_sigma.empty()) {
        if (static_cast<int>(noise_sigma.size()) != noise_m_W)
            throw config_error("config: noise.sigma length must equal noise.m_W");
        return noise_sigma;
    }
    std::vector<double> s(noise_m_W);
    for (int i = 0; i < noise_m_W; ++i) s[i] = 0.05 / ((i + 1.0) * (i + 1.0));
    return s;
}

Field StudyConfig::initial_field(const Grid& grid) const {
    Field v0(grid);
    v0.at(1, 1) = init_amplitude;
    return v0;
}

std::string StudyConfig::canonical_text() const {
    std::ostringstream os;
    os << "grid.L = " << fmt(grid_L) << "\n";
    os << "grid.h = " << fmt(grid_h) << "\n";
    os << "grid.Nx = " << grid_Nx << "\n";
    os << "grid.Nz = " << grid_Nz << "\n";
    os << "noise.kind = " << noise_kind << "\n";
    os << "noise.m_W = " << noise_m_W << "\n";
    os << "noise.sigma = ";
    std::vector<double> s = effective_sigma();
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << fmt(s[i]);
    os << "\n";
    os << "scheme.T = " << fmt(scheme_T) << "\n";
    os << "scheme.eps = " << fmt(scheme_eps) << "\n";
    os << "scheme.n_list = ";
    for (size_t i = 0; i < scheme_n_list.size(); ++i) os << (i ? "," : "") << scheme_n_list[i];
    os << "\n";
    os << "scheme.micro_steps = " << scheme_micro_steps << "\n";
    os << "ref.n_ref_factor = " << ref_n_ref_factor << "\n";
    os << "ref.micro = " << ref_micro << "\n";
    os << "study.paths = " << study_paths << "\n";
    os << "study.seed = " << study_seed << "\n";
    os << "study.M = " << fmt(study_M) << "\n";
    os << "study.N = " << fmt(study_N) << "\n";
    os << "study.l_fn = " << study_l_fn << "\n";
    os << "init.amplitude = " << fmt(init_amplitude) << "\n";
    return os.str();
}

std::string StudyConfig::content_hash() const {
    std::string text = canonical_text();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

// ---------------------------------------------------------------------------
// Monte Carlo study

namespace {

double percentile(std::vector<double> xs, double q) {
    if (xs.empty()) throw statistics_error("percentile of an empty sample");
    std::sort(xs.begin(), xs.end());
    double pos = q * (xs.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, xs.size() - 1);
    double frac = pos - lo;
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

struct PathOutcome {
    std::vector<ErrorReport> reports;  // one per n; absent entries marked by n == 0
    std::vector<bool> excluded;
    double ref_sup_sq = 0, ref_int_V = 0;
};

}  // namespace

StudyResult convergence_study(const StudyConfig& cfg, std::vector<ErrorReport>* all_reports,
                              MomentInputs* moments_out) {
    const Grid grid(cfg.grid_L, cfg.grid_h, cfg.grid_Nx, cfg.grid_Nz);
    const NoiseModel noise = make_noise(noise_kind_from_string(cfg.noise_kind), cfg.noise_m_W,
                                        cfg.effective_sigma(), grid);
    const Field v0 = cfg.initial_field(grid);
    const TailGrowth l_fn = TailGrowth::parse(cfg.study_l_fn);

    const std::vector<int>& n_list = cfg.scheme_n_list;
    const int n_max = n_list.back();
    const int n_ref = cfg.ref_n_ref_factor * n_max;
    const int ref_steps = n_ref * cfg.ref_micro;
    int store_stride = 0;
    for (int n : n_list) {
        int micro_grid = n * cfg.scheme_micro_steps;
        if (ref_steps % micro_grid != 0)
            throw config_error("config: reference step count " + std::to_string(ref_steps) +
                               " is not divisible by the scheme micro grid " + std::to_string(micro_grid));
        store_stride = std::gcd(store_stride, ref_steps / micro_grid);
    }

    const int paths = cfg.study_paths;
    std::vector<PathOutcome> outcomes(paths);
    std::atomic<int> next_path{0};
    std::atomic<bool> fatal{false};
    std::string fatal_msg;
    std::mutex fatal_mutex;

    auto worker = [&]() {
        for (;;) {
            int p = next_path.fetch_add(1);
            if (p >= paths || fatal.load()) return;
            try {
                std::uint64_t seed_p = cfg.study_seed + static_cast<std::uint64_t>(p);
                BrownianPath path = sample_path(noise, seed_p, ref_steps, cfg.scheme_T);

                ReferenceConfig rc;
                rc.T = cfg.scheme_T;
                rc.n_ref = n_ref;
                rc.micro = cfg.ref_micro;
                rc.store_stride = store_stride;
                rc.grid = &grid;
                rc.noise = &noise;
                rc.v0 = v0;
                ReferenceTrajectory ref = run_reference(rc, path);

                PathOutcome& out = outcomes[p];
                const double delta_ref = cfg.scheme_T / ref_steps;
                for (int j = 0; j <= ref_steps; ++j)
                    out.ref_sup_sq = std::max(out.ref_sup_sq, ref.h_norm[j] * ref.h_norm[j]);
                for (int j = 0; j < ref_steps; ++j)
                    out.ref_int_V += ref.v_norm[j] * ref.v_norm[j] * delta_ref;

                out.reports.resize(n_list.size());
                out.excluded.assign(n_list.size(), false);
                for (size_t ni = 0; ni < n_list.size(); ++ni) {
                    SplitConfig sc;
                    sc.T = cfg.scheme_T;
                    sc.n = n_list[ni];
                    sc.eps = EpsilonSplit(cfg.scheme_eps);
                    sc.micro_det = cfg.scheme_micro_steps;
                    sc.micro_sto = cfg.scheme_micro_steps;
                    sc.grid = &grid;
                    sc.noise = &noise;
                    sc.v0 = v0;
                    try {
                        SchemeHistory hist = run_splitting(sc, path);
                        out.reports[ni] = error_e_n(hist, ref);
                    } catch (const blow_up_error&) {
                        out.excluded[ni] = true;
                    }
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fatal_mutex);
                if (!fatal.exchange(true)) fatal_msg = e.what();
            }
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    int nthreads = std::max(1, std::min<int>(paths, hw == 0 ? 4 : static_cast<int>(hw)));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (fatal.load()) throw statistics_error("convergence study aborted: " + fatal_msg);

    // exclusion budget: more than 10% lost trajectories at any n invalidates the study
    for (size_t ni = 0; ni < n_list.size(); ++ni) {
        int lost = 0;
        for (const PathOutcome& o : outcomes) lost += o.excluded[ni] ? 1 : 0;
        if (lost * 10 > paths)
            throw statistics_error("convergence study aborted: blow-up exclusions exceed 10% at n = " +
                                   std::to_string(n_list[ni]));
    }

    // stopping-time thresholds: calibrated from the smallest n unless pinned
    double N_used = cfg.study_N, M_used = cfg.study_M;
    if (!(N_used > 0.0) || !(M_used > 0.0)) {
        std::vector<double> tau_samples, sigma_samples;
        for (const PathOutcome& o : outcomes)
            if (!o.excluded[0]) {
                tau_samples.push_back(o.reports[0].tau_max_interval * n_list[0]);
                sigma_samples.push_back(o.reports[0].sigma_total);
            }
        if (!(N_used > 0.0)) N_used = 4.0 * percentile(tau_samples, 0.95);
        if (!(M_used > 0.0)) M_used = 4.0 * percentile(sigma_samples, 0.95);
    }

    // flag the good event and collect per-n statistics in fixed order
    std::vector<ErrorReport> flat;
    StudyResult result;
    result.M_used = M_used;
    result.N_used = N_used;
    result.seed = cfg.study_seed;
    result.config_hash = cfg.content_hash();
    result.l_fn_name = l_fn.name();

    for (size_t ni = 0; ni < n_list.size(); ++ni) {
        PerNSummary s;
        s.n = n_list[ni];
        double sum = 0, sum2 = 0, sum_cond = 0;
        int count = 0, count_cond = 0, excluded = 0;
        for (PathOutcome& o : outcomes) {
            if (o.excluded[ni]) {
                ++excluded;
                continue;
            }
            ErrorReport& r = o.reports[ni];
            r.omega_flag = (r.tau_max_interval <= N_used / r.n) && (r.sigma_total <= M_used);
            sum += r.e_n;
            sum2 += r.e_n * r.e_n;
            ++count;
            if (r.omega_flag) {
                sum_cond += r.e_n;
                ++count_cond;
            }
            flat.push_back(r);
        }
        s.samples = count;
        s.excluded = excluded;
        s.mean_e = sum / count;
        s.std_e = count > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / count) / (count - 1))) : 0.0;
        s.mean_e_conditioned = count_cond > 0 ? sum_cond / count_cond : s.mean_e;
        s.omega_fraction = static_cast<double>(count_cond) / count;
        result.per_n.push_back(s);
    }

    // log-log least-squares fit of the decay rate
    double floor = 1e-6;
    bool degenerate = true;
    for (const PerNSummary& s : result.per_n)
        if (s.mean_e > floor) degenerate = false;
    if (degenerate) {
        result.status = "noise-free floor";
        result.rate = 0.0;
        result.intercept = 0.0;
    } else {
        result.status = "ok";
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int m = static_cast<int>(result.per_n.size());
        for (const PerNSummary& s : result.per_n) {
            double x = std::log(static_cast<double>(s.n));
            double y = std::log(s.mean_e);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        result.rate = -slope;
        result.intercept = (sy - slope * sx) / m;
    }

    result.tails = probability_tail(flat, l_fn);

    if (all_reports) *all_reports = flat;
    if (moments_out) {
        moments_out->reports = flat;
        moments_out->ref_sup_sq.clear();
        moments_out->ref_int_V.clear();
        for (const PathOutcome& o : outcomes) {
            moments_out->ref_sup_sq.push_back(o.ref_sup_sq);
            moments_out->ref_int_V.push_back(o.ref_int_V);
        }
    }
    return result;
}

MomentTable moment_diagnostics(const MomentInputs& inputs) {
    std::map<int, std::vector<const ErrorReport*>> by_n;
    for (const ErrorReport& r : inputs.reports) by_n[r.n].push_back(&r);
    MomentTable table;
    for (const auto& [n, rs] : by_n) {
        MomentRow row{n, 0, 0, 0, 0};
        for (const ErrorReport* r : rs) {
            row.mean_sup_eta_sq += r->sup_eta_sq;
            row.mean_int_V += r->int_V_v;
            row.mean_sup_dz_sq += r->sup_dz_eta_sq;
            row.mean_int_Vr += r->int_Vr_v;
        }
        double inv = 1.0 / rs.size();
        row.mean_sup_eta_sq *= inv;
        row.mean_int_V *= inv;
        row.mean_sup_dz_sq *= inv;
        row.mean_int_Vr *= inv;
        table.rows.push_back(row);
    }
    auto bounded = [&](double MomentRow::* col) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const MomentRow& row : table.rows) {
            lo = std::min(lo, row.*col);
            hi = std::max(hi, row.*col);
        }
        return !(lo > 0.0) || hi < 2.0 * lo;
    };
    table.bounded = bounded(&MomentRow::mean_sup_eta_sq) && bounded(&MomentRow::mean_int_V) &&
                    bounded(&MomentRow::mean_sup_dz_sq) && bounded(&MomentRow::mean_int_Vr);
    if (!inputs.ref_sup_sq.empty()) {
        MomentRow ref{-1, 0, 0, 0, 0};
        for (double x : inputs.ref_sup_sq) ref.mean_sup_eta_sq += x;
        for (double x : inputs.ref_int_V) ref.mean_int_V += x;
        ref.mean_sup_eta_sq /= inputs.ref_sup_sq.size();
        ref.mean_int_V /= inputs.ref_int_V.size();
        table.rows.push_back(ref);
    }
    return table;
}

// ---------------------------------------------------------------------------
// output

void write_study_csv(std::ostream& os, const StudyResult& result) {
    os << std::setprecision(17);
    os << "n,mean_e,std_e,mean_e_conditioned,omega_fraction\n";
    for (const PerNSummary& s : result.per_n)
        os << s.n << ',' << s.mean_e << ',' << s.std_e << ',' << s.mean_e_conditioned << ','
           << s.omega_fraction << '\n';
}

void write_study_json(std::ostream& os, const StudyConfig& cfg, const StudyResult& result) {
    nlohmann::json j;
    j["config_hash"] = result.config_hash;
    j["seed"] = result.seed;
    j["slope"] = result.rate;
    j["intercept"] = result.intercept;
    j["status"] = result.status;
    j["M"] = result.M_used;
    j["N"] = result.N_used;
    j["l_fn"] = result.l_fn_name;
    j["config"] = cfg.canonical_text();
    j["per_n"] = nlohmann::json::array();
    for (const PerNSummary& s : result.per_n)
        j["per_n"].push_back({{"n", s.n},
                              {"mean_e", s.mean_e},
                              {"std_e", s.std_e},
                              {"mean_e_conditioned", s.mean_e_conditioned},
                              {"omega_fraction", s.omega_fraction},
                              {"samples", s.samples},
                              {"excluded", s.excluded}});
    j["tails"] = nlohmann::json::array();
    for (const TailRow& r : result.tails.rows)
        j["tails"].push_back({{"n", r.n},
                              {"threshold", r.threshold},
                              {"exceed_count", r.exceed_count},
                              {"total", r.total},
                              {"p_hat", r.p_hat},
                              {"ci_low", r.ci_low},
                              {"ci_high", r.ci_high}});
    j["tails_nonincreasing"] = result.tails.nonincreasing_within_ci;
    os << j.dump(2) << '\n';
}

}  // namespace spe
