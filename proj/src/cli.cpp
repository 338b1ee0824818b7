#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "spe/experiment.hpp"

namespace spe {

namespace {

Field random_admissible(const Grid& grid, std::uint64_t seed, std::uint64_t stream) {
    Field f(grid);
    std::uint64_t counter = 0;
    for (int k = 1; k <= grid.nx(); ++k)
        for (int m = 1; m <= grid.nz(); ++m)
            f.at(k, m) = counter_normal(seed, stream, counter++) / (1.0 + grid.lambda(k, m));
    return f;
}

struct CheckSuite {
    bool all_pass = true;

    void report(const std::string& name, bool pass, double observed, double bound) {
        all_pass = all_pass && pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << name << "  (observed " << std::scientific
                  << std::setprecision(3) << observed << ", bound " << bound << ")\n";
    }
};

int cmd_check(std::uint64_t seed, int triples) {
    Grid grid(3.141592653589793, 3.141592653589793, 16, 8);
    CheckSuite suite;

    // projection: idempotent and annihilates the barotropic part
    {
        Field f = random_admissible(grid, seed, 1);
        for (int k = 1; k <= grid.nx(); ++k) f.at(k, 0) = counter_normal(seed, 2, k);
        Field p = project_H(f);
        Field pp = project_H(p);
        double worst = 0;
        for (int k = 1; k <= grid.nx(); ++k) worst = std::max(worst, std::abs(p.at(k, 0)));
        Field d = pp - p;
        worst = std::max(worst, norms(d).h_norm);
        suite.report("projection idempotence", worst == 0.0, worst, 0.0);
    }

    // eigenvalue identity: A acts diagonally with lambda(k,m)
    {
        double worst = 0;
        for (int k = 1; k <= grid.nx(); k += 5)
            for (int m = 1; m <= grid.nz(); m += 3) {
                Field e(grid);
                e.at(k, m) = 1.0;
                Field ae = apply_A(e);
                worst = std::max(worst, std::abs(ae.at(k, m) - grid.lambda(k, m)));
            }
        suite.report("eigenvalue identity", worst <= 1e-12, worst, 1e-12);
    }

    // divergence: dx v + dz Phi(v) = 0 at interior probe points
    {
        Field v = random_admissible(grid, seed, 3);
        ThetaField th = phi(v);
        double worst = 0;
        const double dx = 1e-6;
        for (int p = 0; p < 7; ++p) {
            double x = (0.13 + 0.11 * p) * grid.L();
            double z = -(0.07 + 0.12 * p) * grid.h();
            double dvx = (eval_field(v, x + dx, z) - eval_field(v, x - dx, z)) / (2 * dx);
            double dtz = (eval_theta(th, x, z + dx) - eval_theta(th, x, z - dx)) / (2 * dx);
            worst = std::max(worst, std::abs(dvx + dtz));
        }
        suite.report("divergence identity", worst <= 1e-4, worst, 1e-4);
    }

    // trilinear cancellation and antisymmetry on random admissible triples
    {
        double worst_c = 0, worst_a = 0;
        for (int t = 0; t < triples; ++t) {
            Field u = random_admissible(grid, seed, 10 + 3 * t);
            Field v = random_admissible(grid, seed, 11 + 3 * t);
            Field w = random_admissible(grid, seed, 12 + 3 * t);
            double scale = norms(u).v_seminorm * norms(v).v_seminorm * norms(w).v_seminorm + 1e-30;
            worst_c = std::max(worst_c, std::abs(trilinear_b(u, v, v)) / scale);
            worst_a = std::max(worst_a, std::abs(trilinear_b(u, v, w) + trilinear_b(u, w, v)) / scale);
        }
        suite.report("trilinear cancellation", worst_c <= 1e-10, worst_c, 1e-10);
        suite.report("trilinear antisymmetry", worst_a <= 1e-10, worst_a, 1e-10);
    }

    // deterministic energy equality along one splitting interval
    {
        SplitConfig sc;
        sc.T = 0.25;
        sc.n = 1;
        sc.grid = &grid;
        sc.v0 = random_admissible(grid, seed, 40);
        sc.v0 *= 1.0 / std::max(1.0, norms(sc.v0).h_norm);
        BrownianPath empty;
        empty.n_fine = sc.micro_sto;
        empty.T = sc.T;
        SchemeHistory hist = run_splitting(sc, empty);
        double e0 = norms(hist.v_plus[0]).h_norm;
        double e1 = norms(hist.v_minus[0]).h_norm;
        double budget = e0 * e0 - (e1 * e1 + 2.0 * hist.int_V_v[0]);
        suite.report("energy equality", std::abs(budget) <= 1e-8 * e0 * e0, std::abs(budget), 1e-8 * e0 * e0);
    }

    // hand-off identities and the auxiliary-process reconstruction
    {
        std::vector<double> sigma(4, 0.05);
        NoiseModel noise = make_noise(NoiseKind::Additive, 4, sigma, grid);
        SplitConfig sc;
        sc.T = 0.25;
        sc.n = 4;
        sc.grid = &grid;
        sc.noise = &noise;
        sc.v0 = random_admissible(grid, seed, 50);
        sc.v0 *= 0.25 / std::max(1.0, norms(sc.v0).h_norm);
        BrownianPath path = sample_path(noise, seed + 7, sc.n * sc.micro_sto, sc.T);
        SchemeHistory hist = run_splitting(sc, path);
        double worst = 0;
        for (int k = 1; k < sc.n; ++k) {
            Field d = hist.v_plus[k] - hist.eta_minus[k];
            worst = std::max(worst, norms(d).h_norm);
        }
        {
            Field d = hist.v_plus[sc.n] - hist.eta_minus[sc.n];
            worst = std::max(worst, norms(d).h_norm);
        }
        suite.report("hand-off identity", worst == 0.0, worst, 0.0);

        ZValues z = compute_Z(hist);
        double worst_z = 0;
        for (int k = 0; k <= sc.n; ++k) {
            Field d = z.at_mesh[k] - hist.eta_minus[k];
            worst_z = std::max(worst_z, norms(d).h_norm);
        }
        suite.report("auxiliary process identity", worst_z <= 1e-9, worst_z, 1e-9);
    }

    return suite.all_pass ? 0 : 4;
}

int cmd_simulate(const StudyConfig& cfg, int n, const std::string& out_path) {
    Grid grid(cfg.grid_L, cfg.grid_h, cfg.grid_Nx, cfg.grid_Nz);
    NoiseModel noise = make_noise(noise_kind_from_string(cfg.noise_kind), cfg.noise_m_W,
                                  cfg.effective_sigma(), grid);
    SplitConfig sc;
    sc.T = cfg.scheme_T;
    sc.n = n;
    sc.eps = EpsilonSplit(cfg.scheme_eps);
    sc.micro_det = cfg.scheme_micro_steps;
    sc.micro_sto = cfg.scheme_micro_steps;
    sc.grid = &grid;
    sc.noise = &noise;
    sc.v0 = cfg.initial_field(grid);
    BrownianPath path = sample_path(noise, cfg.study_seed, n * sc.micro_sto, cfg.scheme_T);
    SchemeHistory hist = run_splitting(sc, path);

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (out_path != "-") {
        file.open(out_path);
        if (!file) throw config_error("simulate: cannot open output file '" + out_path + "'");
        os = &file;
    }
    *os << std::setprecision(17);
    *os << "t,v_h,v_V,v_dz,eta_h,eta_V\n";
    const double delta = cfg.scheme_T / (n * cfg.scheme_micro_steps);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cfg.scheme_micro_steps; ++j) {
            double t = (i * cfg.scheme_micro_steps + j) * delta;
            Norms nv = norms(hist.v_micro[i][j]);
            DzNorms dv = dz_norms(hist.v_micro[i][j]);
            Norms ne = norms(hist.eta_micro[i][j]);
            *os << t << ',' << nv.h_norm << ',' << nv.v_seminorm << ',' << dv.h_norm << ','
                << ne.h_norm << ',' << ne.v_seminorm << '\n';
        }
    Norms nv = norms(hist.v_minus.back());
    DzNorms dv = dz_norms(hist.v_minus.back());
    Norms ne = norms(hist.eta_minus.back());
    *os << cfg.scheme_T << ',' << nv.h_norm << ',' << nv.v_seminorm << ',' << dv.h_norm << ','
        << ne.h_norm << ',' << ne.v_seminorm << '\n';
    return 0;
}

int cmd_converge(const StudyConfig& cfg, const std::string& csv_path, const std::string& json_path) {
    StudyResult result = convergence_study(cfg);
    {
        std::ofstream csv(csv_path);
        if (!csv) throw config_error("converge: cannot open '" + csv_path + "'");
        write_study_csv(csv, result);
    }
    {
        std::ofstream json(json_path);
        if (!json) throw config_error("converge: cannot open '" + json_path + "'");
        write_study_json(json, cfg, result);
    }
    std::cout << std::setprecision(6);
    for (const PerNSummary& s : result.per_n)
        std::cout << "n = " << std::setw(5) << s.n << "  mean e_n = " << s.mean_e
                  << "  omega fraction = " << s.omega_fraction << "\n";
    std::cout << "status: " << result.status << "\n";
    if (result.status == "ok") std::cout << "fitted rate: " << result.rate << "\n";
    std::cout << "wrote " << csv_path << " and " << json_path << "\n";
    return 0;
}

bool hypotheses_family(const StudyConfig& cfg, const std::string& kind, const Grid& grid,
                       int samples, std::uint64_t seed) {
    NoiseModel noise = make_noise(noise_kind_from_string(kind), cfg.noise_m_W,
                                  cfg.effective_sigma(), grid);
    EstimatedConstants est = estimate_constants(noise, grid, samples, seed);
    const HypothesisConstants& dec = noise.declared();

    bool ok = true;
    auto row = [&](const char* name, double estimated, double declared) {
        bool pass = estimated <= declared * 1.10 + 1e-12;
        ok = ok && pass;
        std::cout << std::left << std::setw(4) << name << "  declared " << std::scientific
                  << std::setprecision(6) << declared << "  estimated " << estimated << "  "
                  << (pass ? "ok" : "VIOLATED") << "\n";
    };
    std::cout << "noise family: " << to_string(noise.kind()) << ", m_W = " << noise.mode_count() << "\n";
    row("K0", est.K0, dec.K0);
    row("K1", est.K1, dec.K1);
    row("K3", est.K3, dec.K3);
    row("L0", est.L0, dec.L0);
    row("L1", est.L1, dec.L1);
    row("R0", est.R0, dec.R0);
    row("R1", est.R1, dec.R1);
    bool smallness = dec.K2 < 2.0 / 147.0;
    std::cout << "K2 = " << dec.K2 << "  (smallness bound 2/147: " << (smallness ? "ok" : "VIOLATED")
              << ")\n";
    std::cout << "K4 = " << dec.K4 << ", L2 = " << dec.L2 << ", R2 = " << dec.R2 << "\n";
    return ok && smallness;
}

// No --kind: certify every built-in family. With --kind: just that one.
int cmd_hypotheses(const StudyConfig& cfg, const std::string& kind_override, int samples,
                   std::uint64_t seed) {
    Grid grid(cfg.grid_L, cfg.grid_h, cfg.grid_Nx, cfg.grid_Nz);
    std::vector<std::string> kinds;
    if (!kind_override.empty()) kinds.push_back(kind_override);
    else kinds = {"additive", "diagonal-multiplicative", "low-mode-multiplicative"};

    bool ok = true;
    for (size_t i = 0; i < kinds.size(); ++i) {
        if (i) std::cout << "\n";
        ok = hypotheses_family(cfg, kinds[i], grid, samples, seed) && ok;
    }
    return ok ? 0 : 4;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"splitting-up scheme for the 2D stochastic primitive equations"};
    app.require_subcommand(1);

    std::string config_path = "default";
    std::uint64_t seed_flag = 0;
    bool seed_set = false;

    auto* check = app.add_subcommand("check", "run the structural invariant suite");
    std::uint64_t check_seed = 12345;
    int triples = 100;
    check->add_option("--seed", check_seed, "seed for the random probe fields");
    check->add_option("--triples", triples, "number of random triples for the trilinear checks");

    auto* simulate = app.add_subcommand("simulate", "run one trajectory and write its norm series");
    int sim_n = 16;
    std::string sim_out = "-";
    simulate->add_option("--config", config_path, "config file path or 'default'");
    simulate->add_option("--n", sim_n, "number of splitting intervals")->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim_out, "output CSV path ('-' for stdout)");
    simulate->add_option("--seed", seed_flag, "override study.seed");

    auto* converge = app.add_subcommand("converge", "run the Monte Carlo convergence study");
    std::string csv_path = "study.csv", json_path = "study.json";
    converge->add_option("--config", config_path, "config file path or 'default'");
    converge->add_option("--out-csv", csv_path, "per-n summary CSV path");
    converge->add_option("--out-json", json_path, "JSON summary path");
    converge->add_option("--seed", seed_flag, "override study.seed");

    auto* hypotheses = app.add_subcommand("hypotheses", "estimate the noise growth constants");
    std::string kind_override;
    int samples = 200;
    std::uint64_t hyp_seed = 1;
    hypotheses->add_option("--config", config_path, "config file path or 'default'");
    hypotheses->add_option("--kind", kind_override, "noise family override");
    hypotheses->add_option("--samples", samples, "number of random sample fields")->check(CLI::PositiveNumber);
    hypotheses->add_option("--seed", hyp_seed, "seed for the sample fields");

    try {
        app.parse(argc, argv);
        seed_set = simulate->count("--seed") > 0 || converge->count("--seed") > 0;

        if (check->parsed()) return cmd_check(check_seed, triples);

        StudyConfig cfg = StudyConfig::from_file(config_path);
        if (seed_set) cfg.study_seed = seed_flag;
        if (simulate->parsed()) return cmd_simulate(cfg, sim_n, sim_out);
        if (converge->parsed()) return cmd_converge(cfg, csv_path, json_path);
        return cmd_hypotheses(cfg, kind_override, samples, hyp_seed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const blow_up_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const statistics_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace spe
