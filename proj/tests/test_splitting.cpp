#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spe/splitting.hpp"

using namespace spe;

namespace {

const double PI = 3.141592653589793238462643383279502884;

Field random_admissible(const Grid& g, std::uint64_t seed) {
    Field f(g);
    std::uint64_t c = 0;
    for (int k = 1; k <= g.nx(); ++k)
        for (int m = 1; m <= g.nz(); ++m) f.at(k, m) = counter_normal(seed, 0, c++) / (1.0 + g.lambda(k, m));
    return f;
}

double field_dist(const Field& a, const Field& b) {
    Field d = a - b;
    return norms(d).h_norm;
}

}  // namespace

TEST_CASE("mesh maps d_n and d*_n") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.T = 1.0;
    cfg.n = 4;
    cfg.grid = &g;
    MeshMaps m = mesh_maps(0.3, cfg);
    CHECK(m.d_n == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m.d_star_n == doctest::Approx(0.5).epsilon(1e-15));
    m = mesh_maps(0.0, cfg);
    CHECK(m.d_n == 0.0);
    CHECK(m.d_star_n == doctest::Approx(0.25).epsilon(1e-15));
    // the last interval is closed at T
    m = mesh_maps(1.0, cfg);
    CHECK(m.d_n == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.d_star_n == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(mesh_maps(-0.1, cfg), std::domain_error);
    CHECK_THROWS_AS(mesh_maps(1.1, cfg), std::domain_error);
}

TEST_CASE("config validation") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), config_error);  // no grid / v0
    cfg.grid = &g;
    cfg.v0 = random_admissible(g, 1);
    CHECK_NOTHROW(cfg.validate());
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.n = 4;
    cfg.T = -1.0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.T = 1.0;
    Field bad(g);
    bad.at(1, 0) = 1.0;
    cfg.v0 = bad;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("deterministic substep: exact linear decay of a single mode") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.nonlinear_enabled = false;
    Field v(g);
    v.at(1, 1) = 0.7;  // lambda = 2
    for (int micro : {1, 4, 16}) {
        cfg.micro_det = micro;
        Field out = deterministic_step(v, 0.0, 0.25, cfg);
        CHECK(out.at(1, 1) == doctest::Approx(0.7 * std::exp(-2.0 * 0.25)).epsilon(1e-12));
    }
    cfg.eps = EpsilonSplit(0.5);
    cfg.micro_det = 2;
    Field half = deterministic_step(v, 0.0, 0.25, cfg);
    CHECK(half.at(1, 1) == doctest::Approx(0.7 * std::exp(-1.0 * 0.25)).epsilon(1e-12));
}

TEST_CASE("deterministic substep with B conserves |v| under pure transport") {
    // eps -> 1 limit is disallowed, so isolate B by comparing the H norm before
    // and after with the dissipation integral added back
    Grid g(PI, PI, 6, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.micro_det = 8;
    Field v = random_admissible(g, 5);
    SplitConfig run = cfg;
    run.T = 0.1;
    run.n = 1;
    run.v0 = v;
    BrownianPath empty;
    SchemeHistory hist = run_splitting(run, empty);
    double n0 = norms(v).h_norm, n1 = norms(hist.v_minus[0]).h_norm;
    CHECK(n1 * n1 + 2.0 * hist.int_V_v[0] == doctest::Approx(n0 * n0).epsilon(1e-12));
}

TEST_CASE("stochastic substep: identity when psi == 0 and eps == 0") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    Field eta = random_admissible(g, 2);
    std::vector<std::vector<double>> incs(3);  // three micro-steps, no modes
    Field out = stochastic_step(eta, 0.0, 0.5, cfg, incs);
    CHECK(out.coeffs() == eta.coeffs());

    CHECK_THROWS_AS(stochastic_step(eta, 0.0, 0.5, cfg, {}), shape_error);
}

TEST_CASE("stochastic substep: semi-implicit resolvent powers for eps > 0") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.eps = EpsilonSplit(0.5);
    Field eta(g);
    eta.at(1, 1) = 1.2;  // lambda = 2
    const int J = 4;
    const double len = 0.3, delta = len / J;
    std::vector<std::vector<double>> incs(J);
    Field out = stochastic_step(eta, 0.0, len, cfg, incs);
    double expected = 1.2 / std::pow(1.0 + 0.5 * delta * 2.0, J);
    CHECK(out.at(1, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("stochastic substep: one additive kick") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 1, {0.1}, g);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    Field eta = random_admissible(g, 3);
    std::vector<std::vector<double>> incs{{2.0}};
    Field out = stochastic_step(eta, 0.0, 0.1, cfg, incs);
    Field expected = eta;
    Field kick = model.shape(0);
    kick *= 0.1 * 2.0;
    expected += kick;
    CHECK(field_dist(out, expected) <= 1e-14);
}

TEST_CASE("noise-free scheme equals one uninterrupted deterministic solve") {
    Grid g(PI, PI, 6, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.5;
    cfg.n = 4;
    cfg.micro_det = 4;
    cfg.v0 = random_admissible(g, 7);
    BrownianPath empty;
    SchemeHistory hist = run_splitting(cfg, empty);

    SplitConfig whole = cfg;
    whole.micro_det = cfg.n * cfg.micro_det;  // same micro partition, no interruptions
    Field direct = deterministic_step(cfg.v0, 0.0, cfg.T, whole);
    double scale = norms(direct).h_norm + 1.0;
    CHECK(field_dist(hist.v_plus.back(), direct) <= 1e-10 * scale);
}

TEST_CASE("hand-offs are bitwise") {
    Grid g(PI, PI, 6, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 4, {0.1, 0.05, 0.02, 0.01}, g);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.5;
    cfg.n = 4;
    cfg.micro_det = 4;
    cfg.micro_sto = 4;
    cfg.v0 = random_admissible(g, 9);
    BrownianPath path = sample_path(model, 31, cfg.n * cfg.micro_sto, cfg.T);
    SchemeHistory h = run_splitting(cfg, path);

    REQUIRE(static_cast<int>(h.v_plus.size()) == cfg.n + 1);
    REQUIRE(static_cast<int>(h.eta_minus.size()) == cfg.n + 1);
    REQUIRE(static_cast<int>(h.v_minus.size()) == cfg.n);
    REQUIRE(static_cast<int>(h.eta_plus.size()) == cfg.n);
    for (int k = 0; k <= cfg.n; ++k) CHECK(h.v_plus[k].coeffs() == h.eta_minus[k].coeffs());
    for (int i = 0; i < cfg.n; ++i) CHECK(h.eta_plus[i].coeffs() == h.v_minus[i].coeffs());

    for (const Field& f : h.v_minus) CHECK(f.h_admissible());
    for (const Field& f : h.eta_minus) CHECK(f.h_admissible());
}

TEST_CASE("path must be coarsenable to the stochastic micro grid") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 2, {0.1, 0.05}, g);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.5;
    cfg.n = 3;
    cfg.micro_sto = 4;
    cfg.v0 = random_admissible(g, 10);
    BrownianPath path = sample_path(model, 1, 16, cfg.T);  // 16 not divisible by 12
    CHECK_THROWS_AS(run_splitting(cfg, path), config_error);
}

TEST_CASE("auxiliary process Z matches eta at mesh points when eps == 0") {
    Grid g(PI, PI, 6, 4);
    NoiseModel model = make_noise(NoiseKind::DiagonalMultiplicative, 4, {0.3, 0.2, 0.1, 0.05}, g);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.5;
    cfg.n = 4;
    cfg.micro_det = 4;
    cfg.micro_sto = 4;
    cfg.v0 = random_admissible(g, 11);
    BrownianPath path = sample_path(model, 77, cfg.n * cfg.micro_sto, cfg.T);
    SchemeHistory h = run_splitting(cfg, path);
    ZValues z = compute_Z(h);
    REQUIRE(static_cast<int>(z.at_mesh.size()) == cfg.n + 1);
    double scale = norms(cfg.v0).h_norm + 1.0;
    for (int k = 0; k <= cfg.n; ++k) CHECK(field_dist(z.at_mesh[k], h.eta_minus[k]) <= 1e-9 * scale);
}

TEST_CASE("auxiliary process Z matches eta at mesh points when eps > 0") {
    Grid g(PI, PI, 6, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 4, {0.1, 0.05, 0.02, 0.01}, g);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.eps = EpsilonSplit(0.25);
    cfg.T = 0.5;
    cfg.n = 4;
    cfg.micro_det = 4;
    cfg.micro_sto = 4;
    cfg.v0 = random_admissible(g, 12);
    BrownianPath path = sample_path(model, 78, cfg.n * cfg.micro_sto, cfg.T);
    SchemeHistory h = run_splitting(cfg, path);
    ZValues z = compute_Z(h);
    double scale = norms(cfg.v0).h_norm + 1.0;
    // Z uses eps * int_0^{d_n(t_k)} A eta ds, so k = n reuses the previous mesh point
    for (int k = 0; k <= cfg.n - 1; ++k)
        CHECK(field_dist(z.at_mesh[k], h.eta_minus[k]) <= 1e-9 * scale);
}

TEST_CASE("recorded micro-level Z matches the deterministic micro trajectory when psi == 0") {
    Grid g(PI, PI, 6, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.4;
    cfg.n = 2;
    cfg.micro_det = 4;
    cfg.micro_sto = 4;
    cfg.record_z_micro = true;
    cfg.v0 = random_admissible(g, 13);
    BrownianPath empty;
    SchemeHistory h = run_splitting(cfg, empty);
    ZValues z = compute_Z(h);
    REQUIRE(static_cast<int>(z.at_micro.size()) == cfg.n);
    double scale = norms(cfg.v0).h_norm + 1.0;
    for (int i = 0; i < cfg.n; ++i) {
        REQUIRE(static_cast<int>(z.at_micro[i].size()) == cfg.micro_det);
        for (int j = 0; j < cfg.micro_det; ++j) {
            const Field& v_right = (j + 1 < cfg.micro_det) ? h.v_micro[i][j + 1] : h.v_minus[i];
            CHECK(field_dist(z.at_micro[i][j], v_right) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("per-interval energy dissipation identities") {
    Grid g(PI, PI, 8, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 4, {0.1, 0.05, 0.02, 0.01}, g);
    for (double eps_val : {0.0, 0.25}) {
        SplitConfig cfg;
        cfg.grid = &g;
        cfg.noise = &model;
        cfg.eps = EpsilonSplit(eps_val);
        cfg.T = 0.5;
        cfg.n = 4;
        cfg.micro_det = 8;
        cfg.micro_sto = 8;
        cfg.v0 = random_admissible(g, 20);
        BrownianPath path = sample_path(model, 90, cfg.n * cfg.micro_sto, cfg.T);
        SchemeHistory h = run_splitting(cfg, path);
        double n0 = norms(cfg.v0).h_norm;
        double scale = n0 * n0 + 1.0;
        for (int i = 0; i < cfg.n; ++i) {
            double start = norms(h.v_plus[i]).h_norm;
            double end = norms(h.v_minus[i]).h_norm;
            CHECK(end * end + 2.0 * (1.0 - eps_val) * h.int_V_v[i] <=
                  start * start + 1e-8 * scale);
            double rs = dz_norms(h.v_plus[i]).h_norm;
            double re = dz_norms(h.v_minus[i]).h_norm;
            CHECK(re * re + 2.0 * (1.0 - eps_val) * h.int_Vr_v[i] <= rs * rs + 1e-8 * scale);
        }
    }
}

TEST_CASE("monitor stopping times") {
    Grid g(PI, PI, 6, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.5;
    cfg.n = 4;
    cfg.micro_det = 4;
    cfg.v0 = random_admissible(g, 21);
    BrownianPath empty;
    SchemeHistory h = run_splitting(cfg, empty);

    MonitorResult relaxed = monitor_stopping(h, 1e12, 1e12);
    CHECK(relaxed.omega_flag);
    CHECK_FALSE(relaxed.tau_N_hit.has_value());
    CHECK_FALSE(relaxed.sigma_M_hit.has_value());
    CHECK_FALSE(relaxed.reference_supplied);

    // recompute the first interval's tau integral independently from the stored
    // micro trajectory
    double delta = cfg.T / (cfg.n * cfg.micro_det);
    double tau0 = 0.0;
    for (const Field& v : h.v_micro[0]) {
        Norms nv = norms(v);
        DzNorms rv = dz_norms(v);
        tau0 += (nv.h_norm * nv.h_norm * nv.v_seminorm * nv.v_seminorm +
                 rv.h_norm * rv.v_seminorm) * delta;
    }
    CHECK(tau0 == doctest::Approx(h.tau_interval[0]).epsilon(1e-12));

    // threshold just below the first interval integral: tau hit inside interval 0
    MonitorResult tight = monitor_stopping(h, 0.5 * tau0 * cfg.n, 1e12);
    REQUIRE(tight.tau_N_hit.has_value());
    CHECK(*tight.tau_N_hit <= cfg.T / cfg.n + 1e-15);
    CHECK_FALSE(tight.omega_flag);

    // M below the first micro contribution: sigma hit at the first micro time
    MonitorResult sig = monitor_stopping(h, 1e12, 0.5 * h.sigma_micro[0]);
    REQUIRE(sig.sigma_M_hit.has_value());
    CHECK(*sig.sigma_M_hit == doctest::Approx(delta).epsilon(1e-12));
    CHECK_FALSE(sig.omega_flag);
}

TEST_CASE("blow-up guard") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.5;
    cfg.n = 2;
    cfg.v0 = random_admissible(g, 22);
    cfg.blowup_factor = 1e-6;  // guard far below the solution scale
    BrownianPath empty;
    try {
        run_splitting(cfg, empty);
        FAIL("expected blow_up_error");
    } catch (const blow_up_error& e) {
        CHECK(e.interval == 0);
    }
}

TEST_CASE("large eps on the zero field is stable") {
    Grid g(PI, PI, 4, 4);
    SplitConfig cfg;
    cfg.grid = &g;
    cfg.eps = EpsilonSplit(0.99);
    cfg.T = 0.5;
    cfg.n = 2;
    cfg.v0 = Field(g);
    BrownianPath empty;
    SchemeHistory h = run_splitting(cfg, empty);
    CHECK(norms(h.v_plus.back()).h_norm == 0.0);
}
