#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spe/reference.hpp"

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

TEST_CASE("reference config validation") {
    Grid g(PI, PI, 4, 4);
    ReferenceConfig cfg;
    CHECK_THROWS_AS(cfg.validate(), config_error);  // no grid / v0
    cfg.grid = &g;
    cfg.v0 = random_admissible(g, 1);
    CHECK_NOTHROW(cfg.validate());
    cfg.store_stride = 5;  // does not divide 16 * 2
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.store_stride = 1;
    cfg.n_ref = 0;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.n_ref = 8;
    Field bad(g);
    bad.at(2, 0) = 1.0;
    cfg.v0 = bad;
    CHECK_THROWS_AS(cfg.validate(), config_error);
}

TEST_CASE("pure heat decay of a single mode") {
    Grid g(PI, PI, 4, 4);
    ReferenceConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.5;
    cfg.n_ref = 8;
    cfg.micro = 2;
    cfg.v0 = Field(g);
    cfg.v0.at(1, 1) = 0.9;  // lambda = 2, and B(v0, v0) is projected away
    BrownianPath empty;
    for (bool nl : {false, true}) {
        cfg.nonlinear_enabled = nl;
        ReferenceTrajectory traj = run_reference(cfg, empty);
        CHECK(traj.v.back().at(1, 1) == doctest::Approx(0.9 * std::exp(-2.0 * 0.5)).epsilon(1e-10));
    }
}

TEST_CASE("additive Euler-Maruyama recursion oracle") {
    Grid g(PI, PI, 6, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 3, {0.2, 0.1, 0.05}, g);
    ReferenceConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.4;
    cfg.n_ref = 8;
    cfg.micro = 1;
    cfg.nonlinear_enabled = false;
    cfg.v0 = Field(g);
    BrownianPath path = sample_path(model, 33, cfg.step_count(), cfg.T);
    ReferenceTrajectory traj = run_reference(cfg, path);

    const double delta = cfg.T / cfg.step_count();
    Field c(g);
    for (int j = 0; j < cfg.step_count(); ++j) {
        for (int k = 1; k <= g.nx(); ++k)
            for (int m = 0; m <= g.nz(); ++m) c.at(k, m) *= std::exp(-g.lambda(k, m) * delta);
        for (int i = 0; i < model.mode_count(); ++i) {
            const NoiseModel::Mode& mode = model.modes()[i];
            c.at(mode.k, mode.m) += model.sigma()[i] * mode.coeff * path.increment(i, j);
        }
    }
    CHECK(field_dist(traj.v.back(), c) <= 1e-12);
}

TEST_CASE("provenance and storage layout") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 2, {0.1, 0.05}, g);
    ReferenceConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.5;
    cfg.n_ref = 4;
    cfg.micro = 2;
    cfg.store_stride = 4;
    cfg.v0 = random_admissible(g, 2);
    BrownianPath path = sample_path(model, 55, 16, cfg.T);
    ReferenceTrajectory traj = run_reference(cfg, path);

    CHECK(traj.steps == 8);
    CHECK(traj.store_stride == 4);
    CHECK(traj.seed == 55);
    CHECK(traj.path_n_fine == 16);
    CHECK(traj.stored_count() == 3);  // steps 0, 4, 8
    CHECK(static_cast<int>(traj.h_norm.size()) == traj.steps + 1);
    CHECK(static_cast<int>(traj.v_norm.size()) == traj.steps + 1);
    CHECK(static_cast<int>(traj.dz_norm.size()) == traj.steps + 1);
    CHECK_NOTHROW(traj.at_step(0));
    CHECK_NOTHROW(traj.at_step(8));
    CHECK_THROWS_AS(traj.at_step(2), shape_error);
    CHECK_THROWS_AS(traj.at_step(12), shape_error);
    CHECK(traj.h_norm[0] == doctest::Approx(norms(cfg.v0).h_norm).epsilon(1e-15));
}

TEST_CASE("path must be coarsenable to the step grid") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 2, {0.1, 0.05}, g);
    ReferenceConfig cfg;
    cfg.grid = &g;
    cfg.noise = &model;
    cfg.T = 0.5;
    cfg.n_ref = 3;
    cfg.micro = 2;
    cfg.v0 = random_admissible(g, 3);
    BrownianPath path = sample_path(model, 1, 16, cfg.T);  // 16 not divisible by 6
    CHECK_THROWS_AS(run_reference(cfg, path), config_error);
}

TEST_CASE("self-refinement converges on a coupled path") {
    Grid g(PI, PI, 8, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 4, {0.1, 0.05, 0.02, 0.01}, g);
    ReferenceConfig base;
    base.grid = &g;
    base.noise = &model;
    base.T = 0.25;
    base.micro = 2;
    base.v0 = random_admissible(g, 4);
    BrownianPath path = sample_path(model, 99, 256, base.T);

    auto terminal = [&](int n_ref) {
        ReferenceConfig cfg = base;
        cfg.n_ref = n_ref;
        cfg.store_stride = cfg.step_count();  // keep endpoints only
        return run_reference(cfg, path).v.back();
    };
    Field a = terminal(16), b = terminal(32), c = terminal(64);
    double d1 = field_dist(a, b), d2 = field_dist(b, c);
    CHECK(d1 < 1e-2);
    CHECK(d2 < 0.75 * d1);  // first-order self-convergence along the same path
}

TEST_CASE("reference blow-up guard") {
    Grid g(PI, PI, 4, 4);
    ReferenceConfig cfg;
    cfg.grid = &g;
    cfg.T = 0.5;
    cfg.n_ref = 4;
    cfg.v0 = random_admissible(g, 5);
    cfg.blowup_factor = 1e-6;
    BrownianPath empty;
    CHECK_THROWS_AS(run_reference(cfg, empty), blow_up_error);
}
