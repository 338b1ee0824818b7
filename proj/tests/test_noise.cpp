#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spe/noise.hpp"
#include "spe/operators.hpp"

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

double hs_diff_sq(const NoiseModel& model, const Field& a, const Field& b) {
    double s = 0.0;
    for (int i = 0; i < model.mode_count(); ++i) {
        Field d = model.column(0.0, a, i) - model.column(0.0, b, i);
        double n = norms(d).h_norm;
        s += n * n;
    }
    return s;
}

}  // namespace

TEST_CASE("noise kind string round trip") {
    CHECK(noise_kind_from_string("additive") == NoiseKind::Additive);
    CHECK(noise_kind_from_string("diagonal-multiplicative") == NoiseKind::DiagonalMultiplicative);
    CHECK(noise_kind_from_string("low-mode-multiplicative") == NoiseKind::LowModeMultiplicative);
    CHECK_THROWS_AS(noise_kind_from_string("bogus"), config_error);
    CHECK(to_string(NoiseKind::Additive) == "additive");
}

TEST_CASE("single-mode additive model: shapes and declared constants") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 1, {0.1}, g);
    REQUIRE(model.mode_count() == 1);
    // lowest admissible eigenvalue mode is (1,1)
    CHECK(model.modes()[0].k == 1);
    CHECK(model.modes()[0].m == 1);
    Field e1 = model.shape(0);
    CHECK(norms(e1).h_norm == doctest::Approx(1.0).epsilon(1e-13));

    Field v = random_admissible(g, 1);
    Field col = model.column(0.0, v, 0);
    Field expected = e1;
    expected *= 0.1;
    Field diff = col - expected;
    CHECK(norms(diff).h_norm <= 1e-14);

    const HypothesisConstants& c = model.declared();
    CHECK(c.K0 == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(c.K1 == 0.0);
    CHECK(c.K3 == 0.0);
    CHECK(c.K2 == 0.0);
    CHECK(c.K4 == 0.0);
    CHECK(c.L2 == 0.0);
    CHECK(c.R2 == 0.0);
}

TEST_CASE("single-mode diagonal multiplicative model constants") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::DiagonalMultiplicative, 1, {0.1}, g);
    const HypothesisConstants& c = model.declared();
    CHECK(c.K0 == 0.0);
    CHECK(c.K1 == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(c.K3 == doctest::Approx(0.01).epsilon(1e-13));
    CHECK(c.K2 < 2.0 / 147.0);
}

TEST_CASE("zero amplitude model is trivial") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 3, {0.0, 0.0, 0.0}, g);
    const HypothesisConstants& c = model.declared();
    CHECK(c.K0 == 0.0);
    CHECK(c.L0 == 0.0);
    CHECK(c.R0 == 0.0);
    Field v = random_admissible(g, 2);
    std::vector<double> dW{1.0, -2.0, 0.5};
    CHECK(norms(apply_psi_increment(model, 0.0, v, dW)).h_norm == 0.0);
}

TEST_CASE("make_noise validates configuration") {
    Grid g(PI, PI, 4, 4);
    CHECK_THROWS_AS(make_noise(NoiseKind::Additive, 0, {}, g), config_error);
    CHECK_THROWS_AS(make_noise(NoiseKind::Additive, 2, {0.1}, g), config_error);
    CHECK_THROWS_AS(make_noise(NoiseKind::Additive, 1, {-0.1}, g), config_error);
}

TEST_CASE("path sampling is deterministic in the seed") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 4, {0.1, 0.1, 0.1, 0.1}, g);
    BrownianPath a = sample_path(model, 42, 64, 1.0);
    BrownianPath b = sample_path(model, 42, 64, 1.0);
    CHECK(a.dw == b.dw);
    BrownianPath c = sample_path(model, 43, 64, 1.0);
    CHECK(a.dw != c.dw);
    CHECK(a.seed == 42);
    CHECK(a.n_fine == 64);

    BrownianPath single = sample_path(model, 7, 1, 1.0);
    CHECK(static_cast<int>(single.dw.size()) == 4);
}

TEST_CASE("increment variance matches T/n_fine over 1e5 draws") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 1, {0.1}, g);
    const int n_fine = 100000;
    const double T = 2.0;
    BrownianPath p = sample_path(model, 11, n_fine, T);
    double mean = 0.0, var = 0.0;
    for (int j = 0; j < n_fine; ++j) mean += p.increment(0, j);
    mean /= n_fine;
    for (int j = 0; j < n_fine; ++j) {
        double d = p.increment(0, j) - mean;
        var += d * d;
    }
    var /= (n_fine - 1);
    double target = T / n_fine;
    // variance of the sample variance of N(0,s2) is ~ 2 s2^2 / n
    double se = target * std::sqrt(2.0 / n_fine);
    CHECK(std::abs(var - target) <= 3.0 * se);
}

TEST_CASE("coarsening sums fine increments exactly") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 3, {0.1, 0.05, 0.02}, g);
    BrownianPath p = sample_path(model, 5, 48, 1.5);

    BrownianPath same = coarsen(p, 1);
    CHECK(same.dw == p.dw);

    BrownianPath c4 = coarsen(p, 4);
    CHECK(c4.n_fine == 12);
    for (int i = 0; i < 3; ++i) {
        double fine_total = 0.0, coarse_total = 0.0;
        for (int j = 0; j < 48; ++j) fine_total += p.increment(i, j);
        for (int j = 0; j < 12; ++j) coarse_total += c4.increment(i, j);
        CHECK(coarse_total == doctest::Approx(fine_total).epsilon(1e-14));
    }

    BrownianPath c22 = coarsen(coarsen(p, 2), 2);
    for (size_t j = 0; j < c4.dw.size(); ++j)
        CHECK(c4.dw[j] == doctest::Approx(c22.dw[j]).epsilon(1e-14));

    CHECK_THROWS_AS(coarsen(p, 5), config_error);
}

TEST_CASE("applying psi increments") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 2, {0.1, 0.3}, g);
    Field v = random_admissible(g, 3);

    std::vector<double> zero{0.0, 0.0};
    CHECK(norms(apply_psi_increment(model, 0.0, v, zero)).h_norm == 0.0);

    std::vector<double> first{1.0, 0.0};
    Field kick = apply_psi_increment(model, 0.0, v, first);
    Field expected = model.shape(0);
    expected *= 0.1;
    Field diff = kick - expected;
    CHECK(norms(diff).h_norm <= 1e-14);

    std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(apply_psi_increment(model, 0.0, v, wrong), shape_error);
}

TEST_CASE("Lipschitz bound |psi(v1)-psi(v2)|_HS^2 <= K3 |v1-v2|^2") {
    Grid g(PI, PI, 6, 4);
    std::vector<double> sigma{0.2, 0.1, 0.05, 0.02};
    for (NoiseKind kind : {NoiseKind::Additive, NoiseKind::DiagonalMultiplicative,
                           NoiseKind::LowModeMultiplicative}) {
        NoiseModel model = make_noise(kind, 4, sigma, g);
        double K3 = model.declared().K3;
        for (int t = 0; t < 100; ++t) {
            Field a = random_admissible(g, 900 + 2 * t);
            Field b = random_admissible(g, 901 + 2 * t);
            Field d = a - b;
            double dn = norms(d).h_norm;
            CHECK(hs_diff_sq(model, a, b) <= K3 * dn * dn * (1.0 + 1e-9) + 1e-28);
        }
    }
}

TEST_CASE("estimated constants: additive closed form") {
    Grid g(PI, PI, 4, 4);
    NoiseModel model = make_noise(NoiseKind::Additive, 1, {0.1}, g);
    EstimatedConstants est = estimate_constants(model, g, 100, 17);
    CHECK(est.K0 == doctest::Approx(0.01).epsilon(0.1));
    CHECK(est.K1 <= 1e-10);
    CHECK(est.K3 <= 1e-10);
}

TEST_CASE("estimated constants never exceed declared by more than 10%") {
    Grid g(PI, PI, 6, 4);
    std::vector<double> sigma{0.1, 0.07, 0.04, 0.02};
    for (NoiseKind kind : {NoiseKind::Additive, NoiseKind::DiagonalMultiplicative,
                           NoiseKind::LowModeMultiplicative}) {
        NoiseModel model = make_noise(kind, 4, sigma, g);
        const HypothesisConstants& dec = model.declared();
        EstimatedConstants est = estimate_constants(model, g, 200, 23);
        CHECK(est.K0 <= dec.K0 * 1.1 + 1e-12);
        CHECK(est.K1 <= dec.K1 * 1.1 + 1e-12);
        CHECK(est.K3 <= dec.K3 * 1.1 + 1e-12);
        CHECK(est.L0 <= dec.L0 * 1.1 + 1e-12);
        CHECK(est.L1 <= dec.L1 * 1.1 + 1e-12);
        CHECK(est.R0 <= dec.R0 * 1.1 + 1e-12);
        CHECK(est.R1 <= dec.R1 * 1.1 + 1e-12);
    }
    NoiseModel zero = make_noise(NoiseKind::Additive, 2, {0.0, 0.0}, g);
    EstimatedConstants ez = estimate_constants(zero, g, 50, 3);
    CHECK(ez.K0 == 0.0);
    CHECK(ez.K1 == 0.0);
}

TEST_CASE("counter-based normals are order independent") {
    double a = counter_normal(1, 2, 3);
    double b = counter_normal(1, 2, 4);
    CHECK(a == counter_normal(1, 2, 3));
    CHECK(a != b);
    CHECK(std::isfinite(a));
}
