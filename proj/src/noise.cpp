#include "spe/noise.hpp"

#include <algorithm>
#include <cmath>

namespace spe {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t key = mix64(seed ^ mix64(stream ^ mix64(counter)));
    std::uint64_t a = mix64(key ^ 0x243f6a8885a308d3ULL);
    std::uint64_t b = mix64(key ^ 0x13198a2e03707344ULL);
    double u1 = 1.0 - (a >> 11) * 0x1.0p-53;  // (0,1]
    double u2 = (b >> 11) * 0x1.0p-53;        // [0,1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "additive") return NoiseKind::Additive;
    if (s == "diagonal-multiplicative") return NoiseKind::DiagonalMultiplicative;
    if (s == "low-mode-multiplicative") return NoiseKind::LowModeMultiplicative;
    throw config_error("unknown noise kind: " + s);
}

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::Additive: return "additive";
        case NoiseKind::DiagonalMultiplicative: return "diagonal-multiplicative";
        case NoiseKind::LowModeMultiplicative: return "low-mode-multiplicative";
    }
    return "?";
}

NoiseModel::NoiseModel(NoiseKind kind, std::vector<double> sigma, const Grid& grid)
    : kind_(kind), sigma_(std::move(sigma)), grid_(&grid) {
    if (sigma_.empty()) throw config_error("noise: sigma must be nonempty");
    for (double s : sigma_)
        if (s < 0.0) throw config_error("noise: sigma_i must be nonnegative");
    const int m_w = static_cast<int>(sigma_.size());
    if (m_w > grid.nx() * grid.nz())
        throw config_error("noise: m_W exceeds available admissible modes on this grid");

    // lowest-eigenvalue admissible modes (m >= 1), unit-normalized in H
    std::vector<Mode> all;
    all.reserve(static_cast<size_t>(grid.nx()) * grid.nz());
    for (int k = 1; k <= grid.nx(); ++k)
        for (int m = 1; m <= grid.nz(); ++m)
            all.push_back({k, m, 1.0 / std::sqrt(grid.weight(m))});
    std::stable_sort(all.begin(), all.end(), [&](const Mode& a, const Mode& b) {
        double la = grid.lambda(a.k, a.m), lb = grid.lambda(b.k, b.m);
        if (la != lb) return la < lb;
        return a.k != b.k ? a.k < b.k : a.m < b.m;
    });
    modes_.assign(all.begin(), all.begin() + m_w);

    double sum_sq = 0.0, max_sq = 0.0, sum_sq_dz = 0.0, sum_sq_lam = 0.0;
    for (int i = 0; i < m_w; ++i) {
        double s2 = sigma_[i] * sigma_[i];
        double dz = modes_[i].m * grid.pi_over_h();
        sum_sq += s2;
        max_sq = std::max(max_sq, s2);
        sum_sq_dz += s2 * dz * dz;
        sum_sq_lam += s2 * grid.lambda(modes_[i].k, modes_[i].m);
    }
    if (kind_ == NoiseKind::Additive) {
        declared_.K0 = sum_sq;
        declared_.L0 = sum_sq_dz;
        declared_.R0 = sum_sq_lam;
    } else {
        declared_.K1 = max_sq;
        declared_.K3 = max_sq;
        declared_.L1 = max_sq;
        declared_.R1 = max_sq;
    }
}

NoiseModel make_noise(NoiseKind kind, int m_w, const std::vector<double>& sigma, const Grid& grid) {
    if (m_w < 1) throw config_error("noise: m_W must be at least 1");
    if (static_cast<int>(sigma.size()) != m_w)
        throw config_error("noise: sigma length must equal m_W");
    return NoiseModel(kind, sigma, grid);
}

Field NoiseModel::shape(int i) const {
    Field e(*grid_);
    e.at(modes_[i].k, modes_[i].m) = modes_[i].coeff;
    return e;
}

Field NoiseModel::column(double /*t*/, const Field& v, int i) const {
    Field out(*grid_);
    const Mode& md = modes_[i];
    switch (kind_) {
        case NoiseKind::Additive:
            out.at(md.k, md.m) = sigma_[i] * md.coeff;
            break;
        case NoiseKind::DiagonalMultiplicative:
            out.at(md.k, md.m) = sigma_[i] * v.at(md.k, md.m);
            break;
        case NoiseKind::LowModeMultiplicative: {
            double inner = v.at(md.k, md.m) * md.coeff * grid_->weight(md.m);
            out.at(md.k, md.m) = sigma_[i] * inner * md.coeff;
            break;
        }
    }
    return out;
}

double NoiseModel::hs_norm_sq(double t, const Field& v) const {
    double sum = 0.0;
    for (int i = 0; i < mode_count(); ++i) {
        const Mode& md = modes_[i];
        double c = column(t, v, i).at(md.k, md.m);
        sum += c * c * grid_->weight(md.m);
    }
    return sum;
}

double NoiseModel::hs_norm_sq_dz(double t, const Field& v) const {
    double sum = 0.0;
    for (int i = 0; i < mode_count(); ++i) {
        const Mode& md = modes_[i];
        double c = column(t, v, i).at(md.k, md.m);
        double dz = md.m * grid_->pi_over_h();
        // dz maps the mode into the sin*sin basis; mass stays (L/2)(h/2)
        sum += dz * dz * c * c * grid_->weight(md.m);
    }
    return sum;
}

double NoiseModel::hs_norm_sq_V(double t, const Field& v) const {
    double sum = 0.0;
    for (int i = 0; i < mode_count(); ++i) {
        const Mode& md = modes_[i];
        double c = column(t, v, i).at(md.k, md.m);
        sum += grid_->lambda(md.k, md.m) * c * c * grid_->weight(md.m);
    }
    return sum;
}

BrownianPath sample_path(const NoiseModel& model, std::uint64_t seed, int n_fine, double T) {
    if (n_fine < 1) throw config_error("sample_path: n_fine must be at least 1");
    if (!(T > 0.0)) throw config_error("sample_path: horizon must be positive");
    BrownianPath p;
    p.m_w = model.mode_count();
    p.n_fine = n_fine;
    p.T = T;
    p.seed = seed;
    p.dw.resize(static_cast<size_t>(p.m_w) * n_fine);
    const double sd = std::sqrt(T / n_fine);
    for (int i = 0; i < p.m_w; ++i)
        for (int j = 0; j < n_fine; ++j)
            p.dw[static_cast<size_t>(i) * n_fine + j] = sd * counter_normal(seed, i, j);
    return p;
}

BrownianPath coarsen(const BrownianPath& path, int factor) {
    if (factor < 1 || path.n_fine % factor != 0)
        throw config_error("coarsen: factor must divide the fine partition count");
    BrownianPath out;
    out.m_w = path.m_w;
    out.n_fine = path.n_fine / factor;
    out.T = path.T;
    out.seed = path.seed;
    out.dw.resize(static_cast<size_t>(out.m_w) * out.n_fine);
    for (int i = 0; i < out.m_w; ++i)
        for (int j = 0; j < out.n_fine; ++j) {
            double acc = 0.0;
            for (int l = 0; l < factor; ++l)
                acc += path.dw[static_cast<size_t>(i) * path.n_fine + j * factor + l];
            out.dw[static_cast<size_t>(i) * out.n_fine + j] = acc;
        }
    return out;
}

Field apply_psi_increment(const NoiseModel& model, double t, const Field& v, const std::vector<double>& dW) {
    if (static_cast<int>(dW.size()) != model.mode_count())
        throw shape_error("apply_psi_increment: increment length mismatch");
    Field out(model.grid());
    for (int i = 0; i < model.mode_count(); ++i) {
        if (dW[i] == 0.0) continue;
        const NoiseModel::Mode& md = model.modes()[i];
        out.at(md.k, md.m) += model.column(t, v, i).at(md.k, md.m) * dW[i];
    }
    return out;
}

EstimatedConstants estimate_constants(const NoiseModel& model, const Grid& grid, int samples, std::uint64_t seed) {
    auto random_field = [&](int s) {
        Field f(grid);
        std::uint64_t ctr = 0;
        for (int k = 1; k <= grid.nx(); ++k)
            for (int m = 1; m <= grid.nz(); ++m)
                f.at(k, m) = counter_normal(seed, 0x5eedULL + s, ctr++) / (1.0 + grid.lambda(k, m));
        return f;
    };

    EstimatedConstants est;
    Field zero(grid);
    est.K0 = model.hs_norm_sq(0.0, zero);
    est.L0 = model.hs_norm_sq_dz(0.0, zero);
    est.R0 = model.hs_norm_sq_V(0.0, zero);

    for (int s = 0; s < samples; ++s) {
        Field f = random_field(s);
        Norms nf = norms(f);
        DzNorms df = dz_norms(f);
        double hs = model.hs_norm_sq(0.0, f);
        double hs_dz = model.hs_norm_sq_dz(0.0, f);
        double hs_v = model.hs_norm_sq_V(0.0, f);
        est.K1 = std::max(est.K1, std::max(0.0, hs - est.K0) / (nf.h_norm * nf.h_norm));
        est.L1 = std::max(est.L1, std::max(0.0, hs_dz - est.L0) / (df.h_norm * df.h_norm));
        est.R1 = std::max(est.R1, std::max(0.0, hs_v - est.R0) / (nf.v_seminorm * nf.v_seminorm));

        Field g = random_field(samples + s);
        Field diff = f - g;
        double hs_lip = 0.0;
        for (int i = 0; i < model.mode_count(); ++i) {
            const NoiseModel::Mode& md = model.modes()[i];
            double c = model.column(0.0, f, i).at(md.k, md.m) - model.column(0.0, g, i).at(md.k, md.m);
            hs_lip += c * c * grid.weight(md.m);
        }
        double d2 = norms(diff).h_norm;
        est.K3 = std::max(est.K3, hs_lip / (d2 * d2));
    }
    return est;
}

}  // namespace spe
