#include "blowlab/lower_solution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace blowlab {

double LowerSolution::amplitude() const {
    return std::pow(big_m, -1.0 / (profile.params.q - 1.0));
}

double LowerSolution::evaluate_radial(double dist, double t) const {
    if (!(t >= t0 && t < 0.0))
        throw std::invalid_argument("LowerSolution: t outside [t0, 0)");
    const double r = dist / std::sqrt(-t);
    return amplitude() * std::pow(-t, -1.0 / (profile.params.p - 1.0)) * profile.value(r);
}

double LowerSolution::evaluate(const Vec3& x, double t) const {
    return evaluate_radial(euclidean_dist(x, x0, profile.params.n), t);
}

double LowerSolution::support_radius(double t) const { return profile.r0 * std::sqrt(-t); }

double LowerSolution::sup_at(double t) const {
    return amplitude() * std::pow(-t, -1.0 / (profile.params.p - 1.0)) * profile.alpha0;
}

bool T0Interval::contains(double t) const {
    if (!(t < hi)) return false;
    return lo_unbounded || t >= lo;
}

T0Interval admissible_t0(const ProblemParams& params) {
    params.validate();
    const double sc = critical_sigma(params.p, params.q);
    if (params.sigma < sc - 1e-12 * std::fmax(1.0, sc))
        throw std::invalid_argument("admissible_t0: sigma below critical");
    T0Interval iv;
    if (sigma_is_critical(params)) {
        iv.lo = -std::numeric_limits<double>::infinity();
        iv.lo_unbounded = true;
    } else {
        iv.lo = -1.0;
        iv.lo_unbounded = false;
    }
    iv.hi = 0.0;
    return iv;
}

LowerSolution make_lower_solution(Profile profile, double t0, double big_m, double mu_eq,
                                  const Vec3& x0) {
    const auto iv = admissible_t0(profile.params);
    if (!iv.contains(t0)) throw std::invalid_argument("make_lower_solution: t0 not admissible");
    if (!(big_m > 0.0)) throw std::invalid_argument("make_lower_solution: M must be > 0");
    const auto& pp = profile.params;
    const double mu_floor = std::pow(big_m, (pp.p - 1.0) / (pp.q - 1.0)) * pp.mu;
    if (mu_eq < mu_floor * (1.0 - 1e-12))
        throw std::invalid_argument("make_lower_solution: mu below M^{(p-1)/(q-1)} mu0");
    LowerSolution ls;
    ls.profile = std::move(profile);
    ls.t0 = t0;
    ls.big_m = big_m;
    ls.mu_eq = mu_eq;
    ls.x0 = x0;
    return ls;
}

ResidualReport interior_residual(const LowerSolution& ls, std::span<const SpaceTimePoint> samples,
                                 const par::ExecPolicy& pol) {
    const auto& pp = ls.profile.params;
    const double sc = critical_sigma(pp.p, pp.q);
    const double mu_eff = ls.mu_eq * std::pow(ls.big_m, -(pp.p - 1.0) / (pp.q - 1.0));
    const double delta = ls.profile.h();
    const double r0 = ls.profile.r0;
    const double half_gap = sigma_is_critical(pp) ? 0.0 : 0.5 * (pp.sigma - sc);

    // validate the cone membership up front (rejection is part of the contract)
    for (const auto& s : samples) {
        if (!(s.t >= ls.t0 && s.t < 0.0))
            throw std::invalid_argument("interior_residual: sample time outside [t0, 0)");
        const double r = euclidean_dist(s.x, ls.x0, pp.n) / std::sqrt(-s.t);
        if (r >= r0) throw std::invalid_argument("interior_residual: sample outside the support cone");
    }

    const std::size_t n = samples.size();
    const std::size_t nb = par::num_blocks(n);
    std::vector<double> block_min(nb, std::numeric_limits<double>::infinity());
    std::vector<double> block_max(nb, -std::numeric_limits<double>::infinity());

    par::for_each_block(n, pol, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double bmin = std::numeric_limits<double>::infinity();
        double bmax = -bmin;
        for (std::size_t i = lo; i < hi; ++i) {
            const auto& s = samples[i];
            double r = euclidean_dist(s.x, ls.x0, pp.n) / std::sqrt(-s.t);
            // keep the centered stencil inside the smooth part of the table
            r = std::clamp(r, 2.0 * delta, r0 - 2.0 * delta);
            const double wm = ls.profile.value(r - delta);
            const double wc = ls.profile.value(r);
            const double wp = ls.profile.value(r + delta);
            const double d2 = (wm - 2.0 * wc + wp) / (delta * delta);
            const double d1 = (wp - wm) / (2.0 * delta);
            const double absorption = std::pow(r, pp.sigma) * std::pow(-s.t, half_gap);
            const double res = d2 + ((pp.n - 1.0) / r - 0.5 * r) * d1 - wc / (pp.p - 1.0) +
                               mu_eff * std::pow(wc, pp.p) - absorption * std::pow(wc, pp.q);
            bmin = std::fmin(bmin, res);
            bmax = std::fmax(bmax, res);
        }
        block_min[b] = bmin;
        block_max[b] = bmax;
    });

    ResidualReport rep;
    rep.samples = n;
    rep.tol_cert = 10.0 * ls.profile.residual_tol;
    rep.min_residual = std::numeric_limits<double>::infinity();
    rep.max_residual = -rep.min_residual;
    for (std::size_t b = 0; b < nb; ++b) {
        rep.min_residual = std::fmin(rep.min_residual, block_min[b]);
        rep.max_residual = std::fmax(rep.max_residual, block_max[b]);
    }
    if (n == 0) rep.min_residual = rep.max_residual = 0.0;
    rep.pass = rep.min_residual >= -rep.tol_cert;
    return rep;
}

std::vector<SpaceTimePoint> cone_samples(const LowerSolution& ls, std::size_t n_random,
                                         std::size_t n_structured) {
    const auto& pp = ls.profile.params;
    const double delta = ls.profile.h();
    const double r_lo = 2.0 * delta;
    const double r_hi = ls.profile.r0 - 2.0 * delta;
    std::mt19937_64 rng(0x5eedb10bULL);  // fixed seed: sampling is deterministic
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    auto t_at = [&](double u) { return ls.t0 * std::pow(10.0, -3.0 * u); };
    auto point_at = [&](double r_sim, double t) {
        SpaceTimePoint s;
        s.t = t;
        const double dist = r_sim * std::sqrt(-t);
        Vec3 dir{0.0, 0.0, 0.0};
        if (pp.n == 1) {
            dir[0] = uni(rng) < 0.5 ? -1.0 : 1.0;
        } else {
            double norm = 0.0;
            for (int k = 0; k < pp.n; ++k) {
                dir[k] = 2.0 * uni(rng) - 1.0;
                norm += dir[k] * dir[k];
            }
            norm = std::sqrt(std::fmax(norm, 1e-300));
            for (int k = 0; k < pp.n; ++k) dir[k] /= norm;
        }
        s.x = ls.x0;
        for (int k = 0; k < pp.n; ++k) s.x[k] += dist * dir[k];
        return s;
    };

    std::vector<SpaceTimePoint> out;
    out.reserve(n_random + n_structured);
    for (std::size_t i = 0; i < n_random; ++i)
        out.push_back(point_at(r_lo + (r_hi - r_lo) * uni(rng), t_at(uni(rng))));

    // structured rings near the interface and the origin
    const double rings[] = {r_lo,          r_lo + delta,      r_lo + 2.0 * delta,
                            r_hi - 8.0 * delta, r_hi - 3.0 * delta, r_hi - delta,
                            r_hi};
    std::size_t i = 0;
    while (out.size() < n_random + n_structured) {
        const double r = rings[i % std::size(rings)];
        const double t = t_at(static_cast<double>(i % 17) / 16.0);
        out.push_back(point_at(std::clamp(r, r_lo, r_hi), t));
        ++i;
    }
    return out;
}

JumpReport jump_condition(const LowerSolution& ls, double t) {
    if (!(t >= ls.t0 && t < 0.0))
        throw std::invalid_argument("jump_condition: t outside [t0, 0)");
    const auto& pp = ls.profile.params;
    JumpReport rep;
    rep.t = t;
    rep.value = ls.amplitude() * std::pow(-t, -1.0 / (pp.p - 1.0) - 0.5) * ls.profile.interface_slope();
    rep.strictly_negative = rep.value < 0.0;
    return rep;
}

CertReport certify(const LowerSolution& ls, std::size_t n_samples, std::size_t n_jump,
                   const par::ExecPolicy& pol) {
    const auto samples = cone_samples(ls, n_samples, n_samples / 10 + 16);
    const auto res = interior_residual(ls, samples, pol);
    CertReport rep;
    rep.t0 = ls.t0;
    rep.big_m = ls.big_m;
    rep.min_residual = res.min_residual;
    rep.samples = res.samples;
    rep.tol_cert = res.tol_cert;
    bool jumps_ok = true;
    rep.jump_values.reserve(n_jump);
    for (std::size_t i = 0; i < n_jump; ++i) {
        const double u = n_jump > 1 ? static_cast<double>(i) / (n_jump - 1) : 0.0;
        const auto jr = jump_condition(ls, ls.t0 * std::pow(10.0, -3.0 * u));
        rep.jump_values.push_back(jr.value);
        jumps_ok = jumps_ok && jr.strictly_negative;
    }
    rep.pass = res.pass && jumps_ok;
    return rep;
}

std::string cert_to_json(const CertReport& report) {
    nlohmann::json j;
    j["t0"] = report.t0;
    j["M"] = report.big_m;
    j["min_residual"] = report.min_residual;
    j["samples"] = report.samples;
    j["jump_values"] = report.jump_values;
    j["tol_cert"] = report.tol_cert;
    j["pass"] = report.pass;
    return j.dump(1);
}

}  // namespace blowlab
