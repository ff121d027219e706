#include "blowlab/scaling.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace blowlab {

namespace {

[[noreturn]] void reject(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void ProblemParams::validate() const {
    if (!(p > 1.0)) reject("ProblemParams: p must be > 1");
    if (!(q >= p)) reject("ProblemParams: q must be >= p");
    if (!(mu > 0.0)) reject("ProblemParams: mu must be > 0");
    if (!(sigma >= 0.0)) reject("ProblemParams: sigma must be >= 0");
    if (!(big_m > 0.0)) reject("ProblemParams: M must be > 0");
    if (n < 1) reject("ProblemParams: n must be a positive integer");
    if (n > dim_cap) {
        std::ostringstream os;
        os << "ProblemParams: n=" << n << " exceeds dimension cap " << dim_cap;
        reject(os.str());
    }
    if (!(d >= 0.0)) reject("ProblemParams: d must be >= 0");
    if (!std::isfinite(p) || !std::isfinite(q) || !std::isfinite(sigma) || !std::isfinite(mu) ||
        !std::isfinite(d) || !std::isfinite(big_m))
        reject("ProblemParams: non-finite value");
}

bool ProblemParams::is_valid() const noexcept {
    try {
        validate();
        return true;
    } catch (...) {
        return false;
    }
}

double critical_sigma(double p, double q) {
    if (!(p > 1.0)) reject("critical_sigma: p must be > 1");
    if (!(q >= p)) reject("critical_sigma: q must be >= p");
    return 2.0 * (q - p) / (p - 1.0);
}

bool sigma_is_critical(const ProblemParams& params) {
    const double sc = critical_sigma(params.p, params.q);
    return std::fabs(params.sigma - sc) <= 1e-12 * std::fmax(1.0, sc);
}

bool HypothesisReport::all_required_pass() const {
    for (const auto& f : flags)
        if (f.required && !f.pass) return false;
    return true;
}

const HypothesisFlag* HypothesisReport::find(const std::string& name) const {
    for (const auto& f : flags)
        if (f.name == name) return &f;
    return nullptr;
}

HypothesisReport check_hypotheses(const ProblemParams& params) {
    HypothesisReport rep;
    auto add = [&rep](std::string name, bool pass, bool required, std::string detail) {
        rep.flags.push_back({std::move(name), pass, required, std::move(detail)});
    };

    const bool well_formed = params.is_valid();
    add("params_well_formed", well_formed, true,
        well_formed ? "p>1, q>=p, mu>0, sigma>=0, M>0" : "basic parameter constraints violated");
    if (!well_formed) return rep;

    const double sc = critical_sigma(params.p, params.q);
    std::ostringstream os;
    os << "sigma=" << params.sigma << " vs sigma_crit=" << sc;
    add("sigma_at_least_critical", params.sigma >= sc - 1e-12 * std::fmax(1.0, sc), true, os.str());

    const bool crit = sigma_is_critical(params);
    add("sigma_exactly_critical", crit, false,
        crit ? "t0 may be any negative number" : "t0 restricted to [-1,0)");

    if (params.n >= 3) {
        const double sob = (params.n + 2.0) / (params.n - 2.0);
        std::ostringstream so;
        so << "q=" << params.q << " vs (n+2)/(n-2)=" << sob;
        add("sobolev_subcritical", params.q < sob, true, so.str());
    } else {
        add("sobolev_subcritical", true, true, "vacuous for n < 3");
    }

    const double fujita = 1.0 + 2.0 / params.n;
    std::ostringstream fo;
    fo << "p=" << params.p << " vs 1+2/n=" << fujita;
    add("fujita_range", params.p <= fujita, false, fo.str());

    return rep;
}

double euclidean_dist(const Vec3& a, const Vec3& b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

SimilarityPoint to_similarity(const Vec3& x, double t, const Vec3& x0, int n) {
    if (!(t < 0.0)) reject("to_similarity: requires backward time t < 0");
    return {euclidean_dist(x, x0, n) / std::sqrt(-t), t};
}

Vec3 from_similarity(const SimilarityPoint& sp, const Vec3& x0, const Vec3& dir, int n) {
    Vec3 x = x0;
    const double s = sp.r * std::sqrt(-sp.t);
    for (int i = 0; i < n; ++i) x[i] += s * dir[i];
    return x;
}

}  // namespace blowlab
