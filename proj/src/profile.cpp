#include "blowlab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "blowlab/ode.hpp"
#include "blowlab/parallel.hpp"

namespace blowlab {

namespace {

// Odd power extension below zero keeps the integrand smooth through a
// crossing so the root can be bracketed; the returned profile never uses
// negative values.
double signed_pow(double w, double e) {
    if (w >= 0.0) return std::pow(w, e);
    return -std::pow(-w, e);
}

double rhs_unguarded(double r, double w, double wp, const ProblemParams& pp) {
    return -((pp.n - 1.0) / r - 0.5 * r) * wp + w / (pp.p - 1.0) - pp.mu * signed_pow(w, pp.p) +
           std::pow(r, pp.sigma) * signed_pow(w, pp.q);
}

struct ProfileRhs {
    const ProblemParams* pp;
    void operator()(double r, const std::array<double, 2>& y, std::array<double, 2>& dy) const {
        dy[0] = y[1];
        dy[1] = rhs_unguarded(r, y[0], y[1], *pp);
    }
};

// One classical RK4 step of the profile system.
void rk4_step(const ProblemParams& pp, double r, double h, double& w, double& wp) {
    const auto f = [&pp](double rr, double ww, double wwp, double& dw, double& dwp) {
        dw = wwp;
        dwp = rhs_unguarded(rr, ww, wwp, pp);
    };
    double k1w, k1p, k2w, k2p, k3w, k3p, k4w, k4p;
    f(r, w, wp, k1w, k1p);
    f(r + 0.5 * h, w + 0.5 * h * k1w, wp + 0.5 * h * k1p, k2w, k2p);
    f(r + 0.5 * h, w + 0.5 * h * k2w, wp + 0.5 * h * k2p, k3w, k3p);
    f(r + h, w + h * k3w, wp + h * k3p, k4w, k4p);
    w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    wp += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
}

// Integrate from (r_a, w_a, wp_a) forward by length, with substep ceiling.
void rk4_span(const ProblemParams& pp, double r_a, double w_a, double wp_a, double length,
              double max_substep, double& w_out, double& wp_out) {
    const int ns = std::max(1, static_cast<int>(std::ceil(length / max_substep)));
    const double h = length / ns;
    double r = r_a, w = w_a, wp = wp_a;
    for (int i = 0; i < ns; ++i) {
        rk4_step(pp, r, h, w, wp);
        r = r_a + (i + 1) * h;
    }
    w_out = w;
    wp_out = wp;
}

}  // namespace

const char* to_string(ShotClass c) {
    switch (c) {
        case ShotClass::Crossed: return "CROSSED";
        case ShotClass::PositiveExit: return "POSITIVE_EXIT";
        case ShotClass::BlewUp: return "BLEW_UP";
        case ShotClass::Degenerate: return "DEGENERATE";
        case ShotClass::StepUnderflow: return "STEP_UNDERFLOW";
        case ShotClass::NonFinite: return "NON_FINITE";
    }
    return "?";
}

double radial_rhs(double r, double w, double wp, const ProblemParams& params) {
    params.validate();
    if (!(r > 0.0)) throw std::invalid_argument("radial_rhs: requires r > 0");
    if (w < 0.0) throw std::invalid_argument("radial_rhs: requires w >= 0");
    return rhs_unguarded(r, w, wp, params);
}

double default_origin_eps(double r_max) { return 1e-6 * std::fmax(1.0, r_max); }

std::pair<double, double> expand_at_origin(double alpha0, const ProblemParams& params, double eps) {
    params.validate();
    if (!(alpha0 > 0.0)) throw std::invalid_argument("expand_at_origin: requires alpha0 > 0");
    if (!(eps > 0.0)) throw std::invalid_argument("expand_at_origin: requires eps > 0");
    const double c = alpha0 / (params.p - 1.0) - params.mu * std::pow(alpha0, params.p);
    const double aq = std::pow(alpha0, params.q);
    const double s = params.sigma;
    const double w = alpha0 + c * eps * eps / (2.0 * params.n) +
                     aq * std::pow(eps, s + 2.0) / ((s + 2.0) * (s + params.n));
    const double wp = c * eps / params.n + aq * std::pow(eps, s + 1.0) / (s + params.n);
    return {w, wp};
}

ShotResult shoot(double alpha0, const ProblemParams& params, double r_max,
                 const SearchControls& ctl) {
    params.validate();
    if (!(alpha0 > 0.0)) throw std::invalid_argument("shoot: requires alpha0 > 0");
    if (!(r_max > 0.0)) throw std::invalid_argument("shoot: requires r_max > 0");

    ShotResult out;
    const double eps = ctl.origin_eps > 0.0 ? ctl.origin_eps : default_origin_eps(r_max);
    auto [w0, wp0] = expand_at_origin(alpha0, params, eps);

    ode::StepControls sc;
    sc.rtol = ctl.shoot_rtol;
    sc.atol = ctl.shoot_atol;
    sc.h_init = 10.0 * eps;
    sc.h_max = 0.05 * r_max;

    ProfileRhs rhs{&params};
    ode::Dopri5<2, ProfileRhs> stepper(rhs, {w0, wp0}, eps, sc);
    out.trace.push_back({0.0, alpha0, 0.0});

    while (stepper.t() < r_max) {
        const double r_prev = stepper.t();
        const auto y_prev = stepper.y();
        const auto st = stepper.try_step(r_max);
        if (st == ode::StepStatus::Underflow) {
            out.cls = ShotClass::StepUnderflow;
            out.r_end = stepper.t();
            out.w_end = stepper.y()[0];
            return out;
        }
        if (st == ode::StepStatus::NonFinite) {
            out.cls = ShotClass::NonFinite;
            out.r_end = stepper.t();
            return out;
        }
        const double w = stepper.y()[0];
        if (w <= 0.0) {
            // Bisect the step length from the frozen pre-step state until the
            // crossing radius is pinned to roundoff.
            double lo = 0.0, hi = stepper.t() - r_prev;
            double w_c = w, wp_c = stepper.y()[1];
            for (int it = 0; it < 80 && hi - lo > 1e-16 * std::fmax(1.0, r_prev); ++it) {
                const double mid = 0.5 * (lo + hi);
                double wm, wpm;
                rk4_span(params, r_prev, y_prev[0], y_prev[1], mid, 1e-3, wm, wpm);
                if (wm > 0.0)
                    lo = mid;
                else {
                    hi = mid;
                    w_c = wm;
                    wp_c = wpm;
                }
            }
            out.r0 = r_prev + hi;
            out.wp_r0 = wp_c;
            out.w_end = w_c;
            out.r_end = out.r0;
            out.trace.push_back({out.r0, 0.0, wp_c});
            out.cls = std::fabs(wp_c) > ctl.degenerate_wp ? ShotClass::Crossed : ShotClass::Degenerate;
            return out;
        }
        out.trace.push_back({stepper.t(), w, stepper.y()[1]});
        if (w > ctl.w_cap) {
            out.cls = ShotClass::BlewUp;
            out.r_end = stepper.t();
            out.w_end = w;
            return out;
        }
    }
    out.cls = ShotClass::PositiveExit;
    out.r_end = r_max;
    out.w_end = stepper.y()[0];
    return out;
}

namespace {

// Fixed-grid integration of the profile from the series start to r0 with
// `substeps` RK4 sub-intervals per table cell. Fills values/derivs at nodes.
void integrate_on_grid(const ProblemParams& pp, double alpha0, double r0, int nodes, int substeps,
                       std::vector<double>& values, std::vector<double>& derivs) {
    const double h = r0 / (nodes - 1);
    values.assign(nodes, 0.0);
    derivs.assign(nodes, 0.0);
    values[0] = alpha0;
    derivs[0] = 0.0;

    const double eps = std::fmin(default_origin_eps(r0), 0.25 * h);
    auto [w, wp] = expand_at_origin(alpha0, pp, eps);

    // first cell: eps -> h, then node to node
    {
        const double len = h - eps;
        const int ns = substeps;
        const double hs = len / ns;
        double r = eps;
        for (int s = 0; s < ns; ++s) {
            rk4_step(pp, r, hs, w, wp);
            r = eps + (s + 1) * hs;
        }
        values[1] = w;
        derivs[1] = wp;
    }
    for (int k = 1; k + 1 < nodes; ++k) {
        const double ra = k * h;
        const double hs = h / substeps;
        for (int s = 0; s < substeps; ++s) rk4_step(pp, ra + s * hs, hs, w, wp);
        values[k + 1] = w;
        derivs[k + 1] = wp;
    }
}

}  // namespace

double max_fd_residual(const Profile& profile) {
    const auto& pp = profile.params;
    const auto& w = profile.values;
    const std::size_t k_count = w.size();
    if (k_count < 3) return 0.0;
    const double h = profile.h();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < k_count; ++k) {
        const double r = profile.grid[k];
        const double d2 = (w[k - 1] - 2.0 * w[k] + w[k + 1]) / (h * h);
        const double d1 = (w[k + 1] - w[k - 1]) / (2.0 * h);
        const double res = d2 + ((pp.n - 1.0) / r - 0.5 * r) * d1 - w[k] / (pp.p - 1.0) +
                           pp.mu * std::pow(std::fmax(w[k], 0.0), pp.p) -
                           std::pow(r, pp.sigma) * std::pow(std::fmax(w[k], 0.0), pp.q);
        worst = std::fmax(worst, std::fabs(res));
    }
    return worst;
}

Profile tabulate_profile(const ProblemParams& params, double alpha0, double r0_estimate,
                         int grid_nodes, int substeps, double residual_coeff,
                         double degenerate_wp) {
    double r0 = r0_estimate;
    std::vector<double> values, derivs;

    // Newton on the terminal value: the fixed-grid terminal state is a smooth
    // function of the candidate r0 because h scales with it.
    for (int it = 0; it < 12; ++it) {
        integrate_on_grid(params, alpha0, r0, grid_nodes, substeps, values, derivs);
        const double w_end = values.back();
        const double wp_end = derivs.back();
        if (!std::isfinite(w_end) || !std::isfinite(wp_end) || std::fabs(wp_end) < 1e-300)
            throw std::runtime_error("tabulate_profile: integration lost the crossing");
        const double dr = -w_end / wp_end;
        r0 += dr;
        if (!(r0 > 0.0)) throw std::runtime_error("tabulate_profile: r0 collapsed");
        if (std::fabs(dr) < 1e-15 * r0) break;
    }
    integrate_on_grid(params, alpha0, r0, grid_nodes, substeps, values, derivs);

    Profile prof;
    prof.params = params;
    prof.alpha0 = alpha0;
    prof.r0 = r0;
    prof.values = std::move(values);
    prof.derivs = std::move(derivs);
    prof.degenerate_tol = degenerate_wp;

    // terminal value is O(1e-15 * alpha0); pin the boundary node exactly
    if (std::fabs(prof.values.back()) > 1e-10 * alpha0)
        throw std::runtime_error("tabulate_profile: terminal value did not converge");
    prof.values.back() = 0.0;

    prof.grid.resize(prof.values.size());
    prof.weight.resize(prof.values.size());
    const double h = r0 / (grid_nodes - 1);
    for (std::size_t k = 0; k < prof.grid.size(); ++k) {
        prof.grid[k] = k * h;
        prof.weight[k] = std::exp(-prof.grid[k] * prof.grid[k] / 4.0);
    }

    // certification checks
    if (!(prof.interface_slope() < -degenerate_wp))
        throw std::runtime_error("tabulate_profile: tangential contact at r0 (degenerate)");
    for (std::size_t k = 0; k + 1 < prof.values.size(); ++k)
        if (!(prof.values[k] > 0.0))
            throw std::runtime_error("tabulate_profile: interior positivity violated");
    const double head = prof.values.front();
    for (double v : prof.values)
        if (v > head * (1.0 + 1e-12))
            throw std::runtime_error("tabulate_profile: maximum not at the origin");

    prof.residual_tol = residual_coeff * (1.0 + std::pow(alpha0, params.q));
    prof.residual_max = max_fd_residual(prof);
    if (!(prof.residual_max <= prof.residual_tol)) {
        std::ostringstream os;
        os << "tabulate_profile: residual " << prof.residual_max << " exceeds certificate "
           << prof.residual_tol;
        throw std::runtime_error(os.str());
    }
    return prof;
}

double Profile::value(double r) const {
    if (r < 0.0) throw std::invalid_argument("Profile::value: requires r >= 0");
    if (r >= r0 || values.size() < 2) return 0.0;
    const double hh = h();
    std::size_t k = static_cast<std::size_t>(r / hh);
    if (k + 1 >= values.size()) k = values.size() - 2;
    const double xi = (r - grid[k]) / hh;
    const double delta = (values[k + 1] - values[k]) / hh;
    auto clamp_slope = [delta](double m) {
        if (delta == 0.0) return 0.0;
        const double a = m / delta;
        if (a < 0.0) return 0.0;
        if (a > 3.0) return 3.0 * delta;
        return m;
    };
    const double m0 = clamp_slope(derivs[k]);
    const double m1 = clamp_slope(derivs[k + 1]);
    const double xi2 = xi * xi, xi3 = xi2 * xi;
    const double h00 = 2.0 * xi3 - 3.0 * xi2 + 1.0;
    const double h10 = xi3 - 2.0 * xi2 + xi;
    const double h01 = -2.0 * xi3 + 3.0 * xi2;
    const double h11 = xi3 - xi2;
    return h00 * values[k] + h10 * hh * m0 + h01 * values[k + 1] + h11 * hh * m1;
}

double Profile::deriv(double r) const {
    if (r < 0.0) throw std::invalid_argument("Profile::deriv: requires r >= 0");
    if (r >= r0 || values.size() < 2) return 0.0;
    const double hh = h();
    std::size_t k = static_cast<std::size_t>(r / hh);
    if (k + 1 >= values.size()) k = values.size() - 2;
    const double xi = (r - grid[k]) / hh;
    const double delta = (values[k + 1] - values[k]) / hh;
    auto clamp_slope = [delta](double m) {
        if (delta == 0.0) return 0.0;
        const double a = m / delta;
        if (a < 0.0) return 0.0;
        if (a > 3.0) return 3.0 * delta;
        return m;
    };
    const double m0 = clamp_slope(derivs[k]);
    const double m1 = clamp_slope(derivs[k + 1]);
    const double xi2 = xi * xi;
    const double dh00 = 6.0 * xi2 - 6.0 * xi;
    const double dh10 = 3.0 * xi2 - 4.0 * xi + 1.0;
    const double dh01 = -6.0 * xi2 + 6.0 * xi;
    const double dh11 = 3.0 * xi2 - 2.0 * xi;
    return dh00 * values[k] / hh + dh10 * m0 + dh01 * values[k + 1] / hh + dh11 * m1;
}

namespace {

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    std::vector<double> out;
    const double ratio = std::pow(10.0, 1.0 / per_decade);
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= ratio) out.push_back(v);
    return out;
}

}  // namespace

Profile find_profile(const ProblemParams& params_template, const SearchControls& ctl) {
    params_template.validate();
    const auto hyp = check_hypotheses(params_template);
    if (!hyp.all_required_pass()) {
        std::ostringstream os;
        os << "find_profile: hypotheses not satisfied:";
        for (const auto& f : hyp.flags)
            if (f.required && !f.pass) os << " " << f.name << " (" << f.detail << ")";
        throw std::invalid_argument(os.str());
    }

    const auto mus = log_grid(ctl.mu_min, ctl.mu_max, ctl.mu_per_decade);
    const auto alphas = log_grid(ctl.alpha_min, ctl.alpha_max, ctl.alpha_per_decade);
    std::ostringstream trace;
    par::ExecPolicy pol{ctl.threads};

    auto try_certify = [&](const ProblemParams& pp, double alpha, const ShotResult& shot,
                           Profile& out) -> bool {
        for (int nodes = ctl.grid_nodes; nodes <= ctl.max_grid_nodes; nodes = 2 * (nodes - 1) + 1) {
            try {
                out = tabulate_profile(pp, alpha, shot.r0, nodes, ctl.substeps, ctl.residual_coeff,
                                       ctl.degenerate_wp);
                return true;
            } catch (const std::runtime_error& e) {
                trace << "  certify mu=" << pp.mu << " alpha=" << alpha << " nodes=" << nodes
                      << ": " << e.what() << "\n";
            }
        }
        return false;
    };

    for (double mu : mus) {
        ProblemParams pp = params_template;
        pp.mu = mu;

        std::vector<ShotResult> shots(alphas.size());
        par::parallel_tasks(alphas.size(), pol,
                            [&](std::size_t i) { shots[i] = shoot(alphas[i], pp, ctl.r_max, ctl); });

        for (std::size_t i = 0; i < alphas.size(); ++i) {
            trace << "mu=" << mu << " alpha=" << alphas[i] << " -> " << to_string(shots[i].cls);
            if (shots[i].cls == ShotClass::Crossed) trace << " r0=" << shots[i].r0;
            trace << "\n";
        }

        for (std::size_t i = 0; i < alphas.size(); ++i) {
            if (shots[i].cls != ShotClass::Crossed) continue;
            Profile prof;
            if (try_certify(pp, alphas[i], shots[i], prof)) return prof;
        }

        // No grid hit: bisect across each classification change hunting a crossing.
        for (std::size_t i = 0; i + 1 < alphas.size(); ++i) {
            if (shots[i].cls == shots[i + 1].cls) continue;
            double lo = alphas[i], hi = alphas[i + 1];
            ShotClass lo_cls = shots[i].cls;
            for (int it = 0; it < ctl.bisect_budget; ++it) {
                const double mid = std::sqrt(lo * hi);
                const ShotResult s = shoot(mid, pp, ctl.r_max, ctl);
                trace << "mu=" << mu << " alpha=" << mid << " (bisect) -> " << to_string(s.cls)
                      << "\n";
                if (s.cls == ShotClass::Crossed) {
                    Profile prof;
                    if (try_certify(pp, mid, s, prof)) return prof;
                    break;
                }
                if (s.cls == lo_cls)
                    lo = mid;
                else
                    hi = mid;
            }
        }
    }
    throw SearchExhausted("find_profile: no certified crossing within the search budget",
                          trace.str());
}

namespace {

nlohmann::json params_to_json(const ProblemParams& p) {
    return nlohmann::json{{"p", p.p},       {"q", p.q},         {"sigma", p.sigma},
                          {"mu", p.mu},     {"n", p.n},         {"d", p.d},
                          {"big_m", p.big_m}, {"x0", {p.x0[0], p.x0[1], p.x0[2]}}};
}

ProblemParams params_from_json(const nlohmann::json& j) {
    ProblemParams p;
    p.p = j.at("p");
    p.q = j.at("q");
    p.sigma = j.at("sigma");
    p.mu = j.at("mu");
    p.n = j.at("n");
    p.d = j.at("d");
    p.big_m = j.at("big_m");
    const auto& x = j.at("x0");
    p.x0 = {x[0], x[1], x[2]};
    return p;
}

}  // namespace

std::string profile_to_json(const Profile& profile) {
    nlohmann::json j;
    j["format"] = "blowlab-profile-v1";
    j["params"] = params_to_json(profile.params);
    j["alpha0"] = profile.alpha0;
    j["mu0"] = profile.params.mu;
    j["r0"] = profile.r0;
    j["grid"] = profile.grid;
    j["values"] = profile.values;
    j["derivs"] = profile.derivs;
    j["residual_max"] = profile.residual_max;
    j["tolerances"] = {{"residual", profile.residual_tol}, {"degenerate_wp", profile.degenerate_tol}};
    return j.dump(1);
}

Profile profile_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Profile p;
    p.params = params_from_json(j.at("params"));
    p.alpha0 = j.at("alpha0");
    p.r0 = j.at("r0");
    p.grid = j.at("grid").get<std::vector<double>>();
    p.values = j.at("values").get<std::vector<double>>();
    p.derivs = j.at("derivs").get<std::vector<double>>();
    p.residual_max = j.at("residual_max");
    p.residual_tol = j.at("tolerances").at("residual");
    p.degenerate_tol = j.at("tolerances").at("degenerate_wp");
    p.weight.resize(p.grid.size());
    for (std::size_t k = 0; k < p.grid.size(); ++k)
        p.weight[k] = std::exp(-p.grid[k] * p.grid[k] / 4.0);
    return p;
}

void save_profile(const Profile& profile, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_profile: cannot open " + path);
    os << profile_to_json(profile);
}

Profile load_profile(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_profile: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return profile_from_json(ss.str());
}

}  // namespace blowlab
