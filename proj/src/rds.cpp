#include "blowlab/rds.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace blowlab {

const char* to_string(SimStatus s) {
    switch (s) {
        case SimStatus::GlobalUpToHorizon: return "GLOBAL_UP_TO_HORIZON";
        case SimStatus::Blowup: return "BLOWUP";
        case SimStatus::Aborted: return "ABORTED";
    }
    return "?";
}

RdsStepper::RdsStepper(Field& field, const ReactionSpec& rs, const SolverControls& ctl)
    : f_(field), rs_(rs), ctl_(ctl), pol_{ctl.threads}, dt_(ctl.dt_init) {
    const std::size_t n = f_.u.size();
    if (n != f_.geom.n || n < 3)
        throw std::invalid_argument("RdsStepper: field/grid size mismatch");
    if (rs_.two_component && f_.v.size() != n)
        throw std::invalid_argument("RdsStepper: two-component run needs a v field");
    if (!rs_.two_component && rs_.a.size() != n)
        throw std::invalid_argument("RdsStepper: absorption array size mismatch");
    k1u_.resize(n);
    k2u_.resize(n);
    k3u_.resize(n);
    k4u_.resize(n);
    tmpu_.resize(n);
    newu_.resize(n);
    a_stage_.resize(n);
    if (rs_.two_component) {
        k1v_.resize(n);
        k2v_.resize(n);
        k3v_.resize(n);
        k4v_.resize(n);
        tmpv_.resize(n);
        newv_.resize(n);
        // seed the absorption cache; evolve mode refreshes it every stage
        kernels::coupling_absorption(rs_.m, rs_.sigma_couple, f_.v, a_stage_, pol_);
    }
}

double RdsStepper::stability_dt() const {
    // a stationary v is never stepped, so its diffusion does not constrain dt
    const double dmax = rs_.two_component
                            ? std::fmax(rs_.v_stationary ? 0.0 : rs_.d1, rs_.d2)
                            : rs_.d;
    if (dmax <= 0.0) return std::numeric_limits<double>::infinity();
    const int ndim = f_.geom.radial ? f_.geom.dim : 1;
    return ctl_.cfl_safety * f_.geom.h * f_.geom.h / (2.0 * ndim * dmax);
}

double RdsStepper::reaction_dt(const std::vector<double>& u) const {
    // dt <= c / (1 + sup(mu p u^{p-1} + a q u^{q-1})) so steps shrink as
    // blowup approaches
    const std::size_t n = u.size();
    const std::size_t nb = par::num_blocks(n);
    std::vector<double> partial(nb, 0.0);
    const std::vector<double>& aco =
        rs_.two_component ? a_stage_ : rs_.a;  // stationary coupling or scalar a
    par::for_each_block(n, pol_, [&](std::size_t b, std::size_t lo, std::size_t hi) {
        double m = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double upos = std::fmax(u[i], 0.0);
            const double ai = i < aco.size() ? aco[i] : 0.0;
            const double rate = rs_.mu * rs_.p * kernels::pow_fast(upos, rs_.p - 1.0) +
                                ai * rs_.q * kernels::pow_fast(upos, rs_.q - 1.0);
            m = std::fmax(m, rate);
        }
        partial[b] = m;
    });
    double m = 0.0;
    for (double c : partial) m = std::fmax(m, c);
    return ctl_.react_c / (1.0 + m);
}

void RdsStepper::eval_rhs(const std::vector<double>& u, const std::vector<double>& v,
                          std::vector<double>& ku, std::vector<double>& kv) {
    if (rs_.two_component) {
        if (!rs_.v_stationary)
            kernels::coupling_absorption(rs_.m, rs_.sigma_couple, v, a_stage_, pol_);
        kernels::reaction_diffusion_rhs(f_.geom, rs_.d2, rs_.mu, rs_.p, rs_.q, a_stage_, u, ku,
                                        pol_);
        if (rs_.v_stationary)
            std::fill(kv.begin(), kv.end(), 0.0);
        else
            kernels::linear_reaction_rhs(f_.geom, rs_.d1, rs_.f, v, kv, pol_);
    } else {
        kernels::reaction_diffusion_rhs(f_.geom, rs_.d, rs_.mu, rs_.p, rs_.q, rs_.a, u, ku, pol_);
    }
}

RdsStepper::Status RdsStepper::step() {
    const bool twoc = rs_.two_component;
    const double dt_stab = std::fmin(stability_dt(), reaction_dt(f_.u));

    while (true) {
        double dt = std::fmin(dt_, dt_stab);
        dt = std::fmin(dt, ctl_.horizon - f_.time);
        if (!(dt > 0.0)) dt = ctl_.dt_min;
        if (dt < ctl_.dt_min) return Status::Underflow;

        eval_rhs(f_.u, f_.v, k1u_, k1v_);
        kernels::saxpy(tmpu_, f_.u, 0.5 * dt, k1u_, pol_);
        if (twoc) kernels::saxpy(tmpv_, f_.v, 0.5 * dt, k1v_, pol_);
        eval_rhs(tmpu_, twoc ? tmpv_ : f_.v, k2u_, k2v_);
        kernels::saxpy(tmpu_, f_.u, 0.75 * dt, k2u_, pol_);
        if (twoc) kernels::saxpy(tmpv_, f_.v, 0.75 * dt, k2v_, pol_);
        eval_rhs(tmpu_, twoc ? tmpv_ : f_.v, k3u_, k3v_);

        kernels::stage_combine3(newu_, f_.u, dt * 2.0 / 9.0, k1u_, dt / 3.0, k2u_, dt * 4.0 / 9.0,
                                k3u_, pol_);
        if (twoc)
            kernels::stage_combine3(newv_, f_.v, dt * 2.0 / 9.0, k1v_, dt / 3.0, k2v_,
                                    dt * 4.0 / 9.0, k3v_, pol_);
        eval_rhs(newu_, twoc ? newv_ : f_.v, k4u_, k4v_);

        double err = kernels::embedded_error_norm(f_.u, newu_, dt, -5.0 / 72.0, k1u_, 1.0 / 12.0,
                                                  k2u_, 1.0 / 9.0, k3u_, -1.0 / 8.0, k4u_,
                                                  ctl_.atol, ctl_.rtol, pol_);
        if (twoc && !rs_.v_stationary)
            err = std::fmax(err, kernels::embedded_error_norm(f_.v, newv_, dt, -5.0 / 72.0, k1v_,
                                                              1.0 / 12.0, k2v_, 1.0 / 9.0, k3v_,
                                                              -1.0 / 8.0, k4v_, ctl_.atol,
                                                              ctl_.rtol, pol_));
        if (!std::isfinite(err)) return Status::NonFinite;

        const double fac = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : 3.0;
        const double dt_next = dt * std::clamp(fac, 0.2, 3.0);
        if (err <= 1.0) {
            f_.u.swap(newu_);
            if (twoc) f_.v.swap(newv_);
            f_.time += dt;
            last_dt_ = dt;
            dt_ = dt_next;
            return Status::Ok;
        }
        dt_ = dt_next;
        if (dt_ < ctl_.dt_min) return Status::Underflow;
    }
}

Field& step(Field& field, const ReactionSpec& rs, const SolverControls& ctl) {
    RdsStepper st(field, rs, ctl);
    const auto s = st.step();
    if (s == RdsStepper::Status::Underflow) throw std::runtime_error("step: dt underflow");
    if (s == RdsStepper::Status::NonFinite) throw std::runtime_error("step: non-finite state");
    return field;
}

namespace {

struct LinFitOut {
    double a = 0.0, b = 0.0;
    double var_a = 0.0, var_b = 0.0, cov_ab = 0.0;
    std::size_t n = 0;
    bool ok = false;
};

LinFitOut linfit(std::span<const double> x, std::span<const double> y) {
    LinFitOut f;
    f.n = x.size();
    if (f.n < 3) return f;
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / f.n, my = sy / f.n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) return f;
    f.b = sxy / sxx;
    f.a = my - f.b * mx;
    double ss = 0;
    for (std::size_t i = 0; i < f.n; ++i) {
        const double r = y[i] - f.a - f.b * x[i];
        ss += r * r;
    }
    const double s2 = f.n > 2 ? ss / (f.n - 2) : 0.0;
    f.var_b = s2 / sxx;
    f.var_a = s2 * (1.0 / f.n + mx * mx / sxx);
    f.cov_ab = -s2 * mx / sxx;
    f.ok = true;
    return f;
}

}  // namespace

TStarFit extrapolate_t_star(std::span<const SampleRow> series, double p) {
    TStarFit out;
    if (series.size() < 3) return out;
    const double sup_end = series.back().sup;
    std::vector<double> ts, ys;
    for (const auto& s : series) {
        if (s.sup >= sup_end / 100.0 && s.sup > 0.0) {
            ts.push_back(s.t);
            ys.push_back(std::pow(s.sup, -(p - 1.0)));
        }
    }
    const double t_last = series.back().t;
    if (ts.size() < 5) {
        out.t_star = t_last * (1.0 + 1e-9) + 1e-12;
        out.ci = std::numeric_limits<double>::infinity();
        return out;
    }
    const auto fit = linfit(ts, ys);
    if (!fit.ok || !(fit.b < 0.0)) {
        out.t_star = t_last * (1.0 + 1e-9) + 1e-12;
        out.ci = std::numeric_limits<double>::infinity();
        return out;
    }
    double t_star = -fit.a / fit.b;
    // delta-method variance of -a/b
    const double var =
        (fit.var_a + t_star * t_star * fit.var_b + 2.0 * t_star * fit.cov_ab) / (fit.b * fit.b);
    // half-window sensitivity probe
    const std::size_t half = ts.size() / 2;
    const auto fit2 = linfit(std::span<const double>(ts).subspan(half),
                             std::span<const double>(ys).subspan(half));
    double probe = 0.0;
    if (fit2.ok && fit2.b < 0.0) probe = std::fabs(-fit2.a / fit2.b - t_star);
    // declaration-threshold sensitivity: refit as if U_cap were 100x lower
    {
        std::vector<double> tc, yc;
        for (const auto& s : series)
            if (s.sup > 0.0 && s.sup >= sup_end / 1e4 && s.sup <= sup_end / 1e2) {
                tc.push_back(s.t);
                yc.push_back(std::pow(s.sup, -(p - 1.0)));
            }
        const auto fit3 = linfit(tc, yc);
        if (fit3.ok && fit3.b < 0.0) probe = std::fmax(probe, std::fabs(-fit3.a / fit3.b - t_star));
    }
    if (!(t_star > t_last)) t_star = t_last + std::fabs(ys.back() / fit.b);
    out.t_star = t_star;
    out.ci = std::fmax(std::fmax(3.0 * std::sqrt(std::fmax(var, 0.0)), probe), 0.01 * t_star);
    out.ok = true;
    return out;
}

RateFit fit_blowup_rate(std::span<const SampleRow> series, double t_star_hat, double min_decades,
                        std::size_t min_samples) {
    RateFit out;
    double sup_max = 0.0;
    for (const auto& s : series) sup_max = std::fmax(sup_max, s.sup);
    // fit over one decade more than the span requirement so the window is
    // never boundary-starved
    const double sup_floor = sup_max / std::pow(10.0, min_decades + 1.0);
    std::vector<double> lx, ly;
    for (const auto& s : series) {
        if (s.sup <= 0.0 || s.sup < sup_floor) continue;
        const double tau = t_star_hat - s.t;
        if (!(tau > 1e-300)) continue;
        lx.push_back(std::log(tau));
        ly.push_back(std::log(s.sup));
    }
    out.n = lx.size();
    if (out.n < min_samples) {
        out.reason = "insufficient samples in fitting window";
        return out;
    }
    const auto [ymin, ymax] = std::minmax_element(ly.begin(), ly.end());
    if ((*ymax - *ymin) / std::log(10.0) < min_decades - 1e-9) {
        out.reason = "sup-norm span below required decades";
        return out;
    }
    const auto fit = linfit(lx, ly);
    if (!fit.ok) {
        out.reason = "degenerate fit";
        return out;
    }
    out.exponent = fit.b;
    out.stderr_ = std::sqrt(std::fmax(fit.var_b, 0.0));
    out.ok = true;
    return out;
}

SimResult run(Field& field, const ReactionSpec& rs, const SolverControls& ctl,
              const Monitors& monitors) {
    SimResult res;
    res.settings_digest = ctl.settings_digest;
    par::ExecPolicy pol{ctl.threads};
    RdsStepper stepper(field, rs, ctl);

    const double sample_dt = ctl.sample_dt > 0.0 ? ctl.sample_dt : ctl.horizon / 400.0;
    const std::size_t n = field.u.size();
    const std::size_t inner_last = n >= 2 ? n - 2 : 0;

    double last_sample_t = -std::numeric_limits<double>::infinity();
    double last_sample_sup = 0.0;

    auto record = [&](bool force) {
        const auto ml = kernels::max_value_loc(field.u, pol);
        const bool due = force || field.time - last_sample_t >= sample_dt ||
                         (ml.value > 0.0 && last_sample_sup > 0.0 &&
                          std::log10(ml.value / last_sample_sup) >= ctl.sample_log10_growth);
        if (!due) return;
        SampleRow row;
        row.t = field.time;
        row.sup = ml.value;
        row.argmax_x = field.geom.x(ml.index);
        if (monitors.positivity)
            res.min_u = std::fmin(res.min_u, kernels::min_value(field.u, pol));
        if (monitors.comparison) {
            const double bt = field.time + monitors.cmp_t0;
            if (bt < -1e-14 && bt >= monitors.comparison->t0) {
                double mc = std::numeric_limits<double>::infinity();
                const auto& ls = *monitors.comparison;
                for (std::size_t i = 0; i < n; ++i) {
                    Vec3 x{field.geom.x(i), 0.0, 0.0};
                    mc = std::fmin(mc, field.u[i] - ls.evaluate(x, bt));
                }
                row.has_cmp = true;
                row.min_cmp = mc;
                res.min_comparison = std::fmin(res.min_comparison, mc);
            }
        }
        if (monitors.boundary_margin && ml.value > 0.0 && n >= 3) {
            const double edge = field.geom.radial
                                    ? field.u[inner_last]
                                    : std::fmax(field.u[1], field.u[inner_last]);
            res.boundary_margin_max = std::fmax(res.boundary_margin_max, edge / ml.value);
        }
        res.samples.push_back(row);
        last_sample_t = field.time;
        last_sample_sup = ml.value;
    };

    record(true);

    while (true) {
        if (field.time >= ctl.horizon) {
            res.status = SimStatus::GlobalUpToHorizon;
            break;
        }
        const double sup_now = res.samples.back().sup;
        if (sup_now >= ctl.u_cap) {
            res.status = SimStatus::Blowup;
            break;
        }
        const auto st = stepper.step();
        if (st == RdsStepper::Status::NonFinite) {
            res.status = SimStatus::Aborted;
            res.abort_reason = "non-finite state";
            break;
        }
        if (st == RdsStepper::Status::Underflow) {
            // step underflow with a growing sup-norm is a blowup candidate
            const double sup_ref =
                res.samples.size() > 20 ? res.samples[res.samples.size() - 20].sup : res.samples.front().sup;
            if (res.samples.back().sup > 10.0 * std::fmax(sup_ref, 1e-300)) {
                record(true);
                res.status = SimStatus::Blowup;
            } else {
                res.status = SimStatus::Aborted;
                res.abort_reason = "step underflow without growth";
            }
            break;
        }
        record(false);
    }
    record(true);

    res.t_end = field.time;
    res.sup_end = res.samples.back().sup;
    res.blowup_point = res.samples.back().argmax_x;
    res.positivity_ok = res.min_u >= -1e-12;
    if (monitors.comparison)
        res.comparison_ok = res.min_comparison >= -monitors.tol_cmp;

    if (res.status == SimStatus::Blowup) {
        const auto ts = extrapolate_t_star(res.samples, rs.p);
        res.t_star_hat = ts.t_star;
        res.ci = ts.ci;
        const auto rf = fit_blowup_rate(res.samples, res.t_star_hat);
        res.rate_fit = rf;
    }
    return res;
}

LocalizationReport locate_blowup_points(const SimResult& result, std::span<const double> zeros,
                                        double h) {
    LocalizationReport rep;
    if (result.status != SimStatus::Blowup) {
        rep.reason = "no blowup to localize";
        return rep;
    }
    if (zeros.empty()) {
        rep.reason = "absorption coefficient has no zeros";
        return rep;
    }
    const std::size_t n = result.samples.size();
    const std::size_t k = std::clamp<std::size_t>(n / 10, 5, 25);
    std::vector<double> tail;
    for (std::size_t i = n > k ? n - k : 0; i < n; ++i) tail.push_back(result.samples[i].argmax_x);
    std::sort(tail.begin(), tail.end());
    const double med = tail[tail.size() / 2];
    double spread = 0.0;
    for (double x : tail) spread = std::fmax(spread, std::fabs(x - med));
    if (spread > 4.0 * h) {
        rep.reason = "argmax trace non-convergent (oscillating between clusters)";
        return rep;
    }
    rep.converged = true;
    rep.argmax_x = med;
    for (double z : zeros) {
        const double cells = std::fabs(med - z) / h;
        if (cells < rep.distance_cells) {
            rep.distance_cells = cells;
            rep.nearest_zero = z;
        }
    }
    rep.pass = rep.distance_cells <= 2.0 + 1e-9;
    return rep;
}

std::vector<double> find_zero_nodes(std::span<const double> a, const kernels::GridGeom& geom) {
    double amax = 0.0;
    for (double v : a) amax = std::fmax(amax, v);
    const double thr = 1e-7 * std::fmax(1.0, amax);
    std::vector<double> zeros;
    std::size_t i = 0;
    while (i < a.size()) {
        if (a[i] <= thr) {
            std::size_t jbest = i;
            while (i < a.size() && a[i] <= thr) {
                if (a[i] < a[jbest]) jbest = i;
                ++i;
            }
            zeros.push_back(geom.x(jbest));
        } else {
            ++i;
        }
    }
    return zeros;
}

void write_series_csv(const std::string& path, const SimResult& result) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_series_csv: cannot open " + path);
    if (!result.settings_digest.empty())
        os << "# scenario_digest: " << result.settings_digest << '\n';
    os << "t,sup_u,argmax_x,min_cmp\n";
    os.precision(17);
    for (const auto& s : result.samples) {
        os << s.t << ',' << s.sup << ',' << s.argmax_x << ',';
        if (s.has_cmp) os << s.min_cmp;
        os << '\n';
    }
}

std::string summary_json(const SimResult& result) {
    nlohmann::json j;
    j["status"] = to_string(result.status);
    if (result.status == SimStatus::Blowup) {
        j["t_star_hat"] = result.t_star_hat;
        j["ci"] = result.ci;
        if (result.rate_fit && result.rate_fit->ok) {
            j["rate_exponent"] = result.rate_fit->exponent;
            j["rate_stderr"] = result.rate_fit->stderr_;
        } else {
            j["rate_exponent"] = nullptr;
            j["rate_stderr"] = nullptr;
            if (result.rate_fit) j["rate_refusal"] = result.rate_fit->reason;
        }
        j["blowup_point"] = result.blowup_point;
    } else {
        j["t_star_hat"] = nullptr;
        j["ci"] = nullptr;
        j["rate_exponent"] = nullptr;
        j["rate_stderr"] = nullptr;
        j["blowup_point"] = nullptr;
    }
    j["t_end"] = result.t_end;
    j["sup_end"] = result.sup_end;
    j["min_u"] = result.min_u;
    j["positivity_ok"] = result.positivity_ok;
    j["min_comparison"] =
        std::isfinite(result.min_comparison) ? nlohmann::json(result.min_comparison) : nlohmann::json();
    j["comparison_ok"] = result.comparison_ok;
    j["boundary_margin_max"] = result.boundary_margin_max;
    if (!result.abort_reason.empty()) j["abort_reason"] = result.abort_reason;
    j["settings_digest"] = result.settings_digest;
    return j.dump(1);
}

}  // namespace blowlab
