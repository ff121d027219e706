#include "blowlab/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "blowlab/ode.hpp"

namespace blowlab {

namespace {

double upow(double u, double e) { return kernels::pow_fast(std::fmax(u, 0.0), e); }

struct DirectRhs {
    const KineticSpec* s;
    void operator()(double, const std::array<double, 2>& y, std::array<double, 2>& dy) const {
        dy[0] = s->f(y[0]);
        dy[1] = s->mu * upow(y[1], s->p) -
                kernels::pow_fast(std::fabs(s->m - y[0]), s->sigma) * upow(y[1], s->q);
    }
};

struct TransformRhs {
    const KineticSpec* s;
    void operator()(double, const std::array<double, 2>& y, std::array<double, 2>& dy) const {
        const double qm1 = s->q - 1.0;
        dy[0] = s->f(y[0]);
        dy[1] = -qm1 * s->mu * upow(y[1], (s->q - s->p) / qm1) +
                qm1 * kernels::pow_fast(std::fabs(s->m - y[0]), s->sigma);
    }
};

}  // namespace

bool kinetic_hypotheses_ok(const KineticSpec& spec, std::string* why) {
    auto fail = [&](const char* msg) {
        if (why) *why = msg;
        return false;
    };
    if (!(spec.q > spec.p)) return fail("q > p required");
    if (!(spec.q > 1.0)) return fail("q > 1 required");
    if (!(spec.sigma >= 0.0)) return fail("sigma >= 0 required");
    if (spec.f(spec.m) == 0.0) return fail("f(x0, m) == 0");
    return true;
}

const char* to_string(KinVerdict v) {
    switch (v) {
        case KinVerdict::Bounded: return "BOUNDED";
        case KinVerdict::SuspectBlowup: return "SUSPECT_BLOWUP";
        case KinVerdict::Uncertified: return "UNCERTIFIED";
    }
    return "?";
}

KineticTrajectory integrate(double xi, double eta, const KineticSpec& spec,
                            const KineticControls& ctl) {
    if (!(xi >= 0.0) || !(eta >= 0.0))
        throw std::invalid_argument("kinetics::integrate: xi, eta must be nonnegative");

    KineticTrajectory out;
    std::string why;
    out.hyp_ok = kinetic_hypotheses_ok(spec, &why);
    if (!out.hyp_ok) out.note = why;

    ode::StepControls sc;
    sc.rtol = ctl.rtol;
    sc.atol = ctl.atol;
    sc.h_init = 1e-6;
    sc.h_max = std::fmax(ctl.sample_dt, 1e-3);
    DirectRhs rhs{&spec};
    ode::Dopri5<2, DirectRhs> st(rhs, {xi, eta}, 0.0, sc);

    out.samples.push_back({0.0, xi, eta});
    out.sup_u = eta;
    out.sup_v = xi;
    bool suspect = false;

    const std::size_t n_samples = static_cast<std::size_t>(std::ceil(ctl.horizon / ctl.sample_dt));
    for (std::size_t k = 1; k <= n_samples && !suspect; ++k) {
        const double t_target = std::fmin(k * ctl.sample_dt, ctl.horizon);
        while (st.t() < t_target) {
            const auto s = st.try_step(t_target);
            if (s != ode::StepStatus::Ok) {
                suspect = true;
                out.note = s == ode::StepStatus::Underflow ? "step underflow" : "non-finite state";
                break;
            }
            if (st.y()[1] < 0.0) st.set_state(st.t(), {st.y()[0], 0.0});
            if (st.y()[1] > out.sup_u) out.sup_u = st.y()[1];
            if (std::fabs(st.y()[0]) > out.sup_v) out.sup_v = std::fabs(st.y()[0]);
            if (out.sup_u > ctl.u_kin) {
                suspect = true;
                out.note = "u exceeded the boundedness cap";
                break;
            }
        }
        out.samples.push_back({st.t(), st.y()[0], st.y()[1]});
    }
    out.t_end = st.t();
    out.verdict = !out.hyp_ok ? KinVerdict::Uncertified
                              : (suspect ? KinVerdict::SuspectBlowup : KinVerdict::Bounded);
    return out;
}

KineticTrajectory integrate_w_transform(double xi, double eta, const KineticSpec& spec,
                                        const KineticControls& ctl) {
    if (!(eta > 0.0))
        throw std::invalid_argument("integrate_w_transform: requires eta > 0 (w singular at u=0)");

    KineticTrajectory out;
    std::string why;
    out.hyp_ok = kinetic_hypotheses_ok(spec, &why);
    if (!out.hyp_ok) out.note = why;

    const double qm1 = spec.q - 1.0;
    auto to_w = [qm1](double u) { return std::pow(u, -qm1); };
    auto to_u = [qm1](double w) { return std::pow(w, -1.0 / qm1); };

    ode::StepControls sc;
    sc.rtol = ctl.rtol;
    sc.atol = ctl.atol;
    sc.h_init = 1e-6;
    sc.h_max = std::fmax(ctl.sample_dt, 1e-3);

    TransformRhs wrhs{&spec};
    DirectRhs drhs{&spec};
    ode::Dopri5<2, TransformRhs> wst(wrhs, {xi, to_w(eta)}, 0.0, sc);
    ode::Dopri5<2, DirectRhs> dst(drhs, {xi, eta}, 0.0, sc);
    bool in_w_form = true;

    out.samples.push_back({0.0, xi, eta});
    out.sup_u = eta;
    out.sup_v = xi;
    bool suspect = false;

    const std::size_t n_samples = static_cast<std::size_t>(std::ceil(ctl.horizon / ctl.sample_dt));
    for (std::size_t k = 1; k <= n_samples && !suspect; ++k) {
        const double t_target = std::fmin(k * ctl.sample_dt, ctl.horizon);
        while ((in_w_form ? wst.t() : dst.t()) < t_target) {
            if (in_w_form) {
                const double t_prev = wst.t();
                const auto y_prev = wst.y();
                const auto s = wst.try_step(t_target);
                if (s != ode::StepStatus::Ok) {
                    suspect = true;
                    out.note = "w-form step failure";
                    break;
                }
                if (wst.y()[1] <= 0.0) {
                    // w hit zero: u blew up; bisect the step for the hit time
                    double lo = 0.0, hi = wst.t() - t_prev;
                    for (int it = 0; it < 60; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        std::array<double, 2> ym;
                        if (!wst.step5(t_prev, y_prev, mid, ym) || ym[1] <= 0.0)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    out.blowup_t = t_prev + 0.5 * (lo + hi);
                    out.note = "w reached 0 (u -> infinity)";
                    suspect = true;
                    break;
                }
                const double u_now = to_u(wst.y()[1]);
                if (u_now > out.sup_u) out.sup_u = u_now;
                if (std::fabs(wst.y()[0]) > out.sup_v) out.sup_v = std::fabs(wst.y()[0]);
                if (u_now > ctl.u_kin) {
                    suspect = true;
                    out.note = "u exceeded the boundedness cap";
                    break;
                }
                if (u_now < ctl.delta_floor) {
                    dst.set_state(wst.t(), {wst.y()[0], u_now});
                    dst.set_h(wst.h());
                    in_w_form = false;
                }
            } else {
                const auto s = dst.try_step(t_target);
                if (s != ode::StepStatus::Ok) {
                    suspect = true;
                    out.note = "direct-form step failure";
                    break;
                }
                if (dst.y()[1] < 0.0) dst.set_state(dst.t(), {dst.y()[0], 0.0});
                if (dst.y()[1] > out.sup_u) out.sup_u = dst.y()[1];
                if (std::fabs(dst.y()[0]) > out.sup_v) out.sup_v = std::fabs(dst.y()[0]);
            }
        }
        if (in_w_form)
            out.samples.push_back({wst.t(), wst.y()[0], to_u(wst.y()[1])});
        else
            out.samples.push_back({dst.t(), dst.y()[0], dst.y()[1]});
    }
    out.t_end = in_w_form ? wst.t() : dst.t();
    out.verdict = !out.hyp_ok ? KinVerdict::Uncertified
                              : (suspect ? KinVerdict::SuspectBlowup : KinVerdict::Bounded);
    return out;
}

SweepResult sweep_boundedness(double xi_min, double xi_max, std::size_t n_xi, double eta_min,
                              double eta_max, std::size_t n_eta, const KineticSpec& spec,
                              const KineticControls& ctl) {
    SweepResult out;
    out.n_xi = n_xi;
    out.n_eta = n_eta;
    out.certified = kinetic_hypotheses_ok(spec, &out.hyp_note);
    out.cells.resize(n_xi * n_eta);

    par::ExecPolicy pol{ctl.threads};
    par::parallel_tasks(n_xi * n_eta, pol, [&](std::size_t idx) {
        const std::size_t i = idx / n_eta;
        const std::size_t j = idx % n_eta;
        const double xi = n_xi > 1 ? xi_min + (xi_max - xi_min) * i / (n_xi - 1) : xi_min;
        const double eta = n_eta > 1 ? eta_min + (eta_max - eta_min) * j / (n_eta - 1) : eta_min;
        const auto traj = integrate(xi, eta, spec, ctl);
        out.cells[idx] = {xi, eta, traj.verdict, traj.sup_u, traj.sup_v};
    });

    out.all_bounded = true;
    for (const auto& c : out.cells)
        if (c.verdict != KinVerdict::Bounded) out.all_bounded = false;
    return out;
}

void write_sweep_csv(const std::string& path, const SweepResult& sweep, const std::string& digest) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_sweep_csv: cannot open " + path);
    if (!digest.empty()) os << "# scenario_digest: " << digest << '\n';
    os << "xi,eta,verdict,sup_u,sup_v\n";
    os.precision(17);
    for (const auto& c : sweep.cells)
        os << c.xi << ',' << c.eta << ',' << to_string(c.verdict) << ',' << c.sup_u << ','
           << c.sup_v << '\n';
}

void write_trajectory_csv(const std::string& path, const KineticTrajectory& traj,
                          const std::string& digest) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
    if (!digest.empty()) os << "# scenario_digest: " << digest << '\n';
    os << "t,v,u\n";
    os.precision(17);
    for (const auto& s : traj.samples) os << s[0] << ',' << s[1] << ',' << s[2] << '\n';
}

}  // namespace blowlab
