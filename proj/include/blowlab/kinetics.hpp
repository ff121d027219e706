#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "blowlab/kernels.hpp"
#include "blowlab/parallel.hpp"

namespace blowlab {

// Space-free kinetic system
//   v' = f(v),  u' = mu u^p - |m - v|^sigma u^q,  v(0)=xi, u(0)=eta >= 0.
struct KineticSpec {
    double p = 2.0;
    double q = 3.0;
    double mu = 1.0;
    double sigma = 1.0;
    double m = 3.0;
    kernels::KineticLaw f;
};

struct KineticControls {
    double rtol = 1e-10;
    double atol = 1e-14;
    double horizon = 50.0;
    double u_kin = 1e6;       // boundedness cap
    double dt_min = 1e-13;
    double delta_floor = 1e-3;  // transform switch-over level for u
    double sample_dt = 0.05;
    int threads = 0;
};

// Boundedness is predicted only under q > p, q > 1, sigma >= 0, f(m) != 0;
// violations downgrade verdicts to Uncertified instead of erroring.
bool kinetic_hypotheses_ok(const KineticSpec& spec, std::string* why = nullptr);

enum class KinVerdict { Bounded, SuspectBlowup, Uncertified };

const char* to_string(KinVerdict v);

struct KineticTrajectory {
    std::vector<std::array<double, 3>> samples;  // t, v, u
    double sup_u = 0.0;
    double sup_v = 0.0;
    double t_end = 0.0;
    KinVerdict verdict = KinVerdict::Bounded;
    bool hyp_ok = true;
    double blowup_t = 0.0;  // set when the transform hits w = 0
    std::string note;
};

// Direct adaptive integration of (v, u) to the horizon; samples are taken at
// exact multiples of sample_dt so runs are pointwise comparable.
KineticTrajectory integrate(double xi, double eta, const KineticSpec& spec,
                            const KineticControls& ctl);

// Integration through w = u^{-(q-1)}:
//   w' = -(q-1) mu w^{(q-p)/(q-1)} + (q-1)|m - v|^sigma
// while u >= delta_floor, switching to the direct form below it. w reaching 0
// is a blowup (u -> infinity) and is located by step bisection.
KineticTrajectory integrate_w_transform(double xi, double eta, const KineticSpec& spec,
                                        const KineticControls& ctl);

struct SweepCell {
    double xi = 0.0;
    double eta = 0.0;
    KinVerdict verdict = KinVerdict::Bounded;
    double sup_u = 0.0;
    double sup_v = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;  // row-major over (xi, eta)
    std::size_t n_xi = 0;
    std::size_t n_eta = 0;
    bool all_bounded = false;
    bool certified = false;  // hypotheses held
    std::string hyp_note;
};

SweepResult sweep_boundedness(double xi_min, double xi_max, std::size_t n_xi, double eta_min,
                              double eta_max, std::size_t n_eta, const KineticSpec& spec,
                              const KineticControls& ctl);

void write_sweep_csv(const std::string& path, const SweepResult& sweep,
                     const std::string& digest = {});
void write_trajectory_csv(const std::string& path, const KineticTrajectory& traj,
                          const std::string& digest = {});

}  // namespace blowlab
