#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "blowlab/parallel.hpp"
#include "blowlab/profile.hpp"

namespace blowlab {

// Blowing-up continuous weak lower solution
//   u~(x,t) = M^{-1/(q-1)} (-t)^{-1/(p-1)} w(|x-x0|/sqrt(-t)),  t in [t0, 0),
// built from a certified profile w (extended by zero beyond r0).
struct LowerSolution {
    Profile profile;
    double t0 = -1.0;
    double big_m = 1.0;   // M in a(x) <= M|x-x0|^sigma
    double mu_eq = 1.0;   // reaction coefficient of the target equation
    Vec3 x0{0.0, 0.0, 0.0};

    double amplitude() const;                    // M^{-1/(q-1)}
    double evaluate(const Vec3& x, double t) const;
    double evaluate_radial(double dist, double t) const;
    double support_radius(double t) const;       // r0*sqrt(-t)
    double sup_at(double t) const;               // amplitude*(-t)^{-1/(p-1)}*alpha0
};

struct T0Interval {
    double lo = -1.0;
    double hi = 0.0;        // exclusive
    bool lo_unbounded = false;
    bool contains(double t) const;
};

// (-inf, 0) at sigma critical, [-1, 0) above it; rejects sigma below critical.
T0Interval admissible_t0(const ProblemParams& params);

// Validates t0 against admissible_t0 and mu_eq >= M^{(p-1)/(q-1)} mu0.
LowerSolution make_lower_solution(Profile profile, double t0, double big_m, double mu_eq,
                                  const Vec3& x0);

struct SpaceTimePoint {
    Vec3 x;
    double t;
};

struct ResidualReport {
    double min_residual = 0.0;
    double max_residual = 0.0;
    std::size_t samples = 0;
    double tol_cert = 0.0;
    bool pass = false;
};

// Similarity-frame residual of the profile equation evaluated by centered
// differences on the tabulated profile at each sample, including the
// (mu' - mu0) reaction surplus and the (-t)^{(sigma-sigma_crit)/2} absorption
// factor. min >= -tol_cert certifies the lower-solution inequality; at sigma
// critical with mu' = mu0 the residual is zero up to the profile certificate.
ResidualReport interior_residual(const LowerSolution& ls, std::span<const SpaceTimePoint> samples,
                                 const par::ExecPolicy& pol = {});

// Deterministic sample generator: dense log-in-time random samples plus
// structured rings near the interface and the origin.
std::vector<SpaceTimePoint> cone_samples(const LowerSolution& ls, std::size_t n_random,
                                         std::size_t n_structured);

struct JumpReport {
    double t = 0.0;
    double value = 0.0;  // inside normal derivative + outside (0) at the interface
    bool strictly_negative = false;
};

// Normal-derivative jump at the support interface |x-x0| = r0*sqrt(-t):
//   amplitude * (-t)^{-1/(p-1)-1/2} * w'(r0) from inside, 0 from outside.
// A strictly negative sum is what lets the two classical pieces glue into
// one continuous weak lower solution.
JumpReport jump_condition(const LowerSolution& ls, double t);

struct CertReport {
    double t0 = 0.0;
    double big_m = 0.0;
    double min_residual = 0.0;
    std::size_t samples = 0;
    std::vector<double> jump_values;
    double tol_cert = 0.0;
    bool pass = false;
};

CertReport certify(const LowerSolution& ls, std::size_t n_samples, std::size_t n_jump,
                   const par::ExecPolicy& pol = {});

std::string cert_to_json(const CertReport& report);

}  // namespace blowlab
