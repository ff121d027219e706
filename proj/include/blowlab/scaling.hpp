#pragma once

#include <array>
#include <string>
#include <vector>

namespace blowlab {

using Vec3 = std::array<double, 3>;

// Parameters of u_t = d*Lap(u) + mu*u^p - a(x)*u^q with a(x) <= big_m*|x-x0|^sigma.
// Immutable after construction in practice; every operation here is pure.
struct ProblemParams {
    double p = 2.0;      // reaction exponent, > 1
    double q = 3.0;      // absorption exponent, >= p
    double sigma = 2.0;  // zero order of a(x), >= 0
    double mu = 1.0;     // reaction coefficient, > 0
    int n = 1;           // spatial dimension
    double d = 1.0;      // diffusion coefficient, >= 0
    double big_m = 1.0;  // M in a(x) <= M|x-x0|^sigma, > 0
    Vec3 x0{0.0, 0.0, 0.0};
    int dim_cap = 3;     // solvers here are 1-D or radially symmetric

    void validate() const;  // throws std::invalid_argument on the first violation
    bool is_valid() const noexcept;
};

// Similarity coordinates r = |x-x0|/sqrt(-t), defined for backward time t < 0.
struct SimilarityPoint {
    double r;  // >= 0
    double t;  // < 0
};

// sigma_crit = 2(q-p)/(p-1), the zero order at which the equation is scaling
// invariant. Throws on p <= 1 or q < p.
double critical_sigma(double p, double q);

bool sigma_is_critical(const ProblemParams& params);

struct HypothesisFlag {
    std::string name;
    bool pass = false;
    bool required = false;
    std::string detail;
};

struct HypothesisReport {
    std::vector<HypothesisFlag> flags;
    bool all_required_pass() const;
    const HypothesisFlag* find(const std::string& name) const;
};

// Named pass/fail flags for the blowup-theorem hypotheses. Reporting only;
// never throws on a well-formed params object.
HypothesisReport check_hypotheses(const ProblemParams& params);

double euclidean_dist(const Vec3& a, const Vec3& b, int n);

// r = |x-x0|/sqrt(-t); rejects t >= 0.
SimilarityPoint to_similarity(const Vec3& x, double t, const Vec3& x0, int n);

// Inverse map x = x0 + r*sqrt(-t)*dir for a unit direction dir.
Vec3 from_similarity(const SimilarityPoint& sp, const Vec3& x0, const Vec3& dir, int n);

}  // namespace blowlab
