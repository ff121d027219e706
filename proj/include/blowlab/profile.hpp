#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blowlab/scaling.hpp"

namespace blowlab {

// Shooting / search knobs. Defaults are the documented scan order: mu ascends
// a log grid from mu_min, alpha ascends a log grid, first certified crossing
// wins.
struct SearchControls {
    double mu_min = 1.0;
    double mu_max = 64.0;
    int mu_per_decade = 8;
    double alpha_min = 1e-2;
    double alpha_max = 1e2;
    int alpha_per_decade = 3;
    int bisect_budget = 40;

    double r_max = 25.0;
    double origin_eps = 0.0;  // 0: default_origin_eps(r_max)
    double shoot_rtol = 1e-11;
    double shoot_atol = 1e-13;
    double w_cap = 1e8;              // overflow guard for BLEW_UP
    double degenerate_wp = 1e-8;     // |w'(r0)| at or below this is a tangency
    double root_tol_r = 1e-10;       // crossing refinement target in r

    int grid_nodes = 8193;           // certification table size
    int max_grid_nodes = 65537;
    int substeps = 4;                // RK4 substeps per table interval
    double residual_coeff = 1e-6;    // certificate: max residual <= coeff*(1+alpha0^q)

    int threads = 0;                 // shot fan-out
};

enum class ShotClass { Crossed, PositiveExit, BlewUp, Degenerate, StepUnderflow, NonFinite };

const char* to_string(ShotClass c);

struct ShotResult {
    ShotClass cls = ShotClass::NonFinite;
    double r0 = 0.0;      // first zero radius (Crossed/Degenerate)
    double wp_r0 = 0.0;   // slope at the zero
    double w_end = 0.0;   // value at r_max (PositiveExit) or at abort
    double r_end = 0.0;
    std::vector<std::array<double, 3>> trace;  // accepted (r, w, w') samples
};

// Right-hand side of the radial self-similar profile equation, solved for w'':
//   w'' = -((n-1)/r - r/2) w' + w/(p-1) - mu w^p + r^sigma w^q
// Rejects r <= 0 (the origin is handled by expand_at_origin) and w < 0.
double radial_rhs(double r, double w, double wp, const ProblemParams& params);

// Series start at the removable r=0 singularity:
//   w(eps)  = alpha0 + c*eps^2/(2n) + alpha0^q eps^(sigma+2)/((sigma+2)(sigma+n))
//   w'(eps) = c*eps/n + alpha0^q eps^(sigma+1)/(sigma+n)
// with c = alpha0/(p-1) - mu*alpha0^p. The sigma term folds into c when
// sigma = 0 and is higher order otherwise.
std::pair<double, double> expand_at_origin(double alpha0, const ProblemParams& params, double eps);

double default_origin_eps(double r_max);

// Integrates the profile ODE from the series start with an adaptive embedded
// pair; classifies the outcome and locates the first zero by root refinement.
ShotResult shoot(double alpha0, const ProblemParams& params, double r_max,
                 const SearchControls& ctl = {});

// Certified radial profile table on a uniform grid 0 = r_1 < ... < r_K = r0.
struct Profile {
    ProblemParams params;  // params.mu is mu0
    double alpha0 = 0.0;
    double r0 = 0.0;
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<double> derivs;
    std::vector<double> weight;  // rho(r) = exp(-r^2/4), diagnostic only
    double residual_max = 0.0;
    double residual_tol = 0.0;
    double degenerate_tol = 1e-8;

    double h() const { return grid.size() > 1 ? grid[1] - grid[0] : 0.0; }
    double interface_slope() const { return derivs.empty() ? 0.0 : derivs.back(); }

    // Zero-extended evaluator: monotone cubic on [0, r0], exactly 0 beyond.
    // Rejects r < 0. value(r0) = 0; deriv returns the right-sided derivative
    // at r0 (0), interface_slope() the left-sided one.
    double value(double r) const;
    double deriv(double r) const;
};

struct SearchExhausted : std::runtime_error {
    SearchExhausted(const std::string& msg, std::string scan_trace)
        : std::runtime_error(msg), trace(std::move(scan_trace)) {}
    std::string trace;
};

// Re-tabulates the profile for a crossing candidate on a uniform grid,
// Newton-correcting r0 until the terminal value vanishes to roundoff.
// Throws std::runtime_error if the candidate fails certification checks.
Profile tabulate_profile(const ProblemParams& params, double alpha0, double r0_estimate,
                         int grid_nodes, int substeps, double residual_coeff,
                         double degenerate_wp);

// Independent centered-difference residual pass over the interior nodes.
double max_fd_residual(const Profile& profile);

// Scans the (mu, alpha0) space in the documented order and returns the first
// certified crossing. Throws SearchExhausted (with the scan trace) if the
// budget is spent without one.
Profile find_profile(const ProblemParams& params_template, const SearchControls& ctl = {});

std::string profile_to_json(const Profile& profile);
Profile profile_from_json(const std::string& text);
void save_profile(const Profile& profile, const std::string& path);
Profile load_profile(const std::string& path);

}  // namespace blowlab
