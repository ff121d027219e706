#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blowlab/kernels.hpp"
#include "blowlab/lower_solution.hpp"

namespace blowlab {

// Reaction content of a run: scalar u_t = d*Lap(u) + mu u^p - a(x) u^q, or the
// two-component system v_t = d1*Lap(v) + f(v), u_t = d2*Lap(u) + mu u^p -
// |m - v|^sigma_couple u^q. With v_stationary the v field is held fixed
// (closed-form mode for eigenfunction data).
struct ReactionSpec {
    double mu = 1.0;
    double p = 2.0;
    double q = 3.0;
    double d = 1.0;                // scalar diffusion
    std::vector<double> a;         // scalar absorption coefficient at nodes

    bool two_component = false;
    double d1 = 0.0;
    double d2 = 0.0;
    double m = 0.0;
    double sigma_couple = 1.0;
    kernels::KineticLaw f;
    bool v_stationary = false;
};

struct Field {
    kernels::GridGeom geom;
    std::vector<double> u;
    std::vector<double> v;  // empty for scalar problems
    double time = 0.0;
};

struct SolverControls {
    double rtol = 1e-8;
    double atol = 1e-11;
    double cfl_safety = 0.4;
    double react_c = 0.2;
    double dt_init = 1e-9;
    double dt_min = 1e-13;
    double u_cap = 1e8;
    double horizon = 1.0;
    double sample_dt = 0.0;        // 0: horizon/400
    double sample_log10_growth = 0.08;
    int threads = 0;
    std::string settings_digest;
};

struct Monitors {
    const LowerSolution* comparison = nullptr;
    double cmp_t0 = -1.0;   // u is compared against ls(x, t + cmp_t0)
    double tol_cmp = 0.0;
    bool positivity = true;
    bool boundary_margin = false;  // truncated-Cauchy validity monitor
};

enum class SimStatus { GlobalUpToHorizon, Blowup, Aborted };

const char* to_string(SimStatus s);

struct SampleRow {
    double t = 0.0;
    double sup = 0.0;
    double argmax_x = 0.0;
    bool has_cmp = false;
    double min_cmp = 0.0;
};

struct RateFit {
    double exponent = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
    bool ok = false;
    std::string reason;
};

struct SimResult {
    SimStatus status = SimStatus::Aborted;
    double t_star_hat = std::numeric_limits<double>::quiet_NaN();
    double ci = std::numeric_limits<double>::quiet_NaN();
    std::vector<SampleRow> samples;
    std::optional<RateFit> rate_fit;
    double t_end = 0.0;
    double sup_end = 0.0;
    double blowup_point = std::numeric_limits<double>::quiet_NaN();
    double min_u = std::numeric_limits<double>::infinity();
    bool positivity_ok = true;
    double min_comparison = std::numeric_limits<double>::infinity();
    bool comparison_ok = true;
    double boundary_margin_max = 0.0;
    std::string abort_reason;
    std::string settings_digest;
};

// One accepted adaptive step of the explicit Bogacki-Shampine 3(2) pair,
// with dt capped by the diffusion stability limit and the reaction scale.
class RdsStepper {
public:
    RdsStepper(Field& field, const ReactionSpec& rs, const SolverControls& ctl);

    enum class Status { Ok, Underflow, NonFinite };
    Status step();

    double last_dt() const { return last_dt_; }
    double stability_dt() const;

private:
    void eval_rhs(const std::vector<double>& u, const std::vector<double>& v,
                  std::vector<double>& ku, std::vector<double>& kv);
    double reaction_dt(const std::vector<double>& u) const;

    Field& f_;
    const ReactionSpec& rs_;
    const SolverControls& ctl_;
    par::ExecPolicy pol_;
    double dt_ = 0.0;
    double last_dt_ = 0.0;
    std::vector<double> k1u_, k2u_, k3u_, k4u_, tmpu_, newu_;
    std::vector<double> k1v_, k2v_, k3v_, k4v_, tmpv_, newv_;
    std::vector<double> a_stage_;
};

Field& step(Field& field, const ReactionSpec& rs, const SolverControls& ctl);

SimResult run(Field& field, const ReactionSpec& rs, const SolverControls& ctl,
              const Monitors& monitors = {});

struct TStarFit {
    double t_star = 0.0;
    double ci = 0.0;
    bool ok = false;
};

// Linear fit of sup^{-(p-1)} against t over the final growth window; exact
// for the (T*-t)^{-1/(p-1)} law. ci combines the fit variance, a half-window
// sensitivity probe and a 1% floor (see README).
TStarFit extrapolate_t_star(std::span<const SampleRow> series, double p);

// Least-squares slope of log sup u against log(T*-t). Refuses (ok=false)
// unless the window has >= min_samples samples spanning >= min_decades
// decades of sup u.
RateFit fit_blowup_rate(std::span<const SampleRow> series, double t_star_hat,
                        double min_decades = 2.0, std::size_t min_samples = 20);

struct LocalizationReport {
    bool converged = false;
    bool pass = false;
    double distance_cells = std::numeric_limits<double>::infinity();
    double argmax_x = 0.0;
    double nearest_zero = 0.0;
    std::string reason;
};

// Distance (in grid cells) from the terminal argmax cluster to the nearest
// zero of a(x); refuses when the trace oscillates between clusters.
LocalizationReport locate_blowup_points(const SimResult& result, std::span<const double> zeros,
                                        double h);

// Grid positions where the absorption coefficient vanishes (local minima
// below 1e-7 * max a).
std::vector<double> find_zero_nodes(std::span<const double> a, const kernels::GridGeom& geom);

void write_series_csv(const std::string& path, const SimResult& result);
std::string summary_json(const SimResult& result);

}  // namespace blowlab
