#pragma once

#include <memory>
#include <optional>
#include <string>

#include "blowlab/kinetics.hpp"
#include "blowlab/lower_solution.hpp"
#include "blowlab/rds.hpp"

namespace blowlab {

// Configuration / validation failure; maps to CLI exit code 2.
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ProblemKind { Scalar, System, Kinetic };

struct GeometrySpec {
    enum class Shape { Interval, Ball };
    Shape shape = Shape::Interval;
    double xmin = 0.0;
    double xmax = 1.0;
    double radius = 1.0;
    bool radius_auto = false;  // ball radius r0*sqrt(-t0) from the profile stage
    std::string bc = "neumann";  // neumann | dirichlet | cauchy
    int nodes = 401;
};

struct AbsorptionSpec {
    enum class Kind { Power, OneMinusCos, Constant, Tabulated };
    Kind kind = Kind::Power;
    double scale = 1.0;
    double freq = 1.0;  // one_minus_cos: 1 - cos(freq*pi*(x-x0))
    std::string file;   // tabulated: csv of x,a rows
};

struct CouplingSpec {
    double d1 = 0.0;
    double d2 = 0.0;
    std::string f = "linear";  // linear | logistic | tabulated
    double lambda = 1.0;
    double h0 = 0.0;
    double l = 2.0;
    std::string file;     // tabulated f: csv of v,f rows
    double m = 0.0;
    bool m_auto = false;  // m = v0(x0)
    double sigma = 1.0;   // coupling exponent in |m - v|^sigma
    bool v_stationary = true;
    std::string v0_expr = "0";
};

struct InitialSpec {
    bool use_lower_solution = false;
    double ls_t0 = -1.0;
    double ls_scale = 1.0;
    std::string u_expr = "0";
    double xi = 0.0;
    double eta = 0.0;
};

struct SweepSpec {
    double xi_min = 0.0, xi_max = 10.0;
    double eta_min = 0.0, eta_max = 10.0;
    int xi_steps = 11, eta_steps = 11;
    double horizon = 50.0;
};

struct MonitorSpec {
    bool comparison = false;
    bool positivity = true;
    std::string boundary = "auto";  // auto: on for cauchy runs
    double tol_cmp_coeff = 1.0;     // tol_cmp = coeff * h^2
};

struct Scenario {
    std::string name;
    std::string experiment;  // default experiment binding (may be empty)
    std::string base_dir;    // directory of the source file; anchors table paths
    bool strict = false;     // scenario-demanded strict mode
    ProblemKind problem = ProblemKind::Scalar;

    double p = 2.0, q = 3.0;
    double mu = 1.0;
    bool mu_auto = false;  // mu = M^{(p-1)/(q-1)} * mu0 from the profile stage
    double sigma = 2.0;    // zero order of the absorption bound
    bool sigma_defaulted = false;
    double d = 1.0;
    double big_m = 1.0;
    bool big_m_auto = false;
    double x0 = 0.0;
    int dim = 1;

    GeometrySpec geometry;
    AbsorptionSpec absorption;
    CouplingSpec coupling;
    InitialSpec initial;
    SweepSpec sweep;
    MonitorSpec monitors;

    // solver section
    double rtol = 1e-8, atol = 1e-11;
    double cfl_safety = 0.4, react_c = 0.2;
    double u_cap = 1e8, u_kin = 1e6;
    double horizon = 1.0;
    double sample_dt = 0.0;
    double kin_rtol = 1e-10;

    SearchControls profile_search;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");

// Canonical serialization: fixed section/key order, full precision. Feeds the
// digest and the round-trip guarantee.
std::string save_scenario(const Scenario& s);

std::string fnv1a_hex(const std::string& text);

struct ResolvedScenario {
    Scenario scenario;  // auto fields replaced by their resolved values
    HypothesisReport hypotheses;
    std::optional<Profile> profile;
    std::optional<LowerSolution> lower_solution;
    std::string digest;  // over the canonical resolved scenario
};

// Applies defaults, runs the profile stage when any field needs it, checks
// hypotheses (warnings unless strict), and stamps the digest.
ResolvedScenario resolve(const Scenario& s, bool strict, int threads);

struct BuiltProblem {
    Field field;
    ReactionSpec reaction;
    SolverControls controls;
    Monitors monitors;
    std::shared_ptr<const LowerSolution> ls;  // keeps the comparison target alive
    std::vector<double> absorption_zeros;
    double tol_cmp = 0.0;
};

// Discretizes a scalar/system scenario; nodes_override (0: scenario value)
// supports grid-refinement studies.
BuiltProblem build_problem(const ResolvedScenario& rs, int nodes_override = 0, int threads = 0);

KineticSpec kinetic_spec(const ResolvedScenario& rs);
KineticControls kinetic_controls(const ResolvedScenario& rs, int threads);

ProblemParams problem_params(const Scenario& s);

}  // namespace blowlab
