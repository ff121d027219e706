#include "blowlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "blowlab/expr.hpp"

namespace blowlab {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct KeyValue {
    std::string section, key, value;
    int line;
};

std::vector<KeyValue> tokenize(const std::string& text, const std::string& origin) {
    std::vector<KeyValue> out;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::size_t e = line.find_last_not_of(" \t\r");
        std::string body = line.substr(b, e - b + 1);
        if (body.empty() || body[0] == '#') continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ScenarioError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = body.substr(1, body.size() - 2);
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ScenarioError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const std::size_t lb = s.find_first_not_of(" \t");
            const std::size_t rb = s.find_last_not_of(" \t");
            return lb == std::string::npos ? std::string() : s.substr(lb, rb - lb + 1);
        };
        KeyValue kv;
        kv.section = section;
        kv.key = trim(body.substr(0, eq));
        kv.value = trim(body.substr(eq + 1));
        kv.line = lineno;
        if (kv.key.empty() || kv.value.empty())
            throw ScenarioError(origin + ":" + std::to_string(lineno) + ": empty key or value");
        out.push_back(std::move(kv));
    }
    return out;
}

[[noreturn]] void field_error(const KeyValue& kv, const std::string& origin, const std::string& why) {
    throw ScenarioError(origin + ":" + std::to_string(kv.line) + ": field " +
                        (kv.section.empty() ? kv.key : kv.section + "." + kv.key) + ": " + why);
}

double to_double(const KeyValue& kv, const std::string& origin) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        field_error(kv, origin, "expected a number, got '" + kv.value + "'");
    }
}

int to_int(const KeyValue& kv, const std::string& origin) {
    const double v = to_double(kv, origin);
    if (v != std::floor(v)) field_error(kv, origin, "expected an integer");
    return static_cast<int>(v);
}

bool to_bool(const KeyValue& kv, const std::string& origin) {
    if (kv.value == "true" || kv.value == "on" || kv.value == "1") return true;
    if (kv.value == "false" || kv.value == "off" || kv.value == "0") return false;
    field_error(kv, origin, "expected a boolean");
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Scenario s;
    bool have_name = false, have_p = false, have_q = false, have_sigma = false;

    for (const auto& kv : tokenize(text, origin)) {
        const std::string& sec = kv.section;
        const std::string& key = kv.key;
        const std::string& val = kv.value;

        if (sec.empty()) {
            if (key == "name") {
                s.name = val;
                have_name = true;
            } else if (key == "experiment")
                s.experiment = val;
            else if (key == "strict")
                s.strict = to_bool(kv, origin);
            else
                field_error(kv, origin, "unknown top-level key");
        } else if (sec == "problem") {
            if (key == "kind") {
                if (val == "scalar")
                    s.problem = ProblemKind::Scalar;
                else if (val == "system")
                    s.problem = ProblemKind::System;
                else if (val == "kinetic")
                    s.problem = ProblemKind::Kinetic;
                else
                    field_error(kv, origin, "expected scalar | system | kinetic");
            } else if (key == "p") {
                s.p = to_double(kv, origin);
                have_p = true;
            } else if (key == "q") {
                s.q = to_double(kv, origin);
                have_q = true;
            } else if (key == "mu") {
                if (val == "auto")
                    s.mu_auto = true;
                else
                    s.mu = to_double(kv, origin);
            } else if (key == "sigma") {
                s.sigma = to_double(kv, origin);
                have_sigma = true;
            } else if (key == "d")
                s.d = to_double(kv, origin);
            else if (key == "m_bound") {
                if (val == "auto")
                    s.big_m_auto = true;
                else
                    s.big_m = to_double(kv, origin);
            } else if (key == "x0")
                s.x0 = to_double(kv, origin);
            else if (key == "dim")
                s.dim = to_int(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "geometry") {
            if (key == "shape") {
                if (val == "interval")
                    s.geometry.shape = GeometrySpec::Shape::Interval;
                else if (val == "ball")
                    s.geometry.shape = GeometrySpec::Shape::Ball;
                else
                    field_error(kv, origin, "expected interval | ball");
            } else if (key == "xmin")
                s.geometry.xmin = to_double(kv, origin);
            else if (key == "xmax")
                s.geometry.xmax = to_double(kv, origin);
            else if (key == "radius") {
                if (val == "auto")
                    s.geometry.radius_auto = true;
                else
                    s.geometry.radius = to_double(kv, origin);
            } else if (key == "bc") {
                if (val != "neumann" && val != "dirichlet" && val != "cauchy")
                    field_error(kv, origin, "expected neumann | dirichlet | cauchy");
                s.geometry.bc = val;
            } else if (key == "nodes")
                s.geometry.nodes = to_int(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "absorption") {
            if (key == "kind") {
                if (val == "power")
                    s.absorption.kind = AbsorptionSpec::Kind::Power;
                else if (val == "one_minus_cos")
                    s.absorption.kind = AbsorptionSpec::Kind::OneMinusCos;
                else if (val == "constant")
                    s.absorption.kind = AbsorptionSpec::Kind::Constant;
                else if (val == "tabulated")
                    s.absorption.kind = AbsorptionSpec::Kind::Tabulated;
                else
                    field_error(kv, origin, "expected power | one_minus_cos | constant | tabulated");
            } else if (key == "scale")
                s.absorption.scale = to_double(kv, origin);
            else if (key == "freq")
                s.absorption.freq = to_double(kv, origin);
            else if (key == "file")
                s.absorption.file = val;
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "coupling") {
            if (key == "d1")
                s.coupling.d1 = to_double(kv, origin);
            else if (key == "d2")
                s.coupling.d2 = to_double(kv, origin);
            else if (key == "f") {
                if (val != "linear" && val != "logistic" && val != "tabulated")
                    field_error(kv, origin, "expected linear | logistic | tabulated");
                s.coupling.f = val;
            } else if (key == "lambda")
                s.coupling.lambda = to_double(kv, origin);
            else if (key == "h0")
                s.coupling.h0 = to_double(kv, origin);
            else if (key == "l")
                s.coupling.l = to_double(kv, origin);
            else if (key == "file")
                s.coupling.file = val;
            else if (key == "m") {
                if (val == "auto")
                    s.coupling.m_auto = true;
                else
                    s.coupling.m = to_double(kv, origin);
            } else if (key == "sigma")
                s.coupling.sigma = to_double(kv, origin);
            else if (key == "v_mode") {
                if (val == "stationary")
                    s.coupling.v_stationary = true;
                else if (val == "evolve")
                    s.coupling.v_stationary = false;
                else
                    field_error(kv, origin, "expected stationary | evolve");
            } else if (key == "v0")
                s.coupling.v0_expr = val;
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "initial") {
            if (key == "u") {
                if (val.rfind("lower_solution", 0) == 0) {
                    // lower_solution(t0, scale)
                    double t0 = -1.0, scale = 1.0;
                    if (std::sscanf(val.c_str(), "lower_solution(%lf,%lf)", &t0, &scale) < 1 &&
                        std::sscanf(val.c_str(), "lower_solution( %lf , %lf )", &t0, &scale) < 1)
                        field_error(kv, origin, "expected lower_solution(t0, scale)");
                    s.initial.use_lower_solution = true;
                    s.initial.ls_t0 = t0;
                    s.initial.ls_scale = scale;
                } else {
                    try {
                        Expr::parse(val);
                    } catch (const ExprError& e) {
                        field_error(kv, origin, std::string("bad expression: ") + e.what());
                    }
                    s.initial.u_expr = val;
                }
            } else if (key == "xi")
                s.initial.xi = to_double(kv, origin);
            else if (key == "eta")
                s.initial.eta = to_double(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "sweep") {
            if (key == "xi_min")
                s.sweep.xi_min = to_double(kv, origin);
            else if (key == "xi_max")
                s.sweep.xi_max = to_double(kv, origin);
            else if (key == "eta_min")
                s.sweep.eta_min = to_double(kv, origin);
            else if (key == "eta_max")
                s.sweep.eta_max = to_double(kv, origin);
            else if (key == "xi_steps")
                s.sweep.xi_steps = to_int(kv, origin);
            else if (key == "eta_steps")
                s.sweep.eta_steps = to_int(kv, origin);
            else if (key == "horizon")
                s.sweep.horizon = to_double(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "solver") {
            if (key == "rtol")
                s.rtol = to_double(kv, origin);
            else if (key == "atol")
                s.atol = to_double(kv, origin);
            else if (key == "cfl_safety")
                s.cfl_safety = to_double(kv, origin);
            else if (key == "react_c")
                s.react_c = to_double(kv, origin);
            else if (key == "u_cap")
                s.u_cap = to_double(kv, origin);
            else if (key == "u_kin")
                s.u_kin = to_double(kv, origin);
            else if (key == "horizon")
                s.horizon = to_double(kv, origin);
            else if (key == "sample_dt")
                s.sample_dt = to_double(kv, origin);
            else if (key == "kin_rtol")
                s.kin_rtol = to_double(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "monitors") {
            if (key == "comparison")
                s.monitors.comparison = to_bool(kv, origin);
            else if (key == "positivity")
                s.monitors.positivity = to_bool(kv, origin);
            else if (key == "boundary") {
                if (val != "auto" && val != "on" && val != "off")
                    field_error(kv, origin, "expected auto | on | off");
                s.monitors.boundary = val;
            } else if (key == "tol_cmp_coeff")
                s.monitors.tol_cmp_coeff = to_double(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else if (sec == "profile") {
            if (key == "mu_min")
                s.profile_search.mu_min = to_double(kv, origin);
            else if (key == "mu_max")
                s.profile_search.mu_max = to_double(kv, origin);
            else if (key == "mu_per_decade")
                s.profile_search.mu_per_decade = to_int(kv, origin);
            else if (key == "alpha_min")
                s.profile_search.alpha_min = to_double(kv, origin);
            else if (key == "alpha_max")
                s.profile_search.alpha_max = to_double(kv, origin);
            else if (key == "alpha_per_decade")
                s.profile_search.alpha_per_decade = to_int(kv, origin);
            else if (key == "r_max")
                s.profile_search.r_max = to_double(kv, origin);
            else if (key == "grid_nodes")
                s.profile_search.grid_nodes = to_int(kv, origin);
            else
                field_error(kv, origin, "unknown key");
        } else {
            throw ScenarioError(origin + ":" + std::to_string(kv.line) + ": unknown section [" +
                                sec + "]");
        }
    }

    if (!have_name) throw ScenarioError(origin + ": field name: missing");
    if (!have_p) throw ScenarioError(origin + ": field problem.p: missing");
    if (!have_q) throw ScenarioError(origin + ": field problem.q: missing");
    if (!have_sigma) {
        s.sigma_defaulted = true;
        if (s.p > 1.0 && s.q >= s.p) s.sigma = critical_sigma(s.p, s.q);
    }
    if (s.geometry.nodes < 5) throw ScenarioError(origin + ": field geometry.nodes: must be >= 5");
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ScenarioError("load_scenario: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    Scenario s = parse_scenario(ss.str(), path);
    const auto slash = path.find_last_of('/');
    s.base_dir = slash == std::string::npos ? std::string(".") : path.substr(0, slash);
    return s;
}

namespace {

std::string resolve_path(const Scenario& s, const std::string& file) {
    if (file.empty() || file.front() == '/') return file;
    return (s.base_dir.empty() ? std::string(".") : s.base_dir) + "/" + file;
}

std::string slurp_file(const std::string& path, const char* what) {
    std::ifstream is(path);
    if (!is) throw ScenarioError(std::string(what) + ": cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// csv/whitespace rows of two numbers; # and header lines skipped
std::vector<std::array<double, 2>> parse_table(const std::string& text, const char* what) {
    std::vector<std::array<double, 2>> table;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream row(line);
        double a, b;
        if (row >> a >> b) table.push_back({a, b});
    }
    if (table.size() < 2)
        throw ScenarioError(std::string(what) + ": table needs at least two rows");
    std::sort(table.begin(), table.end(),
              [](const auto& x, const auto& y) { return x[0] < y[0]; });
    return table;
}

double lerp_table(const std::vector<std::array<double, 2>>& table, double x) {
    if (x <= table.front()[0]) return table.front()[1];
    if (x >= table.back()[0]) return table.back()[1];
    std::size_t lo = 0, hi = table.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        if (table[mid][0] <= x)
            lo = mid;
        else
            hi = mid;
    }
    const double t = (x - table[lo][0]) / (table[hi][0] - table[lo][0]);
    return table[lo][1] * (1.0 - t) + table[hi][1] * t;
}

kernels::KineticLaw build_f_law(const Scenario& s) {
    kernels::KineticLaw law;
    if (s.coupling.f == "logistic") {
        law.kind = kernels::KineticLaw::Logistic;
    } else if (s.coupling.f == "tabulated") {
        law.kind = kernels::KineticLaw::Tabulated;
        if (s.coupling.file.empty())
            throw ScenarioError("scenario " + s.name + ": tabulated f requires coupling.file");
        law.table = parse_table(slurp_file(resolve_path(s, s.coupling.file), "tabulated f"),
                                "tabulated f");
    } else {
        law.kind = kernels::KineticLaw::Linear;
    }
    law.lambda = s.coupling.lambda;
    law.h0 = s.coupling.h0;
    law.l = s.coupling.l;
    return law;
}

}  // namespace

std::string save_scenario(const Scenario& s) {
    std::ostringstream os;
    os << "name = " << s.name << "\n";
    if (!s.experiment.empty()) os << "experiment = " << s.experiment << "\n";
    if (s.strict) os << "strict = true\n";
    os << "\n[problem]\n";
    os << "kind = "
       << (s.problem == ProblemKind::Scalar ? "scalar"
                                            : s.problem == ProblemKind::System ? "system" : "kinetic")
       << "\n";
    os << "p = " << fmt(s.p) << "\n";
    os << "q = " << fmt(s.q) << "\n";
    os << "mu = " << (s.mu_auto ? std::string("auto") : fmt(s.mu)) << "\n";
    os << "sigma = " << fmt(s.sigma) << "\n";
    os << "d = " << fmt(s.d) << "\n";
    os << "m_bound = " << (s.big_m_auto ? std::string("auto") : fmt(s.big_m)) << "\n";
    os << "x0 = " << fmt(s.x0) << "\n";
    os << "dim = " << s.dim << "\n";
    os << "\n[geometry]\n";
    os << "shape = " << (s.geometry.shape == GeometrySpec::Shape::Interval ? "interval" : "ball")
       << "\n";
    os << "xmin = " << fmt(s.geometry.xmin) << "\n";
    os << "xmax = " << fmt(s.geometry.xmax) << "\n";
    os << "radius = " << (s.geometry.radius_auto ? std::string("auto") : fmt(s.geometry.radius))
       << "\n";
    os << "bc = " << s.geometry.bc << "\n";
    os << "nodes = " << s.geometry.nodes << "\n";
    os << "\n[absorption]\n";
    const char* akind = "power";
    if (s.absorption.kind == AbsorptionSpec::Kind::OneMinusCos) akind = "one_minus_cos";
    if (s.absorption.kind == AbsorptionSpec::Kind::Constant) akind = "constant";
    if (s.absorption.kind == AbsorptionSpec::Kind::Tabulated) akind = "tabulated";
    os << "kind = " << akind << "\n";
    os << "scale = " << fmt(s.absorption.scale) << "\n";
    os << "freq = " << fmt(s.absorption.freq) << "\n";
    if (!s.absorption.file.empty()) os << "file = " << s.absorption.file << "\n";
    os << "\n[coupling]\n";
    os << "d1 = " << fmt(s.coupling.d1) << "\n";
    os << "d2 = " << fmt(s.coupling.d2) << "\n";
    os << "f = " << s.coupling.f << "\n";
    os << "lambda = " << fmt(s.coupling.lambda) << "\n";
    os << "h0 = " << fmt(s.coupling.h0) << "\n";
    os << "l = " << fmt(s.coupling.l) << "\n";
    if (!s.coupling.file.empty()) os << "file = " << s.coupling.file << "\n";
    os << "m = " << (s.coupling.m_auto ? std::string("auto") : fmt(s.coupling.m)) << "\n";
    os << "sigma = " << fmt(s.coupling.sigma) << "\n";
    os << "v_mode = " << (s.coupling.v_stationary ? "stationary" : "evolve") << "\n";
    os << "v0 = " << s.coupling.v0_expr << "\n";
    os << "\n[initial]\n";
    if (s.initial.use_lower_solution)
        os << "u = lower_solution(" << fmt(s.initial.ls_t0) << "," << fmt(s.initial.ls_scale)
           << ")\n";
    else
        os << "u = " << s.initial.u_expr << "\n";
    os << "xi = " << fmt(s.initial.xi) << "\n";
    os << "eta = " << fmt(s.initial.eta) << "\n";
    os << "\n[sweep]\n";
    os << "xi_min = " << fmt(s.sweep.xi_min) << "\n";
    os << "xi_max = " << fmt(s.sweep.xi_max) << "\n";
    os << "eta_min = " << fmt(s.sweep.eta_min) << "\n";
    os << "eta_max = " << fmt(s.sweep.eta_max) << "\n";
    os << "xi_steps = " << s.sweep.xi_steps << "\n";
    os << "eta_steps = " << s.sweep.eta_steps << "\n";
    os << "horizon = " << fmt(s.sweep.horizon) << "\n";
    os << "\n[solver]\n";
    os << "rtol = " << fmt(s.rtol) << "\n";
    os << "atol = " << fmt(s.atol) << "\n";
    os << "cfl_safety = " << fmt(s.cfl_safety) << "\n";
    os << "react_c = " << fmt(s.react_c) << "\n";
    os << "u_cap = " << fmt(s.u_cap) << "\n";
    os << "u_kin = " << fmt(s.u_kin) << "\n";
    os << "horizon = " << fmt(s.horizon) << "\n";
    os << "sample_dt = " << fmt(s.sample_dt) << "\n";
    os << "kin_rtol = " << fmt(s.kin_rtol) << "\n";
    os << "\n[monitors]\n";
    os << "comparison = " << (s.monitors.comparison ? "true" : "false") << "\n";
    os << "positivity = " << (s.monitors.positivity ? "true" : "false") << "\n";
    os << "boundary = " << s.monitors.boundary << "\n";
    os << "tol_cmp_coeff = " << fmt(s.monitors.tol_cmp_coeff) << "\n";
    os << "\n[profile]\n";
    os << "mu_min = " << fmt(s.profile_search.mu_min) << "\n";
    os << "mu_max = " << fmt(s.profile_search.mu_max) << "\n";
    os << "mu_per_decade = " << s.profile_search.mu_per_decade << "\n";
    os << "alpha_min = " << fmt(s.profile_search.alpha_min) << "\n";
    os << "alpha_max = " << fmt(s.profile_search.alpha_max) << "\n";
    os << "alpha_per_decade = " << s.profile_search.alpha_per_decade << "\n";
    os << "r_max = " << fmt(s.profile_search.r_max) << "\n";
    os << "grid_nodes = " << s.profile_search.grid_nodes << "\n";
    return os.str();
}

ProblemParams problem_params(const Scenario& s) {
    ProblemParams pp;
    pp.p = s.p;
    pp.q = s.q;
    pp.sigma = s.sigma;
    pp.mu = s.mu;
    pp.n = s.dim;
    pp.d = s.d;
    pp.big_m = s.big_m;
    pp.x0 = {s.x0, 0.0, 0.0};
    return pp;
}

ResolvedScenario resolve(const Scenario& input, bool strict, int threads) {
    ResolvedScenario rs;
    rs.scenario = input;
    Scenario& s = rs.scenario;

    if (s.sigma_defaulted) {
        s.sigma = critical_sigma(s.p, s.q);
        s.sigma_defaulted = false;
    }

    if (s.big_m_auto) {
        switch (s.absorption.kind) {
            case AbsorptionSpec::Kind::Power:
                s.big_m = s.absorption.scale;
                break;
            case AbsorptionSpec::Kind::OneMinusCos: {
                const double fp = s.absorption.freq * std::numbers::pi;
                s.big_m = s.absorption.scale * fp * fp / 2.0;
                break;
            }
            default:
                throw ScenarioError("scenario " + s.name +
                                    ": m_bound = auto is only derivable for power and "
                                    "one_minus_cos absorption");
        }
        s.big_m_auto = false;
    }

    if (s.coupling.m_auto) {
        s.coupling.m = Expr::parse(s.coupling.v0_expr).eval(s.x0);
        s.coupling.m_auto = false;
    }

    const bool needs_profile =
        s.initial.use_lower_solution || s.mu_auto || s.geometry.radius_auto;

    if (s.geometry.radius_auto && !s.initial.use_lower_solution)
        throw ScenarioError("scenario " + s.name +
                            ": radius = auto requires initial u = lower_solution(...)");

    if (needs_profile) {
        ProblemParams tmpl = problem_params(s);
        tmpl.mu = 1.0;  // template value; find_profile scans its own grid
        SearchControls sc = s.profile_search;
        sc.threads = threads;
        try {
            rs.profile = find_profile(tmpl, sc);
        } catch (const SearchExhausted& e) {
            throw ScenarioError("scenario " + s.name + ": profile search failed: " + e.what() +
                                "\nscan trace:\n" + e.trace);
        }
        const double mu0 = rs.profile->params.mu;
        if (s.mu_auto) {
            s.mu = std::pow(s.big_m, (s.p - 1.0) / (s.q - 1.0)) * mu0;
            s.mu_auto = false;
        }
        if (s.geometry.radius_auto) {
            s.geometry.radius = rs.profile->r0 * std::sqrt(-s.initial.ls_t0);
            s.geometry.radius_auto = false;
        }
        if (s.initial.use_lower_solution) {
            try {
                rs.lower_solution = make_lower_solution(*rs.profile, s.initial.ls_t0, s.big_m,
                                                        s.mu, {s.x0, 0.0, 0.0});
            } catch (const std::invalid_argument& e) {
                throw ScenarioError("scenario " + s.name + ": " + e.what());
            }
        }
    }

    rs.hypotheses = check_hypotheses(problem_params(s));
    if ((strict || s.strict) && !rs.hypotheses.all_required_pass()) {
        std::ostringstream os;
        os << "scenario " << s.name << ": hypothesis failure in strict mode:";
        for (const auto& f : rs.hypotheses.flags)
            if (f.required && !f.pass) os << " " << f.name << " (" << f.detail << ")";
        throw ScenarioError(os.str());
    }

    // table files participate in the digest so identical digests really do
    // mean identical inputs
    std::string digest_input = save_scenario(s);
    if (s.coupling.f == "tabulated" && !s.coupling.file.empty())
        digest_input += slurp_file(resolve_path(s, s.coupling.file), "tabulated f");
    if (s.absorption.kind == AbsorptionSpec::Kind::Tabulated && !s.absorption.file.empty())
        digest_input += slurp_file(resolve_path(s, s.absorption.file), "tabulated absorption");
    rs.digest = fnv1a_hex(digest_input);
    return rs;
}

namespace {

kernels::BoundaryKind bc_of(const std::string& bc) {
    return bc == "neumann" ? kernels::BoundaryKind::Neumann : kernels::BoundaryKind::Dirichlet;
}

}  // namespace

BuiltProblem build_problem(const ResolvedScenario& rs, int nodes_override, int threads) {
    const Scenario& s = rs.scenario;
    if (s.problem == ProblemKind::Kinetic)
        throw ScenarioError("build_problem: kinetic scenarios have no grid");

    BuiltProblem bp;
    const int nodes = nodes_override > 0 ? nodes_override : s.geometry.nodes;

    kernels::GridGeom g;
    if (s.geometry.shape == GeometrySpec::Shape::Ball) {
        g.radial = true;
        g.dim = s.dim;
        g.xmin = 0.0;
        g.h = s.geometry.radius / (nodes - 1);
    } else {
        g.radial = false;
        g.dim = 1;
        g.xmin = s.geometry.xmin;
        g.h = (s.geometry.xmax - s.geometry.xmin) / (nodes - 1);
    }
    g.n = static_cast<std::size_t>(nodes);
    g.left = bc_of(s.geometry.bc);
    g.right = bc_of(s.geometry.bc);

    bp.field.geom = g;
    bp.field.u.assign(g.n, 0.0);
    bp.field.time = 0.0;

    bp.reaction.mu = s.mu;
    bp.reaction.p = s.p;
    bp.reaction.q = s.q;

    // absorption coefficient on the grid
    std::vector<std::array<double, 2>> a_table;
    if (s.absorption.kind == AbsorptionSpec::Kind::Tabulated) {
        if (s.absorption.file.empty())
            throw ScenarioError("scenario " + s.name + ": tabulated absorption requires a file");
        a_table = parse_table(
            slurp_file(resolve_path(s, s.absorption.file), "tabulated absorption"),
            "tabulated absorption");
        for (const auto& row : a_table)
            if (row[1] < 0.0)
                throw ScenarioError("scenario " + s.name + ": absorption table must be >= 0");
    }
    auto absorption_at = [&](double x) -> double {
        const double dx = x - s.x0;
        switch (s.absorption.kind) {
            case AbsorptionSpec::Kind::Power:
                return s.absorption.scale * std::pow(std::fabs(dx), s.sigma);
            case AbsorptionSpec::Kind::OneMinusCos:
                return s.absorption.scale * (1.0 - std::cos(s.absorption.freq * std::numbers::pi * dx));
            case AbsorptionSpec::Kind::Constant:
                return s.absorption.scale;
            case AbsorptionSpec::Kind::Tabulated:
                return s.absorption.scale * lerp_table(a_table, x);
        }
        return 0.0;
    };

    if (s.problem == ProblemKind::System) {
        bp.reaction.two_component = true;
        bp.reaction.d1 = s.coupling.d1;
        bp.reaction.d2 = s.coupling.d2;
        bp.reaction.m = s.coupling.m;
        bp.reaction.sigma_couple = s.coupling.sigma;
        bp.reaction.v_stationary = s.coupling.v_stationary;
        bp.reaction.f = build_f_law(s);
        const Expr v0 = Expr::parse(s.coupling.v0_expr);
        bp.field.v.resize(g.n);
        for (std::size_t i = 0; i < g.n; ++i) bp.field.v[i] = v0.eval(g.x(i));
    } else {
        bp.reaction.d = s.d;
        bp.reaction.a.resize(g.n);
        for (std::size_t i = 0; i < g.n; ++i) bp.reaction.a[i] = absorption_at(g.x(i));
    }

    // initial data
    if (s.initial.use_lower_solution) {
        if (!rs.lower_solution)
            throw ScenarioError("build_problem: lower_solution initial data but no profile stage");
        const auto& ls = *rs.lower_solution;
        for (std::size_t i = 0; i < g.n; ++i) {
            Vec3 x{g.x(i), 0.0, 0.0};
            bp.field.u[i] = s.initial.ls_scale * ls.evaluate(x, s.initial.ls_t0);
        }
    } else {
        const Expr u0 = Expr::parse(s.initial.u_expr);
        for (std::size_t i = 0; i < g.n; ++i) bp.field.u[i] = u0.eval(g.x(i));
    }
    // pin Dirichlet rows
    if (!g.radial && g.left == kernels::BoundaryKind::Dirichlet) bp.field.u[0] = 0.0;
    if (g.right == kernels::BoundaryKind::Dirichlet) bp.field.u[g.n - 1] = 0.0;

    bp.controls.rtol = s.rtol;
    bp.controls.atol = s.atol;
    bp.controls.cfl_safety = s.cfl_safety;
    bp.controls.react_c = s.react_c;
    bp.controls.u_cap = s.u_cap;
    bp.controls.horizon = s.horizon;
    bp.controls.sample_dt = s.sample_dt;
    bp.controls.threads = threads;
    bp.controls.settings_digest = rs.digest;

    bp.tol_cmp = s.monitors.tol_cmp_coeff * g.h * g.h;
    bp.monitors.positivity = s.monitors.positivity;
    bp.monitors.boundary_margin =
        s.monitors.boundary == "on" || (s.monitors.boundary == "auto" && s.geometry.bc == "cauchy");
    if (s.monitors.comparison && rs.lower_solution) {
        bp.ls = std::make_shared<LowerSolution>(*rs.lower_solution);
        bp.monitors.comparison = bp.ls.get();
        bp.monitors.cmp_t0 = s.initial.ls_t0;
        bp.monitors.tol_cmp = bp.tol_cmp;
    }

    // zero set of the absorption coefficient
    if (s.problem == ProblemKind::System) {
        std::vector<double> a_eff(g.n);
        kernels::coupling_absorption(s.coupling.m, s.coupling.sigma, bp.field.v, a_eff,
                                     par::ExecPolicy{threads});
        bp.absorption_zeros = find_zero_nodes(a_eff, g);
    } else {
        bp.absorption_zeros = find_zero_nodes(bp.reaction.a, g);
    }
    return bp;
}

KineticSpec kinetic_spec(const ResolvedScenario& rs) {
    const Scenario& s = rs.scenario;
    KineticSpec ks;
    ks.p = s.p;
    ks.q = s.q;
    ks.mu = s.mu;
    ks.sigma = s.coupling.sigma;
    ks.m = s.coupling.m;
    ks.f = build_f_law(s);
    return ks;
}

KineticControls kinetic_controls(const ResolvedScenario& rs, int threads) {
    KineticControls kc;
    kc.rtol = rs.scenario.kin_rtol;
    kc.horizon = rs.scenario.sweep.horizon;
    kc.u_kin = rs.scenario.u_kin;
    kc.threads = threads;
    return kc;
}

}  // namespace blowlab
