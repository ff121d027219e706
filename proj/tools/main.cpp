#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "blowlab/experiment.hpp"
#include "blowlab/parallel.hpp"

namespace fs = std::filesystem;
using namespace blowlab;

namespace {

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir = "out";
    bool strict = false;
    int jobs = 0;
    double horizon = 0.0;
    bool seedless = false;  // documents determinism; there is no seed to elide
};

void add_common(CLI::App* cmd, CommonOpts& o, bool scenario_required = true) {
    auto* sopt = cmd->add_option("--scenario", o.scenario_path, "scenario file (.scn)");
    if (scenario_required) sopt->required();
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_flag("--strict", o.strict, "treat hypothesis failures as errors");
    cmd->add_option("--jobs", o.jobs, "worker threads for fan-out stages (0: runtime default)");
    cmd->add_option("--horizon", o.horizon, "override the scenario horizon");
    cmd->add_flag("--seedless", o.seedless,
                  "no-op; all runs are deterministic and use no random seed");
}

int run_profile_find(const CommonOpts& o) {
    Scenario sc = load_scenario(o.scenario_path);
    sc.initial.use_lower_solution = true;  // force the profile stage
    GlobalOptions g{o.strict, o.jobs, o.horizon};
    const auto res = run_experiment("profile-only", sc, o.out_dir, g);
    for (const auto& s : res.stages)
        std::printf("[%s] %s: %s\n", s.ok ? "ok" : "FAIL", s.stage.c_str(), s.detail.c_str());
    return res.pass ? 0 : 1;
}

int run_simulate(const CommonOpts& o) {
    Scenario sc = load_scenario(o.scenario_path);
    if (o.horizon > 0.0) sc.horizon = o.horizon;
    ResolvedScenario rs = resolve(sc, o.strict, o.jobs);
    fs::create_directories(o.out_dir);
    for (const auto& f : rs.hypotheses.flags)
        if (f.required && !f.pass)
            std::fprintf(stderr, "warning: hypothesis %s failed (%s)\n", f.name.c_str(),
                         f.detail.c_str());

    if (rs.scenario.problem == ProblemKind::Kinetic) {
        KineticSpec ks = kinetic_spec(rs);
        KineticControls kc = kinetic_controls(rs, o.jobs);
        kc.horizon = rs.scenario.horizon;
        const auto traj = integrate(rs.scenario.initial.xi, rs.scenario.initial.eta, ks, kc);
        write_trajectory_csv((fs::path(o.out_dir) / "trajectory.csv").string(), traj, rs.digest);
        {
            std::ofstream os(fs::path(o.out_dir) / "summary.json");
            os << "{\n \"verdict\": \"" << to_string(traj.verdict) << "\",\n \"sup_u\": "
               << traj.sup_u << ",\n \"sup_v\": " << traj.sup_v << ",\n \"t_end\": " << traj.t_end
               << ",\n \"settings_digest\": \"" << rs.digest << "\"\n}\n";
        }
        std::printf("kinetic trajectory: verdict=%s sup_u=%g sup_v=%g\n", to_string(traj.verdict),
                    traj.sup_u, traj.sup_v);
        return traj.verdict == KinVerdict::SuspectBlowup ? 1 : 0;
    }

    BuiltProblem bp = build_problem(rs, 0, o.jobs);
    SimResult res = run(bp.field, bp.reaction, bp.controls, bp.monitors);
    write_series_csv((fs::path(o.out_dir) / "series.csv").string(), res);
    std::ofstream(fs::path(o.out_dir) / "summary.json") << summary_json(res);
    std::printf("simulate: status=%s", to_string(res.status));
    if (res.status == SimStatus::Blowup)
        std::printf(" t_star_hat=%.6g ci=%.2g blowup_point=%.6g", res.t_star_hat, res.ci,
                    res.blowup_point);
    std::printf("\n");
    return res.status == SimStatus::Aborted ? 3 : 0;
}

int run_kinetics_sweep(const CommonOpts& o) {
    Scenario sc = load_scenario(o.scenario_path);
    ResolvedScenario rs = resolve(sc, o.strict, o.jobs);
    fs::create_directories(o.out_dir);
    KineticSpec ks = kinetic_spec(rs);
    KineticControls kc = kinetic_controls(rs, o.jobs);
    if (o.horizon > 0.0) kc.horizon = o.horizon;
    const auto& sw = rs.scenario.sweep;
    const auto sweep = sweep_boundedness(sw.xi_min, sw.xi_max, sw.xi_steps, sw.eta_min, sw.eta_max,
                                         sw.eta_steps, ks, kc);
    write_sweep_csv((fs::path(o.out_dir) / "sweep.csv").string(), sweep);
    std::printf("kinetics sweep: %zu cells, all_bounded=%s, certified=%s\n", sweep.cells.size(),
                sweep.all_bounded ? "yes" : "no", sweep.certified ? "yes" : "no");
    return sweep.all_bounded && sweep.certified ? 0 : 1;
}

int run_one_experiment(const std::string& name, const std::string& scenario_path,
                       const std::string& out_dir, const CommonOpts& o) {
    Scenario sc = load_scenario(scenario_path);
    std::string exp = name.empty() ? sc.experiment : name;
    if (exp.empty())
        throw ScenarioError("no experiment name given and the scenario binds none");
    GlobalOptions g{o.strict, o.jobs, o.horizon};
    const auto res = run_experiment(exp, sc, out_dir, g);
    for (const auto& s : res.stages)
        std::printf("[%s] %s: %s\n", s.ok ? "ok" : "FAIL", s.stage.c_str(), s.detail.c_str());
    std::printf("experiment %s (%s): %s (digest %s)\n", exp.c_str(), sc.name.c_str(),
                res.pass ? "PASS" : "FAIL", res.digest.c_str());
    return res.pass ? 0 : 1;
}

int run_named_experiment(const std::string& name, const std::vector<std::string>& scenarios,
                         bool sweep, const CommonOpts& o) {
    if (scenarios.size() == 1) return run_one_experiment(name, scenarios[0], o.out_dir, o);

    // several scenarios: isolated per-scenario output directories; the sweep
    // flag runs them concurrently
    std::vector<int> codes(scenarios.size(), 2);
    std::vector<std::string> names(scenarios.size());
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        names[i] = load_scenario(scenarios[i]).name;
    auto body = [&](std::size_t i) {
        const std::string dir = o.out_dir + "/" + names[i];
        try {
            codes[i] = run_one_experiment(name, scenarios[i], dir, o);
        } catch (const ScenarioError& e) {
            std::fprintf(stderr, "%s: configuration error: %s\n", names[i].c_str(), e.what());
            codes[i] = 2;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "%s: solver fault: %s\n", names[i].c_str(), e.what());
            codes[i] = 3;
        }
    };
    if (sweep)
        blowlab::par::parallel_tasks(scenarios.size(), blowlab::par::ExecPolicy{o.jobs}, body);
    else
        for (std::size_t i = 0; i < scenarios.size(); ++i) body(i);
    int worst = 0;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"blowlab: a numerical laboratory for blowup in u_t = Lap(u) + mu u^p - a(x) u^q"};
    app.require_subcommand(1);

    CommonOpts o;

    auto* profile = app.add_subcommand("profile", "self-similar profile operations");
    profile->require_subcommand(1);
    auto* pfind = profile->add_subcommand("find", "search (mu, alpha0) for a certified profile");
    add_common(pfind, o);

    auto* simulate = app.add_subcommand("simulate", "run a scenario once");
    add_common(simulate, o);

    auto* kinetics = app.add_subcommand("kinetics", "space-free kinetic system operations");
    kinetics->require_subcommand(1);
    auto* ksweep = kinetics->add_subcommand("sweep", "boundedness verdict matrix over (xi, eta)");
    add_common(ksweep, o);

    auto* experiment = app.add_subcommand("experiment", "run a named experiment");
    std::string exp_name;
    std::vector<std::string> exp_scenarios;
    bool exp_sweep = false;
    experiment->add_option("name", exp_name, "thm1.2 | thm1.3 | rate | dib | profile-only");
    experiment->add_option("--scenario", exp_scenarios, "scenario file(s); repeatable")
        ->required();
    experiment->add_flag("--sweep", exp_sweep,
                         "run multiple scenarios concurrently in isolated output directories");
    experiment->add_option("--out", o.out_dir, "output directory");
    experiment->add_flag("--strict", o.strict, "treat hypothesis failures as errors");
    experiment->add_option("--jobs", o.jobs, "worker threads (0: runtime default)");
    experiment->add_option("--horizon", o.horizon, "override the scenario horizon");
    experiment->add_flag("--seedless", o.seedless,
                         "no-op; all runs are deterministic and use no random seed");

    auto* plotdata = app.add_subcommand("plotdata", "emit plot-ready csv files from a bundle");
    std::string bundle_dir;
    plotdata->add_option("bundle", bundle_dir, "result bundle directory")->required();
    plotdata->add_option("--out", o.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pfind->parsed()) return run_profile_find(o);
        if (simulate->parsed()) return run_simulate(o);
        if (ksweep->parsed()) return run_kinetics_sweep(o);
        if (experiment->parsed()) return run_named_experiment(exp_name, exp_scenarios, exp_sweep, o);
        if (plotdata->parsed()) return emit_plot_data(bundle_dir, o.out_dir);
    } catch (const ScenarioError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver fault: %s\n", e.what());
        return 3;
    }
    return 2;
}
