#include "blowlab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace blowlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

struct StageLog {
    std::vector<StageResult> stages;
    bool all_ok = true;

    void add(const std::string& stage, bool ok, const std::string& detail) {
        stages.push_back({stage, ok, detail});
        all_ok = all_ok && ok;
    }
};

std::string fmt_g(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

json stages_json(const StageLog& log) {
    json arr = json::array();
    for (const auto& s : log.stages)
        arr.push_back({{"stage", s.stage}, {"ok", s.ok}, {"detail", s.detail}});
    return arr;
}

// runs the PDE side of a scenario and writes series/summary artifacts
SimResult run_pde_stage(const ResolvedScenario& rs, const fs::path& out, const GlobalOptions& opts,
                        int nodes_override, const std::string& tag, BuiltProblem* built_out) {
    BuiltProblem bp = build_problem(rs, nodes_override, opts.jobs);
    SimResult res = run(bp.field, bp.reaction, bp.controls, bp.monitors);
    write_series_csv((out / ("series" + tag + ".csv")).string(), res);
    write_text(out / ("summary" + tag + ".json"), summary_json(res));
    if (built_out) *built_out = std::move(bp);
    return res;
}

constexpr double kBlowupSlack = 1.05;   // discretization allowance on T* <= -t0
constexpr double kRateTolerance = 0.10;  // relative window around -1/(p-1)
constexpr double kDibTstarBound = 10.0;

}  // namespace

ExperimentResult run_experiment(const std::string& name, const Scenario& scenario,
                                const std::string& out_dir, const GlobalOptions& opts) {
    const auto t_wall0 = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    Scenario sc = scenario;
    if (opts.horizon_override > 0.0) sc.horizon = opts.horizon_override;

    if (name != "thm1.2" && name != "thm1.3" && name != "rate" && name != "dib" &&
        name != "profile-only")
        throw ScenarioError("unknown experiment '" + name + "'");

    // profile-only forces the profile stage even when nothing else needs it;
    // the certificate uses the minimal admissible mu regardless of the
    // scenario's equation mu
    if (name == "profile-only") {
        if (!sc.initial.use_lower_solution) {
            sc.initial.use_lower_solution = true;
            sc.initial.ls_t0 = -1.0;
        }
        sc.mu_auto = true;
    }
    if (name == "thm1.2" && !sc.initial.use_lower_solution)
        throw ScenarioError("thm1.2 requires initial u = lower_solution(t0, scale)");

    ResolvedScenario rs = resolve(sc, opts.strict, opts.jobs);
    write_text(out / "resolved.scn", save_scenario(rs.scenario));

    StageLog log;
    json metrics;

    for (const auto& f : rs.hypotheses.flags)
        if (f.required && !f.pass)
            log.add("hypothesis:" + f.name, false, f.detail);

    if (rs.profile) {
        write_text(out / "profile.json", profile_to_json(*rs.profile));
        log.add("profile", true,
                "mu0=" + fmt_g(rs.profile->params.mu) + " alpha0=" + fmt_g(rs.profile->alpha0) +
                    " r0=" + fmt_g(rs.profile->r0) + " residual=" + fmt_g(rs.profile->residual_max));
        metrics["mu0"] = rs.profile->params.mu;
        metrics["alpha0"] = rs.profile->alpha0;
        metrics["r0"] = rs.profile->r0;
    }
    if (rs.lower_solution) {
        const auto cert = certify(*rs.lower_solution, 10000, 100, par::ExecPolicy{opts.jobs});
        write_text(out / "cert.json", cert_to_json(cert));
        log.add("lower_solution_certificate", cert.pass,
                "min_residual=" + fmt_g(cert.min_residual) + " tol=" + fmt_g(cert.tol_cert));
        metrics["cert_min_residual"] = cert.min_residual;
    }

    if (name == "profile-only") {
        // nothing further: the profile and its certificate are the artifact
    } else if (name == "thm1.2" || name == "rate" || name == "thm1.3") {
        BuiltProblem bp;
        const SimResult res = run_pde_stage(rs, out, opts, 0, "", &bp);
        const bool blew = res.status == SimStatus::Blowup;
        log.add("pde_run", blew, std::string("status=") + to_string(res.status) +
                                     " t_end=" + fmt_g(res.t_end) + " sup_end=" + fmt_g(res.sup_end));
        if (blew) {
            metrics["t_star_hat"] = res.t_star_hat;
            metrics["ci"] = res.ci;
        }
        if (bp.monitors.positivity)
            log.add("positivity", res.positivity_ok, "min_u=" + fmt_g(res.min_u));

        if (name == "thm1.2") {
            const double bound = -rs.scenario.initial.ls_t0 * kBlowupSlack;
            log.add("blowup_bound", blew && res.t_star_hat <= bound,
                    "t_star_hat=" + fmt_g(res.t_star_hat) + " bound=" + fmt_g(bound));
            log.add("comparison_monitor", res.comparison_ok,
                    "min(u - usub)=" + fmt_g(res.min_comparison) + " tol_cmp=" + fmt_g(bp.tol_cmp));
            metrics["min_comparison"] = res.min_comparison;
        }
        if (name == "thm1.2" || name == "rate") {
            const double target = -1.0 / (rs.scenario.p - 1.0);
            const bool fit_ok = res.rate_fit && res.rate_fit->ok;
            const double slope = fit_ok ? res.rate_fit->exponent : 0.0;
            const bool in_band = fit_ok && std::fabs(slope - target) <= kRateTolerance * std::fabs(target);
            log.add("blowup_rate", in_band,
                    fit_ok ? "slope=" + fmt_g(slope) + " target=" + fmt_g(target)
                           : "rate fit refused: " + (res.rate_fit ? res.rate_fit->reason : "missing"));
            if (fit_ok) metrics["rate_exponent"] = slope;
        }
        if (name == "thm1.3") {
            const auto loc = locate_blowup_points(res, bp.absorption_zeros, bp.field.geom.h);
            log.add("localization", loc.pass,
                    loc.converged ? "argmax=" + fmt_g(loc.argmax_x) + " nearest_zero=" +
                                        fmt_g(loc.nearest_zero) + " cells=" + fmt_g(loc.distance_cells)
                                  : loc.reason);
            if (loc.converged) metrics["localization_cells"] = loc.distance_cells;

            // Neumann-case coefficient condition (boundary: da/dn <= 0 or
            // a = 0). Violating scenarios run anyway; the flag is advisory.
            if (rs.scenario.geometry.bc == "neumann" && bp.reaction.a.size() >= 3) {
                const auto& a = bp.reaction.a;
                const double hgrid = bp.field.geom.h;
                const std::size_t last = a.size() - 1;
                const double amax = *std::max_element(a.begin(), a.end());
                const double tol = 1e-6 * (1.0 + amax);
                // second-order one-sided outward-normal derivatives
                const double dn_left = (3.0 * a[0] - 4.0 * a[1] + a[2]) / (2.0 * hgrid);
                const double dn_right = (3.0 * a[last] - 4.0 * a[last - 1] + a[last - 2]) / (2.0 * hgrid);
                const bool left_ok = a[0] <= tol || dn_left <= tol;
                const bool right_ok = a[last] <= tol || dn_right <= tol;
                metrics["neumann_coefficient_condition"] =
                    left_ok && right_ok ? "satisfied" : "violated";
                log.add("neumann_coefficient_condition", true,
                        left_ok && right_ok
                            ? "da/dn <= 0 or a = 0 on the boundary"
                            : "violated (advisory): localization is outside the certified range");
            }
        }
    } else if (name == "dib") {
        // kinetic side: Prop 4.2 hypotheses + all-BOUNDED sweep
        const KineticSpec ks = kinetic_spec(rs);
        const KineticControls kc = kinetic_controls(rs, opts.jobs);
        const auto sweep = sweep_boundedness(rs.scenario.sweep.xi_min, rs.scenario.sweep.xi_max,
                                             rs.scenario.sweep.xi_steps, rs.scenario.sweep.eta_min,
                                             rs.scenario.sweep.eta_max, rs.scenario.sweep.eta_steps,
                                             ks, kc);
        write_sweep_csv((out / "sweep.csv").string(), sweep, rs.digest);
        log.add("kinetics_hypotheses", sweep.certified,
                sweep.certified ? "q>p, q>1, sigma>=0, f(x0,m)!=0" : sweep.hyp_note);
        log.add("kinetics_all_bounded", sweep.all_bounded,
                "cells=" + std::to_string(sweep.cells.size()));
        double sup_u_max = 0.0;
        for (const auto& c : sweep.cells) sup_u_max = std::fmax(sup_u_max, c.sup_u);
        metrics["kinetics_sup_u"] = sup_u_max;

        // PDE side: matched parameters must blow up
        const SimResult res = run_pde_stage(rs, out, opts, 0, "", nullptr);
        const bool blew = res.status == SimStatus::Blowup;
        log.add("pde_run", blew, std::string("status=") + to_string(res.status));
        log.add("pde_t_star", blew && res.t_star_hat < kDibTstarBound,
                blew ? "t_star_hat=" + fmt_g(res.t_star_hat) : "no blowup");
        if (blew) metrics["t_star_hat"] = res.t_star_hat;
    }

    ExperimentResult result;
    result.name = name;
    result.digest = rs.digest;
    result.stages = log.stages;
    result.pass = log.all_ok;

    json verdict;
    verdict["experiment"] = name;
    verdict["scenario"] = rs.scenario.name;
    verdict["scenario_digest"] = rs.digest;
    verdict["pass"] = result.pass;
    verdict["stages"] = stages_json(log);
    verdict["metrics"] = metrics;
    write_text(out / "verdict.json", verdict.dump(1) + "\n");

    const auto t_wall1 = std::chrono::steady_clock::now();
    json meta;
    meta["wall_seconds"] = std::chrono::duration<double>(t_wall1 - t_wall0).count();
    meta["finished_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    write_text(out / "run_meta.json", meta.dump(1) + "\n");

    return result;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream is(p);
    if (!is) return rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t c = line.find(',', start);
            if (c == std::string::npos) {
                row.push_back(line.substr(start));
                break;
            }
            row.push_back(line.substr(start, c - start));
            start = c + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int emit_plot_data(const std::string& bundle_dir, const std::string& out_dir) {
    const fs::path bundle(bundle_dir);
    const fs::path out(out_dir);
    fs::create_directories(out);

    json manifest;
    manifest["entries"] = json::array();
    auto add_entry = [&manifest](const std::string& file, const std::string& x,
                                 const std::string& y, const std::string& title) {
        manifest["entries"].push_back({{"file", file}, {"x", x}, {"y", y}, {"title", title}});
    };

    json summary;
    {
        std::ifstream is(bundle / "summary.json");
        if (is) is >> summary;
    }
    const auto series = read_csv(bundle / "series.csv");

    const bool blowup = summary.is_object() && summary.value("status", "") == "BLOWUP";
    if (!series.empty() && series.size() > 1 && blowup) {
        {
            std::ofstream os(out / "fig_supnorm.csv");
            os << "t,sup_u\n";
            for (std::size_t i = 1; i < series.size(); ++i)
                os << series[i][0] << ',' << series[i][1] << '\n';
            add_entry("fig_supnorm.csv", "t", "sup_u", "sup-norm growth");
        }
        {
            // log-log rate data with the fitted line
            const double t_star = summary.value("t_star_hat", 0.0);
            const double slope = summary["rate_exponent"].is_number()
                                     ? summary["rate_exponent"].get<double>()
                                     : 0.0;
            std::vector<double> lx, ly;
            double sup_max = 0.0;
            for (std::size_t i = 1; i < series.size(); ++i)
                sup_max = std::fmax(sup_max, std::stod(series[i][1]));
            for (std::size_t i = 1; i < series.size(); ++i) {
                const double t = std::stod(series[i][0]);
                const double sup = std::stod(series[i][1]);
                if (sup >= sup_max / 100.0 && t_star - t > 1e-300) {
                    lx.push_back(std::log(t_star - t));
                    ly.push_back(std::log(sup));
                }
            }
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < lx.size(); ++i) {
                mx += lx[i];
                my += ly[i];
            }
            if (!lx.empty()) {
                mx /= lx.size();
                my /= ly.size();
            }
            std::ofstream os(out / "fig_ratefit.csv");
            os << "log_tau,log_sup,fit\n";
            for (std::size_t i = 0; i < lx.size(); ++i)
                os << lx[i] << ',' << ly[i] << ',' << my + slope * (lx[i] - mx) << '\n';
            add_entry("fig_ratefit.csv", "log(t*-t)", "log sup_u", "blowup rate fit");
        }
        {
            std::ofstream os(out / "fig_argmax.csv");
            os << "t,argmax_x\n";
            for (std::size_t i = 1; i < series.size(); ++i)
                os << series[i][0] << ',' << series[i][2] << '\n';
            add_entry("fig_argmax.csv", "t", "argmax_x", "blowup point trace");
        }
    }

    const auto sweep = read_csv(bundle / "sweep.csv");
    if (sweep.size() > 1) {
        std::ofstream os(out / "fig_kinetics_heatmap.csv");
        os << "xi,eta,bounded,sup_u\n";
        for (std::size_t i = 1; i < sweep.size(); ++i)
            os << sweep[i][0] << ',' << sweep[i][1] << ','
               << (sweep[i][2] == "BOUNDED" ? 1 : 0) << ',' << sweep[i][3] << '\n';
        add_entry("fig_kinetics_heatmap.csv", "xi", "eta", "kinetics boundedness verdicts");
    }

    write_text(out / "manifest.json", manifest.dump(1) + "\n");
    return 0;
}

}  // namespace blowlab
