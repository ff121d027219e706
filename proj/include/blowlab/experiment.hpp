#pragma once

#include <string>
#include <vector>

#include "blowlab/scenario.hpp"

namespace blowlab {

// CLI exit codes: 0 experiment PASS, 1 FAIL (hypotheses met, prediction not
// reproduced), 2 configuration error, 3 solver fault.
enum class ExperimentExit { Pass = 0, Fail = 1, ConfigError = 2, SolverFault = 3 };

struct StageResult {
    std::string stage;
    bool ok = false;
    std::string detail;
};

struct ExperimentResult {
    std::string name;
    std::string digest;
    bool pass = false;
    std::vector<StageResult> stages;
};

struct GlobalOptions {
    bool strict = false;
    int jobs = 0;
    double horizon_override = 0.0;  // 0: scenario value
};

// Known experiments: thm1.2 | thm1.3 | rate | dib | profile-only.
// Writes verdict.json (deterministic), run_meta.json (timing; segregated so
// verdicts stay byte-identical) and per-stage artifacts into out_dir.
ExperimentResult run_experiment(const std::string& name, const Scenario& scenario,
                                const std::string& out_dir, const GlobalOptions& opts);

// Emits plot-ready per-figure CSV files plus a manifest JSON naming each file
// and its axes, from a result bundle directory.
int emit_plot_data(const std::string& bundle_dir, const std::string& out_dir);

}  // namespace blowlab
