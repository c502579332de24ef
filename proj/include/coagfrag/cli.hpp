#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace coagfrag {

// Exit codes shared by the command-line front end.
inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_validation = 2;
inline constexpr int exit_stiffness = 3;

/// Validate and run one scenario; writes moments.csv, profile_<t>.csv and
/// run_meta.json into out_dir.
int cmd_run(const std::string& scenario_path, const std::string& out_dir, int threads = 0);

/// Run the scenario at each truncation level (default n, 2n, 4n), writing
/// per-level outputs plus gel_report.json and stability.json.
int cmd_sweep(const std::string& scenario_path, const std::string& out_dir,
              std::vector<int> levels = {}, int threads = 0);

/// Kernel/structure audits, elementary-bound property sweeps, the oracle
/// closed-form comparison, and (when the scenario requests dissipation
/// orders) run-level dissipation and interpolation audits. Writes audit.json;
/// returns 0 iff everything passed. Accepts a scenario file or a directory
/// containing run_meta.json from a previous run.
int cmd_audit(const std::string& scenario_or_run_dir, const std::string& out_dir,
              int threads = 0);

struct DualityParams {
    double m = 1.0;
    double q = 2.0;
    int trials = 100;
    int cells = 256;
    double T = 1.0;
    int steps = 256;
    std::uint64_t seed = 0;
    // Optional closeness check of ((b-a)/(b+a)) K_{(a+b)/2,p'} < 1.
    bool check_closeness = false;
    double a = 1.0, b = 1.0, p = 2.0;
};

/// Maximal-regularity estimation; writes kmq.json.
int cmd_duality(const DualityParams& params, const std::string& out_dir, int threads = 0);

}
