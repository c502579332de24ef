#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coagfrag/grid.hpp"
#include "coagfrag/kernels.hpp"
#include "coagfrag/reaction.hpp"

namespace coagfrag {

/// Scenario file problem: `key` names the offending entry (e.g. "time.T").
struct ScenarioError : std::runtime_error {
    std::string key;
    ScenarioError(std::string k, const std::string& msg)
        : std::runtime_error(k + ": " + msg), key(std::move(k)) {}
};

struct DiffusionSpec {
    enum class Type { constant, convergent, explicit_list };
    Type type = Type::constant;
    double d = 1.0;                 // constant
    double d1 = 1.0, d_inf = 1.0;   // convergent: d_i = d_inf + (d1-d_inf)/i
    std::vector<double> values;     // explicit list (1-indexed by position+1)
    double tail = 1.0;              // value past the explicit list
};

/// Positive diffusion coefficients d_1..d_n (1-indexed, size n+1).
/// Throws ScenarioError on nonpositive entries.
std::vector<double> diffusion_coefficients(const DiffusionSpec& spec, int n);

struct InitialSpec {
    enum class Type { monodisperse, geometric, per_species };
    enum class Density { uniform, gaussian_bump };
    Type type = Type::monodisperse;
    Density density = Density::uniform;
    double mass = 1.0;                       // uniform density level
    double base = 0.0, amplitude = 1.0, sigma = 0.1;   // gaussian bump
    std::vector<double> center;              // bump center, defaults to midpoint
    std::vector<std::pair<int, double>> amounts;       // per_species: (i, c_i)
};

/// Error-control and step bounds for the time integrator.
struct StepperConfig {
    double rtol = 1e-8;
    double atol = 1e-12;
    double dt_init = 1e-4;
    double dt_max = 1.0 / 64.0;
    double safety = 0.9;
    double atol_neg_scale = 1e-13;   // atol_neg = scale * local rho_1
};

struct OutputSpec {
    std::vector<double> moment_orders{0.0, 1.0, 2.0};
    std::vector<double> sample_times;        // explicit times, or
    int sample_count = 0;                    // uniform 0..T when > 0
    std::vector<double> snapshot_times;
    std::vector<double> dissipation_orders;  // record product series for these l
    std::vector<double> mass_lp_exponents;   // record int rho_1^p for these p
    bool record_states = false;
};

/// Full declarative description of one experiment.
struct ScenarioConfig {
    Grid grid;
    int n = 2;
    TruncationMode mode = TruncationMode::conservative;
    KernelSet kernels;
    DiffusionSpec diffusion;
    InitialSpec initial;
    double T = 1.0;
    StepperConfig stepper;
    OutputSpec outputs;
    std::uint64_t seed = 0;
    std::string reaction_path = "auto";   // "auto" | "direct" | "fast"

    /// Sample times resolved against T (sorted, deduplicated, within [0,T]).
    std::vector<double> resolved_sample_times() const;
    TruncatedState initial_state() const;
};

/// Parse and validate a scenario from JSON text / file. Throws ScenarioError
/// with the offending key on any problem.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);

/// The configuration with every default filled in, as JSON text (stable key
/// order); recorded in run_meta.json.
std::string resolved_scenario_json(const ScenarioConfig& cfg);

}
