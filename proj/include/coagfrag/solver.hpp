#pragma once

#include <span>
#include <stdexcept>

#include "coagfrag/run_record.hpp"
#include "coagfrag/scenario.hpp"

namespace coagfrag {

/// Raised when the adaptive reaction step shrinks below 1e-14 * T.
struct StiffnessFailure : std::runtime_error {
    double time = 0.0;
    double dt = 0.0;
    int cell = -1;
    int species = -1;   // component that drove the last rejection, if known
    StiffnessFailure(double t, double dt_, int cell_, int species_);
};

/// Adaptive Dormand-Prince 5(4) integration of the pure-reaction ODE, applied
/// cell by cell (cells are independent under reaction). Steps that would push
/// any component below -atol_neg are rejected and retried with halved dt;
/// surviving negatives in (-atol_neg, 0) are clamped to zero and the removed
/// mass is logged. Explicit one-step methods preserve linear invariants, so
/// conservative-mode mass per cell is conserved to roundoff.
class ReactionStepper {
public:
    struct CellStats {
        long long accepted = 0, rejected = 0;
        double clamped = 0.0;          // sum of i * |clamped value|, per volume
        double min_dt = 0.0;
    };

    ReactionStepper(const KernelSet& ks, int n, TruncationMode mode, StepperConfig cfg,
                    double total_time, ReactionEvaluator::Path path = ReactionEvaluator::Path::automatic);

    const ReactionEvaluator& evaluator() const { return eval_; }

    /// Advance one cell's concentrations (1-indexed span of size n+1) by
    /// dt_total. dt_hint carries the adaptive step across calls.
    void advance_cell(std::span<double> c, double dt_total, double& dt_hint,
                      CellStats& stats, ReactionWorkspace& ws, int cell_index = -1) const;

    /// Advance a full state (OpenMP over cells). hints has one entry per cell.
    void advance_state(TruncatedState& s, double dt_total, std::vector<double>& hints,
                       StepStats& stats) const;

private:
    ReactionEvaluator eval_;
    StepperConfig cfg_;
    double dt_floor_;
};

/// Spec-level one-shot reaction step (fresh state, default hint).
TruncatedState reaction_step(const TruncatedState& s, const KernelSet& k, TruncationMode mode,
                             double dt, const StepperConfig& cfg = {});

/// One Strang splitting step: half diffusion (all species), full reaction,
/// half diffusion. Mass is conserved in conservative mode and nonnegativity
/// is preserved up to the clamping policy.
TruncatedState step(const TruncatedState& s, const KernelSet& k, std::span<const double> d,
                    TruncationMode mode, double dt, const StepperConfig& cfg = {});

/// Integrate a scenario to its final time, recording moments at the sample
/// times (post-step states, linear interpolation in t between adjacent
/// accepted outer steps) and snapshots at the requested times. Deterministic:
/// fixed reduction orders, no dependence on thread count.
RunResult run_scenario(const ScenarioConfig& cfg);

}
