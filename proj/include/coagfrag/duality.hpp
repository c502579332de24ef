#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coagfrag/grid.hpp"
#include "coagfrag/run_record.hpp"

namespace coagfrag {

/// One maximal-regularity probe: solve dv/dt - m*Lap v = f with zero initial
/// data and Neumann walls, then compare (||dv/dt||_q^q + m^q ||Lap v||_q^q)^(1/q)
/// against ||f||_q. Forcings are band-limited: the lowest `modes` Neumann
/// cosine modes with piecewise-constant coefficients over `subintervals`.
struct MRProbe {
    double m = 1.0;
    double q = 2.0;
    Grid grid = Grid::interval(1.0, 256);
    double T = 1.0;
    int steps = 256;          // backward-Euler steps; multiple of subintervals
    int modes = 8;
    int subintervals = 16;
    std::uint64_t seed = 0;
};

struct ForcingCoeffs {
    int modes = 0, subintervals = 0;
    std::vector<double> amp;   // amp[s*modes + k] for sub-interval s, mode k
};

ForcingCoeffs draw_forcing(const MRProbe& probe, std::uint64_t trial);

/// Discrete maximal-regularity ratio for one forcing. The backward difference
/// and the solve's own stencil are used, so dv/dt - m*Lap v = f holds exactly
/// per step and the q=2 ratio never exceeds 1 (up to roundoff).
/// Throws std::invalid_argument on an identically zero forcing.
double heat_mr_ratio(const MRProbe& probe, const ForcingCoeffs& f);
double heat_mr_ratio(const MRProbe& probe);

struct KmqEstimate {
    double m = 1.0, q = 2.0;
    int trials = 0;
    std::uint64_t seed = 0;
    double estimate = 0.0;            // max over probes: a LOWER bound of K_{m,q}
    std::vector<double> probes;

    std::string to_json(int indent = 2) const;
};

/// Max of heat_mr_ratio over `trials` seeded random forcings. A supremum
/// cannot be certified from below-sampling, so this is a lower estimate.
KmqEstimate estimate_Kmq(double m, double q, int trials, std::uint64_t seed, const Grid& grid,
                         double T, int steps = 256);

/// The duality lemmas' closeness condition ((b-a)/(b+a)) * K_{(a+b)/2,p'} < 1
/// evaluated with an empirical estimate (advisory: the estimate is a lower
/// bound on the true constant). p' = p/(p-1).
struct ClosenessReport {
    double a = 0.0, b = 0.0, p = 2.0, p_conjugate = 2.0;
    double spread_factor = 0.0;   // (b-a)/(b+a)
    double k_estimate = 0.0;
    double product = 0.0;
    double margin = 0.0;          // 1 - product
    bool holds = false;
};
ClosenessReport closeness_check(double a, double b, double p, double k_estimate);

/// Uniform-in-n boundedness, observed: L^p(Omega_T) norm of rho_1 per
/// refinement level, requiring < 5% relative change between the last two.
struct MassLpReport {
    double p = 2.0;
    std::vector<int> levels;
    std::vector<double> norms;
    double last_rel_change = 0.0;
    bool stable = false;
};
MassLpReport mass_lp_stability(std::span<const RunResult> runs, double p);

}
