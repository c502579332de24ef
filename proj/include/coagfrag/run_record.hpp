#pragma once

#include <cstdint>
#include <vector>

#include "coagfrag/grid.hpp"
#include "coagfrag/reaction.hpp"

namespace coagfrag {

/// Time series of spatial integrals recorded at the scheduled sample times.
struct MomentSeries {
    std::vector<double> orders;                 // requested moment orders k
    std::vector<double> times;
    std::vector<double> step_dt;                // outer step covering the sample
    std::vector<std::vector<double>> values;    // values[order_idx][time_idx] = int rho_k
    std::vector<double> total_mass;             // int rho_1
    std::vector<double> gel_fraction;           // 1 - mass(t)/mass(0)
    std::vector<double> tail_fraction;          // int sum_{i>n/2} i c_i / mass(t)
    std::vector<double> m1_min, m1_max;
    std::vector<double> min_concentration;
    std::vector<double> clamped_mass_cum;
    std::vector<double> c1_integral;            // int c_1 (audit support)
    std::vector<std::vector<double>> mass_lp;   // int rho_1^p per requested exponent
    std::vector<double> mass_lp_exponents;

    std::size_t size() const { return times.size(); }
    int order_index(double k) const;            // -1 if not recorded
};

/// Spatial integral of the coagulation moment products appearing on the
/// right-hand side of the order-l dissipation inequality:
/// int_Omega (rho_{alpha+l-1} rho_{beta+1} + rho_{alpha+1} rho_{beta+l-1}).
struct DissipationSeries {
    double l = 2.0;
    double alpha = 0.0, beta = 0.0;   // exponents the products were recorded with
    std::vector<double> coag_product;
};

struct StepStats {
    long long outer_steps = 0;
    long long accepted = 0;
    long long rejected = 0;
    double clamped_mass = 0.0;    // size-weighted, integrated over the domain
    double min_dt = 0.0;          // smallest accepted inner step
};

/// Everything a finished run exposes to diagnostics and file writers.
struct RunResult {
    int n = 0;
    TruncationMode mode = TruncationMode::conservative;
    Grid grid;
    std::vector<double> diffusion;   // d_i, 1-indexed (size n+1)
    double initial_mass = 0.0;
    MomentSeries series;
    std::vector<DissipationSeries> dissipation;
    std::vector<std::pair<double, TruncatedState>> snapshots;
    std::vector<TruncatedState> sampled_states;   // filled when record_states
    StepStats stats;
};

}
