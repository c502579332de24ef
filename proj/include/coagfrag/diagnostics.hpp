#pragma once

#include <span>
#include <string>
#include <vector>

#include "coagfrag/audit.hpp"
#include "coagfrag/run_record.hpp"

namespace coagfrag {

/// Moment field rho_k = sum_i i^k c_i per cell. Non-integer orders use
/// exp(k log i); all sizes are >= 1, so rho_k is nondecreasing in k.
Field moment(const TruncatedState& s, double k);

/// (int_0^T int_Omega |f|^p)^(1/p), midpoint rule in space and trapezoid in
/// time. Needs at least two sample times.
double lp_spacetime_norm(const Grid& g, std::span<const double> times,
                         std::span<const Field> fields, double p);

/// Weighted diffusion average M_k = sum i^k d_i c_i / sum i^k c_i per cell;
/// cells with rho_k below 1e-300 report the neutral value d_1. Always lies
/// in [min d_i, max d_i] up to roundoff. d is 1-indexed of size n+1.
Field m_ratio(const TruncatedState& s, double k, std::span<const double> d);

/// Time-trapezoid of t^(m-1) * int rho_{k+m(gamma-1)}(t). Throws
/// std::invalid_argument when the needed order was not recorded.
double weighted_moment_integral(const RunResult& run, double k, double gamma, int m);

/// Gelation verdict from a refinement triple of runs (n, 2n, 4n).
struct GelReport {
    std::vector<int> levels;
    double threshold = 0.05;
    std::vector<double> times;
    std::vector<std::vector<double>> gel;    // per level, clamped to [0,1]
    std::vector<double> extrapolated;        // Aitken-extrapolated g(t)
    double gel_time = -1.0;                  // first t with extrapolated g > threshold
    double gel_time_uncertainty = 0.0;
    double final_mass_extrapolated = 0.0;
    std::string verdict;                     // "gelling" | "non-gelling" | "inconclusive"

    std::string to_json(int indent = 2) const;
};

/// Runs must share the scenario except for doubling truncation levels.
/// Verdict: gelling when g at the finest level exceeds the threshold at the
/// final time and the level differences shrink; non-gelling when it stays
/// below and g decreases in n (with 1e-12 absolute slack); else inconclusive.
GelReport gel_report(std::span<const RunResult> runs, double threshold = 0.05);

/// Audits d/dt int rho_l + C_F*C_{F,l} int rho_{gamma+l-1}
///   <= C_Q*C_{Q,l} int (rho_{alpha+l-1} rho_{beta+1} + rho_{alpha+1} rho_{beta+l-1})
///      + C_F*C_{F,l} int c_1
/// at every recorded sample time, with C_{F,l} = min(l-1,1) and C_{Q,l} from
/// superadditivity_constant. The time derivative uses centered differences
/// (one-sided at the ends) with tolerance 2*(dt)^2*|третья derivative estimate|.
AuditReport dissipation_audit(const RunResult& run, double l, double alpha, double beta,
                              double gamma, double coag_scale, double frag_scale);

/// Checks the four Holder interpolation bounds between rho_1 and
/// rho_{gamma+l-1} per cell, e.g.
/// rho_{alpha+1} <= rho_1^((gamma+l-alpha-2)/(gamma+l-2)) * rho_{gamma+l-1}^(alpha/(gamma+l-2)),
/// substituting rho_{alpha+l-1} <= rho_1 when alpha+l-1 < 1 (same for beta).
/// Requires l > 2-(gamma-alpha) and l > 2-(gamma-beta).
AuditReport interpolation_audit(const TruncatedState& s, double alpha, double beta,
                                double gamma, double l);

/// max(1, (1+C)^(1/theta)): any xi >= 0 with xi <= C + xi^(1-theta) is below it.
double bound_elem1(double C, double theta);

/// 2*(C2 + (2*C1)^(1/theta) * T^(m+1)/(m+1)!): bound on int_0^T t^m/m! f for
/// nonnegative f with int t^m/m! f <= C1 int t^m/m! f^(1-theta) + C2.
double bound_elem2(double C1, double C2, double theta, int m, double T);

/// Refinement distance between two conservative runs at n and 2n:
/// sup over sample times of |int rho_1^n - int rho_1^{2n}|, plus the tail
/// bound (1/i0^(k-1)) (||rho_k^{2n}||_L1 + ||rho_k^n||_L1) at i0 = n/2.
struct RefinementConvergence {
    double sup_mass_diff = 0.0;
    double tail_bound = 0.0;
    double total() const { return sup_mass_diff + tail_bound; }
};
RefinementConvergence refinement_convergence(const RunResult& coarse, const RunResult& fine,
                                             double k);

namespace detail {
/// Fixed-tolerance time-derivative estimate used by dissipation_audit.
struct DerivativeEstimate { double value; double tolerance; };
DerivativeEstimate series_derivative(std::span<const double> times, std::span<const double> y,
                                     std::size_t idx);
}

}
