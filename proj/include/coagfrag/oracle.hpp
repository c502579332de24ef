#pragma once

#include <span>
#include <vector>

#include "coagfrag/kernels.hpp"
#include "coagfrag/reaction.hpp"

namespace coagfrag {

/// Spatially homogeneous concentrations, a single-cell reference state.
struct HomogeneousState {
    int n = 0;
    std::vector<double> c;   // 1-indexed, size n+1
    double time = 0.0;

    explicit HomogeneousState(int n_) : n(n_), c(std::size_t(n_) + 1, 0.0) {}
    static HomogeneousState monodisperse(int n, double mass = 1.0);

    double mass() const;
};

struct HomogeneousTrajectory {
    std::vector<double> times;
    std::vector<HomogeneousState> states;
};

/// High-accuracy reference integration of the pure-reaction ODE with a
/// Cash-Karp embedded 4(5) pair. Deliberately a separate implementation from
/// the solver's stepper (different coefficients, different stepping code) so
/// the two cannot self-validate. Throws StiffnessFailure like the solver.
HomogeneousTrajectory ode_reference(const KernelSet& k, TruncationMode mode,
                                    const HomogeneousState& initial, double T, double tol,
                                    std::span<const double> sample_times);

/// Classical closed form for the constant kernel a == 1 (power law with
/// scale 1/2, alpha = beta = 0) and monodisperse unit-mass data:
/// c_i(t) = (t/2)^(i-1) / (1 + t/2)^(i+1).
double constant_kernel_exact(int i, double t);

/// Independent double-loop evaluation of the weak moment rate; the oracle
/// for reaction::weak_moment_rate. phi is 1-indexed of size n+1.
double brute_force_weak_rate(const HomogeneousState& s, const KernelSet& k,
                             std::span<const double> phi);

}
