#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coagfrag/convolution.hpp"
#include "coagfrag/grid.hpp"
#include "coagfrag/kernels.hpp"

namespace coagfrag {

/// How the coagulation loss sum is truncated at level n.
///  conservative: loss over j <= n-i, so sum_i i*(Q_i+F_i) = 0 exactly and
///                mass is conserved for every n.
///  full_loss:    loss over j <= n; coagulation events past the cutoff remove
///                mass, so gelation shows up as actual mass loss.
enum class TruncationMode { conservative, full_loss };

const char* to_string(TruncationMode m);

/// Concentrations c_1..c_n on a spatial grid at one instant. Species-major
/// storage: species(i) is the contiguous field of size-i concentrations.
struct TruncatedState {
    int n = 0;
    Grid grid;
    double time = 0.0;
    std::vector<Field> fields;   // fields[i-1] holds c_i

    TruncatedState() = default;
    TruncatedState(int n_, const Grid& g);

    Field& species(int i) { return fields[std::size_t(i - 1)]; }
    const Field& species(int i) const { return fields[std::size_t(i - 1)]; }

    /// Gather c_1..c_n of one cell into buf (1-indexed, buf.size() >= n+1).
    void gather_cell(int cell, std::span<double> buf) const;
    void scatter_cell(int cell, std::span<const double> buf);
};

/// Linear interpolation between two states at the same grid/truncation.
TruncatedState lerp(const TruncatedState& a, const TruncatedState& b, double theta);

// Reference operations --------------------------------------------------------
// Naive double-loop evaluations in fixed summation order. These are the
// definitions the optimized evaluator is tested against, and they stay serial.

/// (1/2) sum_{j<i} a(i-j,j) c_{i-j} c_j per cell; zero field for i = 1.
Field coag_gain(const TruncatedState& s, const KernelSet& k, int i);
/// c_i * sum_{j<=J} a(i,j) c_j with J = n-i (conservative) or n (full_loss).
Field coag_loss(const TruncatedState& s, const KernelSet& k, int i, TruncationMode mode);
/// sum_{j<=n-i} B_{i+j} beta(i+j,i) c_{i+j} per cell.
Field frag_gain(const TruncatedState& s, const KernelSet& k, int i);
/// B_i c_i; zero for i = 1.
Field frag_loss(const TruncatedState& s, const KernelSet& k, int i);
/// Per species: coag_gain - coag_loss + frag_gain - frag_loss.
std::vector<Field> rhs(const TruncatedState& s, const KernelSet& k, TruncationMode mode);

/// Weak-form moment rate for weights phi_1..phi_n (conservative semantics):
/// (1/2) sum_{i+j<=n} a(i,j) c_i c_j (phi_{i+j}-phi_i-phi_j)
///   - sum_{i>=2} B_i c_i (phi_i - sum_{j<i} beta(i,j) phi_j).
/// Equals sum_i phi_i * rhs_i up to roundoff. phi is 1-indexed of size n+1.
/// Throws std::invalid_argument on length mismatch.
Field weak_moment_rate(const TruncatedState& s, const KernelSet& k, std::span<const double> phi);
/// Coagulation and fragmentation contributions separately (sum = total rate).
std::pair<Field, Field> weak_moment_rate_parts(const TruncatedState& s, const KernelSet& k,
                                               std::span<const double> phi);

/// All coagulation gains at once through two weighted discrete convolutions
/// (power-law kernels only), using an O(n log n) transform. Matches the
/// direct route to ~1e-10 on the scale of the largest gain.
std::vector<Field> coag_fast(const TruncatedState& s, const PowerLawCoagulation& k);

// Optimized evaluator ---------------------------------------------------------

/// Per-thread scratch for ReactionEvaluator::eval_cell.
struct ReactionWorkspace {
    std::vector<double> c, p, q, conv, prefix_a, prefix_b, suffix;
    std::unique_ptr<ConvolutionPlan> plan;
};

/// Evaluates the truncated reaction right-hand side for many cells. Chooses a
/// separable O(n log n) per-cell path for power-law kernels above a size
/// threshold, otherwise the direct loops. Parallelizes over cells; each
/// cell's output is written by exactly one thread in a fixed inner order, so
/// results are bit-identical for any thread count.
class ReactionEvaluator {
public:
    enum class Path { direct, fast, automatic };

    ReactionEvaluator(const KernelSet& ks, int n, TruncationMode mode,
                      Path path = Path::automatic);

    int n() const { return n_; }
    TruncationMode mode() const { return mode_; }
    bool uses_fast_path() const { return fast_; }
    const KernelCache& cache() const { return cache_; }

    /// dcdt[i] for one cell's concentrations c (both 1-indexed, size n+1).
    void eval_cell(std::span<const double> c, std::span<double> dcdt,
                   ReactionWorkspace& ws) const;

    /// Full-state evaluation (OpenMP over cells), fresh fields.
    std::vector<Field> eval_state(const TruncatedState& s) const;

    ReactionWorkspace make_workspace() const;

    /// Size threshold above which power-law kernels take the transform path
    /// (measured crossover of the two per-cell costs).
    static constexpr int fast_path_threshold = 192;

private:
    int n_;
    TruncationMode mode_;
    KernelCache cache_;
    bool fast_;

    void eval_cell_direct(std::span<const double> c, std::span<double> dcdt) const;
    void eval_cell_fast(std::span<const double> c, std::span<double> dcdt,
                        ReactionWorkspace& ws) const;
};

}
