#pragma once

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

#include "coagfrag/audit.hpp"

namespace coagfrag {

/// Coagulation rates a(i,j) = scale * (i^alpha j^beta + i^beta j^alpha),
/// symmetric and nonnegative for all cluster sizes i,j >= 1.
struct PowerLawCoagulation {
    double scale = 1.0;   // overall rate constant, >= 0
    double alpha = 0.0;   // in [0,1]
    double beta = 0.0;    // in [0,1]

    double rate(int i, int j) const;
};

/// Total fragmentation rates B_i = scale * i^gamma for i >= 2; clusters of
/// size 1 never fragment (B_1 = 0).
struct PowerLawFragmentation {
    double scale = 1.0;   // >= 0
    double gamma = 1.0;

    double rate(int i) const;
};

/// Mean fragment counts beta(i,j) = i * j^nu / sum_{k<i} k^(1+nu), defined
/// for i >= 2 and 1 <= j <= i-1. The normalization sum makes the family
/// conserve mass microscopically: sum_j j*beta(i,j) = i.
struct PowerLawDaughters {
    double nu = 0.0;      // > -2

    double fraction(int i, int j) const;
    /// sum_{k=1}^{i-1} k^(1+nu), accumulated left to right in double.
    double normalization(int i) const;
};

/// Explicit symmetric rate table, sizes 1..n.
struct CoagulationTable {
    int n = 0;
    std::vector<double> values;   // row-major n*n, values[(i-1)*n + (j-1)]

    double rate(int i, int j) const { return values[std::size_t(i - 1) * n + (j - 1)]; }
};

struct FragmentationTable {
    std::vector<double> values;   // values[i-1] = B_i, i = 1..n

    int n() const { return int(values.size()); }
    double rate(int i) const { return values[std::size_t(i - 1)]; }
};

/// Explicit daughter table; row i (i = 2..n) holds beta(i,1..i-1).
struct DaughterTable {
    int n = 0;
    std::vector<std::vector<double>> rows;   // rows[i-2] has i-1 entries

    double fraction(int i, int j) const { return rows[std::size_t(i - 2)][std::size_t(j - 1)]; }
};

/// Largest size an explicit table is allowed to cover (O(n^2) storage).
inline constexpr int max_table_size = 4096;

/// Bundle of the three coefficient families, each either a power-law family
/// or an explicit table. Tables must pass validate(); power-law families
/// satisfy the structural constraints by construction.
class KernelSet {
public:
    using Coagulation = std::variant<PowerLawCoagulation, CoagulationTable>;
    using Fragmentation = std::variant<PowerLawFragmentation, FragmentationTable>;
    using Daughters = std::variant<PowerLawDaughters, DaughterTable>;

    Coagulation coagulation;
    Fragmentation fragmentation;
    Daughters daughters;

    KernelSet() = default;
    KernelSet(Coagulation c, Fragmentation f, Daughters d)
        : coagulation(std::move(c)), fragmentation(std::move(f)), daughters(std::move(d)) {}

    double coag(int i, int j) const;
    double frag(int i) const;
    double daughter(int i, int j) const;

    bool coag_is_power_law() const { return std::holds_alternative<PowerLawCoagulation>(coagulation); }
    bool daughters_are_power_law() const { return std::holds_alternative<PowerLawDaughters>(daughters); }
    const PowerLawCoagulation* coag_power_law() const { return std::get_if<PowerLawCoagulation>(&coagulation); }
    const PowerLawFragmentation* frag_power_law() const { return std::get_if<PowerLawFragmentation>(&fragmentation); }
    const PowerLawDaughters* daughters_power_law() const { return std::get_if<PowerLawDaughters>(&daughters); }

    /// Largest size every component can evaluate (INT_MAX for pure power laws).
    int size_limit() const;
};

/// Precomputed per-size coefficients for one truncation level; the hot-path
/// representation shared by the reaction evaluator, oracle and audits.
/// All arrays are 1-indexed by cluster size (entry 0 unused).
class KernelCache {
public:
    KernelCache(const KernelSet& ks, int n);

    int n() const { return n_; }
    const KernelSet& set() const { return *ks_; }

    double a(int i, int j) const {
        if (coag_table_) return coag_table_->rate(i, j);
        return coag_scale_ * (pow_alpha_[i] * pow_beta_[j] + pow_beta_[i] * pow_alpha_[j]);
    }
    double frag(int i) const { return B_[i]; }
    double beta(int i, int j) const {
        if (daughter_table_) return daughter_table_->fraction(i, j);
        return wnorm_[i] * jnu_[j];
    }

    bool separable_coag() const { return coag_table_ == nullptr; }
    bool separable_daughters() const { return daughter_table_ == nullptr; }
    double coag_scale() const { return coag_scale_; }
    const std::vector<double>& pow_alpha() const { return pow_alpha_; }
    const std::vector<double>& pow_beta() const { return pow_beta_; }
    const std::vector<double>& frag_rates() const { return B_; }
    /// beta(i,j) = wnorm[i] * jnu[j] when separable_daughters().
    const std::vector<double>& wnorm() const { return wnorm_; }
    const std::vector<double>& jnu() const { return jnu_; }

private:
    const KernelSet* ks_;
    int n_;
    double coag_scale_ = 0.0;
    const CoagulationTable* coag_table_ = nullptr;
    const DaughterTable* daughter_table_ = nullptr;
    std::vector<double> pow_alpha_, pow_beta_;   // i^alpha, i^beta
    std::vector<double> B_;                      // B_i
    std::vector<double> wnorm_, jnu_;            // i/S_i, j^nu
};

// Spec-level operations ------------------------------------------------------

double coag_rate(const PowerLawCoagulation& k, int i, int j);
double frag_rate(const PowerLawFragmentation& k, int i);
/// Throws std::domain_error outside i >= 2, 1 <= j <= i-1.
double daughter_fraction(const PowerLawDaughters& d, int i, int j);

/// Structural audit of a kernel set truncated at n: coagulation symmetry and
/// nonnegativity, B_1 = 0, B_i >= 0, daughter nonnegativity and the mass
/// normalization |sum_j j*beta(i,j) - i| <= 1e-12*i for 2 <= i <= n.
/// Failures are recorded in the report, never thrown.
AuditReport validate(const KernelSet& ks, int n);

/// Finite-range estimates of the suprema K_i^Q = sup_j a(i,j)/j and
/// K_i^F = sup_j B_{i+j} beta(i+j,i)/(i+j), both restricted to the sizes
/// representable below the truncation n (so they are lower estimates of the
/// true suprema; empty ranges give 0).
std::pair<double, double> sup_ratios(const KernelSet& ks, int i, int n);

/// Empirical superadditivity constant: max over 1 <= i,j <= i_max of
/// ((i+j)^l - i^l - j^l) / (i^(l-1) j + i j^(l-1)), for l > 1.
/// Equals 1 for l = 2 and 3 for l = 3 (algebraic identities).
double superadditivity_constant(double l, int i_max);

/// i^l - sum_{j<i} j^l beta(i,j) for the power-law daughter family; bounded
/// below by min(l-1,1) * i^(l-1) for every l > 1.
double frag_moment_deficit(const PowerLawDaughters& d, int i, double l);

}
