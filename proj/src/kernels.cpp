#include "coagfrag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coagfrag {

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

}

double PowerLawCoagulation::rate(int i, int j) const {
    const double x = double(i), y = double(j);
    return scale * (std::pow(x, alpha) * std::pow(y, beta) + std::pow(x, beta) * std::pow(y, alpha));
}

double PowerLawFragmentation::rate(int i) const {
    if (i <= 1) return 0.0;
    return scale * std::pow(double(i), gamma);
}

double PowerLawDaughters::normalization(int i) const {
    double s = 0.0;
    for (int k = 1; k < i; ++k) s += std::pow(double(k), 1.0 + nu);
    return s;
}

double PowerLawDaughters::fraction(int i, int j) const {
    if (i < 2 || j < 1 || j > i - 1)
        throw std::domain_error("daughter_fraction: need i >= 2 and 1 <= j <= i-1");
    return double(i) * std::pow(double(j), nu) / normalization(i);
}

double coag_rate(const PowerLawCoagulation& k, int i, int j) { return k.rate(i, j); }
double frag_rate(const PowerLawFragmentation& k, int i) { return k.rate(i); }
double daughter_fraction(const PowerLawDaughters& d, int i, int j) { return d.fraction(i, j); }

double KernelSet::coag(int i, int j) const {
    return std::visit([&](const auto& k) { return k.rate(i, j); }, coagulation);
}

double KernelSet::frag(int i) const {
    return std::visit([&](const auto& k) { return k.rate(i); }, fragmentation);
}

double KernelSet::daughter(int i, int j) const {
    return std::visit([&](const auto& k) { return k.fraction(i, j); }, daughters);
}

int KernelSet::size_limit() const {
    int limit = std::numeric_limits<int>::max();
    if (const auto* t = std::get_if<CoagulationTable>(&coagulation)) limit = std::min(limit, t->n);
    if (const auto* t = std::get_if<FragmentationTable>(&fragmentation)) limit = std::min(limit, t->n());
    if (const auto* t = std::get_if<DaughterTable>(&daughters)) limit = std::min(limit, t->n);
    return limit;
}

KernelCache::KernelCache(const KernelSet& ks, int n) : ks_(&ks), n_(n) {
    if (n < 1) throw std::invalid_argument("KernelCache: n >= 1 required");
    if (ks.size_limit() < n) throw std::invalid_argument("KernelCache: kernel tables smaller than n");

    B_.assign(std::size_t(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) B_[std::size_t(i)] = ks.frag(i);

    if (const auto* pl = ks.coag_power_law()) {
        coag_scale_ = pl->scale;
        pow_alpha_.assign(std::size_t(n) + 1, 0.0);
        pow_beta_.assign(std::size_t(n) + 1, 0.0);
        for (int i = 1; i <= n; ++i) {
            pow_alpha_[std::size_t(i)] = std::pow(double(i), pl->alpha);
            pow_beta_[std::size_t(i)] = std::pow(double(i), pl->beta);
        }
    } else {
        coag_table_ = std::get_if<CoagulationTable>(&ks.coagulation);
    }

    if (const auto* pd = ks.daughters_power_law()) {
        jnu_.assign(std::size_t(n) + 1, 0.0);
        wnorm_.assign(std::size_t(n) + 1, 0.0);
        for (int j = 1; j <= n; ++j) jnu_[std::size_t(j)] = std::pow(double(j), pd->nu);
        // S_i accumulated left to right; reusing the same partial sums keeps
        // the mass identity sum_j j*beta(i,j) = i at roundoff.
        double s = 0.0;
        for (int i = 2; i <= n; ++i) {
            s += std::pow(double(i - 1), 1.0 + pd->nu);
            wnorm_[std::size_t(i)] = double(i) / s;
        }
    } else {
        daughter_table_ = std::get_if<DaughterTable>(&ks.daughters);
    }
}

AuditReport validate(const KernelSet& ks, int n) {
    if (n < 2) throw std::invalid_argument("validate: n >= 2 required");
    AuditReport report;
    if (ks.size_limit() < n) {
        report.add("table_size", fmt("n=%g limit=%g", double(n), double(ks.size_limit())),
                   double(ks.size_limit() - n), false);
        return report;
    }
    KernelCache cache(ks, n);

    double worst_sym = 0.0, worst_nonneg = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = i; j <= n; ++j) {
            const double aij = cache.a(i, j), aji = cache.a(j, i);
            worst_sym = std::max(worst_sym, std::abs(aij - aji));
            worst_nonneg = std::min(worst_nonneg, std::min(aij, aji));
        }
    }
    report.add("coagulation_symmetry", fmt("n=%g", double(n)), -worst_sym, worst_sym == 0.0);
    report.add("coagulation_nonnegative", fmt("n=%g", double(n)), worst_nonneg, worst_nonneg >= 0.0);

    const double b1 = cache.frag(1);
    report.add("frag_B1_zero", "", -std::abs(b1), b1 == 0.0);
    double worst_b = 0.0;
    for (int i = 1; i <= n; ++i) worst_b = std::min(worst_b, cache.frag(i));
    report.add("frag_nonnegative", fmt("n=%g", double(n)), worst_b, worst_b >= 0.0);

    // Daughter normalization sum_{j<i} j*beta(i,j) = i, relative 1e-12.
    double worst_norm = 0.0, worst_beta = 0.0;
    for (int i = 2; i <= n; ++i) {
        double s = 0.0;
        for (int j = 1; j < i; ++j) {
            const double b = cache.beta(i, j);
            worst_beta = std::min(worst_beta, b);
            s += double(j) * b;
        }
        worst_norm = std::max(worst_norm, std::abs(s - double(i)) / double(i));
    }
    report.add("daughter_nonnegative", fmt("n=%g", double(n)), worst_beta, worst_beta >= 0.0);
    report.add("daughter_mass_normalization", fmt("n=%g tol=1e-12", double(n)),
               1e-12 - worst_norm, worst_norm <= 1e-12);
    return report;
}

std::pair<double, double> sup_ratios(const KernelSet& ks, int i, int n) {
    if (i < 1 || i > n) throw std::invalid_argument("sup_ratios: need 1 <= i <= n");
    KernelCache cache(ks, n);
    double kq = 0.0;
    for (int j = 1; j <= n; ++j) kq = std::max(kq, cache.a(i, j) / double(j));
    double kf = 0.0;
    for (int j = 1; j <= n - i; ++j)
        kf = std::max(kf, cache.frag(i + j) * cache.beta(i + j, i) / double(i + j));
    return {kq, kf};
}

double superadditivity_constant(double l, int i_max) {
    if (!(l > 1.0)) throw std::invalid_argument("superadditivity_constant: l > 1 required");
    if (i_max < 2) throw std::invalid_argument("superadditivity_constant: i_max >= 2 required");

    // Precomputed powers; the pair scan only does lookups.
    std::vector<double> pl(std::size_t(2 * i_max) + 1), plm1(std::size_t(i_max) + 1);
    for (int s = 1; s <= 2 * i_max; ++s) pl[std::size_t(s)] = std::pow(double(s), l);
    for (int s = 1; s <= i_max; ++s) plm1[std::size_t(s)] = std::pow(double(s), l - 1.0);

    double best = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(max : best)
#endif
    for (int i = 1; i <= i_max; ++i) {
        double row = 0.0;
        for (int j = i; j <= i_max; ++j) {   // symmetric in (i,j)
            const double num = pl[std::size_t(i + j)] - pl[std::size_t(i)] - pl[std::size_t(j)];
            const double den = plm1[std::size_t(i)] * double(j) + double(i) * plm1[std::size_t(j)];
            const double r = num / den;
            if (r > row) row = r;
        }
        if (row > best) best = row;
    }
    return best;
}

double frag_moment_deficit(const PowerLawDaughters& d, int i, double l) {
    if (i < 2) throw std::invalid_argument("frag_moment_deficit: i >= 2 required");
    if (!(l > 1.0)) throw std::invalid_argument("frag_moment_deficit: l > 1 required");
    double s = 0.0;
    for (int j = 1; j < i; ++j) s += std::pow(double(j), l) * std::pow(double(j), d.nu);
    return std::pow(double(i), l) - double(i) * s / d.normalization(i);
}

}
