#include "coagfrag/reaction.hpp"

#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coagfrag {

const char* to_string(TruncationMode m) {
    return m == TruncationMode::conservative ? "conservative" : "full_loss";
}

TruncatedState::TruncatedState(int n_, const Grid& g)
    : n(n_), grid(g), fields(std::size_t(n_), Field(g)) {}

void TruncatedState::gather_cell(int cell, std::span<double> buf) const {
    buf[0] = 0.0;
    for (int i = 1; i <= n; ++i) buf[std::size_t(i)] = fields[std::size_t(i - 1)].v[std::size_t(cell)];
}

void TruncatedState::scatter_cell(int cell, std::span<const double> buf) {
    for (int i = 1; i <= n; ++i) fields[std::size_t(i - 1)].v[std::size_t(cell)] = buf[std::size_t(i)];
}

TruncatedState lerp(const TruncatedState& a, const TruncatedState& b, double theta) {
    TruncatedState out = a;
    out.time = (1.0 - theta) * a.time + theta * b.time;
    for (int i = 0; i < a.n; ++i) {
        const auto& av = a.fields[std::size_t(i)].v;
        const auto& bv = b.fields[std::size_t(i)].v;
        auto& ov = out.fields[std::size_t(i)].v;
        for (std::size_t c = 0; c < av.size(); ++c) ov[c] = (1.0 - theta) * av[c] + theta * bv[c];
    }
    return out;
}

// Reference operations --------------------------------------------------------

Field coag_gain(const TruncatedState& s, const KernelSet& k, int i) {
    KernelCache cache(k, s.n);
    Field out(s.grid);
    if (i < 2) return out;
    const int cells = s.grid.cell_count();
    for (int cell = 0; cell < cells; ++cell) {
        double g = 0.0;
        for (int j = 1; j < i; ++j)
            g += cache.a(i - j, j) * s.species(i - j)[std::size_t(cell)] * s.species(j)[std::size_t(cell)];
        out[std::size_t(cell)] = 0.5 * g;
    }
    return out;
}

Field coag_loss(const TruncatedState& s, const KernelSet& k, int i, TruncationMode mode) {
    KernelCache cache(k, s.n);
    Field out(s.grid);
    const int J = (mode == TruncationMode::conservative) ? s.n - i : s.n;
    const int cells = s.grid.cell_count();
    for (int cell = 0; cell < cells; ++cell) {
        double sum = 0.0;
        for (int j = 1; j <= J; ++j) sum += cache.a(i, j) * s.species(j)[std::size_t(cell)];
        out[std::size_t(cell)] = s.species(i)[std::size_t(cell)] * sum;
    }
    return out;
}

Field frag_gain(const TruncatedState& s, const KernelSet& k, int i) {
    KernelCache cache(k, s.n);
    Field out(s.grid);
    const int cells = s.grid.cell_count();
    for (int cell = 0; cell < cells; ++cell) {
        double g = 0.0;
        for (int j = 1; j <= s.n - i; ++j)
            g += cache.frag(i + j) * cache.beta(i + j, i) * s.species(i + j)[std::size_t(cell)];
        out[std::size_t(cell)] = g;
    }
    return out;
}

Field frag_loss(const TruncatedState& s, const KernelSet& k, int i) {
    KernelCache cache(k, s.n);
    Field out(s.grid);
    const double B = cache.frag(i);
    for (std::size_t cell = 0; cell < out.size(); ++cell)
        out[cell] = B * s.species(i)[cell];
    return out;
}

std::vector<Field> rhs(const TruncatedState& s, const KernelSet& k, TruncationMode mode) {
    ReactionEvaluator eval(k, s.n, mode, ReactionEvaluator::Path::direct);
    return eval.eval_state(s);
}

std::pair<Field, Field> weak_moment_rate_parts(const TruncatedState& s, const KernelSet& k,
                                               std::span<const double> phi) {
    if (int(phi.size()) != s.n + 1)
        throw std::invalid_argument("weak_moment_rate: phi must have n+1 entries (1-indexed)");
    KernelCache cache(k, s.n);
    Field coag(s.grid), frag(s.grid);
    const int cells = s.grid.cell_count();
    std::vector<double> c(std::size_t(s.n) + 1);
    // Per-size daughter weight sums are state independent.
    std::vector<double> beta_phi(std::size_t(s.n) + 1, 0.0);
    for (int i = 2; i <= s.n; ++i) {
        double bp = 0.0;
        for (int j = 1; j < i; ++j) bp += cache.beta(i, j) * phi[std::size_t(j)];
        beta_phi[std::size_t(i)] = bp;
    }
    for (int cell = 0; cell < cells; ++cell) {
        s.gather_cell(cell, c);
        double qc = 0.0;
        for (int i = 1; i <= s.n; ++i) {
            const double ci = c[std::size_t(i)];
            if (ci == 0.0) continue;
            for (int j = 1; j <= s.n - i; ++j)
                qc += cache.a(i, j) * ci * c[std::size_t(j)] *
                      (phi[std::size_t(i + j)] - phi[std::size_t(i)] - phi[std::size_t(j)]);
        }
        double qf = 0.0;
        for (int i = 2; i <= s.n; ++i)
            qf += cache.frag(i) * c[std::size_t(i)] * (phi[std::size_t(i)] - beta_phi[std::size_t(i)]);
        coag[std::size_t(cell)] = 0.5 * qc;
        frag[std::size_t(cell)] = -qf;
    }
    return {std::move(coag), std::move(frag)};
}

Field weak_moment_rate(const TruncatedState& s, const KernelSet& k, std::span<const double> phi) {
    auto [coag, frag] = weak_moment_rate_parts(s, k, phi);
    for (std::size_t i = 0; i < coag.size(); ++i) coag[i] += frag[i];
    return std::move(coag);
}

std::vector<Field> coag_fast(const TruncatedState& s, const PowerLawCoagulation& k) {
    const int n = s.n;
    ConvolutionPlan plan(n);
    std::vector<double> pa(std::size_t(n) + 1), pb(std::size_t(n) + 1);
    for (int i = 1; i <= n; ++i) {
        pa[std::size_t(i)] = std::pow(double(i), k.alpha);
        pb[std::size_t(i)] = std::pow(double(i), k.beta);
    }
    std::vector<Field> gains(std::size_t(n), Field(s.grid));
    std::vector<double> c(std::size_t(n) + 1), p(std::size_t(n) + 1), q(std::size_t(n) + 1),
        conv(std::size_t(n) + 1);
    const int cells = s.grid.cell_count();
    for (int cell = 0; cell < cells; ++cell) {
        s.gather_cell(cell, c);
        for (int i = 1; i <= n; ++i) {
            p[std::size_t(i)] = pa[std::size_t(i)] * c[std::size_t(i)];
            q[std::size_t(i)] = pb[std::size_t(i)] * c[std::size_t(i)];
        }
        // sum_{j<i} a(i-j,j) c_{i-j} c_j = 2 * scale * (p * q)_i by symmetry.
        plan.convolve_truncated(p.data(), q.data(), conv.data());
        for (int i = 1; i <= n; ++i)
            gains[std::size_t(i - 1)][std::size_t(cell)] = k.scale * conv[std::size_t(i)];
    }
    return gains;
}

// Optimized evaluator ---------------------------------------------------------

ReactionEvaluator::ReactionEvaluator(const KernelSet& ks, int n, TruncationMode mode, Path path)
    : n_(n), mode_(mode), cache_(ks, n) {
    switch (path) {
        case Path::direct: fast_ = false; break;
        case Path::fast:
            if (!cache_.separable_coag())
                throw std::invalid_argument("ReactionEvaluator: fast path needs power-law coagulation");
            fast_ = true;
            break;
        case Path::automatic:
        default:
            fast_ = cache_.separable_coag() && n >= fast_path_threshold;
            break;
    }
}

ReactionWorkspace ReactionEvaluator::make_workspace() const {
    ReactionWorkspace ws;
    const std::size_t m = std::size_t(n_) + 1;
    ws.c.assign(m, 0.0);
    if (fast_) {
        ws.p.assign(m, 0.0);
        ws.q.assign(m, 0.0);
        ws.conv.assign(m, 0.0);
        ws.prefix_a.assign(m, 0.0);
        ws.prefix_b.assign(m, 0.0);
        ws.suffix.assign(m + 1, 0.0);
        ws.plan = std::make_unique<ConvolutionPlan>(n_);
    }
    return ws;
}

void ReactionEvaluator::eval_cell_direct(std::span<const double> c, std::span<double> dcdt) const {
    const int n = n_;
    for (int i = 1; i <= n; ++i) {
        double gain = 0.0;
        for (int j = 1; j < i; ++j) gain += cache_.a(i - j, j) * c[std::size_t(i - j)] * c[std::size_t(j)];
        const int J = (mode_ == TruncationMode::conservative) ? n - i : n;
        double loss = 0.0;
        for (int j = 1; j <= J; ++j) loss += cache_.a(i, j) * c[std::size_t(j)];
        double fgain = 0.0;
        for (int j = 1; j <= n - i; ++j)
            fgain += cache_.frag(i + j) * cache_.beta(i + j, i) * c[std::size_t(i + j)];
        dcdt[std::size_t(i)] = 0.5 * gain - c[std::size_t(i)] * loss + fgain -
                               cache_.frag(i) * c[std::size_t(i)];
    }
}

void ReactionEvaluator::eval_cell_fast(std::span<const double> c, std::span<double> dcdt,
                                       ReactionWorkspace& ws) const {
    const int n = n_;
    const double scale = cache_.coag_scale();
    const auto& pa = cache_.pow_alpha();
    const auto& pb = cache_.pow_beta();
    for (int i = 1; i <= n; ++i) {
        ws.p[std::size_t(i)] = pa[std::size_t(i)] * c[std::size_t(i)];
        ws.q[std::size_t(i)] = pb[std::size_t(i)] * c[std::size_t(i)];
    }
    ws.plan->convolve_truncated(ws.p.data(), ws.q.data(), ws.conv.data());
    double sa = 0.0, sb = 0.0;
    for (int j = 1; j <= n; ++j) {
        sa += ws.p[std::size_t(j)];
        sb += ws.q[std::size_t(j)];
        ws.prefix_a[std::size_t(j)] = sa;
        ws.prefix_b[std::size_t(j)] = sb;
    }
    const bool sep_frag = cache_.separable_daughters();
    if (sep_frag) {
        // suffix[i] = sum_{m>i} B_m (m/S_m) c_m; frag gain_i = i^nu * suffix[i].
        const auto& w = cache_.wnorm();
        const auto& B = cache_.frag_rates();
        ws.suffix[std::size_t(n)] = 0.0;
        for (int m = n; m >= 2; --m)
            ws.suffix[std::size_t(m - 1)] = ws.suffix[std::size_t(m)] + B[std::size_t(m)] * w[std::size_t(m)] * c[std::size_t(m)];
    }
    const auto& jnu = cache_.jnu();
    for (int i = 1; i <= n; ++i) {
        const double gain = scale * ws.conv[std::size_t(i)];
        const int J = (mode_ == TruncationMode::conservative) ? n - i : n;
        double loss = 0.0;
        if (J > 0)
            loss = c[std::size_t(i)] * scale *
                   (pa[std::size_t(i)] * ws.prefix_b[std::size_t(J)] + pb[std::size_t(i)] * ws.prefix_a[std::size_t(J)]);
        double fgain;
        if (sep_frag) {
            fgain = jnu[std::size_t(i)] * ws.suffix[std::size_t(i)];
        } else {
            fgain = 0.0;
            for (int j = 1; j <= n - i; ++j)
                fgain += cache_.frag(i + j) * cache_.beta(i + j, i) * c[std::size_t(i + j)];
        }
        dcdt[std::size_t(i)] = gain - loss + fgain - cache_.frag(i) * c[std::size_t(i)];
    }
}

void ReactionEvaluator::eval_cell(std::span<const double> c, std::span<double> dcdt,
                                  ReactionWorkspace& ws) const {
    if (fast_)
        eval_cell_fast(c, dcdt, ws);
    else
        eval_cell_direct(c, dcdt);
}

std::vector<Field> ReactionEvaluator::eval_state(const TruncatedState& s) const {
    if (s.n != n_) throw std::invalid_argument("ReactionEvaluator: state truncation mismatch");
    std::vector<Field> out(std::size_t(n_), Field(s.grid));
    const int cells = s.grid.cell_count();
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        ReactionWorkspace ws = make_workspace();
        std::vector<double> dcdt(std::size_t(n_) + 1);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int cell = 0; cell < cells; ++cell) {
            s.gather_cell(cell, ws.c);
            eval_cell(ws.c, dcdt, ws);
            for (int i = 1; i <= n_; ++i) out[std::size_t(i - 1)][std::size_t(cell)] = dcdt[std::size_t(i)];
        }
    }
    return out;
}

}
