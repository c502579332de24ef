#include "coagfrag/duality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace coagfrag {

namespace {

// Cosine Neumann mode k evaluated at the cell centers of one axis.
void axis_mode(const Grid& g, int axis, int k, std::vector<double>& out) {
    const int m = g.cells(axis);
    out.resize(std::size_t(m));
    for (int c = 0; c < m; ++c) {
        const double x = (c + 0.5) * g.spacing(axis);
        out[std::size_t(c)] = std::cos(k * std::numbers::pi * x / g.length(axis));
    }
}

// f_s(x) = sum_k amp[s,k] * mode_k(x); 2D uses the same 1D modes along x.
std::vector<Field> subinterval_forcings(const MRProbe& probe, const ForcingCoeffs& fc) {
    const Grid& g = probe.grid;
    std::vector<std::vector<double>> modes(std::size_t(probe.modes));
    for (int k = 0; k < probe.modes; ++k) axis_mode(g, 0, k, modes[std::size_t(k)]);

    const int nx = g.cells(0);
    std::vector<Field> out(std::size_t(probe.subintervals), Field(g));
    for (int s = 0; s < probe.subintervals; ++s) {
        Field& f = out[std::size_t(s)];
        for (int k = 0; k < probe.modes; ++k) {
            const double a = fc.amp[std::size_t(s) * probe.modes + k];
            if (a == 0.0) continue;
            for (int c = 0; c < g.cell_count(); ++c)
                f[std::size_t(c)] += a * modes[std::size_t(k)][std::size_t(c % nx)];
        }
    }
    return out;
}

// Unfactored backward-Euler solve (I - dt*m*Lap) v = rhs for 2D probes:
// the ratio needs the exact per-step identity, which the ADI factorization
// would break. Conjugate gradient on the SPD M-matrix.
void solve_backward_euler_2d(const Grid& g, const Field& rhs, double coeff, Field& v) {
    const std::size_t nc = std::size_t(g.cell_count());
    Field r = rhs, p(g), ap(g);
    // initial guess: previous v
    {
        Field lv = laplacian(g, v);
        for (std::size_t i = 0; i < nc; ++i) r[i] = rhs[i] - (v[i] - coeff * lv[i]);
    }
    p = r;
    double rr = 0.0;
    for (std::size_t i = 0; i < nc; ++i) rr += r[i] * r[i];
    double rhs_norm = 0.0;
    for (std::size_t i = 0; i < nc; ++i) rhs_norm += rhs[i] * rhs[i];
    const double tol2 = 1e-26 * std::max(rhs_norm, 1e-300);
    for (int it = 0; it < 10000 && rr > tol2; ++it) {
        Field lp = laplacian(g, p);
        double pap = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            ap[i] = p[i] - coeff * lp[i];
            pap += p[i] * ap[i];
        }
        const double alpha = rr / pap;
        double rr_new = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            v[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            rr_new += r[i] * r[i];
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < nc; ++i) p[i] = r[i] + beta * p[i];
    }
}

}

ForcingCoeffs draw_forcing(const MRProbe& probe, std::uint64_t trial) {
    std::seed_seq seq{probe.seed, trial, std::uint64_t(0x9e3779b97f4a7c15ull)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    ForcingCoeffs fc;
    fc.modes = probe.modes;
    fc.subintervals = probe.subintervals;
    fc.amp.resize(std::size_t(probe.modes) * probe.subintervals);
    for (auto& a : fc.amp) a = uni(rng);
    return fc;
}

double heat_mr_ratio(const MRProbe& probe, const ForcingCoeffs& fc) {
    if (probe.steps < 1 || probe.subintervals < 1 || probe.modes < 1 ||
        probe.steps % probe.subintervals != 0)
        throw std::invalid_argument("heat_mr_ratio: steps must be a positive multiple of subintervals");
    if (!(probe.m > 0.0) || !(probe.q > 1.0) || !(probe.T > 0.0))
        throw std::invalid_argument("heat_mr_ratio: need m > 0, q > 1, T > 0");
    if (int(fc.amp.size()) != probe.modes * probe.subintervals)
        throw std::invalid_argument("heat_mr_ratio: coefficient shape mismatch");
    bool any = false;
    for (double a : fc.amp) any = any || (a != 0.0);
    if (!any) throw std::invalid_argument("heat_mr_ratio: forcing is identically zero");

    const Grid& g = probe.grid;
    const double dt = probe.T / probe.steps;
    const double q = probe.q;
    const std::vector<Field> forcing = subinterval_forcings(probe, fc);

    Field v(g), vnew(g);
    detail::DiffusionWorkspace ws;
    double num_dt = 0.0, num_lap = 0.0, den = 0.0;
    const std::size_t nc = std::size_t(g.cell_count());
    const int per = probe.steps / probe.subintervals;

    auto powq = [q](double x) { return (q == 2.0) ? x * x : std::pow(std::abs(x), q); };

    for (int step = 0; step < probe.steps; ++step) {
        const Field& f = forcing[std::size_t(step / per)];
        for (std::size_t i = 0; i < nc; ++i) vnew[i] = v[i] + dt * f[i];
        if (g.dim() == 1) {
            detail::diffuse_inplace(g, vnew.v, probe.m, dt, ws);
        } else {
            Field rhs = vnew;
            vnew = v;
            solve_backward_euler_2d(g, rhs, dt * probe.m, vnew);
        }
        const Field lap = laplacian(g, vnew);
        double sdt = 0.0, slap = 0.0, sf = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            sdt += powq((vnew[i] - v[i]) / dt);
            slap += powq(lap[i]);
            sf += powq(f[i]);
        }
        const double w = dt * g.cell_volume();
        num_dt += w * sdt;
        num_lap += w * slap;
        den += w * sf;
        v = vnew;
    }
    return std::pow((num_dt + std::pow(probe.m, q) * num_lap) / den, 1.0 / q);
}

double heat_mr_ratio(const MRProbe& probe) { return heat_mr_ratio(probe, draw_forcing(probe, 0)); }

KmqEstimate estimate_Kmq(double m, double q, int trials, std::uint64_t seed, const Grid& grid,
                         double T, int steps) {
    if (trials < 1) throw std::invalid_argument("estimate_Kmq: trials >= 1 required");
    MRProbe probe;
    probe.m = m;
    probe.q = q;
    probe.grid = grid;
    probe.T = T;
    probe.steps = steps;
    probe.seed = seed;

    KmqEstimate est;
    est.m = m;
    est.q = q;
    est.trials = trials;
    est.seed = seed;
    est.probes.resize(std::size_t(trials));
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int t = 0; t < trials; ++t)
        est.probes[std::size_t(t)] = heat_mr_ratio(probe, draw_forcing(probe, std::uint64_t(t)));
    est.estimate = 0.0;
    for (double r : est.probes) est.estimate = std::max(est.estimate, r);
    return est;
}

std::string KmqEstimate::to_json(int indent) const {
    nlohmann::json j;
    j["m"] = m;
    j["q"] = q;
    j["trials"] = trials;
    j["seed"] = seed;
    j["estimate"] = estimate;
    j["estimate_kind"] = "lower bound (max over sampled forcings)";
    j["probes"] = probes;
    return j.dump(indent);
}

ClosenessReport closeness_check(double a, double b, double p, double k_estimate) {
    if (!(a > 0.0) || !(b >= a) || !(p > 1.0))
        throw std::invalid_argument("closeness_check: need 0 < a <= b and p > 1");
    ClosenessReport r;
    r.a = a;
    r.b = b;
    r.p = p;
    r.p_conjugate = p / (p - 1.0);
    r.spread_factor = (b - a) / (b + a);
    r.k_estimate = k_estimate;
    r.product = r.spread_factor * k_estimate;
    r.margin = 1.0 - r.product;
    r.holds = r.product < 1.0;
    return r;
}

MassLpReport mass_lp_stability(std::span<const RunResult> runs, double p) {
    if (runs.size() < 2) throw std::invalid_argument("mass_lp_stability: need >= 2 refinement levels");
    MassLpReport rep;
    rep.p = p;
    for (const auto& run : runs) {
        int pi = -1;
        for (std::size_t i = 0; i < run.series.mass_lp_exponents.size(); ++i)
            if (std::abs(run.series.mass_lp_exponents[i] - p) < 1e-9) pi = int(i);
        if (pi < 0) throw std::invalid_argument("mass_lp_stability: exponent p not recorded");
        const auto& t = run.series.times;
        const auto& y = run.series.mass_lp[std::size_t(pi)];
        double acc = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k)
            acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
        rep.levels.push_back(run.n);
        rep.norms.push_back(std::pow(acc, 1.0 / p));
    }
    const double last = rep.norms.back(), prev = rep.norms[rep.norms.size() - 2];
    rep.last_rel_change = std::abs(last - prev) / std::max(prev, 1e-300);
    rep.stable = rep.last_rel_change < 0.05;
    return rep;
}

}
