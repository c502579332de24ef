#include "coagfrag/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>

#include "coagfrag/diagnostics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coagfrag {

namespace {

std::string stiffness_message(double t, double dt, int cell, int species) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "reaction step size underflow (dt=%.3e at t=%.6g, cell %d, species %d)", dt, t,
                  cell, species);
    return buf;
}

// Dormand-Prince 5(4) tableau. The propagated solution is 5th order; the
// error coefficients are b5 - b4.
namespace dp {
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}

struct StageBuffers {
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, y, ytmp;
    explicit StageBuffers(int n)
        : k1(std::size_t(n) + 1), k2(std::size_t(n) + 1), k3(std::size_t(n) + 1),
          k4(std::size_t(n) + 1), k5(std::size_t(n) + 1), k6(std::size_t(n) + 1),
          k7(std::size_t(n) + 1), y(std::size_t(n) + 1), ytmp(std::size_t(n) + 1) {}
};

}

StiffnessFailure::StiffnessFailure(double t, double dt_, int cell_, int species_)
    : std::runtime_error(stiffness_message(t, dt_, cell_, species_)), time(t), dt(dt_),
      cell(cell_), species(species_) {}

ReactionStepper::ReactionStepper(const KernelSet& ks, int n, TruncationMode mode,
                                 StepperConfig cfg, double total_time,
                                 ReactionEvaluator::Path path)
    : eval_(ks, n, mode, path), cfg_(cfg), dt_floor_(1e-14 * std::max(total_time, 1e-300)) {}

void ReactionStepper::advance_cell(std::span<double> c, double dt_total, double& dt_hint,
                                   CellStats& stats, ReactionWorkspace& ws, int cell_index) const {
    const int n = eval_.n();
    if (dt_total <= 0.0) return;

    StageBuffers buf(n);

    double local_mass = 0.0;
    for (int i = 1; i <= n; ++i) local_mass += double(i) * c[std::size_t(i)];
    const double atol_neg = cfg_.atol_neg_scale * std::max(local_mass, 0.0);

    double remaining = dt_total;
    double t_local = 0.0;
    double dt = std::clamp(dt_hint, dt_floor_, dt_total);

    eval_.eval_cell(c, buf.k1, ws);

    while (remaining > 0.0) {
        double h = std::min(dt, remaining);
        if (remaining - h <= 1e-12 * dt_total) h = remaining;

        auto stage = [&](const std::vector<double>& kin, double coeff) {
            for (int i = 1; i <= n; ++i)
                buf.ytmp[std::size_t(i)] += coeff * h * kin[std::size_t(i)];
        };
        for (int i = 1; i <= n; ++i) buf.ytmp[std::size_t(i)] = c[std::size_t(i)];
        stage(buf.k1, dp::a21);
        eval_.eval_cell(buf.ytmp, buf.k2, ws);

        for (int i = 1; i <= n; ++i) buf.ytmp[std::size_t(i)] = c[std::size_t(i)];
        stage(buf.k1, dp::a31);
        stage(buf.k2, dp::a32);
        eval_.eval_cell(buf.ytmp, buf.k3, ws);

        for (int i = 1; i <= n; ++i) buf.ytmp[std::size_t(i)] = c[std::size_t(i)];
        stage(buf.k1, dp::a41);
        stage(buf.k2, dp::a42);
        stage(buf.k3, dp::a43);
        eval_.eval_cell(buf.ytmp, buf.k4, ws);

        for (int i = 1; i <= n; ++i) buf.ytmp[std::size_t(i)] = c[std::size_t(i)];
        stage(buf.k1, dp::a51);
        stage(buf.k2, dp::a52);
        stage(buf.k3, dp::a53);
        stage(buf.k4, dp::a54);
        eval_.eval_cell(buf.ytmp, buf.k5, ws);

        for (int i = 1; i <= n; ++i) buf.ytmp[std::size_t(i)] = c[std::size_t(i)];
        stage(buf.k1, dp::a61);
        stage(buf.k2, dp::a62);
        stage(buf.k3, dp::a63);
        stage(buf.k4, dp::a64);
        stage(buf.k5, dp::a65);
        eval_.eval_cell(buf.ytmp, buf.k6, ws);

        for (int i = 1; i <= n; ++i)
            buf.y[std::size_t(i)] = c[std::size_t(i)] +
                                    h * (dp::b1 * buf.k1[std::size_t(i)] + dp::b3 * buf.k3[std::size_t(i)] +
                                         dp::b4 * buf.k4[std::size_t(i)] + dp::b5 * buf.k5[std::size_t(i)] +
                                         dp::b6 * buf.k6[std::size_t(i)]);
        eval_.eval_cell(buf.y, buf.k7, ws);

        // Negativity gate before the error test: overshoots below -atol_neg
        // are rejected outright and retried with half the step.
        int bad_species = -1;
        for (int i = 1; i <= n; ++i) {
            if (buf.y[std::size_t(i)] < -atol_neg) {
                bad_species = i;
                break;
            }
        }
        if (bad_species >= 0) {
            ++stats.rejected;
            dt = 0.5 * h;
            if (dt < dt_floor_) throw StiffnessFailure(t_local, dt, cell_index, bad_species);
            continue;
        }

        double err_sq = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double e = h * (dp::e1 * buf.k1[std::size_t(i)] + dp::e3 * buf.k3[std::size_t(i)] +
                                  dp::e4 * buf.k4[std::size_t(i)] + dp::e5 * buf.k5[std::size_t(i)] +
                                  dp::e6 * buf.k6[std::size_t(i)] + dp::e7 * buf.k7[std::size_t(i)]);
            const double sc = cfg_.atol + cfg_.rtol * std::max(std::abs(c[std::size_t(i)]),
                                                               std::abs(buf.y[std::size_t(i)]));
            const double r = e / sc;
            err_sq += r * r;
        }
        const double err = std::sqrt(err_sq / n);

        if (err <= 1.0) {
            bool clamped = false;
            for (int i = 1; i <= n; ++i) {
                double v = buf.y[std::size_t(i)];
                if (v < 0.0) {
                    stats.clamped += double(i) * (-v);
                    v = 0.0;
                    clamped = true;
                }
                c[std::size_t(i)] = v;
            }
            ++stats.accepted;
            if (stats.min_dt == 0.0 || h < stats.min_dt) stats.min_dt = h;
            t_local += h;
            remaining -= h;
            if (clamped) {
                eval_.eval_cell(c, buf.k1, ws);
            } else {
                buf.k1.swap(buf.k7);   // FSAL
            }
            const double factor = (err == 0.0)
                                      ? 5.0
                                      : std::clamp(cfg_.safety * std::pow(err, -0.2), 0.2, 5.0);
            dt = h * factor;
            if (remaining <= 0.0) break;
        } else {
            ++stats.rejected;
            const double factor = std::clamp(cfg_.safety * std::pow(err, -0.2), 0.1, 0.9);
            dt = h * factor;
            if (dt < dt_floor_) throw StiffnessFailure(t_local, dt, cell_index, -1);
        }
    }
    dt_hint = std::max(dt, dt_floor_);
}

void ReactionStepper::advance_state(TruncatedState& s, double dt_total, std::vector<double>& hints,
                                    StepStats& stats) const {
    const int cells = s.grid.cell_count();
    if (int(hints.size()) != cells) hints.assign(std::size_t(cells), cfg_.dt_init);
    std::vector<CellStats> per_cell(static_cast<std::size_t>(cells));

    // Each cell is advanced independently; any stiffness failure is kept and
    // rethrown after the parallel region.
    std::exception_ptr failure = nullptr;
    std::atomic<bool> failed{false};
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        ReactionWorkspace ws = eval_.make_workspace();
        std::vector<double> c(std::size_t(eval_.n()) + 1);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int cell = 0; cell < cells; ++cell) {
            if (failed.load(std::memory_order_relaxed)) continue;
            s.gather_cell(cell, c);
            try {
                advance_cell(c, dt_total, hints[std::size_t(cell)], per_cell[std::size_t(cell)], ws,
                             cell);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
                {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
                continue;
            }
            s.scatter_cell(cell, c);
        }
    }
    if (failure) std::rethrow_exception(failure);

    // Deterministic reduction in cell order.
    const double vol = s.grid.cell_volume();
    for (const auto& cs : per_cell) {
        stats.accepted += cs.accepted;
        stats.rejected += cs.rejected;
        stats.clamped_mass += cs.clamped * vol;
        if (cs.min_dt > 0.0 && (stats.min_dt == 0.0 || cs.min_dt < stats.min_dt))
            stats.min_dt = cs.min_dt;
    }
    s.time += dt_total;
}

TruncatedState reaction_step(const TruncatedState& s, const KernelSet& k, TruncationMode mode,
                             double dt, const StepperConfig& cfg) {
    if (!(dt > 0.0)) throw std::invalid_argument("reaction_step: dt > 0 required");
    ReactionStepper stepper(k, s.n, mode, cfg, dt);
    TruncatedState out = s;
    std::vector<double> hints;
    StepStats stats;
    stepper.advance_state(out, dt, hints, stats);
    return out;
}

TruncatedState step(const TruncatedState& s, const KernelSet& k, std::span<const double> d,
                    TruncationMode mode, double dt, const StepperConfig& cfg) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt > 0 required");
    if (int(d.size()) != s.n + 1) throw std::invalid_argument("step: d must be 1-indexed of size n+1");
    TruncatedState out = s;
    ReactionStepper stepper(k, s.n, mode, cfg, dt);
    std::vector<double> hints;
    StepStats stats;

    auto half_diffusion = [&](TruncatedState& st) {
#ifdef _OPENMP
#pragma omp parallel
#endif
        {
            detail::DiffusionWorkspace ws;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
            for (int i = 1; i <= st.n; ++i)
                detail::diffuse_inplace(st.grid, st.species(i).v, d[std::size_t(i)], 0.5 * dt, ws);
        }
    };
    half_diffusion(out);
    stepper.advance_state(out, dt, hints, stats);
    half_diffusion(out);
    out.time = s.time + dt;
    return out;
}

namespace {

/// Everything run_scenario records at one sample time.
struct Recorder {
    const ScenarioConfig* cfg;
    std::vector<double> orders;
    std::vector<double> d;
    double mass0 = 0.0;
    double alpha = 0.0, beta = 0.0;   // power-law coagulation exponents
    RunResult* out;

    void row(const TruncatedState& state, double t, double dt_outer, double clamped_cum) {
        MomentSeries& ms = out->series;
        ms.times.push_back(t);
        ms.step_dt.push_back(dt_outer);
        for (std::size_t oi = 0; oi < orders.size(); ++oi) {
            Field f = moment(state, orders[oi]);
            ms.values[oi].push_back(integrate(state.grid, f));
        }
        const double mass = integrate(state.grid, moment(state, 1.0));
        ms.total_mass.push_back(mass);
        ms.gel_fraction.push_back(mass0 > 0.0 ? 1.0 - mass / mass0 : 0.0);

        double tail = 0.0;
        {
            Field tf(state.grid);
            for (int i = state.n / 2 + 1; i <= state.n; ++i)
                for (std::size_t c = 0; c < tf.size(); ++c)
                    tf[c] += double(i) * state.species(i)[c];
            tail = integrate(state.grid, tf);
        }
        ms.tail_fraction.push_back(mass > 0.0 ? tail / mass : 0.0);

        Field m1 = m_ratio(state, 1.0, d);
        double m1min = m1[0], m1max = m1[0];
        for (double v : m1.v) {
            m1min = std::min(m1min, v);
            m1max = std::max(m1max, v);
        }
        ms.m1_min.push_back(m1min);
        ms.m1_max.push_back(m1max);

        double cmin = std::numeric_limits<double>::infinity();
        for (const auto& f : state.fields)
            for (double v : f.v) cmin = std::min(cmin, v);
        ms.min_concentration.push_back(cmin);
        ms.clamped_mass_cum.push_back(clamped_cum);
        ms.c1_integral.push_back(integrate(state.grid, state.species(1)));

        for (std::size_t pi = 0; pi < ms.mass_lp_exponents.size(); ++pi) {
            const double p = ms.mass_lp_exponents[pi];
            Field rho1 = moment(state, 1.0);
            double acc = 0.0;
            for (double v : rho1.v) acc += std::pow(v, p);
            ms.mass_lp[pi].push_back(state.grid.cell_volume() * acc);
        }

        for (std::size_t di = 0; di < out->dissipation.size(); ++di) {
            const double l = out->dissipation[di].l;
            Field fa = moment(state, alpha + l - 1.0);
            Field fb = moment(state, beta + 1.0);
            Field fc = moment(state, alpha + 1.0);
            Field fd = moment(state, beta + l - 1.0);
            double acc = 0.0;
            for (std::size_t c = 0; c < fa.size(); ++c) acc += fa[c] * fb[c] + fc[c] * fd[c];
            out->dissipation[di].coag_product.push_back(state.grid.cell_volume() * acc);
        }

        if (cfg->outputs.record_states) out->sampled_states.push_back(state);
    }
};

}

RunResult run_scenario(const ScenarioConfig& cfg) {
    RunResult out;
    out.n = cfg.n;
    out.mode = cfg.mode;
    out.grid = cfg.grid;
    out.diffusion = diffusion_coefficients(cfg.diffusion, cfg.n);

    TruncatedState state = cfg.initial_state();
    out.initial_mass = integrate(cfg.grid, moment(state, 1.0));

    // Resolve the recorded moment orders: the requested ones, the mass, and
    // whatever the requested dissipation audits will need.
    std::vector<double> orders = cfg.outputs.moment_orders;
    orders.push_back(1.0);
    double alpha = 0.0, beta = 0.0, gamma = 1.0;
    if (const auto* pc = cfg.kernels.coag_power_law()) {
        alpha = pc->alpha;
        beta = pc->beta;
    }
    if (const auto* pf = cfg.kernels.frag_power_law()) gamma = pf->gamma;
    for (double l : cfg.outputs.dissipation_orders) {
        orders.push_back(l);
        orders.push_back(gamma + l - 1.0);
    }
    std::sort(orders.begin(), orders.end());
    orders.erase(std::unique(orders.begin(), orders.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 orders.end());

    out.series.orders = orders;
    out.series.values.assign(orders.size(), {});
    out.series.mass_lp_exponents = cfg.outputs.mass_lp_exponents;
    out.series.mass_lp.assign(cfg.outputs.mass_lp_exponents.size(), {});
    for (double l : cfg.outputs.dissipation_orders) out.dissipation.push_back({l, alpha, beta, {}});

    Recorder rec{&cfg, orders, out.diffusion, out.initial_mass, alpha, beta, &out};

    const std::vector<double> samples = cfg.resolved_sample_times();
    std::vector<double> snaps = cfg.outputs.snapshot_times;
    std::sort(snaps.begin(), snaps.end());

    std::size_t next_sample = 0, next_snap = 0;
    auto emit_through = [&](const TruncatedState& prev, const TruncatedState& cur, double t0,
                            double t1, double dt_outer) {
        while (next_sample < samples.size() && samples[next_sample] <= t1 + 1e-15 * std::max(1.0, t1)) {
            const double ts = samples[next_sample];
            const double theta = (t1 > t0) ? std::clamp((ts - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
            const TruncatedState at = (theta >= 1.0) ? cur : lerp(prev, cur, theta);
            rec.row(at, ts, dt_outer, out.stats.clamped_mass);
            ++next_sample;
        }
        while (next_snap < snaps.size() && snaps[next_snap] <= t1 + 1e-15 * std::max(1.0, t1)) {
            const double ts = snaps[next_snap];
            const double theta = (t1 > t0) ? std::clamp((ts - t0) / (t1 - t0), 0.0, 1.0) : 1.0;
            out.snapshots.emplace_back(ts, (theta >= 1.0) ? cur : lerp(prev, cur, theta));
            ++next_snap;
        }
    };

    // t = 0 rows.
    emit_through(state, state, 0.0, 0.0, 0.0);

    if (cfg.T > 0.0) {
        ReactionEvaluator::Path path = ReactionEvaluator::Path::automatic;
        if (cfg.reaction_path == "direct") path = ReactionEvaluator::Path::direct;
        if (cfg.reaction_path == "fast") path = ReactionEvaluator::Path::fast;
        ReactionStepper stepper(cfg.kernels, cfg.n, cfg.mode, cfg.stepper, cfg.T, path);
        std::vector<double> hints(std::size_t(cfg.grid.cell_count()), cfg.stepper.dt_init);

        auto half_diffusion = [&](TruncatedState& st, double dt) {
#ifdef _OPENMP
#pragma omp parallel
#endif
            {
                detail::DiffusionWorkspace ws;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
                for (int i = 1; i <= st.n; ++i)
                    detail::diffuse_inplace(st.grid, st.species(i).v, out.diffusion[std::size_t(i)],
                                            0.5 * dt, ws);
            }
        };

        double t = 0.0;
        TruncatedState prev = state;
        while (t < cfg.T * (1.0 - 1e-15)) {
            double dt_out = std::min(cfg.stepper.dt_max, cfg.T - t);
            if (cfg.T - t - dt_out < 1e-12 * cfg.T) dt_out = cfg.T - t;
            prev = state;
            try {
                half_diffusion(state, dt_out);
                stepper.advance_state(state, dt_out, hints, out.stats);
                half_diffusion(state, dt_out);
            } catch (StiffnessFailure& f) {
                f.time += t;   // report absolute time
                throw;
            }
            state.time = t + dt_out;
            ++out.stats.outer_steps;
            emit_through(prev, state, t, t + dt_out, dt_out);
            t += dt_out;
        }
    }
    return out;
}

}
