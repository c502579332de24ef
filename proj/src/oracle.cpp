#include "coagfrag/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "coagfrag/solver.hpp"

namespace coagfrag {

HomogeneousState HomogeneousState::monodisperse(int n, double mass) {
    HomogeneousState s(n);
    s.c[1] = mass;
    return s;
}

double HomogeneousState::mass() const {
    double m = 0.0;
    for (int i = 1; i <= n; ++i) m += double(i) * c[std::size_t(i)];
    return m;
}

namespace {

// Event-style right-hand side: unordered coagulation pairs and fragmentation
// events are accumulated directly, a different algebraic grouping from the
// per-species sums in the reaction module.
void oracle_rhs(const KernelCache& cache, TruncationMode mode, const std::vector<double>& c,
                std::vector<double>& dcdt) {
    const int n = cache.n();
    std::fill(dcdt.begin(), dcdt.end(), 0.0);
    for (int i = 1; i <= n; ++i) {
        const double ci = c[std::size_t(i)];
        if (ci == 0.0) continue;   // every pair (i, j>=i) vanishes
        for (int j = i; j <= n; ++j) {
            const bool merged_kept = (i + j <= n);
            if (mode == TruncationMode::conservative && !merged_kept) break;
            const double r = cache.a(i, j) * ci * c[std::size_t(j)];
            if (r != 0.0) {
                if (i == j) {
                    dcdt[std::size_t(i)] -= r;
                    if (merged_kept) dcdt[std::size_t(i + j)] += 0.5 * r;
                } else {
                    dcdt[std::size_t(i)] -= r;
                    dcdt[std::size_t(j)] -= r;
                    if (merged_kept) dcdt[std::size_t(i + j)] += r;
                }
            }
        }
    }
    for (int m = 2; m <= n; ++m) {
        const double r = cache.frag(m) * c[std::size_t(m)];
        if (r == 0.0) continue;
        dcdt[std::size_t(m)] -= r;
        for (int j = 1; j < m; ++j) dcdt[std::size_t(j)] += cache.beta(m, j) * r;
    }
}

// Cash-Karp 4(5) tableau (solution propagated at 5th order).
namespace ck {
constexpr double b21 = 1.0 / 5;
constexpr double b31 = 3.0 / 40, b32 = 9.0 / 40;
constexpr double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
constexpr double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
constexpr double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                 b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
constexpr double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
constexpr double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384, d4 = c4 - 13525.0 / 55296,
                 d5 = -277.0 / 14336, d6 = c6 - 1.0 / 4;
}

}

HomogeneousTrajectory ode_reference(const KernelSet& k, TruncationMode mode,
                                    const HomogeneousState& initial, double T, double tol,
                                    std::span<const double> sample_times) {
    if (!(tol >= 1e-12)) throw std::invalid_argument("ode_reference: tol >= 1e-12 required");
    KernelCache cache(k, initial.n);
    const int n = initial.n;

    std::vector<double> y = initial.c;
    std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()),
        k6(y.size()), ytmp(y.size()), ynew(y.size());

    std::vector<double> samples(sample_times.begin(), sample_times.end());
    std::sort(samples.begin(), samples.end());

    HomogeneousTrajectory traj;
    auto record = [&](double t) {
        HomogeneousState s(n);
        s.c = y;
        s.time = t;
        traj.times.push_back(t);
        traj.states.push_back(std::move(s));
    };

    double t = 0.0;
    std::size_t next = 0;
    while (next < samples.size() && samples[next] <= 0.0) {
        record(0.0);
        ++next;
    }

    const double dt_floor = 1e-14 * std::max(T, 1e-300);
    double dt = std::min(1e-3, T > 0.0 ? T : 1e-3);
    while (t < T && next < samples.size()) {
        const double target = samples[next];
        while (t < target * (1.0 - 1e-15)) {
            double h = std::min(dt, target - t);
            oracle_rhs(cache, mode, y, k1);

            for (int i = 1; i <= n; ++i)
                ytmp[std::size_t(i)] = y[std::size_t(i)] + h * ck::b21 * k1[std::size_t(i)];
            oracle_rhs(cache, mode, ytmp, k2);
            for (int i = 1; i <= n; ++i)
                ytmp[std::size_t(i)] = y[std::size_t(i)] + h * (ck::b31 * k1[std::size_t(i)] +
                                                                ck::b32 * k2[std::size_t(i)]);
            oracle_rhs(cache, mode, ytmp, k3);
            for (int i = 1; i <= n; ++i)
                ytmp[std::size_t(i)] = y[std::size_t(i)] + h * (ck::b41 * k1[std::size_t(i)] +
                                                                ck::b42 * k2[std::size_t(i)] +
                                                                ck::b43 * k3[std::size_t(i)]);
            oracle_rhs(cache, mode, ytmp, k4);
            for (int i = 1; i <= n; ++i)
                ytmp[std::size_t(i)] = y[std::size_t(i)] + h * (ck::b51 * k1[std::size_t(i)] +
                                                                ck::b52 * k2[std::size_t(i)] +
                                                                ck::b53 * k3[std::size_t(i)] +
                                                                ck::b54 * k4[std::size_t(i)]);
            oracle_rhs(cache, mode, ytmp, k5);
            for (int i = 1; i <= n; ++i)
                ytmp[std::size_t(i)] = y[std::size_t(i)] + h * (ck::b61 * k1[std::size_t(i)] +
                                                                ck::b62 * k2[std::size_t(i)] +
                                                                ck::b63 * k3[std::size_t(i)] +
                                                                ck::b64 * k4[std::size_t(i)] +
                                                                ck::b65 * k5[std::size_t(i)]);
            oracle_rhs(cache, mode, ytmp, k6);

            double err = 0.0;
            for (int i = 1; i <= n; ++i) {
                ynew[std::size_t(i)] = y[std::size_t(i)] +
                                       h * (ck::c1 * k1[std::size_t(i)] + ck::c3 * k3[std::size_t(i)] +
                                            ck::c4 * k4[std::size_t(i)] + ck::c6 * k6[std::size_t(i)]);
                const double e = h * (ck::d1 * k1[std::size_t(i)] + ck::d3 * k3[std::size_t(i)] +
                                      ck::d4 * k4[std::size_t(i)] + ck::d5 * k5[std::size_t(i)] +
                                      ck::d6 * k6[std::size_t(i)]);
                const double sc = std::abs(y[std::size_t(i)]) + std::abs(h * k1[std::size_t(i)]) + 1e-30;
                err = std::max(err, std::abs(e) / (tol * sc));
            }

            if (err <= 1.0) {
                t += h;
                y.swap(ynew);
                dt = h * std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
            } else {
                dt = h * std::max(0.1, 0.9 * std::pow(err, -0.25));
                if (dt < dt_floor) throw StiffnessFailure(t, dt, -1, -1);
            }
        }
        record(target);
        ++next;
    }
    return traj;
}

double constant_kernel_exact(int i, double t) {
    if (i < 1 || t < 0.0) throw std::invalid_argument("constant_kernel_exact: i >= 1, t >= 0");
    const double x = 0.5 * t;
    if (i == 1) return 1.0 / ((1.0 + x) * (1.0 + x));
    return std::pow(x, double(i - 1)) / std::pow(1.0 + x, double(i + 1));
}

double brute_force_weak_rate(const HomogeneousState& s, const KernelSet& k,
                             std::span<const double> phi) {
    if (int(phi.size()) != s.n + 1)
        throw std::invalid_argument("brute_force_weak_rate: phi must have n+1 entries");
    KernelCache cache(k, s.n);
    const int n = s.n;
    double coag = 0.0;
    for (int i = 1; i <= n; ++i) {
        for (int j = i; i + j <= n; ++j) {
            const double w = (i == j) ? 0.5 : 1.0;
            coag += w * cache.a(i, j) * s.c[std::size_t(i)] * s.c[std::size_t(j)] *
                    (phi[std::size_t(i + j)] - phi[std::size_t(i)] - phi[std::size_t(j)]);
        }
    }
    double frag = 0.0;
    for (int i = 2; i <= n; ++i) {
        double inner = phi[std::size_t(i)];
        for (int j = 1; j < i; ++j) inner -= cache.beta(i, j) * phi[std::size_t(j)];
        frag += cache.frag(i) * s.c[std::size_t(i)] * inner;
    }
    return coag - frag;
}

}
