#include "coagfrag/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "coagfrag/kernels.hpp"

namespace coagfrag {

namespace {

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c, d);
    return buf;
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
    double acc = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k)
        acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
    return acc;
}

}

int MomentSeries::order_index(double k) const {
    for (std::size_t i = 0; i < orders.size(); ++i)
        if (std::abs(orders[i] - k) < 1e-9) return int(i);
    return -1;
}

Field moment(const TruncatedState& s, double k) {
    Field out(s.grid);
    for (int i = 1; i <= s.n; ++i) {
        const double w = std::pow(double(i), k);   // exp(k log i), i >= 1
        const auto& ci = s.species(i).v;
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += w * ci[c];
    }
    return out;
}

double lp_spacetime_norm(const Grid& g, std::span<const double> times,
                         std::span<const Field> fields, double p) {
    if (times.size() < 2 || fields.size() != times.size())
        throw std::invalid_argument("lp_spacetime_norm: need >= 2 sample times with matching fields");
    if (!(p >= 1.0)) throw std::invalid_argument("lp_spacetime_norm: p >= 1 required");
    std::vector<double> space(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        double acc = 0.0;
        for (double v : fields[k].v) acc += std::pow(std::abs(v), p);
        space[k] = g.cell_volume() * acc;
    }
    return std::pow(trapezoid(times, space), 1.0 / p);
}

Field m_ratio(const TruncatedState& s, double k, std::span<const double> d) {
    if (int(d.size()) != s.n + 1) throw std::invalid_argument("m_ratio: d must be 1-indexed of size n+1");
    Field num(s.grid), den(s.grid);
    for (int i = 1; i <= s.n; ++i) {
        const double w = std::pow(double(i), k);
        const double wd = w * d[std::size_t(i)];
        const auto& ci = s.species(i).v;
        for (std::size_t c = 0; c < num.size(); ++c) {
            num[c] += wd * ci[c];
            den[c] += w * ci[c];
        }
    }
    Field out(s.grid);
    for (std::size_t c = 0; c < out.size(); ++c)
        out[c] = (den[c] < 1e-300) ? d[1] : num[c] / den[c];
    return out;
}

double weighted_moment_integral(const RunResult& run, double k, double gamma, int m) {
    if (m < 1) throw std::invalid_argument("weighted_moment_integral: m >= 1 required");
    const double order = k + m * (gamma - 1.0);
    const int idx = run.series.order_index(order);
    if (idx < 0)
        throw std::invalid_argument(fmt("weighted_moment_integral: moment order %g not recorded", order));
    const auto& t = run.series.times;
    const auto& y = run.series.values[std::size_t(idx)];
    std::vector<double> integrand(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        integrand[i] = (m == 1 ? 1.0 : std::pow(t[i], double(m - 1))) * y[i];
    return trapezoid(t, integrand);
}

namespace {

double aitken(double g1, double g2, double g3) {
    const double d1 = g2 - g1, d2 = g3 - g2;
    if (std::abs(d1) < 1e-13 || std::abs(d2) < 1e-13) return g3;
    const double r = d2 / d1;
    if (r < -0.5 || r > 0.9) return g3;
    return g3 + d2 * r / (1.0 - r);
}

}

GelReport gel_report(std::span<const RunResult> runs, double threshold) {
    if (runs.size() != 3) throw std::invalid_argument("gel_report: expected runs at n, 2n, 4n");
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].n != 2 * runs[r - 1].n)
            throw std::invalid_argument("gel_report: truncation levels must double");
        if (runs[r].mode != runs[0].mode || !(runs[r].grid == runs[0].grid) ||
            runs[r].series.times.size() != runs[0].series.times.size())
            throw std::invalid_argument("gel_report: mismatched scenarios");
        for (std::size_t k = 0; k < runs[0].series.times.size(); ++k)
            if (std::abs(runs[r].series.times[k] - runs[0].series.times[k]) > 1e-12)
                throw std::invalid_argument("gel_report: mismatched sample times");
    }

    GelReport rep;
    rep.threshold = threshold;
    rep.times = runs[0].series.times;
    const std::size_t nt = rep.times.size();
    for (const auto& run : runs) {
        rep.levels.push_back(run.n);
        std::vector<double> g(nt);
        const double mass0 = run.series.total_mass.empty() ? 0.0 : run.series.total_mass[0];
        for (std::size_t k = 0; k < nt; ++k)
            g[k] = (mass0 > 0.0)
                       ? std::clamp(1.0 - run.series.total_mass[k] / mass0, 0.0, 1.0)
                       : 0.0;
        rep.gel.push_back(std::move(g));
    }
    rep.extrapolated.resize(nt);
    for (std::size_t k = 0; k < nt; ++k)
        rep.extrapolated[k] =
            std::clamp(aitken(rep.gel[0][k], rep.gel[1][k], rep.gel[2][k]), 0.0, 1.0);

    auto crossing = [&](const std::vector<double>& g) {
        for (std::size_t k = 0; k < nt; ++k) {
            if (g[k] > threshold) {
                if (k == 0) return rep.times[0];
                const double g0 = g[k - 1], g1 = g[k];
                const double w = (threshold - g0) / (g1 - g0);
                return rep.times[k - 1] + w * (rep.times[k] - rep.times[k - 1]);
            }
        }
        return -1.0;
    };
    rep.gel_time = crossing(rep.extrapolated);
    const double t_finest = crossing(rep.gel[2]);
    if (rep.gel_time >= 0.0)
        rep.gel_time_uncertainty =
            (t_finest >= 0.0) ? std::abs(t_finest - rep.gel_time)
                              : rep.times.back() - rep.gel_time;

    const std::size_t last = nt - 1;
    rep.final_mass_extrapolated = aitken(runs[0].series.total_mass[last],
                                         runs[1].series.total_mass[last],
                                         runs[2].series.total_mass[last]);

    const double gT1 = rep.gel[0][last], gT2 = rep.gel[1][last], gT4 = rep.gel[2][last];
    constexpr double slack = 1e-12;   // roundoff-level gel fractions are unordered noise
    if (gT4 > threshold && std::abs(gT4 - gT2) < std::abs(gT2 - gT1))
        rep.verdict = "gelling";
    else if (gT4 < threshold && gT4 <= gT2 + slack && gT2 <= gT1 + slack)
        rep.verdict = "non-gelling";
    else
        rep.verdict = "inconclusive";
    return rep;
}

std::string GelReport::to_json(int indent) const {
    nlohmann::json j;
    j["levels"] = levels;
    j["threshold"] = threshold;
    j["times"] = times;
    for (std::size_t r = 0; r < levels.size(); ++r)
        j["gel_fraction"][std::to_string(levels[r])] = gel[r];
    j["extrapolated"] = extrapolated;
    j["gel_time"] = gel_time;
    j["gel_time_uncertainty"] = gel_time_uncertainty;
    j["final_mass_extrapolated"] = final_mass_extrapolated;
    j["verdict"] = verdict;
    return j.dump(indent);
}

namespace detail {

DerivativeEstimate series_derivative(std::span<const double> times, std::span<const double> y,
                                     std::size_t idx) {
    const std::size_t nt = times.size();
    if (nt < 4) throw std::invalid_argument("series_derivative: need >= 4 samples");
    const double h = (times.back() - times.front()) / double(nt - 1);

    auto third = [&](std::size_t k) {
        k = std::clamp<std::size_t>(k, 2, nt - 3);
        return (y[k + 2] - 2.0 * y[k + 1] + 2.0 * y[k - 1] - y[k - 2]) / (2.0 * h * h * h);
    };
    auto second = [&](std::size_t k) {
        k = std::clamp<std::size_t>(k, 1, nt - 2);
        return (y[k + 1] - 2.0 * y[k] + y[k - 1]) / (h * h);
    };

    double scale_floor = 0.0;
    for (double v : y) scale_floor = std::max(scale_floor, std::abs(v));
    scale_floor *= 1e-10;

    if (idx == 0) {
        const double d = (y[1] - y[0]) / (times[1] - times[0]);
        return {d, 2.0 * h * std::abs(second(0)) + scale_floor};
    }
    if (idx == nt - 1) {
        const double d = (y[nt - 1] - y[nt - 2]) / (times[nt - 1] - times[nt - 2]);
        return {d, 2.0 * h * std::abs(second(nt - 1)) + scale_floor};
    }
    const double d = (y[idx + 1] - y[idx - 1]) / (times[idx + 1] - times[idx - 1]);
    return {d, 2.0 * h * h * std::abs(third(idx)) + scale_floor};
}

}

AuditReport dissipation_audit(const RunResult& run, double l, double alpha, double beta,
                              double gamma, double coag_scale, double frag_scale) {
    AuditReport rep;
    const DissipationSeries* prod = nullptr;
    for (const auto& ds : run.dissipation)
        if (std::abs(ds.l - l) < 1e-9) prod = &ds;
    if (!prod) throw std::invalid_argument("dissipation_audit: product series not recorded for l");
    if (std::abs(prod->alpha - alpha) > 1e-12 || std::abs(prod->beta - beta) > 1e-12)
        throw std::invalid_argument("dissipation_audit: product series recorded with different exponents");
    const int il = run.series.order_index(l);
    const int ig = run.series.order_index(gamma + l - 1.0);
    if (il < 0 || ig < 0)
        throw std::invalid_argument("dissipation_audit: required moment orders not recorded");

    const double cql = superadditivity_constant(l, 2000);
    const double cfl = std::min(l - 1.0, 1.0);
    const auto& t = run.series.times;
    const auto& rho_l = run.series.values[std::size_t(il)];
    const auto& rho_g = run.series.values[std::size_t(ig)];
    const auto& c1 = run.series.c1_integral;

    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto [ddt, tol] = detail::series_derivative(t, rho_l, k);
        const double lhs = ddt + frag_scale * cfl * rho_g[k];
        const double rhs = coag_scale * cql * prod->coag_product[k] + frag_scale * cfl * c1[k];
        const double margin = rhs - lhs;
        rep.add("dissipation", fmt("l=%g t=%g tol=%.3g", l, t[k], tol), margin, margin >= -tol);
    }
    return rep;
}

AuditReport interpolation_audit(const TruncatedState& s, double alpha, double beta, double gamma,
                                double l) {
    if (!(l > 2.0 - (gamma - alpha)) || !(l > 2.0 - (gamma - beta)))
        throw std::invalid_argument("interpolation_audit: need l > 2-(gamma-alpha) and l > 2-(gamma-beta)");
    AuditReport rep;
    const double denom = gamma + l - 2.0;
    const Field rho1 = moment(s, 1.0);
    const Field rhog = moment(s, gamma + l - 1.0);

    struct Case {
        const char* name;
        double order;      // interpolated moment
        double e1, e2;     // exponents on rho_1 and rho_{gamma+l-1}
        bool fallback;     // use rho_order <= rho_1 instead
    };
    const Case cases[] = {
        {"rho_alpha+1", alpha + 1.0, (gamma + l - alpha - 2.0) / denom, alpha / denom, false},
        {"rho_beta+1", beta + 1.0, (gamma + l - beta - 2.0) / denom, beta / denom, false},
        {"rho_alpha+l-1", alpha + l - 1.0, (gamma - alpha) / denom, (alpha + l - 2.0) / denom,
         alpha + l - 1.0 < 1.0},
        {"rho_beta+l-1", beta + l - 1.0, (gamma - beta) / denom, (beta + l - 2.0) / denom,
         beta + l - 1.0 < 1.0},
    };
    for (const auto& cs : cases) {
        const Field lhs = moment(s, cs.order);
        double worst = 0.0;
        bool first = true;
        for (std::size_t c = 0; c < lhs.size(); ++c) {
            const double bound = cs.fallback
                                     ? rho1[c]
                                     : std::pow(rho1[c], cs.e1) * std::pow(rhog[c], cs.e2);
            const double scale = std::max(bound, 1e-300);
            const double rel = (bound - lhs[c]) / scale;
            if (first || rel < worst) worst = rel;
            first = false;
        }
        rep.add(std::string("interpolation_") + cs.name,
                fmt("alpha=%g beta=%g gamma=%g l=%g", alpha, beta, gamma, l), worst,
                worst >= -1e-12);
    }
    return rep;
}

double bound_elem1(double C, double theta) {
    if (!(C > 0.0) || !(theta > 0.0) || !(theta < 1.0))
        throw std::invalid_argument("bound_elem1: C > 0 and 0 < theta < 1 required");
    return std::max(1.0, std::pow(1.0 + C, 1.0 / theta));
}

double bound_elem2(double C1, double C2, double theta, int m, double T) {
    if (!(C1 > 0.0) || !(C2 >= 0.0) || !(theta > 0.0) || theta > 1.0 || m < 1 || !(T > 0.0))
        throw std::invalid_argument("bound_elem2: invalid parameters");
    double fact = 1.0;
    for (int j = 2; j <= m + 1; ++j) fact *= j;
    return 2.0 * (C2 + std::pow(2.0 * C1, 1.0 / theta) * std::pow(T, double(m + 1)) / fact);
}

RefinementConvergence refinement_convergence(const RunResult& coarse, const RunResult& fine,
                                             double k) {
    if (fine.n != 2 * coarse.n)
        throw std::invalid_argument("refinement_convergence: runs must be at n and 2n");
    const auto& t = coarse.series.times;
    if (t.size() != fine.series.times.size())
        throw std::invalid_argument("refinement_convergence: mismatched sample times");
    RefinementConvergence out;
    for (std::size_t i = 0; i < t.size(); ++i)
        out.sup_mass_diff = std::max(
            out.sup_mass_diff, std::abs(coarse.series.total_mass[i] - fine.series.total_mass[i]));

    const int ic = coarse.series.order_index(k);
    const int jf = fine.series.order_index(k);
    if (ic < 0 || jf < 0)
        throw std::invalid_argument("refinement_convergence: moment order k not recorded");
    const double norm_c = trapezoid(t, coarse.series.values[std::size_t(ic)]);
    const double norm_f = trapezoid(fine.series.times, fine.series.values[std::size_t(jf)]);
    const double i0 = coarse.n / 2.0;
    out.tail_bound = (norm_c + norm_f) / std::pow(i0, k - 1.0);
    return out;
}

}
