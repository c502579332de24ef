#include "coagfrag/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "coagfrag/diagnostics.hpp"
#include "coagfrag/duality.hpp"
#include "coagfrag/oracle.hpp"
#include "coagfrag/solver.hpp"
#include "coagfrag/version.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace coagfrag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void set_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

// All CSV numerics go through one formatter: '.' decimal separator,
// round-trip precision, LF endings. This is the byte-exactness contract.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string moments_csv(const RunResult& run) {
    std::ostringstream os;
    os << "t,dt,total_mass";
    for (double k : run.series.orders) os << ",int_rho_" << short_num(k);
    os << ",gel_fraction,tail_fraction,M1_min,M1_max,min_concentration,clamped_mass_cum\n";
    const auto& s = run.series;
    for (std::size_t i = 0; i < s.size(); ++i) {
        os << num(s.times[i]) << ',' << num(s.step_dt[i]) << ',' << num(s.total_mass[i]);
        for (std::size_t k = 0; k < s.orders.size(); ++k) os << ',' << num(s.values[k][i]);
        os << ',' << num(s.gel_fraction[i]) << ',' << num(s.tail_fraction[i]) << ','
           << num(s.m1_min[i]) << ',' << num(s.m1_max[i]) << ',' << num(s.min_concentration[i])
           << ',' << num(s.clamped_mass_cum[i]) << '\n';
    }
    return os.str();
}

std::string profile_csv(const TruncatedState& state) {
    std::ostringstream os;
    const bool two_d = state.grid.dim() == 2;
    os << (two_d ? "i,cell_index,x,y,value\n" : "i,cell_index,x,value\n");
    for (int i = 1; i <= state.n; ++i) {
        for (int c = 0; c < state.grid.cell_count(); ++c) {
            os << i << ',' << c << ',' << num(state.grid.center(c, 0));
            if (two_d) os << ',' << num(state.grid.center(c, 1));
            os << ',' << num(state.species(i)[std::size_t(c)]) << '\n';
        }
    }
    return os.str();
}

json run_stats_json(const RunResult& run) {
    return {{"outer_steps", run.stats.outer_steps},
            {"accepted_steps", run.stats.accepted},
            {"rejected_steps", run.stats.rejected},
            {"clamped_mass", run.stats.clamped_mass},
            {"min_inner_dt", run.stats.min_dt},
            {"initial_mass", run.initial_mass}};
}

void write_run_meta(const fs::path& dir, const char* command, const ScenarioConfig* cfg,
                    const json& extra, const std::vector<std::string>& files) {
    json meta;
    meta["tool"] = "coagfrag";
    meta["version"] = version_string;
    meta["command"] = command;
    if (cfg) meta["scenario"] = json::parse(resolved_scenario_json(*cfg));
    for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
    meta["outputs"] = files;
    write_text(dir / "run_meta.json", meta.dump(2) + "\n");
}

void write_run_outputs(const fs::path& dir, const RunResult& run) {
    write_text(dir / "moments.csv", moments_csv(run));
    for (const auto& [t, state] : run.snapshots)
        write_text(dir / (std::string("profile_") + short_num(t) + ".csv"), profile_csv(state));
}

int report_error(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << "\n";
    return code;
}

}

int cmd_run(const std::string& scenario_path, const std::string& out_dir, int threads) {
    set_threads(threads);
    try {
        const ScenarioConfig cfg = load_scenario(scenario_path);
        fs::create_directories(out_dir);
        const RunResult run = run_scenario(cfg);
        write_run_outputs(out_dir, run);
        std::vector<std::string> files{"moments.csv"};
        for (const auto& [t, state] : run.snapshots)
            files.push_back(std::string("profile_") + short_num(t) + ".csv");
        write_run_meta(out_dir, "run", &cfg, {{"stats", run_stats_json(run)}}, files);
        return exit_ok;
    } catch (const ScenarioError& e) {
        return report_error(e, exit_validation);
    } catch (const StiffnessFailure& e) {
        return report_error(e, exit_stiffness);
    } catch (const std::exception& e) {
        return report_error(e, exit_error);
    }
}

int cmd_sweep(const std::string& scenario_path, const std::string& out_dir,
              std::vector<int> levels, int threads) {
    set_threads(threads);
    try {
        ScenarioConfig cfg = load_scenario(scenario_path);
        if (levels.empty()) levels = {cfg.n, 2 * cfg.n, 4 * cfg.n};
        if (levels.size() < 2) throw ScenarioError("levels", "need at least two refinement levels");
        for (std::size_t i = 1; i < levels.size(); ++i)
            if (levels[i] != 2 * levels[i - 1])
                throw ScenarioError("levels", "levels must double (n, 2n, 4n, ...)");
        if (cfg.kernels.size_limit() < levels.back())
            throw ScenarioError("levels", "kernel tables smaller than the finest level");

        fs::create_directories(out_dir);
        std::vector<RunResult> runs;
        std::vector<std::string> files;
        for (int n : levels) {
            ScenarioConfig level_cfg = cfg;
            level_cfg.n = n;
            runs.push_back(run_scenario(level_cfg));
            const fs::path sub = fs::path(out_dir) / ("level_" + std::to_string(n));
            fs::create_directories(sub);
            write_run_outputs(sub, runs.back());
            files.push_back("level_" + std::to_string(n) + "/moments.csv");
        }

        json stability;
        if (runs.size() >= 3) {
            const GelReport gel = gel_report(std::span(runs).last(3), 0.05);
            write_text(fs::path(out_dir) / "gel_report.json", gel.to_json() + "\n");
            files.push_back("gel_report.json");
        }
        for (double p : cfg.outputs.mass_lp_exponents) {
            const MassLpReport rep = mass_lp_stability(runs, p);
            stability["mass_lp"].push_back({{"p", rep.p},
                                            {"levels", rep.levels},
                                            {"norms", rep.norms},
                                            {"last_rel_change", rep.last_rel_change},
                                            {"stable", rep.stable}});
        }
        for (std::size_t i = 0; i + 1 < runs.size(); ++i) {
            double k_order = 2.0;   // smallest recorded superlinear order, else 2
            for (double k : runs[i].series.orders)
                if (k > 1.0) {
                    k_order = k;
                    break;
                }
            if (runs[i].series.order_index(k_order) >= 0 &&
                runs[i + 1].series.order_index(k_order) >= 0) {
                const RefinementConvergence rc =
                    refinement_convergence(runs[i], runs[i + 1], k_order);
                stability["refinement"].push_back({{"n", runs[i].n},
                                                   {"k", k_order},
                                                   {"sup_mass_diff", rc.sup_mass_diff},
                                                   {"tail_bound", rc.tail_bound}});
            }
        }
        write_text(fs::path(out_dir) / "stability.json", stability.dump(2) + "\n");
        files.push_back("stability.json");
        write_run_meta(fs::path(out_dir), "sweep", &cfg, {{"levels", levels}}, files);
        return exit_ok;
    } catch (const ScenarioError& e) {
        return report_error(e, exit_validation);
    } catch (const StiffnessFailure& e) {
        return report_error(e, exit_stiffness);
    } catch (const std::exception& e) {
        return report_error(e, exit_error);
    }
}

namespace {

// Elementary-bound property sweeps (Lemma-style rejection sampling).
void audit_elementary_bounds(AuditReport& rep, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uc(1e-3, 10.0), utheta(0.01, 0.99), uxi(0.0, 1.0);

    double worst1 = std::numeric_limits<double>::infinity();
    long accepted = 0;
    for (long trial = 0; trial < 100000; ++trial) {
        const double C = uc(rng), theta = utheta(rng);
        const double bound = bound_elem1(C, theta);
        // xi sampled up to well past the bound; keep those satisfying the hypothesis
        const double xi = uxi(rng) * bound * 3.0;
        if (xi <= C + std::pow(xi, 1.0 - theta)) {
            ++accepted;
            worst1 = std::min(worst1, bound - xi);
        }
    }
    rep.add("lemma_elem1_sweep", "samples=100000", worst1, worst1 >= 0.0 && accepted > 1000);

    std::uniform_int_distribution<int> um(1, 4), usteps(4, 16);
    std::uniform_real_distribution<double> uT(0.5, 4.0), uf(0.0, 5.0);
    double worst2 = std::numeric_limits<double>::infinity();
    accepted = 0;
    for (long trial = 0; trial < 10000; ++trial) {
        const double C1 = uc(rng), C2 = uc(rng), theta = utheta(rng), T = uT(rng);
        const int m = um(rng), steps = usteps(rng);
        // nonnegative step function on a uniform partition; integrals of
        // t^m/m! f are exact through the antiderivative t^{m+1}/(m+1)!
        double fact = 1.0;
        for (int j = 2; j <= m + 1; ++j) fact *= j;
        auto weight = [&](double t0, double t1) {
            return (std::pow(t1, m + 1) - std::pow(t0, m + 1)) / fact;
        };
        double lhs = 0.0, rhs_int = 0.0;
        for (int s = 0; s < steps; ++s) {
            const double f = uf(rng);
            const double w = weight(T * s / steps, T * (s + 1) / steps);
            lhs += w * f;
            rhs_int += w * std::pow(f, 1.0 - theta);
        }
        if (lhs <= C1 * rhs_int + C2) {
            ++accepted;
            worst2 = std::min(worst2, bound_elem2(C1, C2, theta, m, T) - lhs);
        }
    }
    rep.add("lemma_elem2_sweep", "samples=10000", worst2, worst2 >= 0.0 && accepted > 100);
}

void audit_kernel_constants(AuditReport& rep, const KernelSet& ks) {
    const double c2 = superadditivity_constant(2.0, 2000);
    rep.add("superadditivity_l2", "i_max=2000 expect 1", 1e-12 - std::abs(c2 - 1.0),
            std::abs(c2 - 1.0) <= 1e-12);
    const double c3 = superadditivity_constant(3.0, 2000);
    rep.add("superadditivity_l3", "i_max=2000 expect 3", 1e-12 - std::abs(c3 - 3.0),
            std::abs(c3 - 3.0) <= 1e-12);
    const double c15 = superadditivity_constant(1.5, 2000);
    rep.add("superadditivity_l1.5", "i_max=2000 value in (0,1]", std::min(c15, 1.0 - c15),
            c15 > 0.0 && c15 <= 1.0);

    std::vector<double> nus;
    if (const auto* pd = ks.daughters_power_law())
        nus = {pd->nu};
    else
        nus = {0.0, 1.0, 2.0};
    for (double nu : nus) {
        PowerLawDaughters d{nu};
        for (double l : {1.5, 2.0, 3.0}) {
            double worst = std::numeric_limits<double>::infinity();
            const double cfl = std::min(l - 1.0, 1.0);
            double family_const = std::numeric_limits<double>::infinity();
            for (int i = 2; i <= 2000; ++i) {
                const double deficit = frag_moment_deficit(d, i, l);
                const double bound = cfl * std::pow(double(i), l - 1.0);
                worst = std::min(worst, (deficit - bound) / bound);
                family_const = std::min(family_const, deficit / std::pow(double(i), l));
            }
            char params[96];
            std::snprintf(params, sizeof(params), "nu=%g l=%g i<=2000 family_const=%.6g", nu, l,
                          family_const);
            rep.add("frag_moment_deficit", params, worst, worst >= -1e-12 && family_const > 0.0);
        }
    }
}

void audit_oracle_closed_form(AuditReport& rep) {
    KernelSet ks{PowerLawCoagulation{0.5, 0.0, 0.0}, PowerLawFragmentation{0.0, 1.0},
                 PowerLawDaughters{0.0}};
    const std::vector<double> ts{0.5, 1.0, 2.0, 4.0};
    const auto traj = ode_reference(ks, TruncationMode::conservative,
                                    HomogeneousState::monodisperse(512), 4.0, 1e-10, ts);
    double max_err = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (int i = 1; i <= 20; ++i)
            max_err = std::max(max_err, std::abs(traj.states[k].c[std::size_t(i)] -
                                                 constant_kernel_exact(i, ts[k])));
    rep.add("constant_kernel_closed_form", "n=512 i<=20 t in {0.5,1,2,4} tol=1e-8", 1e-8 - max_err,
            max_err <= 1e-8);
}

}

int cmd_audit(const std::string& scenario_or_run_dir, const std::string& out_dir, int threads) {
    set_threads(threads);
    try {
        ScenarioConfig cfg;
        if (fs::is_directory(scenario_or_run_dir)) {
            std::ifstream in(fs::path(scenario_or_run_dir) / "run_meta.json");
            if (!in) throw ScenarioError("file", "no run_meta.json in " + scenario_or_run_dir);
            json meta = json::parse(in, nullptr, true);
            if (!meta.contains("scenario")) throw ScenarioError("run_meta.json", "no scenario recorded");
            cfg = parse_scenario(meta["scenario"].dump());
        } else {
            cfg = load_scenario(scenario_or_run_dir);
        }

        AuditReport rep = validate(cfg.kernels, cfg.n);
        audit_kernel_constants(rep, cfg.kernels);
        for (int i = 1; i <= std::min(4, cfg.n); ++i) {
            const auto [kq, kf] = sup_ratios(cfg.kernels, i, cfg.n);
            char params[96];
            std::snprintf(params, sizeof(params), "i=%d n=%d KQ=%.6g KF=%.6g (finite-range lower estimates)",
                          i, cfg.n, kq, kf);
            rep.add("sup_ratios", params, 0.0, true);
        }
        audit_elementary_bounds(rep, cfg.seed + 1);
        audit_oracle_closed_form(rep);

        if (!cfg.outputs.dissipation_orders.empty()) {
            ScenarioConfig audit_cfg = cfg;
            audit_cfg.mode = TruncationMode::conservative;   // the audited identities are conservative-mode
            audit_cfg.outputs.record_states = true;
            const RunResult run = run_scenario(audit_cfg);
            const auto* pc = cfg.kernels.coag_power_law();
            const auto* pf = cfg.kernels.frag_power_law();
            for (double l : cfg.outputs.dissipation_orders) {
                AuditReport d = dissipation_audit(run, l, pc->alpha, pc->beta, pf->gamma, pc->scale,
                                                  pf->scale);
                rep.checks.insert(rep.checks.end(), d.checks.begin(), d.checks.end());
                for (std::size_t si = 0; si < run.sampled_states.size(); ++si) {
                    AuditReport ia = interpolation_audit(run.sampled_states[si], pc->alpha, pc->beta,
                                                         pf->gamma, l);
                    for (auto& c : ia.checks)
                        c.params += " t=" + std::to_string(run.series.times[si]);
                    rep.checks.insert(rep.checks.end(), ia.checks.begin(), ia.checks.end());
                }
            }
        }

        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "audit.json", rep.to_json() + "\n");
        write_run_meta(fs::path(out_dir), "audit", &cfg, {{"all_pass", rep.all_pass()}},
                       {"audit.json"});
        return rep.all_pass() ? exit_ok : exit_error;
    } catch (const ScenarioError& e) {
        return report_error(e, exit_validation);
    } catch (const StiffnessFailure& e) {
        return report_error(e, exit_stiffness);
    } catch (const std::exception& e) {
        return report_error(e, exit_error);
    }
}

int cmd_duality(const DualityParams& params, const std::string& out_dir, int threads) {
    set_threads(threads);
    try {
        if (params.trials < 1) throw ScenarioError("trials", "must be >= 1");
        if (params.cells < 2) throw ScenarioError("cells", "must be >= 2");
        if (!(params.m > 0.0)) throw ScenarioError("m", "must be > 0");
        if (!(params.q > 1.0)) throw ScenarioError("q", "must be > 1");
        if (!(params.T > 0.0)) throw ScenarioError("T", "must be > 0");

        const Grid grid = Grid::interval(1.0, params.cells);
        const KmqEstimate est =
            estimate_Kmq(params.m, params.q, params.trials, params.seed, grid, params.T, params.steps);
        json j = json::parse(est.to_json());
        j["cells"] = params.cells;
        j["T"] = params.T;
        j["steps"] = params.steps;
        if (params.check_closeness) {
            const ClosenessReport cr = closeness_check(params.a, params.b, params.p, est.estimate);
            j["closeness"] = {{"a", cr.a},
                              {"b", cr.b},
                              {"p", cr.p},
                              {"p_conjugate", cr.p_conjugate},
                              {"spread_factor", cr.spread_factor},
                              {"k_estimate", cr.k_estimate},
                              {"product", cr.product},
                              {"margin", cr.margin},
                              {"holds", cr.holds},
                              {"note", "advisory: estimate is a lower bound on K"}};
        }
        fs::create_directories(out_dir);
        write_text(fs::path(out_dir) / "kmq.json", j.dump(2) + "\n");
        json meta_extra = {{"duality", {{"m", params.m},
                                        {"q", params.q},
                                        {"trials", params.trials},
                                        {"cells", params.cells},
                                        {"T", params.T},
                                        {"steps", params.steps},
                                        {"seed", params.seed}}}};
        write_run_meta(fs::path(out_dir), "duality", nullptr, meta_extra, {"kmq.json"});
        return exit_ok;
    } catch (const ScenarioError& e) {
        return report_error(e, exit_validation);
    } catch (const std::exception& e) {
        return report_error(e, exit_error);
    }
}

}
