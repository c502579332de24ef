#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coagfrag/cli.hpp"
#include "coagfrag/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"coagfrag - discrete coagulation-fragmentation with diffusion"};
    app.set_version_flag("--version", coagfrag::version_string);
    app.require_subcommand(1);

    std::string scenario, out = "out";
    int threads = 0;
    std::vector<int> levels;

    auto* run = app.add_subcommand("run", "integrate one scenario");
    run->add_option("--scenario", scenario, "scenario JSON file")->required();
    run->add_option("--out", out, "output directory");
    run->add_option("--threads", threads, "worker thread cap (0 = default)");

    auto* sweep = app.add_subcommand("sweep", "refinement sweep over truncation levels");
    sweep->add_option("--scenario", scenario, "scenario JSON file")->required();
    sweep->add_option("--out", out, "output directory");
    sweep->add_option("--levels", levels, "truncation levels (default n,2n,4n)");
    sweep->add_option("--threads", threads, "worker thread cap");

    auto* audit = app.add_subcommand("audit", "structural and inequality audits");
    audit->add_option("--scenario", scenario, "scenario JSON file or run directory")->required();
    audit->add_option("--out", out, "output directory");
    audit->add_option("--threads", threads, "worker thread cap");

    coagfrag::DualityParams dp;
    auto* duality = app.add_subcommand("duality", "maximal-regularity constant estimation");
    duality->add_option("--m", dp.m, "diffusion constant");
    duality->add_option("--q", dp.q, "Lebesgue exponent");
    duality->add_option("--trials", dp.trials, "random forcings");
    duality->add_option("--cells", dp.cells, "probe grid cells");
    duality->add_option("--T", dp.T, "probe time window");
    duality->add_option("--steps", dp.steps, "backward-Euler steps");
    duality->add_option("--seed", dp.seed, "forcing seed");
    duality->add_option("--a", dp.a, "closeness check: min diffusion");
    duality->add_option("--b", dp.b, "closeness check: max diffusion");
    duality->add_option("--p", dp.p, "closeness check: exponent");
    bool closeness = false;
    duality->add_flag("--closeness", closeness, "run the closeness check with --a/--b/--p");
    duality->add_option("--out", out, "output directory");
    duality->add_option("--threads", threads, "worker thread cap");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return coagfrag::cmd_run(scenario, out, threads);
    if (sweep->parsed()) return coagfrag::cmd_sweep(scenario, out, levels, threads);
    if (audit->parsed()) return coagfrag::cmd_audit(scenario, out, threads);
    if (duality->parsed()) {
        dp.check_closeness = closeness;
        return coagfrag::cmd_duality(dp, out, threads);
    }
    return coagfrag::exit_error;
}
