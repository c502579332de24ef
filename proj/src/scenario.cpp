#include "coagfrag/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace coagfrag {

using nlohmann::json;

namespace {

const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double require_number(const json& j, const std::string& key) {
    const json* v = find(j, key.substr(key.rfind('.') + 1).c_str());
    if (!v || !v->is_number()) throw ScenarioError(key, "missing or not a number");
    return v->get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    const json* v = find(j, key.substr(key.rfind('.') + 1).c_str());
    if (!v) return fallback;
    if (!v->is_number()) throw ScenarioError(key, "not a number");
    return v->get<double>();
}

std::vector<double> number_list(const json& v, const std::string& key) {
    if (!v.is_array()) throw ScenarioError(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ScenarioError(key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Grid parse_domain(const json& root) {
    const json* dom = find(root, "domain");
    if (!dom) throw ScenarioError("domain", "missing block");
    int dim = int(number_or(*dom, "domain.dim", 0));

    std::vector<double> lengths;
    if (const json* L = find(*dom, "lengths")) {
        if (L->is_number())
            lengths = {L->get<double>()};
        else
            lengths = number_list(*L, "domain.lengths");
    } else {
        lengths = {1.0};
    }
    std::vector<int> cells;
    if (const json* C = find(*dom, "cells")) {
        if (C->is_number_integer()) {
            cells = {C->get<int>()};
        } else {
            for (double v : number_list(*C, "domain.cells")) cells.push_back(int(v));
        }
    } else {
        throw ScenarioError("domain.cells", "missing");
    }
    if (dim == 0) dim = int(cells.size());
    if (dim != 1 && dim != 2) throw ScenarioError("domain.dim", "must be 1 or 2");
    if (int(cells.size()) != dim) throw ScenarioError("domain.cells", "entry count must match dim");
    if (int(lengths.size()) == 1 && dim == 2) lengths.push_back(lengths[0]);
    if (int(lengths.size()) != dim) throw ScenarioError("domain.lengths", "entry count must match dim");
    for (double L : lengths)
        if (!(L > 0.0)) throw ScenarioError("domain.lengths", "must be positive");
    for (int c : cells)
        if (c < 1) throw ScenarioError("domain.cells", "must be >= 1");
    if (dim == 1) return Grid::interval(lengths[0], cells[0]);
    return Grid::rectangle(lengths[0], lengths[1], cells[0], cells[1]);
}

KernelSet parse_kernels(const json& root, int n) {
    KernelSet ks;
    const json* coag = find(root, "coagulation");
    if (!coag) throw ScenarioError("coagulation", "missing block");
    std::string type = coag->value("type", "power_law");
    if (type == "power_law") {
        PowerLawCoagulation p;
        p.scale = number_or(*coag, "coagulation.C_Q", 1.0);
        p.alpha = number_or(*coag, "coagulation.alpha", 0.0);
        p.beta = number_or(*coag, "coagulation.beta", 0.0);
        if (p.scale < 0.0) throw ScenarioError("coagulation.C_Q", "must be >= 0");
        if (p.alpha < 0.0 || p.alpha > 1.0) throw ScenarioError("coagulation.alpha", "must be in [0,1]");
        if (p.beta < 0.0 || p.beta > 1.0) throw ScenarioError("coagulation.beta", "must be in [0,1]");
        ks.coagulation = p;
    } else if (type == "table") {
        const json* vals = find(*coag, "values");
        if (!vals || !vals->is_array()) throw ScenarioError("coagulation.values", "missing table rows");
        CoagulationTable t;
        t.n = int(vals->size());
        if (t.n < 1 || t.n > max_table_size) throw ScenarioError("coagulation.values", "table size out of range");
        t.values.reserve(std::size_t(t.n) * t.n);
        for (const auto& row : *vals) {
            auto r = number_list(row, "coagulation.values");
            if (int(r.size()) != t.n) throw ScenarioError("coagulation.values", "table must be square");
            t.values.insert(t.values.end(), r.begin(), r.end());
        }
        ks.coagulation = std::move(t);
    } else {
        throw ScenarioError("coagulation.type", "unknown type: " + type);
    }

    const json* frag = find(root, "fragmentation");
    if (frag) {
        type = frag->value("type", "power_law");
        if (type == "power_law") {
            PowerLawFragmentation p;
            p.scale = number_or(*frag, "fragmentation.C_F", 1.0);
            p.gamma = number_or(*frag, "fragmentation.gamma", 1.0);
            if (p.scale < 0.0) throw ScenarioError("fragmentation.C_F", "must be >= 0");
            ks.fragmentation = p;
        } else if (type == "table") {
            const json* vals = find(*frag, "values");
            if (!vals) throw ScenarioError("fragmentation.values", "missing");
            FragmentationTable t;
            t.values = number_list(*vals, "fragmentation.values");
            if (t.n() < 1 || t.n() > max_table_size)
                throw ScenarioError("fragmentation.values", "table size out of range");
            ks.fragmentation = std::move(t);
        } else {
            throw ScenarioError("fragmentation.type", "unknown type: " + type);
        }
    } else {
        ks.fragmentation = PowerLawFragmentation{0.0, 1.0};   // no fragmentation
    }

    const json* dgt = find(root, "daughters");
    if (dgt) {
        type = dgt->value("type", "power_law");
        if (type == "power_law") {
            PowerLawDaughters p;
            p.nu = number_or(*dgt, "daughters.nu", 0.0);
            if (!(p.nu > -2.0)) throw ScenarioError("daughters.nu", "must be > -2");
            ks.daughters = p;
        } else if (type == "table") {
            const json* vals = find(*dgt, "values");
            if (!vals || !vals->is_array()) throw ScenarioError("daughters.values", "missing table rows");
            DaughterTable t;
            t.n = int(vals->size()) + 1;   // rows start at i = 2
            if (t.n > max_table_size) throw ScenarioError("daughters.values", "table size out of range");
            int i = 2;
            for (const auto& row : *vals) {
                auto r = number_list(row, "daughters.values");
                if (int(r.size()) != i - 1)
                    throw ScenarioError("daughters.values", "row for size i must have i-1 entries");
                t.rows.push_back(std::move(r));
                ++i;
            }
            ks.daughters = std::move(t);
        } else {
            throw ScenarioError("daughters.type", "unknown type: " + type);
        }
    } else {
        ks.daughters = PowerLawDaughters{0.0};
    }

    if (ks.size_limit() < n) throw ScenarioError("truncation.n", "kernel tables smaller than n");
    return ks;
}

DiffusionSpec parse_diffusion(const json& root) {
    DiffusionSpec spec;
    const json* dif = find(root, "diffusion");
    if (!dif) return spec;
    const std::string type = dif->value("type", "constant");
    if (type == "constant") {
        spec.type = DiffusionSpec::Type::constant;
        spec.d = number_or(*dif, "diffusion.d", 1.0);
    } else if (type == "convergent") {
        spec.type = DiffusionSpec::Type::convergent;
        spec.d1 = require_number(*dif, "diffusion.d1");
        spec.d_inf = require_number(*dif, "diffusion.d_inf");
    } else if (type == "explicit") {
        spec.type = DiffusionSpec::Type::explicit_list;
        const json* vals = find(*dif, "values");
        if (!vals) throw ScenarioError("diffusion.values", "missing");
        spec.values = number_list(*vals, "diffusion.values");
        spec.tail = number_or(*dif, "diffusion.tail", spec.values.empty() ? 1.0 : spec.values.back());
    } else {
        throw ScenarioError("diffusion.type", "unknown type: " + type);
    }
    return spec;
}

InitialSpec parse_initial(const json& root, int n) {
    InitialSpec spec;
    const json* ini = find(root, "initial");
    if (!ini) return spec;
    const std::string type = ini->value("type", "monodisperse");
    if (type == "monodisperse")
        spec.type = InitialSpec::Type::monodisperse;
    else if (type == "geometric")
        spec.type = InitialSpec::Type::geometric;
    else if (type == "per_species")
        spec.type = InitialSpec::Type::per_species;
    else
        throw ScenarioError("initial.type", "unknown type: " + type);

    const std::string density = ini->value("density", "uniform");
    if (density == "uniform")
        spec.density = InitialSpec::Density::uniform;
    else if (density == "gaussian_bump")
        spec.density = InitialSpec::Density::gaussian_bump;
    else
        throw ScenarioError("initial.density", "unknown density: " + density);

    const json* params = find(*ini, "params");
    if (params) {
        spec.mass = number_or(*params, "initial.params.mass", 1.0);
        spec.base = number_or(*params, "initial.params.base", 0.0);
        spec.amplitude = number_or(*params, "initial.params.amplitude", 1.0);
        spec.sigma = number_or(*params, "initial.params.sigma", 0.1);
        if (const json* c = find(*params, "center"))
            spec.center = number_list(*c, "initial.params.center");
        if (const json* sp = find(*params, "species")) {
            if (!sp->is_array()) throw ScenarioError("initial.params.species", "expected [[i, c], ...]");
            for (const auto& e : *sp) {
                auto pair = number_list(e, "initial.params.species");
                if (pair.size() != 2) throw ScenarioError("initial.params.species", "expected [i, c] pairs");
                const int i = int(pair[0]);
                if (i < 1 || i > n) throw ScenarioError("initial.params.species", "species index out of 1..n");
                if (pair[1] < 0.0) throw ScenarioError("initial.params.species", "concentrations must be >= 0");
                spec.amounts.emplace_back(i, pair[1]);
            }
        }
    }
    if (spec.type == InitialSpec::Type::per_species && spec.amounts.empty())
        throw ScenarioError("initial.params.species", "per_species initial data needs species entries");
    if (!(spec.sigma > 0.0)) throw ScenarioError("initial.params.sigma", "must be positive");
    if (spec.mass < 0.0 || spec.base < 0.0 || spec.amplitude < 0.0)
        throw ScenarioError("initial.params", "density parameters must be >= 0");
    return spec;
}

}

std::vector<double> diffusion_coefficients(const DiffusionSpec& spec, int n) {
    std::vector<double> d(std::size_t(n) + 1, 0.0);
    switch (spec.type) {
        case DiffusionSpec::Type::constant:
            for (int i = 1; i <= n; ++i) d[std::size_t(i)] = spec.d;
            break;
        case DiffusionSpec::Type::convergent:
            for (int i = 1; i <= n; ++i)
                d[std::size_t(i)] = spec.d_inf + (spec.d1 - spec.d_inf) / double(i);
            break;
        case DiffusionSpec::Type::explicit_list:
            for (int i = 1; i <= n; ++i)
                d[std::size_t(i)] = (i <= int(spec.values.size())) ? spec.values[std::size_t(i - 1)]
                                                                   : spec.tail;
            break;
    }
    for (int i = 1; i <= n; ++i)
        if (!(d[std::size_t(i)] > 0.0))
            throw ScenarioError("diffusion", "all coefficients must be positive (d_" +
                                                 std::to_string(i) + " is not)");
    return d;
}

std::vector<double> ScenarioConfig::resolved_sample_times() const {
    std::vector<double> t = outputs.sample_times;
    if (outputs.sample_count > 0) {
        const int count = outputs.sample_count;
        if (count == 1 || T == 0.0) {
            t.push_back(0.0);
            if (T > 0.0 && count > 1) t.push_back(T);
        } else {
            for (int k = 0; k < count; ++k) t.push_back(T * double(k) / double(count - 1));
        }
    }
    if (t.empty()) t = {0.0, T};
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end(),
                        [&](double a, double b) { return std::abs(a - b) <= 1e-15 * std::max(1.0, T); }),
            t.end());
    return t;
}

TruncatedState ScenarioConfig::initial_state() const {
    TruncatedState s(n, grid);
    Field rho(grid, 1.0);
    if (initial.density == InitialSpec::Density::uniform) {
        for (auto& v : rho.v) v = initial.mass;
    } else {
        std::vector<double> center = initial.center;
        if (int(center.size()) != grid.dim()) {
            center.assign(std::size_t(grid.dim()), 0.0);
            for (int a = 0; a < grid.dim(); ++a) center[std::size_t(a)] = 0.5 * grid.length(a);
        }
        for (int c = 0; c < grid.cell_count(); ++c) {
            double r2 = 0.0;
            for (int a = 0; a < grid.dim(); ++a) {
                const double dx = grid.center(c, a) - center[std::size_t(a)];
                r2 += dx * dx;
            }
            rho[std::size_t(c)] =
                initial.base + initial.amplitude * std::exp(-r2 / (2.0 * initial.sigma * initial.sigma));
        }
    }

    switch (initial.type) {
        case InitialSpec::Type::monodisperse:
            s.species(1).v = rho.v;
            break;
        case InitialSpec::Type::geometric:
            // c_i = rho * 2^{-i} / 2, so sum_i i c_i = rho up to the cut tail.
            for (int i = 1; i <= n; ++i) {
                const double w = 0.5 * std::pow(2.0, -double(i));
                for (std::size_t c = 0; c < rho.size(); ++c) s.species(i)[c] = w * rho[c];
            }
            break;
        case InitialSpec::Type::per_species:
            for (const auto& [i, amount] : initial.amounts)
                for (std::size_t c = 0; c < rho.size(); ++c) s.species(i)[c] += amount * rho[c];
            break;
    }
    return s;
}

ScenarioConfig parse_scenario(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioError("json", e.what());
    }
    ScenarioConfig cfg;
    cfg.grid = parse_domain(root);

    const json* trunc = find(root, "truncation");
    if (!trunc) throw ScenarioError("truncation", "missing block");
    const double n_raw = require_number(*trunc, "truncation.n");
    if (n_raw < 2 || n_raw != std::floor(n_raw)) throw ScenarioError("truncation.n", "must be an integer >= 2");
    cfg.n = int(n_raw);
    const std::string mode = trunc->value("mode", "conservative");
    if (mode == "conservative")
        cfg.mode = TruncationMode::conservative;
    else if (mode == "full_loss")
        cfg.mode = TruncationMode::full_loss;
    else
        throw ScenarioError("truncation.mode", "must be \"conservative\" or \"full_loss\"");

    cfg.kernels = parse_kernels(root, cfg.n);
    cfg.diffusion = parse_diffusion(root);
    diffusion_coefficients(cfg.diffusion, cfg.n);   // reject nonpositive entries now
    cfg.initial = parse_initial(root, cfg.n);

    const json* time = find(root, "time");
    if (!time) throw ScenarioError("time", "missing block");
    cfg.T = require_number(*time, "time.T");
    if (!(cfg.T >= 0.0)) throw ScenarioError("time.T", "must be >= 0");
    cfg.stepper.dt_init = number_or(*time, "time.dt_init", cfg.stepper.dt_init);
    cfg.stepper.dt_max = number_or(*time, "time.dt_max", cfg.stepper.dt_max);
    cfg.stepper.rtol = number_or(*time, "time.rtol", cfg.stepper.rtol);
    cfg.stepper.atol = number_or(*time, "time.atol", cfg.stepper.atol);
    cfg.stepper.safety = number_or(*time, "time.safety", cfg.stepper.safety);
    if (!(cfg.stepper.dt_init > 0.0)) throw ScenarioError("time.dt_init", "must be positive");
    if (!(cfg.stepper.dt_max > 0.0)) throw ScenarioError("time.dt_max", "must be positive");
    if (!(cfg.stepper.rtol > 0.0)) throw ScenarioError("time.rtol", "must be positive");
    if (!(cfg.stepper.atol > 0.0)) throw ScenarioError("time.atol", "must be positive");
    if (!(cfg.stepper.safety > 0.0 && cfg.stepper.safety < 1.0))
        throw ScenarioError("time.safety", "must be in (0,1)");

    if (const json* outs = find(root, "outputs")) {
        if (const json* mo = find(*outs, "moment_orders")) {
            cfg.outputs.moment_orders = number_list(*mo, "outputs.moment_orders");
            for (double k : cfg.outputs.moment_orders)
                if (k < 0.0) throw ScenarioError("outputs.moment_orders", "orders must be >= 0");
        }
        if (const json* st = find(*outs, "sample_times"))
            cfg.outputs.sample_times = number_list(*st, "outputs.sample_times");
        cfg.outputs.sample_count = int(number_or(*outs, "outputs.sample_count", 0));
        if (const json* st = find(*outs, "snapshot_times"))
            cfg.outputs.snapshot_times = number_list(*st, "outputs.snapshot_times");
        if (const json* dl = find(*outs, "dissipation_orders")) {
            cfg.outputs.dissipation_orders = number_list(*dl, "outputs.dissipation_orders");
            for (double l : cfg.outputs.dissipation_orders)
                if (!(l > 1.0)) throw ScenarioError("outputs.dissipation_orders", "orders must be > 1");
            if (!cfg.outputs.dissipation_orders.empty() &&
                (!cfg.kernels.coag_is_power_law() || !cfg.kernels.frag_power_law()))
                throw ScenarioError("outputs.dissipation_orders",
                                    "dissipation audits need power-law coagulation and fragmentation");
        }
        if (const json* lp = find(*outs, "mass_lp"))
            cfg.outputs.mass_lp_exponents = number_list(*lp, "outputs.mass_lp");
        cfg.outputs.record_states = outs->value("record_states", false);
        for (double t : cfg.outputs.sample_times)
            if (t < 0.0 || t > cfg.T * (1.0 + 1e-12))
                throw ScenarioError("outputs.sample_times", "sample times must lie in [0, T]");
        for (double t : cfg.outputs.snapshot_times)
            if (t < 0.0 || t > cfg.T * (1.0 + 1e-12))
                throw ScenarioError("outputs.snapshot_times", "snapshot times must lie in [0, T]");
    }

    if (const json* s = find(root, "seed")) {
        if (!s->is_number_integer()) throw ScenarioError("seed", "must be an integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    if (const json* sol = find(root, "solver")) {
        cfg.reaction_path = sol->value("reaction_path", "auto");
        if (cfg.reaction_path != "auto" && cfg.reaction_path != "direct" && cfg.reaction_path != "fast")
            throw ScenarioError("solver.reaction_path", "must be auto, direct or fast");
        if (cfg.reaction_path == "fast" && !cfg.kernels.coag_is_power_law())
            throw ScenarioError("solver.reaction_path", "fast path needs power-law coagulation");
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("file", "cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string resolved_scenario_json(const ScenarioConfig& cfg) {
    json j;
    j["domain"]["dim"] = cfg.grid.dim();
    j["domain"]["lengths"] = (cfg.grid.dim() == 1)
                                 ? json::array({cfg.grid.length(0)})
                                 : json::array({cfg.grid.length(0), cfg.grid.length(1)});
    j["domain"]["cells"] = (cfg.grid.dim() == 1) ? json::array({cfg.grid.cells(0)})
                                                 : json::array({cfg.grid.cells(0), cfg.grid.cells(1)});
    j["truncation"]["n"] = cfg.n;
    j["truncation"]["mode"] = to_string(cfg.mode);

    if (const auto* p = cfg.kernels.coag_power_law()) {
        j["coagulation"] = {{"type", "power_law"}, {"C_Q", p->scale}, {"alpha", p->alpha}, {"beta", p->beta}};
    } else {
        const auto& t = std::get<CoagulationTable>(cfg.kernels.coagulation);
        j["coagulation"]["type"] = "table";
        json rows = json::array();
        for (int i = 0; i < t.n; ++i)
            rows.push_back(std::vector<double>(t.values.begin() + std::size_t(i) * t.n,
                                               t.values.begin() + std::size_t(i + 1) * t.n));
        j["coagulation"]["values"] = rows;
    }
    if (const auto* p = cfg.kernels.frag_power_law()) {
        j["fragmentation"] = {{"type", "power_law"}, {"C_F", p->scale}, {"gamma", p->gamma}};
    } else {
        j["fragmentation"]["type"] = "table";
        j["fragmentation"]["values"] = std::get<FragmentationTable>(cfg.kernels.fragmentation).values;
    }
    if (const auto* p = cfg.kernels.daughters_power_law()) {
        j["daughters"] = {{"type", "power_law"}, {"nu", p->nu}};
    } else {
        j["daughters"]["type"] = "table";
        j["daughters"]["values"] = std::get<DaughterTable>(cfg.kernels.daughters).rows;
    }

    switch (cfg.diffusion.type) {
        case DiffusionSpec::Type::constant:
            j["diffusion"] = {{"type", "constant"}, {"d", cfg.diffusion.d}};
            break;
        case DiffusionSpec::Type::convergent:
            j["diffusion"] = {{"type", "convergent"}, {"d1", cfg.diffusion.d1}, {"d_inf", cfg.diffusion.d_inf}};
            break;
        case DiffusionSpec::Type::explicit_list:
            j["diffusion"] = {{"type", "explicit"}, {"values", cfg.diffusion.values}, {"tail", cfg.diffusion.tail}};
            break;
    }

    const char* itype = cfg.initial.type == InitialSpec::Type::monodisperse ? "monodisperse"
                        : cfg.initial.type == InitialSpec::Type::geometric  ? "geometric"
                                                                            : "per_species";
    j["initial"]["type"] = itype;
    j["initial"]["density"] =
        cfg.initial.density == InitialSpec::Density::uniform ? "uniform" : "gaussian_bump";
    if (cfg.initial.density == InitialSpec::Density::uniform) {
        j["initial"]["params"]["mass"] = cfg.initial.mass;
    } else {
        j["initial"]["params"]["base"] = cfg.initial.base;
        j["initial"]["params"]["amplitude"] = cfg.initial.amplitude;
        j["initial"]["params"]["sigma"] = cfg.initial.sigma;
        if (!cfg.initial.center.empty()) j["initial"]["params"]["center"] = cfg.initial.center;
    }
    if (cfg.initial.type == InitialSpec::Type::per_species) {
        json sp = json::array();
        for (const auto& [i, c] : cfg.initial.amounts) sp.push_back(json::array({i, c}));
        j["initial"]["params"]["species"] = sp;
    }

    j["time"] = {{"T", cfg.T},          {"dt_init", cfg.stepper.dt_init}, {"dt_max", cfg.stepper.dt_max},
                 {"rtol", cfg.stepper.rtol}, {"atol", cfg.stepper.atol},  {"safety", cfg.stepper.safety}};
    j["outputs"]["moment_orders"] = cfg.outputs.moment_orders;
    j["outputs"]["sample_times"] = cfg.outputs.sample_times;
    j["outputs"]["sample_count"] = cfg.outputs.sample_count;
    j["outputs"]["snapshot_times"] = cfg.outputs.snapshot_times;
    j["outputs"]["dissipation_orders"] = cfg.outputs.dissipation_orders;
    j["outputs"]["mass_lp"] = cfg.outputs.mass_lp_exponents;
    j["outputs"]["record_states"] = cfg.outputs.record_states;
    j["seed"] = cfg.seed;
    j["solver"]["reaction_path"] = cfg.reaction_path;
    return j.dump(2);
}

}
