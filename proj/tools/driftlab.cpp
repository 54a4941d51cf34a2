#include "driftlab/driftlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace driftlab;

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> seeds;
    std::optional<double> tol;
    std::optional<std::size_t> cells;
    std::optional<unsigned> workers;
    bool plot = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "INI config file (defaults apply when omitted)");
    cmd->add_option("--out", f.out, "output directory (overrides [output] dir)");
    cmd->add_option("--seed", f.seed, "first seed");
    cmd->add_option("--seeds", f.seeds, "number of seeds");
    cmd->add_option("--tol", f.tol, "steady-state residual tolerance");
    cmd->add_option("--cells", f.cells, "PDE grid cells");
    cmd->add_option("--workers", f.workers, "worker threads (default: DRIFTLAB_WORKERS or core count)")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--plot", f.plot, "also write an SVG plot (sweep)");
}

/// Loads the config, applies flag overrides and revalidates through a serialize/parse round trip.
RunConfig resolve(const Flags& f) {
    RunConfig cfg;
    if (!f.config.empty()) {
        if (!fs::exists(f.config)) throw ConfigError("config: file not found: '" + f.config + "'");
        cfg = load_config(f.config);
    }
    if (f.out) cfg.output_dir = *f.out;
    if (f.seed) cfg.sim.seed = *f.seed;
    if (f.seeds) cfg.sim.seeds = *f.seeds;
    if (f.tol) cfg.solver.tol = *f.tol;
    if (f.cells) cfg.grid.cells = *f.cells;
    auto checked = parse_config_string(serialize_config(cfg));
    checked.potential = cfg.potential;  // keeps a tabulated well loaded from a file bit-identical
    return checked;
}

unsigned workers_of(const Flags& f) { return f.workers ? *f.workers : default_workers(); }

fs::path prepare_dir(const RunConfig& cfg) {
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("output.dir: cannot create '" + dir.string() + "': " + ec.message());
    return dir;
}

json opt_json(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json report_json(const RunConfig& cfg, const std::string& command, unsigned workers) {
    json r;
    r["tool"] = "driftlab";
    r["version"] = DRIFTLAB_VERSION;
    r["git"] = DRIFTLAB_GIT_DESCRIBE;
    r["command"] = command;
    r["workers"] = workers;
    r["config"] = serialize_config(cfg);
    return r;
}

json bifurcation_json(const BifurcationReport& b) {
    return json{{"q", b.q},
                {"peak_left", opt_json(b.peak_left)},
                {"peak_right", opt_json(b.peak_right)},
                {"peak_height", b.peak_height},
                {"valley_height", b.valley_height}};
}

void write_json(const fs::path& path, const json& j) { CsvWriter::write_text(path, j.dump(2) + "\n"); }

int cmd_solve(const Flags& f) {
    const auto cfg = resolve(f);
    const auto dir = prepare_dir(cfg);
    const auto h = cfg.hardliner_spec();
    auto report = report_json(cfg, "solve", 1);

    const auto sol = solve_config(cfg, solver_options(cfg));
    const FieldContext ctx{sol.grid, cfg.params, cfg.potential, h ? &*h : nullptr, cfg.solver.hardliner_form};
    const auto j = flux(ctx, sol.rho);
    const auto drift = drift_field(ctx, sol.rho);

    CsvWriter csv({"bin_center", "density", "flux", "drift"});
    for (std::size_t i = 0; i < sol.rho.size(); ++i)
        csv.row({num(sol.grid.center(i)), num(sol.rho[i]), num(0.5 * (j[i] + j[i + 1])), num(drift[i])});
    csv.save(dir / "solution.csv");

    CsvWriter conv({"iteration", "residual"});
    for (std::size_t k = 0; k < sol.residual_history.size(); ++k)
        conv.row({std::to_string(k), num(sol.residual_history[k])});
    conv.save(dir / "convergence.csv");

    const auto rep = bifurcation_visibility(sol.rho, sol.grid, pde_visibility(cfg, sol.grid.size()));
    report["solver"] = {{"iterations", sol.iterations}, {"residual", sol.residual}, {"cells", sol.grid.size()}};
    report["mass"] = integrate(sol.grid, sol.rho);
    report["q"] = rep.q;
    report["bifurcation"] = bifurcation_json(rep);
    if (cfg.params.kappa() == 0.0 && !(h && h->active())) {
        const auto ref = boltzmann_reference(sol.grid, cfg.params, cfg.potential);
        const auto oracle = bifurcation_visibility(ref, sol.grid, pde_visibility(cfg, sol.grid.size()));
        report["oracle_q"] = oracle.q;
    }
    write_json(dir / "report.json", report);
    std::cout << "Q = " << num(rep.q) << " after " << sol.iterations << " iterations, residual " << num(sol.residual)
              << "\n";
    return 0;
}

std::string seed_tag(std::uint64_t seed) { return "snapshots_seed" + std::to_string(seed); }

int cmd_simulate(const Flags& f) {
    const auto cfg = resolve(f);
    const auto dir = prepare_dir(cfg);
    const unsigned workers = workers_of(f);
    const auto seeds = seed_list(cfg);
    auto report = report_json(cfg, "simulate", workers);
    report["seeds"] = seeds;

    const auto ens = run_particle_ensemble(cfg, seeds, workers, true);
    json per_seed = json::array();
    for (const auto& r : ens.runs) {
        CsvWriter csv({"time", "bin_center", "density"});
        for (const auto& snap : r.result.snapshots)
            for (std::size_t b = 0; b < snap.density.values.size(); ++b)
                csv.row({num(snap.time), num(snap.density.grid.center(b)), num(snap.density.values[b])});
        csv.save(dir / (seed_tag(r.seed) + ".csv"));

        json side{{"seed", r.seed},
                  {"particles", cfg.sim.particles},
                  {"steps", cfg.sim.steps},
                  {"dt", cfg.params.dt()},
                  {"bins", cfg.sim.bins},
                  {"bandwidth", r.result.tail_average.bandwidth},
                  {"snapshots", r.result.snapshots.size()},
                  {"tail_samples", r.result.tail_samples},
                  {"degenerate_neighborhoods", r.result.stats.degenerate_neighborhoods},
                  {"q", r.report.q}};
        write_json(dir / (seed_tag(r.seed) + ".json"), side);
        per_seed.push_back({{"seed", r.seed}, {"q", r.report.q}});
    }

    CsvWriter tail({"bin_center", "density"});
    for (std::size_t b = 0; b < ens.pooled.values.size(); ++b)
        tail.row({num(ens.pooled.grid.center(b)), num(ens.pooled.values[b])});
    tail.save(dir / "tail_density.csv");

    report["q"] = ens.q_mean;
    report["q_stderr"] = ens.q_stderr;
    report["per_seed"] = per_seed;
    report["pooled"] = bifurcation_json(ens.pooled_report);
    write_json(dir / "report.json", report);
    std::cout << "Q = " << num(ens.q_mean) << " +- " << num(ens.q_stderr) << " over " << seeds.size() << " seeds\n";
    return 0;
}

int cmd_sweep(const Flags& f) {
    const auto cfg = resolve(f);
    if (!cfg.sweep) throw ConfigError("sweep: config has no [sweep] section");
    const unsigned workers = workers_of(f);
    if (cfg.sweep->values.empty()) throw ConfigError("sweep.values: axis grid is empty");
    const auto dir = prepare_dir(cfg);
    auto report = report_json(cfg, "sweep", workers);
    if (cfg.sweep->solver == SolverKind::Particle) report["seeds"] = seed_list(cfg);

    const auto res = sweep(cfg, workers);
    CsvWriter csv({"axis_value", "q", "q_stderr", "peak_left", "peak_right", "valley", "solver", "status"});
    std::vector<double> qs;
    for (const auto& r : res.rows) {
        const bool ok = r.ok();
        csv.row({num(r.value), ok ? num(r.q) : "", ok ? num(r.q_stderr) : "", num(r.peak_left), num(r.peak_right),
                 ok ? num(r.valley) : "", r.solver == SolverKind::Pde ? "pde" : "particle", r.status});
        qs.push_back(ok ? r.q : std::nan(""));
    }
    csv.save(dir / "sweep.csv");
    if (f.plot)
        CsvWriter::write_text(dir / ("q_vs_" + res.axis + ".svg"), svg_line_plot(res.values, qs, res.axis, "Q"));

    json rows = json::array();
    for (const auto& r : res.rows)
        rows.push_back({{"value", r.value}, {"q", r.q}, {"status", r.status}, {"iterations", r.iterations},
                        {"residual", r.residual}});
    report["axis"] = res.axis;
    report["rows"] = rows;
    report["failures"] = res.failures();
    write_json(dir / "report.json", report);
    std::cout << res.rows.size() << " points, " << res.failures() << " failed\n";
    return 0;
}

int cmd_compare(const Flags& f) {
    const auto cfg = resolve(f);
    const unsigned workers = workers_of(f);
    const auto dir = prepare_dir(cfg);
    auto report = report_json(cfg, "compare", workers);
    report["seeds"] = seed_list(cfg);

    const auto c = compare_solvers(cfg, workers);
    const auto& grid = c.particles.pooled.grid;
    CsvWriter csv({"bin_center", "pde_density", "particle_density"});
    for (std::size_t b = 0; b < grid.size(); ++b)
        csv.row({num(grid.center(b)), num(c.pde_binned[b]), num(c.particles.pooled.values[b])});
    csv.save(dir / "comparison.csv");

    report["total_variation"] = c.total_variation;
    report["delta_q"] = c.delta_q;
    report["pde"] = bifurcation_json(c.pde_report);
    report["pde"]["iterations"] = c.pde.iterations;
    report["pde"]["residual"] = c.pde.residual;
    report["particle"] = bifurcation_json(c.particles.pooled_report);
    report["particle"]["q_seed_mean"] = c.particles.q_mean;
    report["particle"]["q_seed_stderr"] = c.particles.q_stderr;
    write_json(dir / "report.json", report);
    std::cout << "TV = " << num(c.total_variation) << ", |dQ| = " << num(c.delta_q) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftlab: opinion drift-diffusion solver and particle simulator"};
    app.set_version_flag("--version", std::string(DRIFTLAB_VERSION) + " (" + DRIFTLAB_GIT_DESCRIBE + ")");
    app.require_subcommand(1);

    Flags flags;
    auto* solve = app.add_subcommand("solve", "steady-state Fokker-Planck solve");
    auto* simulate = app.add_subcommand("simulate", "particle simulation over a seed list");
    auto* sweep_cmd = app.add_subcommand("sweep", "Q along one parameter axis");
    auto* compare = app.add_subcommand("compare", "particle vs PDE stationary density");
    for (auto* c : {solve, simulate, sweep_cmd, compare}) add_common(c, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*solve) return cmd_solve(flags);
        if (*simulate) return cmd_simulate(flags);
        if (*sweep_cmd) return cmd_sweep(flags);
        return cmd_compare(flags);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
