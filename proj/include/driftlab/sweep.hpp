#pragma once

#include "driftlab/config.hpp"
#include "driftlab/fp_solver.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/particles.hpp"
#include "driftlab/visibility.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace driftlab {

/// Runs job(i) for i in [0, n) on up to `workers` threads; each index is claimed exactly once.
template <class Job>
void run_jobs(std::size_t n, unsigned workers, Job&& job) {
    const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline VisibilityOptions pde_visibility(const RunConfig& cfg, std::size_t cells) {
    // PDE densities on fine grids are smooth already.
    return {cfg.analysis.prominence, cells < 512};
}

inline SolverOptions solver_options(const RunConfig& cfg) {
    SolverOptions o;
    o.tol = cfg.solver.tol;
    o.max_iter = cfg.solver.max_iter;
    o.form = cfg.solver.hardliner_form;
    return o;
}

inline SteadyStateSolution solve_config(const RunConfig& cfg, SolverOptions opts) {
    const auto h = cfg.hardliner_spec();
    return solve_steady_state(cfg.belief_grid(), cfg.params, cfg.potential, h, opts);
}

inline SimulationOptions simulation_options(const RunConfig& cfg, unsigned workers = 1) {
    SimulationOptions o;
    o.interaction_bins = cfg.sim.bins;
    o.interaction_bandwidth = cfg.sim.bandwidth;
    o.output_bins = cfg.sim.bins;
    o.tail_fraction = cfg.sim.tail_fraction;
    o.workers = workers;
    return o;
}

inline std::vector<std::uint64_t> seed_list(const RunConfig& cfg) {
    std::vector<std::uint64_t> seeds(cfg.sim.seeds);
    for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = cfg.sim.seed + k;
    return seeds;
}

struct SeedRun {
    std::uint64_t seed = 0;
    RunResult result;
    BifurcationReport report;
};

/// Per-seed quasi-stationary runs plus their pooled (seed-averaged) tail density.
struct ParticleEnsemble {
    std::vector<SeedRun> runs;
    DensityEstimate pooled;
    BifurcationReport pooled_report;
    double q_mean = 0.0;
    double q_stderr = 0.0;
};

/**
 * One particle run per seed. Seeds are spread over `workers` threads; each run is
 * single-threaded, so the outcome does not depend on the worker count.
 */
inline ParticleEnsemble run_particle_ensemble(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                              unsigned workers = 1, bool keep_snapshots = false) {
    if (seeds.empty()) throw ConfigError("sim.seeds: need at least one seed");
    const auto h = cfg.hardliner_spec();
    PopulationInit init;
    init.mobile_count = cfg.sim.particles;
    init.hardliner_count = cfg.sim.hardliner_particles;
    init.initial_std = cfg.sim.initial_std;
    const auto opts = simulation_options(cfg, 1);
    const VisibilityOptions vis{cfg.analysis.prominence, true};

    ParticleEnsemble ens;
    ens.runs.resize(seeds.size());
    run_jobs(seeds.size(), workers, [&](std::size_t k) {
        const auto pop = make_population(cfg.params, cfg.potential, h, init, seeds[k]);
        auto res = run(pop, cfg.params, cfg.potential, cfg.sim.steps, seeds[k], cfg.sim.snapshot_every, opts);
        if (!keep_snapshots) res.snapshots.clear();
        auto rep = bifurcation_visibility(res.tail_average.values, res.tail_average.grid, vis);
        ens.runs[k] = SeedRun{seeds[k], std::move(res), rep};
    });

    const auto& grid = ens.runs.front().result.tail_average.grid;
    std::vector<double> pooled(grid.size(), 0.0);
    double qsum = 0.0;
    for (const auto& r : ens.runs) {
        for (std::size_t b = 0; b < pooled.size(); ++b) pooled[b] += r.result.tail_average.values[b];
        qsum += r.report.q;
    }
    const double n = static_cast<double>(ens.runs.size());
    for (double& v : pooled) v /= n;
    ens.q_mean = qsum / n;
    if (ens.runs.size() > 1) {
        double ss = 0.0;
        for (const auto& r : ens.runs) ss += (r.report.q - ens.q_mean) * (r.report.q - ens.q_mean);
        ens.q_stderr = std::sqrt(ss / (n - 1.0) / n);
    }
    ens.pooled = DensityEstimate{grid, std::move(pooled), ens.runs.front().result.tail_average.bandwidth};
    ens.pooled_report = bifurcation_visibility(ens.pooled.values, grid, vis);
    return ens;
}

/// Both solvers on one parameter set, compared on the particle histogram bins.
struct Comparison {
    SteadyStateSolution pde;
    ParticleEnsemble particles;
    std::vector<double> pde_binned;
    BifurcationReport pde_report;
    double total_variation = 0.0;
    double delta_q = 0.0;
};

inline Comparison compare_solvers(const RunConfig& cfg, unsigned workers = 1) {
    if (cfg.grid.cells % cfg.sim.bins != 0)
        throw ConfigError("grid.cells: must be a multiple of sim.bins for solver comparison");
    Comparison c;
    c.pde = solve_config(cfg, solver_options(cfg));
    c.particles = run_particle_ensemble(cfg, seed_list(cfg), workers);
    c.pde_binned = restrict_to(c.pde.grid, c.pde.rho, cfg.sim.bins);
    const auto& grid = c.particles.pooled.grid;
    c.pde_report = bifurcation_visibility(c.pde_binned, grid, {cfg.analysis.prominence, true});
    c.total_variation = total_variation(c.particles.pooled.values, c.pde_binned, grid.dx());
    c.delta_q = std::abs(c.particles.pooled_report.q - c.pde_report.q);
    return c;
}

struct SweepRow {
    double value = 0.0;
    double q = 0.0;
    double q_stderr = 0.0;
    std::optional<double> peak_left;
    std::optional<double> peak_right;
    double valley = 0.0;
    SolverKind solver = SolverKind::Pde;
    /// "ok" or a failure message.
    std::string status = "ok";
    double residual = 0.0;
    std::size_t iterations = 0;

    bool ok() const { return status == "ok"; }
};

struct SweepResult {
    std::string axis;
    std::vector<double> values;
    RunConfig fixed;
    std::vector<SweepRow> rows;

    std::size_t failures() const {
        std::size_t f = 0;
        for (const auto& r : rows) f += r.ok() ? 0 : 1;
        return f;
    }
};

/**
 * One steady-state solve (or seed-averaged particle run) per axis value. Invalid axis values
 * are rejected up front; numerical failures are recorded in their row.
 */
inline SweepResult sweep(const RunConfig& base, const std::string& axis, const std::vector<double>& values,
                         SolverKind solver, unsigned workers = 1) {
    if (values.empty()) throw ConfigError("sweep.values: axis grid is empty");
    std::vector<RunConfig> points;
    points.reserve(values.size());
    for (double v : values) {
        try {
            points.push_back(with_axis_value(base, axis, v));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("sweep.values: ") + axis + " = " + config_detail::format_double(v) +
                              " is invalid: " + e.what());
        }
    }

    SweepResult out;
    out.axis = axis;
    out.values = values;
    out.fixed = base;
    out.rows.resize(values.size());
    auto job = [&](std::size_t i) {
        SweepRow row;
        row.value = values[i];
        row.solver = solver;
        try {
            if (solver == SolverKind::Pde) {
                const auto sol = solve_config(points[i], solver_options(points[i]));
                const auto rep = bifurcation_visibility(sol.rho, sol.grid, pde_visibility(points[i], sol.grid.size()));
                row.q = rep.q;
                row.peak_left = rep.peak_left;
                row.peak_right = rep.peak_right;
                row.valley = rep.valley_height;
                row.residual = sol.residual;
                row.iterations = sol.iterations;
            } else {
                const auto ens = run_particle_ensemble(points[i], seed_list(points[i]), 1);
                row.q = ens.q_mean;
                row.q_stderr = ens.q_stderr;
                row.peak_left = ens.pooled_report.peak_left;
                row.peak_right = ens.pooled_report.peak_right;
                row.valley = ens.pooled_report.valley_height;
            }
        } catch (const NumericalError& e) {
            row.status = std::string("failed: ") + e.what();
        }
        out.rows[i] = std::move(row);
    };
    run_jobs(values.size(), workers, job);
    if (out.failures() == out.rows.size()) throw NumericalError("sweep: every point failed (" + out.rows.front().status + ")");
    return out;
}

inline SweepResult sweep(const RunConfig& cfg, unsigned workers = 1) {
    if (!cfg.sweep) throw ConfigError("sweep: config has no [sweep] section");
    return sweep(cfg, cfg.sweep->axis, cfg.sweep->values, cfg.sweep->solver, workers);
}

}  // namespace driftlab
