#pragma once

#include "driftlab/errors.hpp"
#include "driftlab/grid.hpp"
#include "driftlab/hardliners.hpp"
#include "driftlab/params.hpp"
#include "driftlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace driftlab {

/// Which drift the hardliner-forced solver uses.
enum class HardlinerForm {
    /// rho_H << rho: the density-gradient drift divides by rho alone.
    Approximate,
    /// Divide by rho + rho_H, as in the unsimplified neighborhood average.
    Exact,
};

/// Everything the continuum operators need besides the density itself.
struct FieldContext {
    const BeliefGrid& grid;
    const ModelParams& params;
    const PotentialSpec& potential;
    const HardlinerSpec* hardliners = nullptr;
    HardlinerForm form = HardlinerForm::Approximate;

    /// Mass carried by the mobile population: (1 - r) N.
    double normal_mass() const {
        return params.n_total() * (1.0 - (hardliners ? hardliners->ratio() : 0.0));
    }
    /// Lower clamp applied before dividing by rho.
    double floor() const { return 1e-12 * params.n_total() / (2.0 * grid.half_width()); }
};

namespace detail {

struct CellTables {
    std::vector<double> v;    // V(x_i)
    std::vector<double> rho_h;  // rho_H(x_i)
};

inline CellTables cell_tables(const FieldContext& ctx) {
    const auto n = ctx.grid.size();
    CellTables t{std::vector<double>(n), std::vector<double>(n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = ctx.grid.center(i);
        t.v[i] = ctx.potential.value_unchecked(x);
        if (ctx.hardliners) t.rho_h[i] = ctx.hardliners->density(ctx.params.n_total(), x);
    }
    return t;
}

/**
 * Face-flux coefficients for j = -A (rho_{i+1} - rho_i)/dx - mu rhobar G + B H, where
 *   A = sigma^2/2 - mu phi - mu kappa rhobar     (effective diffusion)
 *   G = d(V - kappa rho_H)/dx,  H = d rho_H/dx,  B = mu phi
 * and phi = 1 (approximate form) or rhobar / (rhobar + rho_H) (exact form).
 */
struct FaceCoefficients {
    std::vector<double> a;  // interior faces k = 1..n-1 stored at k-1
    std::vector<double> g;
    std::vector<double> source;  // B H
};

inline FaceCoefficients face_coefficients(const FieldContext& ctx, const CellTables& t,
                                          const std::vector<double>& rho) {
    const auto n = ctx.grid.size();
    const double dx = ctx.grid.dx();
    const double mu = ctx.params.mu();
    const double kappa = ctx.params.kappa();
    const double half_s2 = 0.5 * ctx.params.sigma() * ctx.params.sigma();
    const double fl = ctx.floor();
    FaceCoefficients c{std::vector<double>(n - 1), std::vector<double>(n - 1), std::vector<double>(n - 1)};
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double rbar = 0.5 * (rho[k] + rho[k + 1]);
        const double hbar = 0.5 * (t.rho_h[k] + t.rho_h[k + 1]);
        double phi = 1.0;
        if (ctx.form == HardlinerForm::Exact && hbar > 0.0) {
            const double r = std::max(rbar, fl);
            phi = r / (r + hbar);
        }
        const double dvh = (t.rho_h[k + 1] - t.rho_h[k]) / dx;
        c.a[k] = half_s2 - mu * phi - mu * kappa * rbar;
        c.g[k] = (t.v[k + 1] - t.v[k]) / dx - kappa * dvh;
        c.source[k] = mu * phi * dvh;
    }
    return c;
}

inline void check_finite(const std::vector<double>& v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << what << ": non-finite value at cell " << i;
            throw NumericalError(os.str());
        }
}

}  // namespace detail

/// Flux on the n+1 faces; the two boundary faces are zero (reflecting walls).
inline std::vector<double> flux(const FieldContext& ctx, const std::vector<double>& rho) {
    const auto n = ctx.grid.size();
    if (rho.size() != n) throw ConfigError("flux: density size does not match grid");
    const auto t = detail::cell_tables(ctx);
    const auto c = detail::face_coefficients(ctx, t, rho);
    const double dx = ctx.grid.dx();
    const double mu = ctx.params.mu();
    std::vector<double> j(n + 1, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double rbar = 0.5 * (rho[k] + rho[k + 1]);
        j[k + 1] = -c.a[k] * (rho[k + 1] - rho[k]) / dx - mu * rbar * c.g[k] + c.source[k];
    }
    detail::check_finite(j, "flux");
    return j;
}

inline std::vector<double> flux(const BeliefGrid& grid, const std::vector<double>& rho,
                                const ModelParams& params, const PotentialSpec& spec,
                                const HardlinerSpec* hardliners = nullptr,
                                HardlinerForm form = HardlinerForm::Approximate) {
    return flux(FieldContext{grid, params, spec, hardliners, form}, rho);
}

/**
 * Particle drift per cell: mu (ln eta_t)' + mu (rho' + rho_H')/rho, where
 * ln eta_t = -V + kappa (rho + rho_H). Central differences inside, one-sided at the walls.
 */
inline std::vector<double> drift_field(const FieldContext& ctx, const std::vector<double>& rho) {
    const auto n = ctx.grid.size();
    if (rho.size() != n) throw ConfigError("drift_field: density size does not match grid");
    const auto t = detail::cell_tables(ctx);
    const double mu = ctx.params.mu();
    const double kappa = ctx.params.kappa();
    const double fl = ctx.floor();
    const double dx = ctx.grid.dx();

    std::vector<double> rho_c(n);
    for (std::size_t i = 0; i < n; ++i) rho_c[i] = std::max(rho[i], fl);
    auto ddx = [&](const std::vector<double>& f, std::size_t i) {
        if (i == 0) return (f[1] - f[0]) / dx;
        if (i + 1 == n) return (f[n - 1] - f[n - 2]) / dx;
        return (f[i + 1] - f[i - 1]) / (2.0 * dx);
    };
    std::vector<double> lneta(n);
    for (std::size_t i = 0; i < n; ++i) lneta[i] = -t.v[i] + kappa * (rho_c[i] + t.rho_h[i]);

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double denom = rho_c[i];
        if (ctx.form == HardlinerForm::Exact) denom += t.rho_h[i];
        out[i] = mu * ddx(lneta, i) + mu * (ddx(rho_c, i) + ddx(t.rho_h, i)) / denom;
    }
    detail::check_finite(out, "drift_field");
    return out;
}

inline std::vector<double> drift_field(const BeliefGrid& grid, const std::vector<double>& rho,
                                       const ModelParams& params, const PotentialSpec& spec,
                                       const HardlinerSpec* hardliners = nullptr,
                                       HardlinerForm form = HardlinerForm::Approximate) {
    return drift_field(FieldContext{grid, params, spec, hardliners, form}, rho);
}

/// Composite Simpson rule for f on the grid faces (n is even, so the panel count is even).
inline double simpson_on_faces(const BeliefGrid& grid, const std::function<double(double)>& f) {
    const auto n = grid.size();
    double s = f(grid.face(0)) + f(grid.face(n));
    for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(grid.face(k));
    return s * grid.dx() / 3.0;
}

/// Closed-form kappa = 0 steady state N exp(-(mu/D) V) / Z.
inline std::vector<double> boltzmann_reference(const BeliefGrid& grid, const ModelParams& params,
                                               const PotentialSpec& spec, double mass) {
    const double beta = params.mu() / params.diffusion();
    const double z = simpson_on_faces(grid, [&](double x) { return std::exp(-beta * spec.value_unchecked(x)); });
    std::vector<double> rho(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        rho[i] = mass * std::exp(-beta * spec.value_unchecked(grid.center(i))) / z;
    return rho;
}

inline std::vector<double> boltzmann_reference(const BeliefGrid& grid, const ModelParams& params,
                                               const PotentialSpec& spec) {
    if (params.kappa() != 0.0)
        throw ConfigError("boltzmann_reference: closed form only holds for kappa = 0");
    return boltzmann_reference(grid, params, spec, params.n_total());
}

struct SolverOptions {
    double tol = 1e-8;
    std::size_t max_iter = 5'000'000;
    /// Upper bound on the adaptive pseudo-time step.
    double max_dtau = 1e3;
    HardlinerForm form = HardlinerForm::Approximate;
    /// Optional per-iteration callback (iteration, residual).
    std::function<void(std::size_t, double)> on_iteration;
};

struct SteadyStateSolution {
    BeliefGrid grid;
    std::vector<double> rho;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::vector<double> residual_history;
};

/// max_i |j_{i+1/2} - j_{i-1/2}| / (N / 2L), the scaled flux divergence times dx.
inline double steady_residual(const FieldContext& ctx, const std::vector<double>& j) {
    double r = 0.0;
    for (std::size_t i = 0; i + 1 < j.size(); ++i) r = std::max(r, std::abs(j[i + 1] - j[i]));
    return r / (ctx.params.n_total() / (2.0 * ctx.grid.half_width()));
}

namespace detail {

// Thomas algorithm; a = sub, b = diag, c = super. Overwrites d with the solution.
inline void solve_tridiagonal(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                              std::vector<double>& d) {
    const auto n = d.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = a[i] / b[i - 1];
        b[i] -= m * c[i - 1];
        d[i] -= m * d[i - 1];
    }
    d[n - 1] /= b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

}  // namespace detail

/**
 * Steady state of the nonlinear diffusion-drift equation with zero-flux walls:
 *
 *   D rho'' + mu (rho V_E')' - (kappa mu / 2) (rho^2)'' = mu rho_H'',  V_E = V - kappa rho_H.
 *
 * Marches d rho / d tau = -dj/dx with a backward-Euler step whose face coefficients
 * (effective diffusion, hardliner weighting) are lagged one iterate. The step is conservative,
 * so mass is preserved to round-off; it is also renormalized each iteration.
 * The pseudo-time step grows while the residual falls and is halved on negative density
 * or lost positivity of the effective diffusion.
 */
inline SteadyStateSolution solve_steady_state(const BeliefGrid& grid, const ModelParams& params,
                                              const PotentialSpec& spec, const HardlinerSpec* hardliners,
                                              const SolverOptions& opts = {}) {
    if (!(opts.tol > 0.0)) throw ConfigError("solver.tol: must be > 0");
    if (!(params.diffusion() > 0.0)) throw ConfigError("params: diffusion constant D must be positive");
    if (std::abs(grid.half_width() - spec.half_width()) > 1e-12 * spec.half_width())
        throw ConfigError("grid: half-width must match potential.domain_half_width");
    const HardlinerSpec* h = (hardliners && hardliners->active()) ? hardliners : nullptr;
    const FieldContext ctx{grid, params, spec, h, opts.form};
    const auto n = grid.size();
    const double dx = grid.dx();
    const double mu = params.mu();
    const double mass = ctx.normal_mass();
    const auto tables = detail::cell_tables(ctx);

    auto renormalize = [&](std::vector<double>& r) {
        const double m = integrate(grid, r);
        for (double& v : r) v *= mass / m;
    };
    auto min_diffusion = [&](const detail::FaceCoefficients& c) {
        double a = c.a.empty() ? 1.0 : c.a[0];
        std::size_t at = 0;
        for (std::size_t k = 0; k < c.a.size(); ++k)
            if (c.a[k] < a) a = c.a[k], at = k;
        return std::pair{a, at};
    };

    // Initial iterate: the kappa = 0, hardliner-free Boltzmann profile.
    std::vector<double> rho;
    if (mu > 0.0) {
        rho = boltzmann_reference(grid, params.with_kappa(0.0), spec, mass);
    } else {
        rho.assign(n, mass / (2.0 * grid.half_width()));
    }
    renormalize(rho);

    SteadyStateSolution sol{grid, rho, 0.0, 0, {}};
    auto coeffs = detail::face_coefficients(ctx, tables, rho);
    double max_rho = *std::max_element(rho.begin(), rho.end());
    const double dtau0 =
        0.4 * dx * dx / std::max(params.diffusion(), mu * params.kappa() * max_rho);
    const double dtau_floor = dtau0 * 1e-9;
    double dtau = dtau0;
    double residual = steady_residual(ctx, flux(ctx, rho));
    sol.residual_history.push_back(residual);
    if (opts.on_iteration) opts.on_iteration(0, residual);

    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    std::size_t iter = 0;
    while (residual > opts.tol) {
        if (iter >= opts.max_iter) {
            std::ostringstream os;
            os << "steady state not reached after " << iter << " iterations (residual " << residual
               << ", tol " << opts.tol << ")";
            throw NonConvergenceError(os.str(), residual);
        }
        const auto [amin, amin_at] = min_diffusion(coeffs);
        if (!(amin > 0.0)) {
            std::ostringstream os;
            os << "effective diffusion D - mu kappa rho is non-positive (" << amin << ") at face "
               << amin_at + 1 << ": density exceeds the nonlinear-diffusion threshold D/(mu kappa)";
            throw NumericalError(os.str());
        }

        // Assemble (I/dtau) rho_new + div j(rho_new) = rho_old/dtau with lagged coefficients.
        const double inv = 1.0 / dtau;
        for (std::size_t i = 0; i < n; ++i) {
            sub[i] = 0.0;
            sup[i] = 0.0;
            diag[i] = inv;
            rhs[i] = rho[i] * inv;
        }
        // Face between cells k and k+1: j = -A/dx (r_{k+1} - r_k) - mu G/2 (r_k + r_{k+1}) + S.
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const double cl = coeffs.a[k] / dx - 0.5 * mu * coeffs.g[k];   // coefficient of r_k
            const double cr = -coeffs.a[k] / dx - 0.5 * mu * coeffs.g[k];  // coefficient of r_{k+1}
            const double s = coeffs.source[k];
            // Cell k gains +j/dx, cell k+1 gains -j/dx.
            diag[k] += cl / dx;
            sup[k] += cr / dx;
            rhs[k] -= s / dx;
            sub[k + 1] -= cl / dx;
            diag[k + 1] -= cr / dx;
            rhs[k + 1] += s / dx;
        }
        std::vector<double> candidate = rhs;
        detail::solve_tridiagonal(sub, diag, sup, candidate);

        bool ok = true;
        for (double v : candidate)
            if (!(v >= 0.0) || !std::isfinite(v)) {
                ok = false;
                break;
            }
        detail::FaceCoefficients next_coeffs;
        double next_residual = 0.0;
        if (ok) {
            renormalize(candidate);
            next_coeffs = detail::face_coefficients(ctx, tables, candidate);
            ok = min_diffusion(next_coeffs).first > 0.0;
        }
        if (ok) {
            next_residual = steady_residual(ctx, flux(ctx, candidate));
            ok = std::isfinite(next_residual);
        }
        ++iter;
        if (!ok || next_residual > 2.0 * residual) {
            dtau *= 0.5;
            if (dtau < dtau_floor) {
                const auto [a, at] = min_diffusion(coeffs);
                std::ostringstream os;
                os << "pseudo-time step underflow at iteration " << iter << " (residual " << residual
                   << ", min effective diffusion " << a << " at face " << at + 1 << ")";
                throw NumericalError(os.str());
            }
            continue;
        }
        dtau = std::min(opts.max_dtau, next_residual < residual ? dtau * 2.0 : dtau);
        rho = std::move(candidate);
        coeffs = std::move(next_coeffs);
        residual = next_residual;
        sol.residual_history.push_back(residual);
        if (opts.on_iteration) opts.on_iteration(iter, residual);
    }
    sol.rho = std::move(rho);
    sol.residual = residual;
    sol.iterations = iter;
    return sol;
}

inline SteadyStateSolution solve_steady_state(const BeliefGrid& grid, const ModelParams& params,
                                              const PotentialSpec& spec,
                                              const std::optional<HardlinerSpec>& hardliners,
                                              const SolverOptions& opts = {}) {
    return solve_steady_state(grid, params, spec, hardliners ? &*hardliners : nullptr, opts);
}

/// Cell-average restriction onto a coarser grid whose cell count divides the fine one.
inline std::vector<double> restrict_to(const BeliefGrid& fine, const std::vector<double>& values,
                                       std::size_t coarse_cells) {
    if (coarse_cells == 0 || fine.size() % coarse_cells != 0)
        throw ConfigError("restrict_to: coarse cell count must divide the fine one");
    const std::size_t f = fine.size() / coarse_cells;
    std::vector<double> out(coarse_cells, 0.0);
    for (std::size_t i = 0; i < fine.size(); ++i) out[i / f] += values[i];
    for (double& v : out) v /= static_cast<double>(f);
    return out;
}

}  // namespace driftlab
