// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "driftlab/driftlab.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace driftlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    const auto t0 = Clock::now();
    Outcome o{false, ""};
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  criterion %2d  %-28s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
}

const PotentialSpec kWell;  // quartic, h = 1, w = 1, L = 2

double linf_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]) / b[i]);
    return e;
}

double boltzmann_error(std::size_t cells) {
    const auto p = ModelParams::make(1.0, 2.3, 0.0, 0.1, 1e8);
    const BeliefGrid g(2.0, cells);
    const auto sol = solve_steady_state(g, p, kWell, nullptr);
    return linf_rel(sol.rho, boltzmann_reference(g, p, kWell));
}

// --- criterion 3: flux divergence vs the expanded steady-state operator -------------------

struct Manufactured {
    std::string name;
    std::function<double(double)> rho;
    ModelParams params;
    std::optional<HardlinerSpec> hardliners;
};

/// max over interior cells of |-(dj/dx) - rhs| / max|rhs|, both discretized independently.
double identity_gap(const Manufactured& m, std::size_t cells) {
    const BeliefGrid g(2.0, cells);
    const auto& p = m.params;
    const HardlinerSpec* h = m.hardliners ? &*m.hardliners : nullptr;
    const double dx = g.dx(), mu = p.mu(), kappa = p.kappa(), D = p.diffusion();
    std::vector<double> rho(cells), rho_h(cells, 0.0), ve_prime(cells);
    for (std::size_t i = 0; i < cells; ++i) {
        const double x = g.center(i);
        rho[i] = m.rho(x);
        if (h) rho_h[i] = h->density(p.n_total(), x);
        ve_prime[i] = kWell.derivative_unchecked(x) - (h ? kappa * h->density_derivative(p.n_total(), x) : 0.0);
    }
    const auto j = flux(g, rho, p, kWell, h);
    double gap = 0.0, scale = 0.0;
    for (std::size_t i = 1; i + 1 < cells; ++i) {
        const double lhs = -(j[i + 1] - j[i]) / dx;
        auto d2 = [&](const std::vector<double>& f) { return (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dx * dx); };
        const double rho2_pp = (rho[i + 1] * rho[i + 1] - 2.0 * rho[i] * rho[i] + rho[i - 1] * rho[i - 1]) / (dx * dx);
        const double drift = (rho[i + 1] * ve_prime[i + 1] - rho[i - 1] * ve_prime[i - 1]) / (2.0 * dx);
        const double rhs = D * d2(rho) + mu * drift - 0.5 * kappa * mu * rho2_pp - mu * d2(rho_h);
        gap = std::max(gap, std::abs(lhs - rhs));
        scale = std::max(scale, std::abs(rhs));
    }
    return gap / scale;
}

// --- criterion 4: single-step drift on a uniform lattice ------------------------------------

/**
 * Relative error of the sigma = 0 one-step displacement against alpha (eps^2/3)(-V'(x)).
 * The lattice has spacing eps/(m + 1/2) and passes through x, so window edges fall on midpoints.
 */
double drift_error(double eps, double x, std::size_t m) {
    auto params = ModelParams::make(1.0, 2.3, 0.0, eps, 1e8);
    params = params.with_dt(1.0 / params.alpha_rate());
    const double h = eps / (static_cast<double>(m) + 0.5);
    const double L = kWell.half_width();
    const long lo = static_cast<long>(std::ceil((-L - x) / h)), hi = static_cast<long>(std::floor((L - x) / h));
    Population pop;
    pop.model_n = 1e8;
    pop.half_width = L;
    std::size_t probe = 0;
    for (long k = lo; k <= hi; ++k) {
        if (k == 0) probe = pop.mobile.size();
        pop.mobile.push_back(x + static_cast<double>(k) * h);
    }
    SimulationOptions o;
    o.deterministic = true;
    const auto next = step(pop, params, kWell, 1, o);
    const double moved = (next.mobile[probe] - x) / params.alpha_step();
    const double closed = eps * eps / 3.0 * -kWell.derivative_unchecked(x);
    return std::abs(moved - closed) / std::abs(closed);
}

// --- trend helpers ----------------------------------------------------------------------------

RunConfig base_config(double mu, double sigma, double kappa) {
    RunConfig c;
    c.params = ModelParams::make(mu, sigma, kappa, 0.1, 1e8);
    c.grid.cells = 1024;
    return c;
}

std::vector<double> sweep_q(const RunConfig& base, const std::string& axis, const std::vector<double>& values) {
    const auto r = sweep(base, axis, values, SolverKind::Pde, default_workers());
    std::vector<double> q;
    for (const auto& row : r.rows) {
        if (!row.ok()) throw NumericalError(axis + " = " + fmt(row.value) + ": " + row.status);
        q.push_back(row.q);
    }
    return q;
}

std::string series(const std::vector<double>& q) {
    std::string s = "Q=[";
    for (std::size_t i = 0; i < q.size(); ++i) s += (i ? " " : "") + fmt(q[i], 3);
    return s + "]";
}

bool non_decreasing(const std::vector<double>& q) {
    for (std::size_t i = 1; i < q.size(); ++i)
        if (q[i] < q[i - 1] - 1e-12) return false;
    return true;
}

bool non_increasing(std::vector<double> q) {
    std::reverse(q.begin(), q.end());
    return non_decreasing(q);
}

}  // namespace

int main() {
    const auto start = Clock::now();

    report(1, "boltzmann-oracle", [] {
        const auto t0 = Clock::now();
        const double e = boltzmann_error(1024);
        const double t = seconds_since(t0);
        return Outcome{e <= 1e-3 && t <= 10.0, "linf_rel=" + fmt(e) + " (<=1e-3), " + fmt(t, 3) + " s (<=10)"};
    });

    report(2, "grid-convergence", [] {
        const double e512 = boltzmann_error(512), e1024 = boltzmann_error(1024), e2048 = boltzmann_error(2048);
        const double f1 = e512 / e1024, f2 = e1024 / e2048;
        return Outcome{f1 >= 3.5, "err 512/1024=" + fmt(f1) + " (>=3.5), 1024/2048=" + fmt(f2) + " (info)"};
    });

    report(3, "flux-divergence-identity", [] {
        const auto lin = ModelParams::make(1.0, 2.3, 0.0, 0.1, 1e8);
        const auto nl = ModelParams::make(1.0, 2.3, 5e-9, 0.1, 1e8);
        const auto hl = ModelParams::make(1.0, 2.0, 2e-9, 0.1, 1e8);
        const std::vector<Manufactured> cases{
            {"cosine", [](double x) { return 2.5e7 * (1.0 + 0.5 * std::cos(1.5 * x)); }, lin, std::nullopt},
            {"bimodal", [](double x) {
                 return 4e7 * (std::exp(-2.0 * (x - 0.9) * (x - 0.9)) + std::exp(-2.0 * (x + 0.9) * (x + 0.9)) + 0.1);
             }, nl, std::nullopt},
            {"skewed+hardliners", [](double x) { return 2e7 * (1.2 + std::sin(x) + 0.3 * std::cos(2.0 * x)); }, hl,
             HardlinerSpec(0.05, {-1.0, 1.0}, 0.2, 2.0)},
        };
        bool ok = true;
        std::string detail;
        for (const auto& c : cases) {
            const double g1 = identity_gap(c, 256), g2 = identity_gap(c, 512), g3 = identity_gap(c, 1024);
            const double s1 = std::log2(g1 / g2), s2 = std::log2(g2 / g3);
            ok = ok && s1 >= 1.9 && s2 >= 1.9;
            detail += c.name + ": gap@1024=" + fmt(g3, 3) + " slopes " + fmt(s1, 3) + "/" + fmt(s2, 3) + "; ";
        }
        return Outcome{ok, detail + "(slope>=1.9)"};
    });

    report(4, "drift-fidelity", [] {
        // 0.5 w is the gated probe; the other points are printed for context.
        const std::size_t m = 40000;
        const double L = 2.0;
        auto orders = [&](double x) {
            const double e1 = drift_error(0.2 * L, x, m), e2 = drift_error(0.1 * L, x, m),
                         e3 = drift_error(0.05 * L, x, m);
            return std::array<double, 5>{e1, e2, e3, std::log2(e1 / e2), std::log2(e2 / e3)};
        };
        const auto g = orders(0.5);
        std::string detail = "x=0.5: rel err " + fmt(g[0], 3) + "/" + fmt(g[1], 3) + "/" + fmt(g[2], 3) + ", order " +
                             fmt(g[3], 4) + "/" + fmt(g[4], 4) + " (>=2)";
        for (double x : {0.3, 1.4}) {
            const auto o = orders(x);
            detail += "; x=" + fmt(x) + " order " + fmt(o[3], 3) + "/" + fmt(o[4], 3) + " (info)";
        }
        return Outcome{g[3] >= 2.0 && g[4] >= 2.0, detail};
    });

    report(5, "cross-solver-agreement", [] {
        const auto t0 = Clock::now();
        RunConfig c = base_config(1.0, 2.3, 5e-9);
        c.sim.particles = 50000;
        c.sim.seeds = 10;
        const auto r = compare_solvers(c, default_workers());
        const double t = seconds_since(t0);
        const bool ok = r.total_variation <= 0.05 && r.delta_q <= 0.05 && t <= 300.0;
        return Outcome{ok, "TV=" + fmt(r.total_variation, 3) + " (<=0.05), |dQ|=" + fmt(r.delta_q, 3) +
                               " (<=0.05), Q_pde=" + fmt(r.pde_report.q, 3) + " Q_particle=" +
                               fmt(r.particles.pooled_report.q, 3) + ", " + fmt(t, 3) + " s (<=300)"};
    });

    report(6, "trend-overload-N", [] {
        const auto q = sweep_q(base_config(1.0, 2.3, 5e-9), "N", {4.7e4, 4.7e5, 4.7e6, 4.7e7, 4.7e8});
        const double rise = q.back() - q.front();
        return Outcome{non_decreasing(q) && rise >= 0.2, series(q) + " rise=" + fmt(rise, 3) + " (>=0.2)"};
    });

    report(7, "trend-diversity-sigma", [] {
        const auto q = sweep_q(base_config(1.0, 2.3, 0.0), "sigma", {1.6, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0, 12.0});
        return Outcome{non_increasing(q) && q.back() == 0.0, series(q) + " non-increasing, ends at 0"};
    });

    report(8, "trend-impressionability-mu", [] {
        const auto q0 = sweep_q(base_config(1.0, 2.3, 0.0), "mu", {0.25, 0.5, 1.0, 1.5, 2.0, 2.5});
        const auto q1 = sweep_q(base_config(1.0, 2.5, 5e-9), "mu", {0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75});
        return Outcome{non_decreasing(q0) && non_decreasing(q1),
                       "kappa=0: " + series(q0) + "; sigma=2.5 kappa=5e-9: " + series(q1)};
    });

    report(9, "trend-hardliners-r", [] {
        RunConfig c = base_config(1.0, 2.0, 2e-9);
        const std::vector<double> rs{0.0, 0.01, 0.02, 0.05, 0.1};
        const auto q = sweep_q(c, "ratio", rs);
        const double gain = q[3] - q[0];
        return Outcome{non_decreasing(q) && gain >= 0.1, series(q) + " Q(0.05)-Q(0)=" + fmt(gain, 3) + " (>=0.1)"};
    });

    report(10, "invariant-properties", [] {
        std::string detail;
        bool ok = true;
        // PDE mass and mirror symmetry, with and without hardliners.
        {
            const auto p = ModelParams::make(1.0, 2.0, 2e-9, 0.1, 1e8);
            const HardlinerSpec h(0.05, {-1.0, 1.0}, std::sqrt(0.001), 2.0);
            const BeliefGrid g(2.0, 1024);
            double mass_err = 0.0, asym = 0.0;
            for (const HardlinerSpec* hp : {static_cast<const HardlinerSpec*>(nullptr), &h}) {
                const auto s = solve_steady_state(g, p, kWell, hp);
                const double target = hp ? 0.95e8 : 1e8;
                mass_err = std::max(mass_err, std::abs(integrate(g, s.rho) / target - 1.0));
                const double top = *std::max_element(s.rho.begin(), s.rho.end());
                for (std::size_t i = 0; i < 512; ++i) asym = std::max(asym, std::abs(s.rho[i] - s.rho[1023 - i]) / top);
            }
            ok = ok && mass_err <= 1e-12 && asym <= 1e-10;
            detail += "pde mass err " + fmt(mass_err, 2) + ", asym " + fmt(asym, 2) + "; ";
        }
        // Particle mass and worker-count determinism.
        {
            const auto p = ModelParams::make(1.0, 2.3, 5e-9, 0.1, 1e8);
            const HardlinerSpec h(0.05, {-1.0, 1.0}, std::sqrt(0.001), 2.0);
            const auto pop = make_population(p, kWell, h, {20000, 0, 0}, 3);
            std::vector<double> ref;
            bool same = true;
            double mass_err = 0.0;
            for (unsigned w : {1u, 2u, 4u}) {
                SimulationOptions o;
                o.workers = w;
                const auto r = run(pop, p, kWell, 25, 11, 0, o);
                if (ref.empty()) ref = r.final_population.mobile;
                else same = same && r.final_population.mobile == ref;
                mass_err = std::max(mass_err, std::abs(r.tail_average.mass() / 0.95e8 - 1.0));
                same = same && r.final_population.hardliners == pop.hardliners;
            }
            ok = ok && same && mass_err <= 1e-12;
            detail += std::string("particles deterministic over workers 1/2/4: ") + (same ? "yes" : "no") +
                      ", mass err " + fmt(mass_err, 2) + "; ";
        }
        // Q invariances on an asymmetric bimodal profile.
        {
            const BeliefGrid g(2.0, 128);
            std::vector<double> d(128);
            for (std::size_t i = 0; i < 128; ++i) {
                const double x = g.center(i);
                d[i] = (1.0 + 0.3 * x) * (std::exp(-4 * (x - 0.9) * (x - 0.9)) + std::exp(-4 * (x + 0.9) * (x + 0.9))) + 0.05;
            }
            const double q = bifurcation_visibility(d, g).q;
            auto scaled = d;
            for (double& v : scaled) v *= 3.7e8;
            auto mirrored = d;
            std::reverse(mirrored.begin(), mirrored.end());
            const double ds = std::abs(bifurcation_visibility(scaled, g).q - q);
            const double dm = std::abs(bifurcation_visibility(mirrored, g).q - q);
            ok = ok && ds <= 1e-12 && dm <= 1e-12;
            detail += "Q scale/mirror drift " + fmt(ds, 2) + "/" + fmt(dm, 2) + "; ";
        }
        // PDE sweep bit-reproducible across worker counts.
        {
            const auto base = base_config(1.0, 2.3, 5e-9);
            const auto a = sweep(base, "N", {1e7, 1e8}, SolverKind::Pde, 1);
            const auto b = sweep(base, "N", {1e7, 1e8}, SolverKind::Pde, 2);
            const bool same = a.rows[0].q == b.rows[0].q && a.rows[1].q == b.rows[1].q;
            ok = ok && same;
            detail += std::string("sweep reproducible: ") + (same ? "yes" : "no");
        }
        return Outcome{ok, detail};
    });

    std::printf("total %.1f s, %d failed\n", seconds_since(start), failures);
    return failures == 0 ? 0 : 1;
}
