#pragma once

#include "driftlab/density.hpp"
#include "driftlab/errors.hpp"
#include "driftlab/hardliners.hpp"
#include "driftlab/parallel.hpp"
#include "driftlab/params.hpp"
#include "driftlab/philox.hpp"
#include "driftlab/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace driftlab {

/**
 * M mobile sample agents standing in for a population of volume N, plus fixed hardliners.
 *
 * Mobile particles carry weight (1 - r) N / M each and hardliners r N / H, so the
 * total weight is N whatever the sample sizes.
 */
struct Population {
    std::vector<double> mobile;
    std::vector<double> hardliners;
    double model_n = 1.0;
    double hardliner_ratio = 0.0;
    double half_width = 2.0;
    double time = 0.0;
    std::uint64_t step_index = 0;

    double mobile_weight() const {
        return mobile.empty() ? 0.0 : (1.0 - hardliner_ratio) * model_n / static_cast<double>(mobile.size());
    }
    double hardliner_weight() const {
        return hardliners.empty() ? 0.0 : hardliner_ratio * model_n / static_cast<double>(hardliners.size());
    }
    double total_weight() const {
        return mobile_weight() * static_cast<double>(mobile.size()) +
               hardliner_weight() * static_cast<double>(hardliners.size());
    }
};

/// Folds x back into [-L, L] as a reflecting wall would.
inline double reflect_into(double x, double L) noexcept {
    for (int guard = 0; guard < 64 && (x > L || x < -L); ++guard) x = x > L ? 2.0 * L - x : -2.0 * L - x;
    return std::clamp(x, -L, L);
}

// Stream ids for the noise source. Mobile particle i uses stream i; initial draws use a reserved step.
inline constexpr std::uint64_t kHardlinerStreamBase = std::uint64_t{1} << 62;
inline constexpr std::uint64_t kInitialStep = std::numeric_limits<std::uint64_t>::max();

struct PopulationInit {
    std::size_t mobile_count = 50000;
    /// Hardliner sample count; 0 picks the count that equalizes per-particle weights.
    std::size_t hardliner_count = 0;
    /// Std of the initial Gaussian around the neutral point; <= 0 means 0.3 w.
    double initial_std = 0.0;
};

inline Population make_population(const ModelParams& params, const PotentialSpec& spec,
                                  const std::optional<HardlinerSpec>& hardliners,
                                  const PopulationInit& init, std::uint64_t seed) {
    if (init.mobile_count == 0) throw ConfigError("sim.particles: need at least one mobile particle");
    Population pop;
    pop.model_n = params.n_total();
    pop.half_width = spec.half_width();
    const double L = spec.half_width();
    const double s0 = init.initial_std > 0.0 ? init.initial_std : 0.3 * spec.well_position();
    const NoiseSource noise(seed);
    pop.mobile.resize(init.mobile_count);
    for (std::size_t i = 0; i < init.mobile_count; ++i)
        pop.mobile[i] = reflect_into(s0 * noise.normal(i, kInitialStep), L);

    if (hardliners && hardliners->active()) {
        const double r = hardliners->ratio();
        pop.hardliner_ratio = r;
        std::size_t h = init.hardliner_count;
        if (h == 0) h = static_cast<std::size_t>(std::llround(r / (1.0 - r) * static_cast<double>(init.mobile_count)));
        h = std::max<std::size_t>(2, h + (h % 2));
        pop.hardliners.resize(h);
        for (std::size_t j = 0; j < h; ++j) {
            const double c = hardliners->centers()[j % 2];
            const double z = noise.normal(kHardlinerStreamBase + j, kInitialStep);
            pop.hardliners[j] = reflect_into(c + hardliners->std_dev() * z, L);
        }
    }
    return pop;
}

/// Density of the whole population (mobile plus hardliners), or of the mobile part only.
inline DensityEstimate estimate_density(const Population& pop, std::size_t bins, double bandwidth,
                                        bool include_hardliners = true) {
    if (pop.mobile.empty() && pop.hardliners.empty())
        throw ConfigError("estimate_density: empty population");
    check_density_request(bins, pop.half_width, bandwidth);
    HistogramAccumulator acc(BeliefGrid(pop.half_width, bins, 16));
    acc.deposit(pop.mobile, pop.mobile_weight());
    if (include_hardliners) acc.deposit(pop.hardliners, pop.hardliner_weight());
    return acc.finish(bandwidth);
}

/**
 * Sorted items with running sums of influence-weighted mass, for O(1) window averages.
 *
 * Item weight is its particle weight times eta_t(y) = eta0(y) exp(kappa rho(y)), with rho taken
 * from the supplied density estimate.
 */
class NeighborhoodIndex {
public:
    NeighborhoodIndex(const Population& pop, const DensityEstimate& density, const ModelParams& params,
                      const PotentialSpec& spec) {
        const std::size_t m = pop.mobile.size();
        const std::size_t n = m + pop.hardliners.size();
        std::vector<Item> items(n);
        const double kappa = params.kappa();
        auto weight_at = [&](double y, double mass) {
            const double logw = -spec.value_unchecked(y) + (kappa != 0.0 ? kappa * density.at(y) : 0.0);
            return mass * std::exp(logw);
        };
        const double wm = pop.mobile_weight();
        const double wh = pop.hardliner_weight();
        for (std::size_t i = 0; i < m; ++i)
            items[i] = {pop.mobile[i], weight_at(pop.mobile[i], wm), static_cast<std::uint32_t>(i)};
        for (std::size_t j = 0; j < pop.hardliners.size(); ++j)
            items[m + j] = {pop.hardliners[j], weight_at(pop.hardliners[j], wh), kNotMobile};
        sort_items(items, pop.half_width);

        y_.resize(n);
        mobile_of_.resize(n);
        cum_w_.assign(n + 1, 0.0);
        cum_wy_.assign(n + 1, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            y_[k] = items[k].y;
            mobile_of_[k] = items[k].mobile;
            cum_w_[k + 1] = cum_w_[k] + items[k].w;
            cum_wy_[k + 1] = cum_wy_[k] + items[k].w * items[k].y;
        }
    }

    std::size_t size() const noexcept { return y_.size(); }
    double position(std::size_t k) const noexcept { return y_[k]; }
    /// Original mobile index of sorted item k, or kNotMobile.
    std::uint32_t mobile_index(std::size_t k) const noexcept { return mobile_of_[k]; }

    /// First sorted item with position >= v.
    std::size_t lower_index(double v) const {
        return static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), v) - y_.begin());
    }

    /// Weighted mean of item positions in [x - eps, x + eps]; nullopt when the window carries no weight.
    std::optional<double> window_mean(double x, double eps) const {
        const auto lo = static_cast<std::size_t>(std::lower_bound(y_.begin(), y_.end(), x - eps) - y_.begin());
        const auto hi = static_cast<std::size_t>(std::upper_bound(y_.begin(), y_.end(), x + eps) - y_.begin());
        return mean_between(lo, hi);
    }

    std::optional<double> mean_between(std::size_t lo, std::size_t hi) const {
        const double w = cum_w_[hi] - cum_w_[lo];
        if (!(w > 0.0)) return std::nullopt;
        return (cum_wy_[hi] - cum_wy_[lo]) / w;
    }

    static constexpr std::uint32_t kNotMobile = std::numeric_limits<std::uint32_t>::max();

private:
    struct Item {
        double y;
        double w;
        std::uint32_t mobile;
    };

    // Counting sort into ~n buckets over [-L, L], then insertion sort of the nearly sorted result.
    static void sort_items(std::vector<Item>& items, double L) {
        const std::size_t n = items.size();
        if (n < 64) {
            std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.y < b.y; });
            return;
        }
        const std::size_t buckets = n;
        const double scale = static_cast<double>(buckets) / (2.0 * L);
        auto bucket_of = [&](double y) {
            const double s = (y + L) * scale;
            if (!(s > 0.0)) return std::size_t{0};
            return std::min(buckets - 1, static_cast<std::size_t>(s));
        };
        std::vector<std::size_t> start(buckets + 1, 0);
        for (const auto& it : items) ++start[bucket_of(it.y) + 1];
        for (std::size_t b = 0; b < buckets; ++b) start[b + 1] += start[b];
        std::vector<Item> out(n);
        for (const auto& it : items) out[start[bucket_of(it.y)]++] = it;
        for (std::size_t k = 1; k < n; ++k) {
            Item cur = out[k];
            std::size_t j = k;
            while (j > 0 && out[j - 1].y > cur.y) {
                out[j] = out[j - 1];
                --j;
            }
            out[j] = cur;
        }
        items = std::move(out);
    }

    std::vector<double> y_;
    std::vector<std::uint32_t> mobile_of_;
    std::vector<double> cum_w_;
    std::vector<double> cum_wy_;
};

/// Influence-weighted center of gravity of all items within epsilon of x; x itself if none.
inline double neighborhood_mean(const Population& pop, const DensityEstimate& density,
                                const ModelParams& params, const PotentialSpec& spec, double x) {
    spec.check_domain(x);
    const NeighborhoodIndex index(pop, density, params, spec);
    return index.window_mean(x, params.epsilon()).value_or(x);
}

struct SimulationOptions {
    /// Bins of the density estimate feeding eta_t.
    std::size_t interaction_bins = 128;
    /// Smoothing of that estimate; <= 0 means epsilon / 2.
    double interaction_bandwidth = 0.0;
    /// Bins and smoothing of reported snapshots; bandwidth <= 0 means one bin width.
    std::size_t output_bins = 128;
    double output_bandwidth = 0.0;
    /// Fraction of the final steps averaged into the quasi-stationary density.
    double tail_fraction = 0.2;
    unsigned workers = 1;
    /// Drops the noise term, leaving the bare drift update (used by drift probes).
    bool deterministic = false;

    double interaction_bw(const ModelParams& params) const {
        return interaction_bandwidth > 0.0 ? interaction_bandwidth : 0.5 * params.epsilon();
    }
    double output_bw(double half_width) const {
        return output_bandwidth > 0.0 ? output_bandwidth
                                      : 2.0 * half_width / static_cast<double>(output_bins);
    }
};

struct StepStats {
    std::size_t degenerate_neighborhoods = 0;
};

/**
 * One Euler-Maruyama update x += alpha_dt (ybar - x) + sigma sqrt(dt) xi with a reflecting wall.
 *
 * The density and neighborhood index are frozen before any particle moves, and particle i
 * draws xi from counter (seed, i / 2, step), so the result is independent of `workers`.
 */
inline Population step(const Population& pop, const ModelParams& params, const PotentialSpec& spec,
                       std::uint64_t seed, const SimulationOptions& opts = {}, StepStats* stats = nullptr) {
    const double alpha = params.alpha_step();
    if (alpha > 1.0) {
        std::ostringstream os;
        os << "params.alpha_rate: alpha_dt = alpha_rate * dt = " << alpha
           << " exceeds 1 (update would overshoot the center of gravity)";
        throw ConfigError(os.str());
    }
    if (pop.mobile.size() >= NeighborhoodIndex::kNotMobile)
        throw ConfigError("sim.particles: too many mobile particles");

    Population next = pop;
    const double L = pop.half_width;
    const double eps = params.epsilon();
    const double kick = opts.deterministic ? 0.0 : params.sigma() * std::sqrt(params.dt());
    const NoiseSource noise(seed);

    const auto density = estimate_density(pop, opts.interaction_bins, opts.interaction_bw(params));
    const NeighborhoodIndex index(pop, density, params, spec);

    std::vector<double> xi(pop.mobile.size(), 0.0);
    if (kick != 0.0)
        parallel_for(xi.size(), opts.workers, [&](std::size_t lo, std::size_t hi) {
            noise.fill_normals(pop.step_index, lo, hi, xi.data());
        });

    const std::size_t n = index.size();
    std::vector<std::size_t> degenerate(std::max(1u, opts.workers), 0);
    const unsigned chunks = std::max(1u, opts.workers);
    // Sweep items in sorted order with two moving window pointers per chunk.
    parallel_for(chunks, chunks, [&](std::size_t c0, std::size_t c1) {
        for (std::size_t c = c0; c < c1; ++c) {
            const std::size_t k0 = n * c / chunks;
            const std::size_t k1 = n * (c + 1) / chunks;
            if (k0 >= k1) continue;
            std::size_t lo = index.lower_index(index.position(k0) - eps);
            std::size_t hi = lo;
            for (std::size_t k = k0; k < k1; ++k) {
                const std::uint32_t i = index.mobile_index(k);
                const double x = index.position(k);
                while (lo < n && index.position(lo) < x - eps) ++lo;
                if (hi < lo) hi = lo;
                while (hi < n && index.position(hi) <= x + eps) ++hi;
                if (i == NeighborhoodIndex::kNotMobile) continue;
                const auto ybar = index.mean_between(lo, hi);
                double target = x;
                if (ybar) {
                    target = *ybar;
                } else {
                    ++degenerate[c];
                }
                next.mobile[i] = reflect_into(x + alpha * (target - x) + kick * xi[i], L);
            }
        }
    }, 2);
    next.time = pop.time + params.dt();
    next.step_index = pop.step_index + 1;
    if (stats) {
        for (auto d : degenerate) stats->degenerate_neighborhoods += d;
    }
    return next;
}

struct Snapshot {
    double time = 0.0;
    DensityEstimate density;
};

struct RunResult {
    std::vector<Snapshot> snapshots;
    Population final_population;
    /// Mobile-population density averaged over the last tail_fraction of the steps.
    DensityEstimate tail_average;
    std::size_t tail_samples = 0;
    StepStats stats;
};

/// Runs `steps` updates, recording the mobile density every `snapshot_every` steps (0 = initial and final only).
inline RunResult run(const Population& initial, const ModelParams& params, const PotentialSpec& spec,
                     std::size_t steps, std::uint64_t seed, std::size_t snapshot_every,
                     const SimulationOptions& opts = {}) {
    const double out_bw = opts.output_bw(initial.half_width);
    check_density_request(opts.output_bins, initial.half_width, out_bw);
    check_density_request(opts.interaction_bins, initial.half_width, opts.interaction_bw(params));
    if (!(opts.tail_fraction > 0.0 && opts.tail_fraction <= 1.0))
        throw ConfigError("sim.tail_fraction: must be in (0, 1]");

    auto observe = [&](const Population& p) { return estimate_density(p, opts.output_bins, out_bw, false); };

    RunResult result;
    Population pop = initial;
    auto first = observe(pop);
    result.snapshots.push_back({pop.time, first});
    if (steps == 0) {
        result.tail_average = first;
        result.tail_samples = 1;
        result.final_population = pop;
        return result;
    }

    const auto tail_len = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opts.tail_fraction * static_cast<double>(steps))));
    std::vector<double> tail_sum(opts.output_bins, 0.0);
    for (std::size_t s = 1; s <= steps; ++s) {
        pop = step(pop, params, spec, seed, opts, &result.stats);
        const bool snap = (snapshot_every > 0 && s % snapshot_every == 0) || s == steps;
        const bool in_tail = s > steps - tail_len;
        if (!snap && !in_tail) continue;
        auto d = observe(pop);
        if (in_tail) {
            for (std::size_t b = 0; b < tail_sum.size(); ++b) tail_sum[b] += d.values[b];
            ++result.tail_samples;
        }
        if (snap) result.snapshots.push_back({pop.time, std::move(d)});
    }
    for (double& v : tail_sum) v /= static_cast<double>(result.tail_samples);
    result.tail_average = DensityEstimate{first.grid, std::move(tail_sum), out_bw};
    result.final_population = std::move(pop);
    return result;
}

}  // namespace driftlab
