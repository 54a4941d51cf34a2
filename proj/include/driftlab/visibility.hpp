#pragma once

#include "driftlab/errors.hpp"
#include "driftlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace driftlab {

struct BifurcationReport {
    double q = 0.0;
    std::optional<double> peak_left;
    std::optional<double> peak_right;
    double peak_height = 0.0;
    double valley_height = 0.0;

    int peak_count() const { return (peak_left ? 1 : 0) + (peak_right ? 1 : 0); }
};

struct VisibilityOptions {
    /// Minimum peak prominence as a fraction of the density maximum.
    double prominence = 0.02;
    /// 5-cell moving average before peak detection.
    bool smooth = true;
};

/// Centered moving average over `width` cells, truncated at the ends.
inline std::vector<double> moving_average(std::span<const double> v, std::size_t width = 5) {
    const auto n = static_cast<long>(v.size());
    const long half = static_cast<long>(width / 2);
    std::vector<double> out(v.size());
    for (long i = 0; i < n; ++i) {
        const long lo = std::max(0L, i - half);
        const long hi = std::min(n - 1, i + half);
        double s = 0.0;
        for (long k = lo; k <= hi; ++k) s += v[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

struct Peak {
    std::size_t index;
    double prominence;
};

/**
 * Interior local maxima with their topographic prominence (height above the higher of the
 * two lowest points separating the peak from taller terrain on either side). Flat tops
 * report their middle cell.
 */
inline std::vector<Peak> find_peaks(std::span<const double> d) {
    std::vector<Peak> peaks;
    const std::size_t n = d.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (d[i] > d[i - 1]) {
            std::size_t j = i;
            while (j + 1 < n && d[j + 1] == d[i]) ++j;
            if (j + 1 < n && d[j + 1] < d[i]) {
                const std::size_t mid = (i + j) / 2;
                const double h = d[mid];
                double left_min = h;
                for (std::size_t k = i; k-- > 0;) {
                    if (d[k] > h) break;
                    left_min = std::min(left_min, d[k]);
                }
                double right_min = h;
                for (std::size_t k = j + 1; k < n; ++k) {
                    if (d[k] > h) break;
                    right_min = std::min(right_min, d[k]);
                }
                peaks.push_back({mid, h - std::max(left_min, right_min)});
            }
            i = j + 1;
        } else {
            ++i;
        }
    }
    return peaks;
}

/**
 * Visibility Q = (peak - valley) / (peak + valley) of a density on a symmetric grid.
 *
 * Keeps prominent interior maxima, takes the tallest on each side of x = 0, averages their
 * heights into `peak` and uses the lowest density between them as `valley`. With fewer than
 * two such peaks, Q = 0.
 */
inline BifurcationReport bifurcation_visibility(std::span<const double> density, const BeliefGrid& grid,
                                                const VisibilityOptions& opts = {}) {
    if (density.size() != grid.size()) throw ConfigError("bifurcation_visibility: size mismatch");
    double max_v = 0.0;
    for (double v : density) {
        if (!std::isfinite(v)) throw NumericalError("bifurcation_visibility: non-finite density");
        if (v < 0.0) throw NumericalError("bifurcation_visibility: negative density");
        max_v = std::max(max_v, v);
    }
    if (!(max_v > 0.0)) throw NumericalError("bifurcation_visibility: density is identically zero");

    const std::vector<double> d =
        opts.smooth ? moving_average(density) : std::vector<double>(density.begin(), density.end());
    double dmax = *std::max_element(d.begin(), d.end());

    std::optional<std::size_t> left, right;
    for (const auto& p : find_peaks(d)) {
        if (p.prominence < opts.prominence * dmax) continue;
        auto& side = grid.center(p.index) < 0.0 ? left : right;
        if (!side || d[p.index] > d[*side]) side = p.index;
    }

    BifurcationReport rep;
    if (left) rep.peak_left = grid.center(*left);
    if (right) rep.peak_right = grid.center(*right);
    if (!left || !right) {
        const auto at = left ? *left : right ? *right : static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
        rep.peak_height = d[at];
        rep.valley_height = d[at];
        return rep;
    }
    rep.peak_height = 0.5 * (d[*left] + d[*right]);
    rep.valley_height = *std::min_element(d.begin() + static_cast<long>(*left), d.begin() + static_cast<long>(*right) + 1);
    rep.q = (rep.peak_height - rep.valley_height) / (rep.peak_height + rep.valley_height);
    return rep;
}

/// 1/2 sum |p - q| dx after normalizing both densities to unit mass.
inline double total_variation(std::span<const double> p, std::span<const double> q, double dx) {
    if (p.size() != q.size()) throw ConfigError("total_variation: size mismatch");
    double mp = 0.0, mq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mp += p[i];
        mq += q[i];
    }
    if (!(mp > 0.0) || !(mq > 0.0)) throw NumericalError("total_variation: zero-mass density");
    mp *= dx;
    mq *= dx;
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] / mp - q[i] / mq);
    return 0.5 * s * dx;
}

}  // namespace driftlab
