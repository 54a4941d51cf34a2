#pragma once

#include "driftlab/errors.hpp"
#include "driftlab/grid.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace driftlab {

/// Binned density over [-L, L]; sum(values) * dx equals the deposited mass.
struct DensityEstimate {
    BeliefGrid grid;
    std::vector<double> values;
    double bandwidth = 0.0;

    /// Linear interpolation between bin centers, flat beyond the outer centers.
    double at(double x) const noexcept {
        const double s = (x + grid.half_width()) / grid.dx() - 0.5;
        if (!(s > 0.0)) return values.front();
        const auto i = static_cast<std::size_t>(s);
        if (i + 1 >= values.size()) return values.back();
        const double f = s - static_cast<double>(i);
        return values[i] + f * (values[i + 1] - values[i]);
    }

    double mass() const { return integrate(grid, values); }
};

namespace detail {

inline std::size_t mirror_index(long j, long n) noexcept {
    while (j < 0 || j >= n) j = j < 0 ? -1 - j : 2 * n - 1 - j;
    return static_cast<std::size_t>(j);
}

}  // namespace detail

/// Accumulates weighted points into a histogram by linear (cloud-in-cell) sharing between bin centers.
class HistogramAccumulator {
public:
    explicit HistogramAccumulator(const BeliefGrid& grid) : grid_(grid), mass_(grid.size(), 0.0) {}

    void deposit(std::span<const double> positions, double weight) {
        const long n = static_cast<long>(grid_.size());
        const double inv_dx = 1.0 / grid_.dx();
        const double L = grid_.half_width();
        for (double x : positions) {
            const double s = (x + L) * inv_dx - 0.5;
            const double fl = std::floor(s);
            const double f = s - fl;
            const long i = static_cast<long>(fl);
            mass_[detail::mirror_index(i, n)] += weight * (1.0 - f);
            mass_[detail::mirror_index(i + 1, n)] += weight * f;
        }
    }

    /// Smooths with a Gaussian kernel of the given bandwidth, reflecting at +-L, and divides by dx.
    DensityEstimate finish(double bandwidth) const {
        const long n = static_cast<long>(grid_.size());
        const double sb = bandwidth / grid_.dx();
        const long half = static_cast<long>(std::ceil(4.0 * sb));
        std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
        double ksum = 0.0;
        for (long d = -half; d <= half; ++d) {
            const double z = static_cast<double>(d) / sb;
            kernel[static_cast<std::size_t>(d + half)] = std::exp(-0.5 * z * z);
        }
        for (double k : kernel) ksum += k;
        for (double& k : kernel) k /= ksum;

        std::vector<double> out(grid_.size(), 0.0);
        for (long i = 0; i < n; ++i) {
            const double m = mass_[static_cast<std::size_t>(i)];
            if (m == 0.0) continue;
            for (long d = -half; d <= half; ++d)
                out[detail::mirror_index(i + d, n)] += m * kernel[static_cast<std::size_t>(d + half)];
        }
        const double inv_dx = 1.0 / grid_.dx();
        for (double& v : out) v *= inv_dx;
        return DensityEstimate{grid_, std::move(out), bandwidth};
    }

private:
    BeliefGrid grid_;
    std::vector<double> mass_;
};

inline void check_density_request(std::size_t bins, double half_width, double bandwidth) {
    if (bins < 16) throw ConfigError("density: bins must be >= 16");
    const double dx = 2.0 * half_width / static_cast<double>(bins);
    if (!(bandwidth >= dx * (1.0 - 1e-12)))
        throw ConfigError("density: bandwidth must be >= bin width");
}

}  // namespace driftlab
