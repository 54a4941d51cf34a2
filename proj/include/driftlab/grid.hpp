#pragma once

#include "driftlab/errors.hpp"

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace driftlab {

/// Uniform cells over [-L, L]. An even cell count keeps x = 0 on a face.
class BeliefGrid {
public:
    static constexpr std::size_t kMinCells = 64;

    BeliefGrid() : BeliefGrid(2.0, kMinCells) {}

    BeliefGrid(double half_width, std::size_t n_cells, std::size_t min_cells = kMinCells)
        : half_width_(half_width), n_cells_(n_cells) {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw ConfigError("grid: half-width must be > 0");
        if (n_cells < min_cells || n_cells % 2 != 0)
            throw ConfigError("grid.cells: need an even count >= " + std::to_string(min_cells) +
                              ", got " + std::to_string(n_cells));
        dx_ = 2.0 * half_width / static_cast<double>(n_cells);
    }

    double half_width() const noexcept { return half_width_; }
    std::size_t size() const noexcept { return n_cells_; }
    double dx() const noexcept { return dx_; }

    double center(std::size_t i) const noexcept {
        return -half_width_ + (static_cast<double>(i) + 0.5) * dx_;
    }
    /// Face k sits at -L + k dx, k = 0..n.
    double face(std::size_t k) const noexcept { return -half_width_ + static_cast<double>(k) * dx_; }

    std::vector<double> centers() const {
        std::vector<double> out(n_cells_);
        for (std::size_t i = 0; i < n_cells_; ++i) out[i] = center(i);
        return out;
    }

    /// Index of the cell containing x, clamped to the grid.
    std::size_t cell_of(double x) const noexcept {
        const double s = (x + half_width_) / dx_;
        if (!(s > 0.0)) return 0;
        const auto i = static_cast<std::size_t>(s);
        return i >= n_cells_ ? n_cells_ - 1 : i;
    }

    bool operator==(const BeliefGrid&) const = default;

private:
    double half_width_;
    std::size_t n_cells_;
    double dx_ = 0.0;
};

/// Sum of values times dx.
inline double integrate(const BeliefGrid& grid, const std::vector<double>& values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.dx();
}

}  // namespace driftlab
