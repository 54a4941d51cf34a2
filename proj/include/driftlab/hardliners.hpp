#pragma once

#include "driftlab/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace driftlab {

/// How the configured spread number is read.
enum class SpreadKind { Variance, StdDev };

/**
 * Committed hardliners: two immobile Gaussian communities of equal mass r N / 2.
 *
 * Each component is renormalized to carry its full mass inside [-L, L].
 */
class HardlinerSpec {
public:
    HardlinerSpec(double ratio, std::array<double, 2> centers, double std_dev, double half_width)
        : ratio_(ratio), centers_(centers), std_dev_(std_dev), half_width_(half_width) {
        if (!(ratio_ >= 0.0 && ratio_ < 1.0)) throw ConfigError("hardliners.ratio: must be in [0, 1)");
        if (!(std_dev_ > 0.0) || !std::isfinite(std_dev_))
            throw ConfigError("hardliners.spread: must be > 0");
        if (!(half_width_ > 0.0)) throw ConfigError("hardliners: domain half-width must be > 0");
        for (double c : centers_)
            if (!(std::abs(c) < half_width_))
                throw ConfigError("hardliners.center: must lie strictly inside the domain");
        for (int k = 0; k < 2; ++k) {
            const double s = std_dev_ * std::numbers::sqrt2;
            in_domain_[k] = 0.5 * (std::erf((half_width_ - centers_[k]) / s) -
                                   std::erf((-half_width_ - centers_[k]) / s));
        }
    }

    static double std_from(double spread, SpreadKind kind) {
        return kind == SpreadKind::Variance ? std::sqrt(spread) : spread;
    }

    double ratio() const noexcept { return ratio_; }
    const std::array<double, 2>& centers() const noexcept { return centers_; }
    double std_dev() const noexcept { return std_dev_; }
    double half_width() const noexcept { return half_width_; }
    bool active() const noexcept { return ratio_ > 0.0; }

    /// rho_H(x) for a population of total volume n_total.
    double density(double n_total, double x) const {
        if (ratio_ == 0.0) return 0.0;
        double sum = 0.0;
        for (int k = 0; k < 2; ++k) sum += gaussian(x, centers_[k]) / in_domain_[k];
        return 0.5 * ratio_ * n_total * sum;
    }

    double density_derivative(double n_total, double x) const {
        if (ratio_ == 0.0) return 0.0;
        double sum = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double z = (x - centers_[k]) / std_dev_;
            sum += -z / std_dev_ * gaussian(x, centers_[k]) / in_domain_[k];
        }
        return 0.5 * ratio_ * n_total * sum;
    }

    bool operator==(const HardlinerSpec& o) const {
        return ratio_ == o.ratio_ && centers_ == o.centers_ && std_dev_ == o.std_dev_ &&
               half_width_ == o.half_width_;
    }

private:
    double gaussian(double x, double c) const {
        const double z = (x - c) / std_dev_;
        return std::exp(-0.5 * z * z) / (std_dev_ * std::sqrt(2.0 * std::numbers::pi));
    }

    double ratio_;
    std::array<double, 2> centers_;
    double std_dev_;
    double half_width_;
    std::array<double, 2> in_domain_{1.0, 1.0};
};

inline double hardliner_density(const HardlinerSpec& spec, double n_total, double x) {
    return spec.density(n_total, x);
}

}  // namespace driftlab
