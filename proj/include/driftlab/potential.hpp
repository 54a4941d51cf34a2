#pragma once

#include "driftlab/errors.hpp"
#include "driftlab/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace driftlab {

/// V(x) = h ((x/w)^2 - 1)^2: minima of value 0 at +-w, barrier h at the origin.
struct QuarticWell {
    double height = 1.0;
    double position = 1.0;

    bool operator==(const QuarticWell&) const = default;
};

/// Piecewise-linear V through (x_k, v_k). Abscissae must increase and cover [-L, L].
struct TabulatedWell {
    std::vector<double> xs;
    std::vector<double> vs;

    bool operator==(const TabulatedWell&) const = default;
};

/**
 * The outlying-content potential V(x) = -ln eta0(x) on the belief interval [-L, L].
 *
 * Defaults to the symmetric quartic double well with h = 1, w = 1, L = 2.
 */
class PotentialSpec {
public:
    using Form = std::variant<QuarticWell, TabulatedWell>;

    PotentialSpec() : PotentialSpec(QuarticWell{}, 2.0) {}

    PotentialSpec(Form form, double half_width) : form_(std::move(form)), half_width_(half_width) {
        if (!std::isfinite(half_width_) || half_width_ <= 0.0)
            throw ConfigError("potential.domain_half_width: must be > 0");
        if (auto* q = std::get_if<QuarticWell>(&form_)) {
            if (!std::isfinite(q->height) || q->height <= 0.0)
                throw ConfigError("potential.well_height: must be > 0");
            if (!std::isfinite(q->position) || q->position <= 0.0)
                throw ConfigError("potential.well_position: must be > 0");
            if (q->position >= half_width_)
                throw ConfigError("potential.well_position: wells must lie inside the domain");
        } else {
            const auto& t = std::get<TabulatedWell>(form_);
            if (t.xs.size() < 2 || t.xs.size() != t.vs.size())
                throw ConfigError("potential.table: need >= 2 (x, V) rows");
            for (std::size_t k = 1; k < t.xs.size(); ++k)
                if (!(t.xs[k] > t.xs[k - 1]))
                    throw ConfigError("potential.table: abscissae must be strictly increasing");
            for (double v : t.vs)
                if (!std::isfinite(v)) throw ConfigError("potential.table: non-finite V value");
            const double slack = 1e-12 * half_width_;
            if (t.xs.front() > -half_width_ + slack || t.xs.back() < half_width_ - slack)
                throw ConfigError("potential.table: must cover [-L, L]");
        }
    }

    static PotentialSpec quartic(double height, double position, double half_width) {
        return PotentialSpec(QuarticWell{height, position}, half_width);
    }

    const Form& form() const noexcept { return form_; }
    double half_width() const noexcept { return half_width_; }
    bool is_quartic() const noexcept { return std::holds_alternative<QuarticWell>(form_); }

    /// Location of the positive eta0 maximum (the right well).
    double well_position() const {
        if (auto* q = std::get_if<QuarticWell>(&form_)) return q->position;
        const auto& t = std::get<TabulatedWell>(form_);
        std::size_t best = 0;
        bool found = false;
        for (std::size_t k = 0; k < t.xs.size(); ++k) {
            if (t.xs[k] <= 0.0) continue;
            if (!found || t.vs[k] < t.vs[best]) best = k;
            found = true;
        }
        return found ? t.xs[best] : 0.5 * half_width_;
    }

    void check_domain(double x) const {
        if (!(std::abs(x) <= half_width_ * (1.0 + 1e-12))) {
            std::ostringstream os;
            os << "belief coordinate " << x << " outside [-" << half_width_ << ", " << half_width_ << "]";
            throw DomainError(os.str());
        }
    }

    /// V(x) without the domain check; for hot loops over known-good coordinates.
    double value_unchecked(double x) const {
        if (auto* q = std::get_if<QuarticWell>(&form_)) {
            const double s = x / q->position;
            const double u = s * s - 1.0;
            return q->height * u * u;
        }
        const auto& t = std::get<TabulatedWell>(form_);
        const auto k = segment(t, x);
        const double f = (x - t.xs[k]) / (t.xs[k + 1] - t.xs[k]);
        return t.vs[k] + f * (t.vs[k + 1] - t.vs[k]);
    }

    double derivative_unchecked(double x) const {
        if (auto* q = std::get_if<QuarticWell>(&form_)) {
            const double w = q->position;
            const double s = x / w;
            return 4.0 * q->height * s * (s * s - 1.0) / w;
        }
        const auto& t = std::get<TabulatedWell>(form_);
        const auto k = segment(t, x);
        return (t.vs[k + 1] - t.vs[k]) / (t.xs[k + 1] - t.xs[k]);
    }

    bool operator==(const PotentialSpec&) const = default;

private:
    static std::size_t segment(const TabulatedWell& t, double x) {
        auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
        std::size_t k = it == t.xs.begin() ? 0 : static_cast<std::size_t>(it - t.xs.begin()) - 1;
        return std::min(k, t.xs.size() - 2);
    }

    Form form_;
    double half_width_;
};

inline double eval_potential(const PotentialSpec& spec, double x) {
    spec.check_domain(x);
    return spec.value_unchecked(x);
}

inline double eval_potential_derivative(const PotentialSpec& spec, double x) {
    spec.check_domain(x);
    return spec.derivative_unchecked(x);
}

/// eta0(x) = exp(-V(x)), the preference for outlying content.
inline double eval_eta0(const PotentialSpec& spec, double x) {
    return std::exp(-eval_potential(spec, x));
}

/// eta_t(x) = eta0(x) exp(kappa rho(x)).
inline double eval_influence(const ModelParams& params, const PotentialSpec& spec, double x,
                             double rho_at_x) {
    if (!(rho_at_x >= 0.0)) throw DomainError("eval_influence: density must be >= 0");
    const double v = eval_potential(spec, x);
    if (params.kappa() == 0.0) return std::exp(-v);
    return std::exp(-v + params.kappa() * rho_at_x);
}

}  // namespace driftlab
