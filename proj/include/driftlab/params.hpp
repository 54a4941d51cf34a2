#pragma once

#include "driftlab/errors.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

namespace driftlab {

/// Raw parameter values as read from a config; either mu or alpha_rate may be omitted.
struct ModelParamsInput {
    std::optional<double> mu;
    std::optional<double> alpha_rate;
    double sigma = 2.3;
    double kappa = 0.0;
    double epsilon = 0.1;
    double n_total = 1e8;
    double dt = 1e-3;
};

/**
 * Model constants shared by the particle simulator and the continuum solver.
 *
 * The drift coefficient and the impressionability rate are tied by
 * mu = (epsilon^2 / 3) * alpha_rate; whichever one is missing is derived.
 * Construction fails unless the diffusion constant D = sigma^2/2 - mu is positive.
 */
class ModelParams {
public:
    static constexpr double kConsistencyTol = 1e-9;

    static ModelParams make(const ModelParamsInput& in) {
        auto fail = [](const std::string& key, const std::string& msg) {
            throw ConfigError("params." + key + ": " + msg);
        };
        auto finite = [&](const std::string& key, double v) {
            if (!std::isfinite(v)) fail(key, "must be finite");
        };
        finite("sigma", in.sigma);
        finite("kappa", in.kappa);
        finite("epsilon", in.epsilon);
        finite("n_total", in.n_total);
        finite("dt", in.dt);
        if (in.epsilon <= 0.0) fail("epsilon", "visibility radius must be > 0");
        if (in.n_total <= 0.0) fail("n_total", "population volume must be > 0");
        if (in.kappa < 0.0) fail("kappa", "social-influence strength must be >= 0");
        if (in.dt <= 0.0) fail("dt", "time step must be > 0");
        if (in.sigma < 0.0) fail("sigma", "noise intensity must be >= 0");

        const double eps2_3 = in.epsilon * in.epsilon / 3.0;
        double mu = 0.0;
        double alpha = 0.0;
        if (in.mu && in.alpha_rate) {
            finite("mu", *in.mu);
            finite("alpha_rate", *in.alpha_rate);
            mu = *in.mu;
            alpha = *in.alpha_rate;
            const double implied = eps2_3 * alpha;
            if (std::abs(implied - mu) > kConsistencyTol * std::max(1.0, std::abs(mu))) {
                std::ostringstream os;
                os << "mu = " << mu << " disagrees with (epsilon^2/3)*alpha_rate = " << implied;
                fail("mu", os.str());
            }
        } else if (in.mu) {
            finite("mu", *in.mu);
            mu = *in.mu;
            alpha = mu / eps2_3;
        } else if (in.alpha_rate) {
            finite("alpha_rate", *in.alpha_rate);
            alpha = *in.alpha_rate;
            mu = eps2_3 * alpha;
        } else {
            fail("mu", "one of mu or alpha_rate is required");
        }
        if (mu < 0.0) fail("mu", "drift coefficient must be >= 0");

        const double diffusion = 0.5 * in.sigma * in.sigma - mu;
        if (!(diffusion > 0.0)) {
            std::ostringstream os;
            os << "diffusion constant D = sigma^2/2 - mu = " << diffusion
               << " must be positive (sigma = " << in.sigma << ", mu = " << mu << ")";
            fail("sigma", os.str());
        }
        return ModelParams(mu, in.sigma, in.kappa, in.epsilon, in.n_total, alpha, in.dt);
    }

    static ModelParams make(double mu, double sigma, double kappa, double epsilon, double n_total,
                            double dt = 1e-3) {
        ModelParamsInput in;
        in.mu = mu;
        in.sigma = sigma;
        in.kappa = kappa;
        in.epsilon = epsilon;
        in.n_total = n_total;
        in.dt = dt;
        return make(in);
    }

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    double kappa() const noexcept { return kappa_; }
    double epsilon() const noexcept { return epsilon_; }
    double n_total() const noexcept { return n_total_; }
    double alpha_rate() const noexcept { return alpha_rate_; }
    double dt() const noexcept { return dt_; }

    /// D = sigma^2/2 - mu.
    double diffusion() const noexcept { return 0.5 * sigma_ * sigma_ - mu_; }
    /// Per-step impressionability alpha_dt = alpha_rate * dt.
    double alpha_step() const noexcept { return alpha_rate_ * dt_; }
    /// g = -kappa, the particle "attraction" strength of the nonlinear term.
    double attraction() const noexcept { return -kappa_; }

    ModelParamsInput input() const {
        ModelParamsInput in;
        in.mu = mu_;
        in.alpha_rate = alpha_rate_;
        in.sigma = sigma_;
        in.kappa = kappa_;
        in.epsilon = epsilon_;
        in.n_total = n_total_;
        in.dt = dt_;
        return in;
    }

    // Copies with one field replaced. Changing mu or epsilon re-derives alpha_rate.
    ModelParams with_mu(double mu) const {
        auto in = input();
        in.mu = mu;
        in.alpha_rate.reset();
        return make(in);
    }
    ModelParams with_sigma(double sigma) const {
        auto in = input();
        in.sigma = sigma;
        return make(in);
    }
    ModelParams with_kappa(double kappa) const {
        auto in = input();
        in.kappa = kappa;
        return make(in);
    }
    ModelParams with_n_total(double n) const {
        auto in = input();
        in.n_total = n;
        return make(in);
    }
    ModelParams with_epsilon(double epsilon) const {
        auto in = input();
        in.epsilon = epsilon;
        in.alpha_rate.reset();
        return make(in);
    }
    ModelParams with_dt(double dt) const {
        auto in = input();
        in.dt = dt;
        return make(in);
    }

    /// The linearized neighborhood average is only trusted for epsilon <= 0.2 L.
    void check_domain(double half_width) const {
        if (epsilon_ > 0.2 * half_width * (1.0 + 1e-12)) {
            std::ostringstream os;
            os << "params.epsilon: visibility radius " << epsilon_
               << " exceeds 0.2 x domain half-width (" << 0.2 * half_width << ")";
            throw ConfigError(os.str());
        }
    }

    bool operator==(const ModelParams&) const = default;

private:
    ModelParams(double mu, double sigma, double kappa, double epsilon, double n_total,
                double alpha_rate, double dt)
        : mu_(mu), sigma_(sigma), kappa_(kappa), epsilon_(epsilon), n_total_(n_total),
          alpha_rate_(alpha_rate), dt_(dt) {}

    double mu_;
    double sigma_;
    double kappa_;
    double epsilon_;
    double n_total_;
    double alpha_rate_;
    double dt_;
};

}  // namespace driftlab
