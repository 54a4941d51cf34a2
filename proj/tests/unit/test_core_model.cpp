#include "driftlab/hardliners.hpp"
#include "driftlab/params.hpp"
#include "driftlab/potential.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace driftlab;

namespace {
const PotentialSpec kUnit = PotentialSpec::quartic(1.0, 1.0, 2.0);
}

TEST(Potential, QuarticValues) {
    EXPECT_DOUBLE_EQ(eval_potential(kUnit, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(eval_potential(kUnit, 0.0), 1.0);
    const auto narrow = PotentialSpec::quartic(2.0, 0.5, 2.0);
    EXPECT_NEAR(eval_potential(narrow, 0.25), 1.125, 1e-14);
}

TEST(Potential, DerivativeMatchesFiniteDifference) {
    const auto spec = PotentialSpec::quartic(1.7, 0.8, 2.0);
    for (double x : {-1.5, -0.3, 0.1, 0.77, 1.9}) {
        const double h = 1e-5;
        const double fd = (eval_potential(spec, x + h) - eval_potential(spec, x - h)) / (2 * h);
        EXPECT_NEAR(eval_potential_derivative(spec, x), fd, 1e-7) << "x=" << x;
    }
}

TEST(Potential, SymmetricAndOutOfDomain) {
    for (double x = 0.0; x <= 2.0; x += 0.125) EXPECT_EQ(eval_potential(kUnit, x), eval_potential(kUnit, -x));
    EXPECT_THROW(eval_potential(kUnit, 2.0001), DomainError);
    EXPECT_THROW(eval_eta0(kUnit, -3.0), DomainError);
}

TEST(Potential, Tabulated) {
    const PotentialSpec t(TabulatedWell{{-2.0, 0.0, 2.0}, {1.0, 3.0, 1.0}}, 2.0);
    EXPECT_DOUBLE_EQ(eval_potential(t, -1.0), 2.0);
    EXPECT_DOUBLE_EQ(eval_potential_derivative(t, 1.0), -1.0);
    EXPECT_THROW(PotentialSpec(TabulatedWell{{-1.0, 2.0}, {0.0, 0.0}}, 2.0), ConfigError);
    EXPECT_THROW(PotentialSpec(TabulatedWell{{-2.0, -2.0, 2.0}, {0.0, 0.0, 0.0}}, 2.0), ConfigError);
}

TEST(Potential, Validation) {
    EXPECT_THROW(PotentialSpec::quartic(0.0, 1.0, 2.0), ConfigError);
    EXPECT_THROW(PotentialSpec::quartic(1.0, 2.5, 2.0), ConfigError);
    EXPECT_THROW(PotentialSpec::quartic(1.0, 1.0, -1.0), ConfigError);
}

TEST(Eta0, Values) {
    EXPECT_DOUBLE_EQ(eval_eta0(kUnit, 1.0), 1.0);
    EXPECT_NEAR(eval_eta0(kUnit, 0.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(eval_eta0(kUnit, 0.5), std::exp(-0.5625), 1e-15);
    // Rises from the center to the wells, then falls.
    EXPECT_LT(eval_eta0(kUnit, 0.2), eval_eta0(kUnit, 0.6));
    EXPECT_GT(eval_eta0(kUnit, 1.0), eval_eta0(kUnit, 1.4));
}

TEST(Influence, Values) {
    const auto p0 = ModelParams::make(1.0, 2.3, 0.0, 0.2, 1e8);
    EXPECT_DOUBLE_EQ(eval_influence(p0, kUnit, 1.0, 3e8), 1.0);
    const auto p = ModelParams::make(1.0, 2.3, 5e-9, 0.2, 1e8);
    EXPECT_NEAR(eval_influence(p, kUnit, 1.0, 2e8), std::exp(1.0), 1e-12);
    EXPECT_NEAR(eval_influence(p, kUnit, 0.0, 0.0), std::exp(-1.0), 1e-15);
    EXPECT_THROW(eval_influence(p, kUnit, 0.0, -1.0), std::exception);
}

TEST(Hardliners, ZeroRatioIsZero) {
    const HardlinerSpec h(0.0, {-1.0, 1.0}, 0.03, 2.0);
    EXPECT_FALSE(h.active());
    EXPECT_EQ(h.density(1e8, 1.0), 0.0);
}

TEST(Hardliners, PeakHeightAndMass) {
    const double s = HardlinerSpec::std_from(0.001, SpreadKind::Variance);
    EXPECT_NEAR(s, 0.0316227766, 1e-9);
    const HardlinerSpec h(0.01, {-1.0, 1.0}, s, 2.0);
    const double expected = 0.005e8 / (s * std::sqrt(2.0 * std::numbers::pi));
    EXPECT_NEAR(h.density(1e8, 1.0) / expected, 1.0, 1e-9);

    // Composite Simpson over [-L, L] recovers r N.
    const int n = 200000;
    const double dx = 4.0 / n;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sum += w * h.density(1e8, -2.0 + k * dx);
    }
    EXPECT_NEAR(sum * dx / 3.0, 0.01e8, 1e-3);
}

TEST(Hardliners, MassRenormalizedNearWall) {
    const HardlinerSpec h(0.2, {-1.9, 1.9}, 0.2, 2.0);
    const int n = 200000;
    const double dx = 4.0 / n;
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
        const double w = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        sum += w * h.density(1.0, -2.0 + k * dx);
    }
    EXPECT_NEAR(sum * dx / 3.0, 0.2, 1e-9);
}

TEST(Hardliners, DerivativeMatchesFiniteDifference) {
    const HardlinerSpec h(0.05, {-1.0, 1.0}, 0.1, 2.0);
    for (double x : {-1.05, 0.0, 0.93, 1.2}) {
        const double e = 1e-6;
        const double fd = (h.density(1.0, x + e) - h.density(1.0, x - e)) / (2 * e);
        EXPECT_NEAR(h.density_derivative(1.0, x), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST(Hardliners, Validation) {
    EXPECT_THROW(HardlinerSpec(1.0, {-1.0, 1.0}, 0.1, 2.0), ConfigError);
    EXPECT_THROW(HardlinerSpec(0.1, {-2.0, 1.0}, 0.1, 2.0), ConfigError);
    EXPECT_THROW(HardlinerSpec(0.1, {-1.0, 1.0}, 0.0, 2.0), ConfigError);
}

TEST(Params, DerivesAlphaAndMu) {
    const auto p = ModelParams::make(1.0, 2.3, 0.0, 0.2, 1e8);
    EXPECT_NEAR(p.alpha_rate(), 3.0 / 0.04, 1e-12);
    EXPECT_NEAR(p.diffusion(), 2.3 * 2.3 / 2 - 1.0, 1e-15);
    ModelParamsInput in;
    in.alpha_rate = 75.0;
    in.epsilon = 0.2;
    EXPECT_NEAR(ModelParams::make(in).mu(), 1.0, 1e-12);
    in.mu = 2.0;
    EXPECT_THROW(ModelParams::make(in), ConfigError);
}

TEST(Params, RejectsNonPositiveDiffusion) {
    try {
        ModelParams::make(1.0, 1.0, 0.0, 0.2, 1e8);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("params.sigma"), std::string::npos);
        EXPECT_NE(msg.find("D = "), std::string::npos);
    }
    EXPECT_THROW(ModelParams::make(1.0, 1.414, 0.0, 0.2, 1e8), ConfigError);
}

TEST(Params, RejectsBadValues) {
    EXPECT_THROW(ModelParams::make(1.0, 2.3, -1e-9, 0.2, 1e8), ConfigError);
    EXPECT_THROW(ModelParams::make(1.0, 2.3, 0.0, 0.0, 1e8), ConfigError);
    EXPECT_THROW(ModelParams::make(1.0, 2.3, 0.0, 0.2, 0.0), ConfigError);
    EXPECT_THROW(ModelParams::make(-0.1, 2.3, 0.0, 0.2, 1e8), ConfigError);
    EXPECT_THROW(ModelParams::make(1.0, NAN, 0.0, 0.2, 1e8), ConfigError);
    EXPECT_THROW(ModelParams::make(1.0, 2.3, 0.0, 0.5, 1e8).check_domain(2.0), ConfigError);
    EXPECT_NO_THROW(ModelParams::make(1.0, 2.3, 0.0, 0.4, 1e8).check_domain(2.0));
}
