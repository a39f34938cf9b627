/*
   Copyright 2026 The reactfront Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reactfront/model.hpp"

using namespace reactfront;

namespace {

ScenarioSpec simple() {
    ScenarioSpec s;
    s.drift = CoefficientFamily::constant(0.0);
    s.volatility = CoefficientFamily::constant(1.0);
    s.reactivity = CoefficientFamily::constant(0.5);
    s.kernel = KernelSpec::constant(1.0);
    return s;
}

} // namespace

TEST(Validate, ConstantScenarioPasses) {
    const auto r = validate_scenario(simple());
    EXPECT_TRUE(r.ok()) << r.failures();
    EXPECT_DOUBLE_EQ(r.sigma_min, 1.0);
    EXPECT_DOUBLE_EQ(r.gamma_min, 0.5);
}

TEST(Validate, DegenerateVolatilityFails) {
    auto s = simple();
    s.volatility = CoefficientFamily::logistic(0.0, 1.0);
    const auto r = validate_scenario(s);
    EXPECT_FALSE(r.ok());
    EXPECT_NE(r.failures().find("degenerate"), std::string::npos);
}

TEST(Validate, ReactivityBoundedAwayFromZero) {
    auto s = simple();
    s.reactivity = CoefficientFamily::constant(0.0);
    EXPECT_FALSE(validate_scenario(s).ok());
    s.reactivity = CoefficientFamily::affine(1.0, 1.0);
    EXPECT_FALSE(validate_scenario(s).ok());
}

TEST(Validate, TriangularRawMassTwoNormalizes) {
    auto s = simple();
    s.kernel = KernelSpec::triangular(1.0, 4.0);
    EXPECT_DOUBLE_EQ(s.kernel.raw_mass(), 2.0);
    const auto r = validate_scenario(s);
    EXPECT_TRUE(r.ok()) << r.failures();
    EXPECT_NEAR(r.kernel_mass, 1.0, 1e-12);
}

TEST(Validate, KernelErrors) {
    EXPECT_THROW(KernelSpec::piecewise_linear({{0.0, 1.0}, {1.0, -0.1}}), ValidationError);
    EXPECT_THROW(KernelSpec::piecewise_linear({{0.0, 0.0}, {1.0, 0.0}}), ValidationError);
    EXPECT_THROW(KernelSpec::constant(0.0), ValidationError);
    EXPECT_THROW(KernelSpec::piecewise_linear({{0.5, 1.0}, {1.0, 1.0}}), ValidationError);
    EXPECT_THROW(KernelSpec::piecewise_linear({{0.0, 1.0}, {1.0, 1.0}, {0.5, 1.0}}), ValidationError);
}

TEST(Validate, PointMassBelowFrontFails) {
    auto s = simple();
    s.initial = InitialDistribution::point_mass(-0.5);
    EXPECT_FALSE(validate_scenario(s).ok());
}

TEST(Validate, ExponentialTailWarns) {
    auto s = simple();
    s.initial = InitialDistribution::shifted_exponential(2.0);
    const auto r = validate_scenario(s);
    EXPECT_TRUE(r.ok());
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Validate, NegativeAlphaFails) {
    auto s = simple();
    s.alpha = -1.0;
    EXPECT_FALSE(validate_scenario(s).ok());
    s.alpha = 0.0;
    EXPECT_TRUE(validate_scenario(s).ok());
}

TEST(Coefficients, Examples) {
    ScenarioSpec s = simple();
    s.drift = CoefficientFamily::affine(0.1, -0.2);
    s.volatility = CoefficientFamily::constant(0.8);
    auto c = eval_coefficients(s, 0.3, 1.0);
    EXPECT_NEAR(c.b, -0.1, 1e-15);
    EXPECT_DOUBLE_EQ(c.sigma_sq, c.sigma * c.sigma);
    EXPECT_NEAR(c.sigma_sq, 0.64, 1e-15);
    s.volatility = CoefficientFamily::logistic(0.5, 0.5);
    EXPECT_NEAR(eval_coefficients(s, 0.0, -60.0).sigma, 0.5, 1e-12);
    EXPECT_NEAR(eval_coefficients(s, 0.0, 60.0).sigma, 1.0, 1e-12);
}

TEST(Coefficients, ModulationBounds) {
    EXPECT_THROW(CoefficientFamily::constant(1.0, {1.0, 2.0}), ValidationError);
    const auto f = CoefficientFamily::logistic(0.2, 1.8, 20.0, 0.1, {0.5, 3.0});
    EXPECT_NEAR(f.infimum(), 0.1, 1e-15);
    EXPECT_NEAR(f.supremum(), 3.0, 1e-15);
    EXPECT_NEAR(f(std::acos(-1.0) / 6.0, 0.1), 1.1 * 1.5, 1e-12);
}

TEST(Coefficients, WrongArity) {
    EXPECT_THROW(CoefficientFamily(FamilyKind::affine, {1.0}), ValidationError);
    EXPECT_THROW(CoefficientFamily(FamilyKind::logistic, {1.0, 2.0, 3.0}), ValidationError);
}

// Probed Lipschitz constants on a refined lattice stay within 1% of the
// declared ones, over random members of every family.
TEST(Coefficients, DeclaredLipschitzDominatesProbe) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> U(-3.0, 3.0), E(-0.9, 0.9), K(0.1, 30.0);
    ScenarioSpec s = simple();
    const auto lat = ProbeLattice::for_scenario(s, 4);
    for (int rep = 0; rep < 40; ++rep) {
        const Modulation m{E(gen), K(gen)};
        const CoefficientFamily fams[] = {CoefficientFamily::constant(U(gen), m),
                                          CoefficientFamily::affine(U(gen), U(gen), m),
                                          CoefficientFamily::logistic(U(gen), U(gen), K(gen), U(gen), m)};
        for (const auto& f : fams) {
            const double probed = probe_lipschitz(f, lat.t, lat.x);
            EXPECT_LE(probed, 1.01 * f.lipschitz() + 1e-12);
            for (double t : lat.t)
                for (double x : {-2.0, 0.0, 5.0}) {
                    EXPECT_LE(std::abs(f(t, x)), f.growth() * (1.0 + std::abs(x)) + 1e-12);
                    const double h = 1e-6;
                    EXPECT_NEAR(f.derivative(t, x), (f(t, x + h) - f(t, x - h)) / (2 * h), 1e-5 * (1 + f.lipschitz()));
                }
        }
    }
}

TEST(Kernel, UnitMassForAllFamilies) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> D(0.05, 5.0), H(0.01, 100.0), P(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double d = D(gen);
        EXPECT_NEAR(KernelSpec::constant(d).mass(), 1.0, 1e-12);
        EXPECT_NEAR(KernelSpec::triangular(d, H(gen), P(gen) * d).mass(), 1.0, 1e-12);
        std::vector<KernelNode> nodes{{0.0, H(gen)}};
        double s = 0.0;
        for (int i = 0; i < 6; ++i) {
            s += P(gen) * d / 6.0;
            nodes.push_back({s, H(gen)});
            if (i == 2) nodes.push_back({s, H(gen)});  // a jump
        }
        const auto k = KernelSpec::piecewise_linear(nodes);
        EXPECT_NEAR(k.mass(), 1.0, 1e-12);
        EXPECT_GE(k(0.5 * s), 0.0);
        EXPECT_EQ(k(-0.1), 0.0);
        EXPECT_EQ(k(s + 0.1), 0.0);
    }
}

TEST(Kernel, RightContinuousAtJump) {
    const auto k = KernelSpec::piecewise_linear({{0.0, 1.0}, {0.5, 1.0}, {0.5, 3.0}, {1.0, 3.0}});
    EXPECT_NEAR(k(0.5), 1.5, 1e-15);
    EXPECT_NEAR(k(0.4999999), 0.5, 1e-12);
    EXPECT_NEAR(k.at_end(), 1.5, 1e-15);
    EXPECT_NEAR(k.at_start(), 0.5, 1e-15);
}

TEST(Sample, PointMass) {
    ScenarioSpec s = simple();
    s.initial = InitialDistribution::point_mass(2.0);
    const auto x = sample_initial(s, 3, rng::Stream(1));
    EXPECT_EQ(x, (std::vector<double>{2.0, 2.0, 2.0}));
}

TEST(Sample, TruncatedGaussianMean) {
    ScenarioSpec s = simple();
    s.a0 = 0.3;
    s.initial = InitialDistribution::truncated_gaussian(0.5, 0.8);
    const std::size_t n = 1000000;
    const auto x = sample_initial(s, n, rng::Stream(99));
    double m = 0.0, v = 0.0;
    for (double xi : x) {
        EXPECT_GE(xi, s.a0);
        m += xi;
        v += xi * xi;
    }
    m /= n;
    v = v / n - m * m;
    const double expected = oracle::truncated_normal_mean(0.5, 0.8, 0.3);
    EXPECT_NEAR(m, expected, 3.0 * std::sqrt(v / n));
    EXPECT_NEAR(s.initial.mean(s.a0), expected, 1e-12);
}

TEST(Sample, ShiftedExponentialSupport) {
    ScenarioSpec s = simple();
    s.a0 = -1.0;
    s.initial = InitialDistribution::shifted_exponential(3.0);
    const auto x = sample_initial(s, 10000, rng::Stream(5));
    double m = 0.0;
    for (double xi : x) {
        EXPECT_GE(xi, -1.0);
        m += xi;
    }
    EXPECT_NEAR(m / 10000.0, -1.0 + 1.0 / 3.0, 5.0 * (1.0 / 3.0) / 100.0);
}

TEST(Sample, Deterministic) {
    const ScenarioSpec s = simple();
    EXPECT_EQ(sample_initial(s, 1000, rng::Stream(3)), sample_initial(s, 1000, rng::Stream(3)));
    EXPECT_NE(sample_initial(s, 1000, rng::Stream(3)), sample_initial(s, 1000, rng::Stream(4)));
}

TEST(Initial, SurvivorAndDensityAgree) {
    const auto d = InitialDistribution::truncated_gaussian(1.0, 0.5);
    const double h = 1e-5;
    for (double x : {0.1, 0.7, 1.3, 2.5})
        EXPECT_NEAR(d.density(x, 0.0), (d.survivor(x - h, 0.0) - d.survivor(x + h, 0.0)) / (2 * h), 1e-6);
    EXPECT_DOUBLE_EQ(d.survivor(0.0, 0.0), 1.0);
    EXPECT_NEAR(oracle::integrate([&](double x) { return d.density(x, 0.0); }, 0.0, 20.0), 1.0, 1e-10);
}
