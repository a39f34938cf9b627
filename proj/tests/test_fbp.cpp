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


#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reactfront/fbp.hpp"

using namespace reactfront;

namespace {

ScenarioSpec brownian(double gamma, InitialDistribution init, double T = 1.0) {
    ScenarioSpec s;
    s.drift = CoefficientFamily::constant(0.0);
    s.volatility = CoefficientFamily::constant(1.0);
    s.reactivity = CoefficientFamily::constant(gamma);
    s.kernel = KernelSpec::constant(1.0);
    s.alpha = 0.0;
    s.a0 = 0.0;
    s.horizon = T;
    s.initial = init;
    return s;
}

ScenarioSpec coupled(double T = 1.0) {
    ScenarioSpec s;
    s.drift = CoefficientFamily::affine(0.5, -0.5);
    s.volatility = CoefficientFamily::constant(1.0);
    s.reactivity = CoefficientFamily::logistic(0.2, 1.8, 20.0, 0.1);
    s.kernel = KernelSpec::triangular(1.0);
    s.alpha = 0.5;
    s.horizon = T;
    s.initial = InitialDistribution::truncated_gaussian(1.0, 0.5);
    return s;
}

SolverGrid grid(std::size_t J, double dt) {
    SolverGrid g;
    g.J = J;
    g.dt = dt;
    return g;
}

double l1_rows(const std::vector<double>& a, const std::vector<double>& b, double dy) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::abs(a[j] - b[j]) * dy;
    return s;
}

// L1 distance between a coarse row and a fine row of twice the resolution,
// comparing the coarse cell against the average of its two children
double l1_nested(const std::vector<double>& coarse, const std::vector<double>& fine, double dy_coarse) {
    double s = 0.0;
    for (std::size_t j = 0; j < coarse.size(); ++j)
        s += std::abs(coarse[j] - 0.5 * (fine[2 * j] + fine[2 * j + 1])) * dy_coarse;
    return s;
}

} // namespace

TEST(Fbp, NeumannHeatKernel) {
    const double x0 = 1.0;
    const auto f = solve_fbp(brownian(0.0, InitialDistribution::point_mass(x0)), grid(2000, 1e-4));
    const auto& w = f.final_row();
    double l1 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double lo = static_cast<double>(j) * f.dy();
        l1 += std::abs(w[j] * f.dy() - oracle::neumann_cell(lo, lo + f.dy(), 1.0, x0));
    }
    EXPECT_LE(l1, 1e-3);
    EXPECT_EQ(f.path.I.back(), 0.0);
    for (std::size_t k = 0; k < f.trace.size(); ++k) EXPECT_EQ(boundary_trace(f, k).Iprime, 0.0);
}

TEST(Fbp, WarmStartAtBoundary) {
    const auto f = solve_fbp(brownian(0.0, InitialDistribution::point_mass(0.0)), grid(2000, 1e-4));
    const auto& w = f.final_row();
    double l1 = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        const double lo = static_cast<double>(j) * f.dy();
        l1 += std::abs(w[j] * f.dy() - oracle::neumann_cell(lo, lo + f.dy(), 1.0, 0.0));
    }
    EXPECT_LE(l1, 1e-3);
}

TEST(Fbp, ElasticDensity) {
    const double gamma = 0.8, x0 = 0.5;
    const auto f = solve_fbp(brownian(gamma, InitialDistribution::point_mass(x0)), grid(2000, 1e-4));
    const auto& w = f.final_row();
    double sup = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        sup = std::max(sup, std::abs(w[j] - oracle::elastic_density(f.grid.center(j), 1.0, x0, gamma)));
    EXPECT_LE(sup, 5e-3);
    EXPECT_NEAR(f.path.I.back(), 1.0 - oracle::elastic_survival(1.0, x0, gamma), 2e-3);
}

TEST(Fbp, MassBalanceOnCoupledScenario) {
    const auto f = solve_fbp(coupled(), grid(1000, 1e-3));
    const auto r = mass_balance(f);
    EXPECT_EQ(r.size(), f.path.size());
    EXPECT_LE(*std::max_element(r.begin(), r.end()), 1e-8);
    EXPECT_LE(r.front(), 1e-6);
    EXPECT_NEAR(f.path.I.back() + f.mass.back(), 1.0, 1e-8);
    EXPECT_GT(f.path.I.back(), 0.0);
    EXPECT_LE(c_identity_gap(f.path, coupled()), 1e-10);
}

TEST(Fbp, ResidualIsRoundoff) {
    // the residual sits at the roundoff floor on both grids
    const auto fine = solve_fbp(coupled(), grid(1000, 1e-3));
    const auto coarse = solve_fbp(coupled(), grid(500, 1e-3));
    const auto rf = mass_balance(fine), rc = mass_balance(coarse);
    const double mf = std::max(*std::max_element(rf.begin(), rf.end()), 1e-15);
    const double mc = std::max(*std::max_element(rc.begin(), rc.end()), 1e-15);
    EXPECT_LT(mc / mf, 10.0);
    EXPECT_LT(mf / mc, 10.0);
}

TEST(Fbp, FluxIntegratesToLoss) {
    const auto f = solve_fbp(coupled(), grid(1000, 1e-3));
    double integral = 0.0;
    for (std::size_t k = f.start_step + 1; k < f.trace.size(); ++k) integral += boundary_trace(f, k).Iprime * f.grid.dt;
    EXPECT_NEAR(integral, f.path.I.back(), 1e-6);
}

TEST(Fbp, TraceProduct) {
    DensityField f;
    f.trace = {0.4};
    f.gamma_used = {0.5};
    f.sigma2_used = {1.0};
    EXPECT_DOUBLE_EQ(boundary_trace(f, 0).Iprime, 0.2);
    EXPECT_DOUBLE_EQ(boundary_trace(f, 0).w0, 0.4);
}

TEST(Fbp, TraceWeightsReproduceQuadratics) {
    // q(y) = 1 + h y + c y^2 has q'(0) = h q(0); the weights recover q(0) = 1
    const double dy = 0.1;
    for (double h : {0.0, 0.7, 3.0}) {
        const double c = 2.0;
        auto avg = [&](double lo) {
            auto Q = [&](double y) { return y + h * y * y / 2 + c * y * y * y / 3; };
            return (Q(lo + dy) - Q(lo)) / dy;
        };
        const auto [c0, c1] = detail::trace_weights(h, dy);
        EXPECT_NEAR(c0 * avg(0.0) + c1 * avg(dy), 1.0, 1e-12);
    }
}

TEST(Fbp, InitialProjection) {
    double t0 = -1.0, deficit = 1.0;
    auto s = coupled();
    const auto g = grid(2000, 1e-4);
    const auto w = initial_projection(s, g, t0, deficit);
    double m = 0.0;
    for (double v : w) m += v * g.dy();
    EXPECT_NEAR(m, 1.0, 1e-10);
    EXPECT_EQ(t0, 0.0);
    EXPECT_LE(std::abs(deficit), 1e-6);

    s.initial = InitialDistribution::point_mass(0.0);
    const auto d = initial_projection(s, g, t0, deficit);
    m = 0.0;
    for (double v : d) m += v * g.dy();
    EXPECT_NEAR(m, 1.0, 1e-8);
    EXPECT_DOUBLE_EQ(t0, 4e-4);

    s.initial = InitialDistribution::point_mass(5.5);
    EXPECT_THROW(initial_projection(s, g, t0, deficit), ValidationError);
}

TEST(Fbp, PositivityAndNoClipping) {
    for (double gamma : {0.1, 2.0, 10.0}) {
        const auto f = solve_fbp(brownian(gamma, InitialDistribution::point_mass(0.2)), grid(500, 1e-3));
        EXPECT_GE(f.min_value, -1e-10);
        EXPECT_EQ(f.clip_events, 0u);
        for (const auto& row : f.rows)
            for (double v : row) EXPECT_GE(v, -1e-10);
    }
}

TEST(Fbp, GridConvergence) {
    // J and the time step refined together
    const auto s = coupled(0.5);
    const auto a = solve_fbp(s, grid(200, 4e-3));
    const auto b = solve_fbp(s, grid(400, 2e-3));
    const auto c = solve_fbp(s, grid(800, 1e-3));
    const double e1 = l1_nested(a.final_row(), b.final_row(), a.dy());
    const double e2 = l1_nested(b.final_row(), c.final_row(), b.dy());
    EXPECT_GT(e1, 0.0);
    EXPECT_LE(e2, 0.55 * e1);
}

TEST(Fbp, MonotoneInReactivity) {
    auto lo = coupled(), hi = coupled();
    hi.reactivity = CoefficientFamily::logistic(0.4, 2.0, 20.0, 0.1);
    const auto fl = solve_fbp(lo, grid(500, 1e-3));
    const auto fh = solve_fbp(hi, grid(500, 1e-3));
    EXPECT_GT(fh.path.I.back(), fl.path.I.back());
}

TEST(Fbp, PicardPassesStayClose) {
    auto g = grid(500, 1e-3);
    const auto f0 = solve_fbp(coupled(), g);
    g.picard = 2;
    const auto f2 = solve_fbp(coupled(), g);
    EXPECT_NEAR(f0.path.I.back(), f2.path.I.back(), 5e-3);
    const auto r = mass_balance(f2);
    EXPECT_LE(*std::max_element(r.begin(), r.end()), 1e-8);
}

TEST(Fbp, RowsAndTimes) {
    auto g = grid(200, 1e-2);
    g.row_stride = 10;
    g.row_times = {0.25};
    const auto f = solve_fbp(coupled(), g);
    EXPECT_DOUBLE_EQ(f.row_t.front(), 0.0);
    EXPECT_DOUBLE_EQ(f.row_t.back(), 1.0);
    EXPECT_NEAR(f.row_t[f.row_index(0.25)], 0.25, 1e-12);
    EXPECT_EQ(f.rows.size(), f.row_A.size());
    EXPECT_NEAR(l1_rows(f.rows.front(), f.rows.front(), f.dy()), 0.0, 0.0);
}

TEST(Fbp, RejectsBadGrids) {
    EXPECT_THROW(solve_fbp(coupled(), grid(2, 1e-3)), ValidationError);
    EXPECT_THROW(solve_fbp(coupled(), grid(100, 0.3)), ValidationError);
    EXPECT_THROW(solve_fbp(coupled(), grid(100, -1.0)), ValidationError);
}

TEST(Fbp, SurvivorOfRow) {
    const std::vector<double> row = {1.0, 2.0, 3.0};
    EXPECT_DOUBLE_EQ(field_survivor(row, 0.5, 0.0), 3.0);
    EXPECT_DOUBLE_EQ(field_survivor(row, 0.5, 0.75), 2.0);
    EXPECT_DOUBLE_EQ(field_survivor(row, 0.5, 2.0), 0.0);
}
