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

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "reactfront/error.hpp"
#include "reactfront/kernel.hpp"
#include "reactfront/model.hpp"
#include "reactfront/numerics.hpp"

namespace reactfront {

struct SolverGrid {
    std::size_t J = 2000;
    double dt = 1e-4;
    double ymax = 10.0;
    /// Store a density row every `row_stride` steps (0 picks about 200 rows),
    /// plus the rows nearest to `row_times`. The last row is always kept.
    std::size_t row_stride = 0;
    std::vector<double> row_times;
    /// Extra fixed-point passes per step with gamma and A' re-evaluated at the
    /// provisional end-of-step state.
    int picard = 0;
    /// Point masses start from the reflected Gaussian at this many steps.
    int warm_start_steps = 4;

    double dy() const { return ymax / static_cast<double>(J); }
    double center(std::size_t j) const { return (static_cast<double>(j) + 0.5) * dy(); }
};

struct DensityField {
    SolverGrid grid;
    double t0 = 0.0;                  // warm-start clock offset (0 for smooth P0)
    std::size_t start_step = 0;
    std::vector<double> row_t;        // times of stored rows
    std::vector<double> row_A;        // front position at those times
    std::vector<std::vector<double>> rows;
    std::vector<double> trace;        // w(t_k, 0) per node
    std::vector<double> gamma_used;   // gamma applied to the flux that produced node k
    std::vector<double> sigma2_used;  // sigma^2 at the boundary for the same flux
    std::vector<double> mass;         // sum_j w_j dy per node
    PathBundle path;
    double projection_error = 0.0;
    double min_value = 0.0;
    double tail_mass = 0.0;           // mass in the last 5% of cells at T
    std::size_t clip_events = 0;

    double dy() const { return grid.dy(); }
    const std::vector<double>& final_row() const { return rows.back(); }

    /// Index of the stored row closest to t.
    std::size_t row_index(double t) const {
        std::size_t best = 0;
        for (std::size_t r = 1; r < row_t.size(); ++r)
            if (std::abs(row_t[r] - t) < std::abs(row_t[best] - t)) best = r;
        return best;
    }
};

/// Survivor of the moving-frame density at y: int_y^inf w.
inline double field_survivor(const std::vector<double>& row, double dy, double y) {
    if (y <= 0.0) {
        double s = 0.0;
        for (double v : row) s += v * dy;
        return s;
    }
    const double q = y / dy;
    const auto j = static_cast<std::size_t>(q);
    if (j >= row.size()) return 0.0;
    double s = row[j] * (static_cast<double>(j + 1) - q) * dy;
    for (std::size_t i = j + 1; i < row.size(); ++i) s += row[i] * dy;
    return s;
}

/// Cell averages of the reflected Gaussian N(., t; z0, 0) with variance var.
inline std::vector<double> reflected_gaussian_cells(const SolverGrid& g, double z0, double var) {
    const double s = std::sqrt(var), dy = g.dy();
    std::vector<double> w(g.J);
    for (std::size_t j = 0; j < g.J; ++j) {
        const double lo = static_cast<double>(j) * dy, hi = lo + dy;
        const double m = (num::normal_cdf((hi - z0) / s) - num::normal_cdf((lo - z0) / s)) +
                         (num::normal_cdf((hi + z0) / s) - num::normal_cdf((lo + z0) / s));
        w[j] = m / dy;
    }
    return w;
}

/// Initial cell averages. For an atomic law the warm start time is
/// warm_start_steps * dt; for smooth laws cell masses come from exact survivor
/// differences, renormalized to one. Returns the pre-normalization deficit in
/// `deficit`.
inline std::vector<double> initial_projection(const ScenarioSpec& spec, const SolverGrid& g, double& t0,
                                              double& deficit) {
    const double dy = g.dy();
    deficit = 0.0;
    if (spec.initial.is_atomic()) {
        const double z0 = spec.initial.params()[0] - spec.a0;
        if (z0 > 0.5 * g.ymax) throw ValidationError("fbp: point mass lies beyond ymax / 2");
        t0 = g.warm_start_steps * g.dt;
        const double s = spec.volatility(0.0, spec.initial.params()[0]);
        auto w = reflected_gaussian_cells(g, z0, s * s * t0);
        double m = 0.0;
        for (double v : w) m += v * dy;
        deficit = 1.0 - m;
        return w;
    }
    t0 = 0.0;
    std::vector<double> w(g.J);
    double m = 0.0;
    for (std::size_t j = 0; j < g.J; ++j) {
        const double lo = spec.a0 + static_cast<double>(j) * dy;
        const double cell = spec.initial.survivor(lo, spec.a0) - spec.initial.survivor(lo + dy, spec.a0);
        w[j] = cell / dy;
        m += cell;
    }
    deficit = 1.0 - m;
    for (double& v : w) v /= m;
    return w;
}

namespace detail {

/// Boundary value of the quadratic whose averages over the first two cells are
/// w0, w1 and whose slope at 0 is h times its value: (7 w0 - w1) / (6 + 2 h dy).
/// Returns the coefficients on (w0, w1).
inline std::pair<double, double> trace_weights(double h, double dy) {
    const double den = 6.0 + 2.0 * h * dy;
    if (den < 1.0) return {1.0, 0.0};
    return {7.0 / den, -1.0 / den};
}

} // namespace detail

/// Finite-volume solve of the free boundary problem in the frame y = x - A_t.
/// Backward Euler in time with coefficients frozen at the start of each step;
/// exponentially fitted (Scharfetter-Gummel) fluxes on sigma^2 w; the reactive
/// boundary flux sigma^2 gamma w(0) is treated implicitly through the trace.
inline DensityField solve_fbp(const ScenarioSpec& spec, const SolverGrid& grid) {
    if (grid.J < 3) throw ValidationError("fbp: need at least three cells");
    if (!(grid.dt > 0.0) || !(grid.ymax > 0.0)) throw ValidationError("fbp: dt and ymax must be positive");
    const long K = num::steps_in(spec.horizon, grid.dt);
    if (K < 1) throw ValidationError("fbp: dt must divide the horizon");

    DensityField f;
    f.grid = grid;
    const std::size_t J = grid.J;
    const double dy = grid.dy(), dt = grid.dt;

    std::vector<double> w = initial_projection(spec, grid, f.t0, f.projection_error);
    f.start_step = static_cast<std::size_t>(std::lround(f.t0 / dt));
    if (static_cast<long>(f.start_step) >= K) throw ValidationError("fbp: warm start beyond the horizon");

    std::size_t stride = grid.row_stride;
    if (stride == 0) stride = std::max<std::size_t>(1, static_cast<std::size_t>(K) / 200);
    std::vector<long> wanted;
    for (double t : grid.row_times) wanted.push_back(std::lround(t / dt));

    const FrontCalculator fc(spec);
    History I_hist(dt, Interp::linear), Ip_hist(dt, Interp::linear);

    std::vector<double> sig2(J), lower(J), diag(J), upper(J), rhs(J), scratch;
    f.min_value = *std::min_element(w.begin(), w.end());

    auto mass_of = [&](const std::vector<double>& v) {
        long double m = 0.0L;
        for (double x : v) m += x;
        return static_cast<double>(m * dy);
    };
    auto boundary_h = [&](double t, double A, double Ap, double gamma) {
        const double s0 = spec.volatility(t, A);
        const double ds2 = 2.0 * s0 * spec.volatility.derivative(t, A);
        return (2.0 * (s0 * s0 * gamma + spec.drift(t, A) - Ap) - ds2) / (s0 * s0);
    };
    auto trace_of = [&](const std::vector<double>& v, double h) {
        const auto [c0, c1] = detail::trace_weights(h, dy);
        return std::max(0.0, c0 * v[0] + c1 * v[1]);
    };
    auto store_row = [&](long k, double A) {
        const bool keep = (k - static_cast<long>(f.start_step)) % static_cast<long>(stride) == 0 || k == K ||
                          std::find(wanted.begin(), wanted.end(), k) != wanted.end();
        if (!keep) return;
        f.row_t.push_back(static_cast<double>(k) * dt);
        f.row_A.push_back(A);
        f.rows.push_back(w);
    };

    // nodes before the warm start carry the untouched initial state
    for (std::size_t k = 0; k <= f.start_step; ++k) {
        const double t = static_cast<double>(k) * dt;
        I_hist.push_back(0.0);
        const double g = spec.reactivity(t, 0.0);
        const double s2 = std::pow(spec.volatility(t, spec.a0), 2);
        const double tr = k == f.start_step ? trace_of(w, boundary_h(t, spec.a0, 0.0, g)) : 0.0;
        Ip_hist.push_back(tr * g * s2);
        f.trace.push_back(tr);
        f.gamma_used.push_back(g);
        f.sigma2_used.push_back(s2);
        f.mass.push_back(k == f.start_step ? mass_of(w) : 1.0);
        f.path.push(t, 0.0, spec.a0, 0.0, 0.0);
    }
    f.path.dt = dt;
    store_row(static_cast<long>(f.start_step), spec.a0);

    double I = 0.0;
    std::vector<double> w_old;
    for (long k = static_cast<long>(f.start_step); k < K; ++k) {
        const double t = static_cast<double>(k) * dt;
        double A = f.path.A[k], Ap = f.path.Aprime[k], C = f.path.C[k];
        double t_coef = t;
        w_old = w;
        double gamma = 0.0, s2b = 0.0, tr = 0.0, I_new = I;

        for (int pass = 0; pass <= grid.picard; ++pass) {
            gamma = spec.reactivity(t_coef, C);
            for (std::size_t j = 0; j < J; ++j) sig2[j] = std::pow(spec.volatility(t_coef, A + grid.center(j)), 2);
            s2b = std::pow(spec.volatility(t_coef, A), 2);
            const auto [c0, c1] = detail::trace_weights(boundary_h(t_coef, A, Ap, gamma), dy);
            const double lam = dt / dy;

            std::fill(lower.begin(), lower.end(), 0.0);
            std::fill(upper.begin(), upper.end(), 0.0);
            std::fill(diag.begin(), diag.end(), 1.0);
            for (std::size_t j = 0; j + 1 < J; ++j) {
                const double yf = static_cast<double>(j + 1) * dy;
                const double u = spec.drift(t_coef, A + yf) - Ap;
                const double s2f = 0.5 * (sig2[j] + sig2[j + 1]);
                const double P = 2.0 * u * dy / s2f;
                const double a = num::bernoulli(-P) * sig2[j] / (2.0 * dy);
                const double b = num::bernoulli(P) * sig2[j + 1] / (2.0 * dy);
                // F_{j+1/2} = b w_{j+1} - a w_j enters row j with +, row j+1 with -
                diag[j] += lam * a;
                upper[j] -= lam * b;
                diag[j + 1] += lam * b;
                lower[j + 1] -= lam * a;
            }
            const double kb = s2b * gamma;
            diag[0] += lam * kb * c0;
            upper[0] += lam * kb * c1;

            rhs = w_old;
            num::solve_tridiagonal(lower, diag, upper, rhs, scratch);
            w = rhs;
            tr = std::max(0.0, c0 * w[0] + c1 * w[1]);
            I_new = I + dt * kb * (c0 * w[0] + c1 * w[1]);

            if (pass < grid.picard) {
                // provisional end-of-step state for the next pass
                I_hist.push_back(I_new);
                Ip_hist.push_back(tr * gamma * s2b);
                const double t1 = t + dt;
                A = fc.advance_front(I_hist, t1);
                C = fc.contagiousness(I_hist, t1);
                Ap = fc.velocity_from_rate(Ip_hist, t1);
                I_hist.pop_back();
                Ip_hist.pop_back();
                t_coef = t1;
            }
        }

        I = I_new;
        const double wmin = *std::min_element(w.begin(), w.end());
        f.min_value = std::min(f.min_value, wmin);
        if (wmin < -1e-10)
            throw NumericalAbort("fbp: negative density " + std::to_string(wmin) + " at t = " + std::to_string(t + dt));
        const double m = mass_of(w);
        if (std::abs(I + m - 1.0) > 1e-6)
            throw NumericalAbort("fbp: mass balance residual " + std::to_string(std::abs(I + m - 1.0)) +
                                 " at t = " + std::to_string(t + dt));

        const double t1 = t + dt;
        I_hist.push_back(I);
        Ip_hist.push_back(tr * gamma * s2b);
        f.trace.push_back(tr);
        f.gamma_used.push_back(gamma);
        f.sigma2_used.push_back(s2b);
        f.mass.push_back(m);
        const double A1 = fc.advance_front(I_hist, t1);
        f.path.push(t1, I, A1, fc.contagiousness(I_hist, t1), fc.velocity_from_rate(Ip_hist, t1));
        store_row(k + 1, A1);
    }

    const std::size_t tail_from = J - std::max<std::size_t>(1, J / 20);
    for (std::size_t j = tail_from; j < J; ++j) f.tail_mass += w[j] * dy;
    return f;
}

struct TraceValue {
    double w0;
    double Iprime;
};

inline TraceValue boundary_trace(const DensityField& f, std::size_t k) {
    const double w0 = f.trace.at(k);
    return {w0, w0 * f.gamma_used[k] * f.sigma2_used[k]};
}

/// r_k = |I_k + sum_j w_j dy - 1| from the warm-start node on.
inline std::vector<double> mass_balance(const DensityField& f) {
    std::vector<double> r;
    for (std::size_t k = f.start_step; k < f.mass.size(); ++k) r.push_back(std::abs(f.path.I[k] + f.mass[k] - 1.0));
    return r;
}

} // namespace reactfront
