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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "reactfront/error.hpp"
#include "reactfront/fbp.hpp"
#include "reactfront/kernel.hpp"
#include "reactfront/particles.hpp"
#include "reactfront/volterra.hpp"

namespace reactfront {

// ---------------------------------------------------------------------------
// Measures on the line
// ---------------------------------------------------------------------------

/// Either a weighted point cloud or a piecewise-constant density on uniform
/// cells. Both expose a survivor function S(x) = mu((x, inf)) that is linear
/// between consecutive breakpoints, which makes all distances below exact.
class Measure {
public:
    static Measure empirical(std::vector<double> sorted_points, double weight) {
        Measure m;
        m.atomic_ = true;
        m.points_ = std::move(sorted_points);
        m.weight_ = weight;
        if (!std::is_sorted(m.points_.begin(), m.points_.end()))
            std::sort(m.points_.begin(), m.points_.end());
        return m;
    }

    static Measure cells(double x0, double dx, std::vector<double> values) {
        Measure m;
        m.atomic_ = false;
        m.x0_ = x0;
        m.dx_ = dx;
        m.values_ = std::move(values);
        m.tail_.assign(m.values_.size() + 1, 0.0);
        for (std::size_t j = m.values_.size(); j-- > 0;) m.tail_[j] = m.tail_[j + 1] + m.values_[j] * dx;
        return m;
    }

    double mass() const { return atomic_ ? weight_ * static_cast<double>(points_.size()) : tail_.front(); }

    /// mu((x, inf)).
    double survivor(double x) const {
        if (atomic_) {
            const auto it = std::upper_bound(points_.begin(), points_.end(), x);
            return weight_ * static_cast<double>(points_.end() - it);
        }
        if (x <= x0_) return tail_.front();
        const double q = (x - x0_) / dx_;
        const auto j = static_cast<std::size_t>(q);
        if (j >= values_.size()) return 0.0;
        return tail_[j + 1] + values_[j] * (static_cast<double>(j + 1) - q) * dx_;
    }

    /// mu([x, inf)), the left limit of the survivor.
    double survivor_left(double x) const {
        if (!atomic_) return survivor(x);
        const auto it = std::lower_bound(points_.begin(), points_.end(), x);
        return weight_ * static_cast<double>(points_.end() - it);
    }

    std::vector<double> breakpoints() const {
        if (atomic_) return points_;
        std::vector<double> b(values_.size() + 1);
        for (std::size_t j = 0; j < b.size(); ++j) b[j] = x0_ + static_cast<double>(j) * dx_;
        return b;
    }

    bool atomic() const { return atomic_; }

private:
    bool atomic_ = true;
    std::vector<double> points_;
    double weight_ = 0.0;
    double x0_ = 0.0, dx_ = 1.0;
    std::vector<double> values_;
    std::vector<double> tail_;
};

namespace detail {

inline std::vector<double> merged_breakpoints(const Measure& a, const Measure& b) {
    std::vector<double> x = a.breakpoints(), y = b.breakpoints(), out;
    out.reserve(x.size() + y.size());
    std::merge(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// int_0^len |u + (v - u) s / len| ds.
inline double abs_linear_integral(double u, double v, double len) {
    if ((u >= 0.0 && v >= 0.0) || (u <= 0.0 && v <= 0.0)) return 0.5 * std::abs(u + v) * len;
    const double s0 = u / (u - v) * len;
    return 0.5 * (std::abs(u) * s0 + std::abs(v) * (len - s0));
}

} // namespace detail

/// sup_x |S_a(x) - S_b(x)| over both one-sided limits at every breakpoint.
inline double ks_distance(const Measure& a, const Measure& b) {
    double best = std::abs(a.mass() - b.mass());
    for (double x : detail::merged_breakpoints(a, b)) {
        best = std::max(best, std::abs(a.survivor(x) - b.survivor(x)));
        best = std::max(best, std::abs(a.survivor_left(x) - b.survivor_left(x)));
    }
    return best;
}

struct W1Result {
    double distance;  // between the measures conditioned to unit mass
    double mass_gap;  // |m_a - m_b|
};

inline W1Result wasserstein1(const Measure& a, const Measure& b) {
    const double ma = a.mass(), mb = b.mass();
    if (!(ma > 0.0) || !(mb > 0.0)) throw ValidationError("wasserstein1: null measure");
    const auto xs = detail::merged_breakpoints(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double u = a.survivor(xs[i]) / ma - b.survivor(xs[i]) / mb;
        const double v = a.survivor_left(xs[i + 1]) / ma - b.survivor_left(xs[i + 1]) / mb;
        acc += detail::abs_linear_integral(u, v, xs[i + 1] - xs[i]);
    }
    return {acc, std::abs(ma - mb)};
}

/// L2 norm of S_a - S_b from the smallest breakpoint on. Meant for
/// moving-frame measures, which live on [0, inf).
inline double energy_norm(const Measure& a, const Measure& b) {
    const auto xs = detail::merged_breakpoints(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double u = a.survivor(xs[i]) - b.survivor(xs[i]);
        const double v = a.survivor_left(xs[i + 1]) - b.survivor_left(xs[i + 1]);
        acc += (u * u + u * v + v * v) / 3.0 * (xs[i + 1] - xs[i]);
    }
    return std::sqrt(acc);
}

/// Dvoretzky-Kiefer-Wolfowitz: P(KS > eps) <= 2 exp(-2 n eps^2).
inline double dkw_bound(std::size_t n, double level) {
    return std::sqrt(std::log(2.0 / level) / (2.0 * static_cast<double>(n)));
}

// Adapters. Physical coordinates unless stated otherwise.

inline Measure measure_of(const Snapshot& s) {
    return Measure::empirical(s.positions, 1.0 / static_cast<double>(s.n));
}

inline Measure measure_of(const DensityField& f, std::size_t row, bool moving_frame = false) {
    return Measure::cells(moving_frame ? 0.0 : f.row_A[row], f.dy(), f.rows[row]);
}

inline Measure measure_of(const VolterraSolution& s, std::size_t k, bool moving_frame = false) {
    const auto& p = s.p[k];
    std::vector<double> cells(p.size() - 1);
    for (std::size_t j = 0; j + 1 < p.size(); ++j) cells[j] = 0.5 * (p[j] + p[j + 1]) / s.sigma0;
    return Measure::cells(moving_frame ? 0.0 : s.A[k], s.sigma0 * s.dz(), std::move(cells));
}

inline DensityRows rows_of(const DensityField& f) {
    DensityRows d;
    d.times = f.row_t;
    d.rows = f.rows;
    d.x0 = 0.5 * f.dy();
    d.dx = f.dy();
    return d;
}

/// L1 distance in the moving frame between an FBP row and a Volterra row,
/// sampling the Volterra interpolant at the FBP cell centres.
inline double l1_fbp_volterra(const DensityField& f, std::size_t row, const VolterraSolution& s, std::size_t k) {
    const double dy = f.dy();
    double acc = 0.0;
    for (std::size_t j = 0; j < f.rows[row].size(); ++j)
        acc += std::abs(f.rows[row][j] - s.moving_frame_density(k, (static_cast<double>(j) + 0.5) * dy)) * dy;
    return acc;
}

// ---------------------------------------------------------------------------
// Particle diagnostics
// ---------------------------------------------------------------------------

struct FluxGap {
    double delta;
    double gap;        // |compensator_T - int gamma <mu, sigma^2 psi_delta>|
    double gap_plain;  // same identity without gamma: mean local time
};

inline std::vector<FluxGap> flux_identity_gap(const SimulationOutput& out) {
    std::vector<FluxGap> g;
    for (const auto& fs : out.flux)
        g.push_back({fs.delta, std::abs(out.compensator.back() - fs.with_gamma.back()),
                     std::abs(out.mean_local_time.back() - fs.plain.back())});
    return g;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_se = 0.0;
};

/// Least squares on (log x, log y).
inline LogLogFit convergence_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("convergence fit: length mismatch");
    if (x.size() < 3) throw ValidationError("convergence fit: need at least three points");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("convergence fit: inputs must be positive");
    const double m = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += std::log(x[i]);
        sy += std::log(y[i]);
    }
    const double mx = sx / m, my = sy / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx, dy = std::log(y[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw ValidationError("convergence fit: x values must differ");
    LogLogFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double ss_res = std::max(0.0, syy - f.slope * sxy);
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.slope_se = std::sqrt(ss_res / (m - 2.0) / sxx);
    return f;
}

inline double rms(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

struct MartingaleStudy {
    std::vector<std::size_t> n;
    std::vector<double> rms;
    std::vector<std::vector<double>> values;  // M_T per seed
    std::optional<LogLogFit> fit;
};

/// RMS over seeds of M_T = I_T - compensator_T for each n.
inline MartingaleStudy martingale_residual(const ScenarioSpec& spec, const std::vector<std::size_t>& ns,
                                           std::size_t seeds, SimulationConfig base) {
    MartingaleStudy st;
    for (std::size_t n : ns) {
        std::vector<double> vals;
        for (std::size_t s = 0; s < seeds; ++s) {
            SimulationConfig cfg = base;
            cfg.n = n;
            cfg.seed = base.seed + s;
            vals.push_back(simulate(spec, cfg).martingale());
        }
        st.n.push_back(n);
        st.rms.push_back(rms(vals));
        st.values.push_back(std::move(vals));
    }
    if (ns.size() >= 3) {
        std::vector<double> x(ns.begin(), ns.end());
        bool positive = std::all_of(st.rms.begin(), st.rms.end(), [](double r) { return r > 0.0; });
        if (positive) st.fit = convergence_fit(x, st.rms);
    }
    return st;
}

// ---------------------------------------------------------------------------
// Path comparisons
// ---------------------------------------------------------------------------

struct PathDistance {
    double sup_A = 0.0;
    double sup_I = 0.0;
};

/// Sup over the nodes of `a` of |a - b| with b interpolated linearly.
inline PathDistance path_distance(const PathBundle& a, const PathBundle& b) {
    PathDistance d;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d.sup_A = std::max(d.sup_A, std::abs(a.A[k] - b.A_at(a.t[k])));
        d.sup_I = std::max(d.sup_I, std::abs(a.I[k] - b.I_at(a.t[k])));
    }
    return d;
}

struct SnapshotComparison {
    double t;
    double ks;
    double w1;
    double mass_gap;
};

inline nlohmann::json to_json(const LogLogFit& f) {
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"slope_se", f.slope_se},
            {"slope_band", {f.slope - 2.0 * f.slope_se, f.slope + 2.0 * f.slope_se}}};
}

} // namespace reactfront
