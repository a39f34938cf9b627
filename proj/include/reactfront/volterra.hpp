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
#include <numbers>
#include <string>
#include <vector>

#include "reactfront/error.hpp"
#include "reactfront/kernel.hpp"
#include "reactfront/model.hpp"
#include "reactfront/numerics.hpp"

namespace reactfront {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

/// Centred Gaussian density p_eps(x) with variance eps.
inline double heat_gaussian(double x, double eps) { return num::gauss(x, eps); }

/// Transition density of reflected Brownian motion on [0, inf).
inline double reflected_kernel(double x, double t, double y, double s) {
    if (!(t > s)) throw ValidationError("reflected kernel: need t > s");
    const double v = t - s;
    return num::gauss(y - x, v) + num::gauss(y + x, v);
}

/// d/dy of reflected_kernel.
inline double reflected_kernel_dy(double x, double t, double y, double s) {
    if (!(t > s)) throw ValidationError("reflected kernel: need t > s");
    const double v = t - s;
    return -(y - x) / v * num::gauss(y - x, v) - (y + x) / v * num::gauss(y + x, v);
}

/// Dirichlet heat kernel on the half-line, G_eps(x, y) = p_eps(x - y) - p_eps(x + y).
inline double dirichlet_kernel(double x, double y, double eps) {
    return num::gauss(x - y, eps) - num::gauss(x + y, eps);
}

/// z = (x - A) / sigma0 with the shifted drift b_hat = (b(t, A + sigma0 z) - A') / sigma0.
struct LampertiFrame {
    double sigma0;

    double to_z(double x, double A) const { return (x - A) / sigma0; }
    double to_x(double z, double A) const { return A + sigma0 * z; }
    double bhat(const ScenarioSpec& spec, double t, double z, double A, double Ap) const {
        return (spec.drift(t, to_x(z, A)) - Ap) / sigma0;
    }
};

// ---------------------------------------------------------------------------
// Volterra solver
// ---------------------------------------------------------------------------

struct VolterraGrid {
    std::size_t M = 200;  // intervals; nodes z_j = j dz, j = 0..M
    double zmax = 8.0;
    double dt = 0.01;
    double tol = 1e-12;
    int max_sweeps = 50;

    double dz() const { return zmax / static_cast<double>(M); }
};

struct VolterraSolution {
    VolterraGrid grid;
    double sigma0 = 1.0;
    bool atomic = false;
    std::vector<double> t;
    std::vector<double> A;
    std::vector<std::vector<double>> p;  // p_hat(t_k, z_j); row 0 is empty for an atomic start
    std::vector<double> loss_rate;       // gamma sigma0 p_hat(t_k, 0)
    std::vector<double> mass;            // trapezoid of p_hat(t_k, .)
    int max_sweeps_used = 0;

    double dz() const { return grid.dz(); }

    /// Physical-frame density at y = x - A_t: p_hat(t, y / sigma0) / sigma0,
    /// linear in z between nodes and zero past zmax.
    double moving_frame_density(std::size_t k, double y) const {
        const double z = y / sigma0;
        const auto& row = p[k];
        if (row.empty() || z < 0.0 || z > grid.zmax) return 0.0;
        const double q = z / dz();
        const auto j = std::min(static_cast<std::size_t>(q), grid.M - 1);
        const double th = q - static_cast<double>(j);
        return (row[j] + (row[j + 1] - row[j]) * th) / sigma0;
    }

    /// Cumulative loss int_0^{t_k} gamma sigma0 p_hat(r, 0) dr by trapezoid.
    std::vector<double> cumulative_loss() const {
        std::vector<double> out{0.0};
        for (std::size_t k = 1; k < loss_rate.size(); ++k)
            out.push_back(out.back() + 0.5 * grid.dt * (loss_rate[k - 1] + loss_rate[k]));
        return out;
    }
};

namespace detail {

/// Antiderivative of s^{-1/2} exp(-a/s), zero at s = 0.
inline double m0(double s, double a) {
    if (s <= 0.0) return 0.0;
    if (a == 0.0) return 2.0 * std::sqrt(s);
    return 2.0 * std::sqrt(s) * std::exp(-a / s) - 2.0 * std::sqrt(std::numbers::pi * a) * std::erfc(std::sqrt(a / s));
}

/// Antiderivative of s^{1/2} exp(-a/s), zero at s = 0.
inline double m1(double s, double a) {
    if (s <= 0.0) return 0.0;
    return 2.0 / 3.0 * s * std::sqrt(s) * std::exp(-a / s) - 2.0 * a / 3.0 * m0(s, a);
}

/// Free term int N(x, t; y, 0) mu0(dy) in the z frame.
inline double free_term(const ScenarioSpec& spec, double sigma0, double x, double t) {
    const auto& ini = spec.initial;
    switch (ini.kind()) {
    case InitialKind::point_mass: {
        const double z0 = (ini.params()[0] - spec.a0) / sigma0;
        return num::gauss(x - z0, t) + num::gauss(x + z0, t);
    }
    case InitialKind::truncated_gaussian: {
        const double m = (ini.params()[0] - spec.a0) / sigma0, s2 = std::pow(ini.params()[1] / sigma0, 2);
        const double tot = t + s2, v = t * s2 / tot;
        const double mu1 = (x * s2 + m * t) / tot, mu2 = (-x * s2 + m * t) / tot;
        const double Q = num::normal_sf(-m / std::sqrt(s2));
        return (num::gauss(x - m, tot) * num::normal_cdf(mu1 / std::sqrt(v)) +
                num::gauss(x + m, tot) * num::normal_cdf(mu2 / std::sqrt(v))) / Q;
    }
    case InitialKind::shifted_exponential: {
        const double lam = ini.params()[0] * sigma0, st = std::sqrt(t);
        const double e = 0.5 * lam * lam * t;
        const double left = std::exp(-lam * x + e + num::log_normal_sf(-(x - lam * t) / st));
        const double right = std::exp(lam * x + e + num::log_normal_sf((x + lam * t) / st));
        return lam * (left + right);
    }
    }
    return 0.0;
}

/// Initial density of z on the nodes (smooth laws only).
inline double initial_density(const ScenarioSpec& spec, double sigma0, double z) {
    return sigma0 * spec.initial.density(spec.a0 + sigma0 * z, spec.a0);
}

} // namespace detail

/// Solves
///   p(t,x) = int N(x,t;y,0) mu0(dy) + int_0^t int d_yN(x,t;y,r) f(r,y) dy dr
///            - int_0^t N(x,t;0,r) gamma sigma0 p(r,0) dr,       f = b_hat p,
/// on a node grid in z. The drift term is integrated by parts in y, which moves
/// a boundary piece -N(x,t;0,r) f(r,0) next to the loss term; both singular
/// boundary integrals are product-integrated against piecewise-linear g(r).
/// The remaining smooth part int N f_y dy is exact for the piecewise-linear
/// interpolant of f and is integrated in r by the trapezoid rule.
inline VolterraSolution solve_volterra(const ScenarioSpec& spec, const PathBundle& path, const VolterraGrid& grid) {
    if (!spec.volatility.is_constant()) throw ValidationError("volterra: volatility must be constant");
    const double sigma0 = spec.volatility.params()[0];
    if (!(sigma0 > 0.0)) throw ValidationError("volterra: volatility must be positive");
    if (grid.M < 2 || !(grid.zmax > 0.0) || !(grid.dt > 0.0)) throw ValidationError("volterra: bad grid");
    const long Kl = num::steps_in(spec.horizon, grid.dt);
    if (Kl < 1) throw ValidationError("volterra: dt must divide the horizon");
    if (path.size() < 2 || path.horizon() + 1e-12 < spec.horizon)
        throw ValidationError("volterra: path does not cover the horizon");

    const std::size_t K = static_cast<std::size_t>(Kl), M = grid.M, N = M + 1;
    const double dz = grid.dz(), dt = grid.dt;
    const LampertiFrame frame{sigma0};
    const double norm = 2.0 / std::sqrt(2.0 * std::numbers::pi);

    VolterraSolution sol;
    sol.grid = grid;
    sol.sigma0 = sigma0;
    sol.atomic = spec.initial.is_atomic();
    const double z0 = sol.atomic ? (spec.initial.params()[0] - spec.a0) / sigma0 : 0.0;

    std::vector<double> z(N);
    for (std::size_t j = 0; j < N; ++j) z[j] = static_cast<double>(j) * dz;

    // environment at the time nodes
    std::vector<double> A(K + 1), Ap(K + 1), gam(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        const double t = static_cast<double>(k) * dt;
        A[k] = path.A_at(t);
        Ap[k] = path.Aprime_at(t);
        gam[k] = spec.reactivity(t, path.C_at(t));
        sol.t.push_back(t);
    }
    sol.A = A;
    auto bhat = [&](std::size_t k, double zz) { return frame.bhat(spec, sol.t[k], zz, A[k], Ap[k]); };
    bool drift_free = spec.drift.is_constant();
    for (std::size_t k = 0; k <= K && drift_free; ++k)
        drift_free = bhat(k, 0.0) == 0.0;

    // cell weights: W_m[d] = Phi((d+1) dz / sqrt(m dt)) - Phi(d dz / sqrt(m dt)), d in [-N, 2N]
    const long off = static_cast<long>(N);
    const std::size_t span = 3 * N + 1;
    std::vector<std::vector<double>> W(K + 1, std::vector<double>(span, 0.0));
    if (!drift_free) {
        for (std::size_t m = 0; m <= K; ++m) {
            const double st = std::sqrt(static_cast<double>(m) * dt);
            auto E = [&](long d) {
                if (m == 0) return d > 0 ? 1.0 : (d == 0 ? 0.5 : 0.0);
                return num::normal_cdf(static_cast<double>(d) * dz / st);
            };
            for (std::size_t q = 0; q < span; ++q) {
                const long d = static_cast<long>(q) - off;
                W[m][q] = E(d + 1) - E(d);
            }
        }
    }

    // boundary panel weights for lag m (s in [m dt, (m+1) dt]) and target i
    std::vector<std::vector<double>> Bn(N, std::vector<double>(K)), Bf(N, std::vector<double>(K));
    for (std::size_t i = 0; i < N; ++i) {
        const double a = 0.5 * z[i] * z[i];
        double M0lo = 0.0, M1lo = 0.0;
        for (std::size_t m = 0; m < K; ++m) {
            const double slo = static_cast<double>(m) * dt, shi = slo + dt;
            const double M0hi = detail::m0(shi, a), M1hi = detail::m1(shi, a);
            const double d0 = M0hi - M0lo, d1 = M1hi - M1lo;
            Bn[i][m] = norm * (shi * d0 - d1) / dt;
            Bf[i][m] = norm * (d1 - slo * d0) / dt;
            M0lo = M0hi;
            M1lo = M1hi;
        }
    }

    // Q_i = int N(z_i, t; y, r) f_y(r, y) dy for lag m from the node values of f
    std::vector<double> slope(M), Qbuf(N);
    auto smooth_part = [&](std::size_t m, const std::vector<double>& f, std::vector<double>& Q) {
        for (std::size_t j = 0; j < M; ++j) slope[j] = (f[j + 1] - f[j]) / dz;
        const double* w = W[m].data();
        for (std::size_t i = 0; i < N; ++i) {
            const double* wm = w + off - static_cast<long>(i);
            const double* wp = w + off + static_cast<long>(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < M; ++j) acc += (wm[j] + wp[j]) * slope[j];
            Q[i] = acc;
        }
    };

    std::vector<std::vector<double>> f(K + 1, std::vector<double>(N, 0.0));
    std::vector<double> g(K + 1, 0.0);
    sol.p.assign(K + 1, {});
    sol.loss_rate.assign(K + 1, 0.0);
    sol.mass.assign(K + 1, 0.0);

    auto trapz = [&](const std::vector<double>& row) {
        double s = 0.5 * (row.front() + row.back());
        for (std::size_t j = 1; j + 1 < row.size(); ++j) s += row[j];
        return s * dz;
    };

    // time zero
    if (sol.atomic) {
        const double coef = bhat(0, 0.0) + gam[0] * sigma0;
        if (z0 < 0.0) throw ValidationError("volterra: point mass below the front");
        if (z0 == 0.0 && coef != 0.0)
            throw ValidationError("volterra: point mass on the boundary needs a vanishing boundary coefficient");
        sol.mass[0] = 1.0;
    } else {
        sol.p[0].resize(N);
        for (std::size_t j = 0; j < N; ++j) {
            sol.p[0][j] = detail::initial_density(spec, sigma0, z[j]);
            f[0][j] = bhat(0, z[j]) * sol.p[0][j];
        }
        g[0] = sol.p[0][0] * (bhat(0, 0.0) + gam[0] * sigma0);
        sol.loss_rate[0] = gam[0] * sigma0 * sol.p[0][0];
        sol.mass[0] = trapz(sol.p[0]);
    }

    std::vector<double> R(N), Qhist(N), pk(N), pnew(N), fk(N), Q0(N);
    for (std::size_t k = 1; k <= K; ++k) {
        const double t = sol.t[k];
        // known part
        for (std::size_t i = 0; i < N; ++i) R[i] = detail::free_term(spec, sigma0, z[i], t);
        for (std::size_t l = 0; l < k; ++l) {
            const std::size_t m = k - l - 1;  // panel [r_l, r_{l+1}]
            for (std::size_t i = 0; i < N; ++i) {
                R[i] -= Bf[i][m] * g[l];
                if (l + 1 < k) R[i] -= Bn[i][m] * g[l + 1];
            }
        }
        if (!drift_free) {
            std::fill(Qhist.begin(), Qhist.end(), 0.0);
            for (std::size_t l = 0; l < k; ++l) {
                const double wt = l == 0 ? 0.5 * dt : dt;
                if (l == 0 && sol.atomic) {
                    const double b0 = bhat(0, z0);
                    for (std::size_t i = 0; i < N; ++i)
                        Qhist[i] -= wt * reflected_kernel_dy(z[i], t, z0, 0.0) * b0;
                    continue;
                }
                smooth_part(k - l, f[l], Qbuf);
                for (std::size_t i = 0; i < N; ++i) Qhist[i] += wt * Qbuf[i];
            }
            for (std::size_t i = 0; i < N; ++i) R[i] -= Qhist[i];
        }

        // implicit part: current boundary value and the tau = 0 trapezoid end
        const double coef = bhat(k, 0.0) + gam[k] * sigma0;
        std::vector<double> bk(N);
        for (std::size_t j = 0; j < N; ++j) bk[j] = bhat(k, z[j]);
        pk = sol.p[k - 1].empty() ? R : sol.p[k - 1];
        int sweep = 0;
        for (;; ++sweep) {
            if (sweep >= grid.max_sweeps)
                throw NumericalAbort("volterra: fixed point did not converge at t = " + std::to_string(t));
            const double gk = pk[0] * coef;
            if (!drift_free) {
                for (std::size_t j = 0; j < N; ++j) fk[j] = bk[j] * pk[j];
                smooth_part(0, fk, Q0);
            }
            double change = 0.0, scale = 1.0;
            for (std::size_t i = 0; i < N; ++i) {
                pnew[i] = R[i] - Bn[i][0] * gk - (drift_free ? 0.0 : 0.5 * dt * Q0[i]);
                change = std::max(change, std::abs(pnew[i] - pk[i]));
                scale = std::max(scale, std::abs(pnew[i]));
            }
            pk.swap(pnew);
            if (change <= grid.tol * scale) break;
        }
        sol.max_sweeps_used = std::max(sol.max_sweeps_used, sweep + 1);

        sol.p[k] = pk;
        for (std::size_t j = 0; j < N; ++j) f[k][j] = bk[j] * pk[j];
        g[k] = pk[0] * coef;
        sol.loss_rate[k] = gam[k] * sigma0 * pk[0];
        sol.mass[k] = trapz(pk);
    }
    return sol;
}

// ---------------------------------------------------------------------------
// Aronson envelope
// ---------------------------------------------------------------------------

struct AronsonFit {
    double c1 = 0.0;
    double c2 = 0.0;
    double t_at = 0.0;  // location of the binding point
    double x_at = 0.0;
};

/// Density samples on rows: rows[r][j] at time times[r] and distance x0 + j dx
/// from the front.
struct DensityRows {
    std::vector<double> times;
    std::vector<std::vector<double>> rows;
    double x0 = 0.0;
    double dx = 1.0;
};

/// c2 = 1 / (4 sigma_max^2 T); c1 = max sqrt(t) p e^{c2 x^2} over the window.
inline AronsonFit aronson_fit(const DensityRows& d, double t_lo, double t_hi, double sigma_max, double T) {
    AronsonFit fit;
    fit.c2 = 1.0 / (4.0 * sigma_max * sigma_max * T);
    bool any = false;
    for (std::size_t r = 0; r < d.times.size(); ++r) {
        const double t = d.times[r];
        if (t < t_lo || t > t_hi || d.rows[r].empty() || t <= 0.0) continue;
        any = true;
        for (std::size_t j = 0; j < d.rows[r].size(); ++j) {
            const double x = d.x0 + static_cast<double>(j) * d.dx;
            const double v = std::sqrt(t) * d.rows[r][j] * std::exp(fit.c2 * x * x);
            if (v > fit.c1) {
                fit.c1 = v;
                fit.t_at = t;
                fit.x_at = x;
            }
        }
    }
    if (!any) throw ValidationError("aronson fit: empty time window");
    return fit;
}

/// Relative change of c1 between two fits.
inline double aronson_drift(const AronsonFit& a, const AronsonFit& b) {
    return std::abs(a.c1 - b.c1) / std::max(std::abs(a.c1), std::abs(b.c1));
}

/// sup over rows in (0, T] of sqrt(t) * int p^2.
inline double l2_control(const DensityRows& d) {
    double best = 0.0;
    for (std::size_t r = 0; r < d.times.size(); ++r) {
        if (d.times[r] <= 0.0 || d.rows[r].empty()) continue;
        double s = 0.0;
        for (double v : d.rows[r]) s += v * v * d.dx;
        best = std::max(best, std::sqrt(d.times[r]) * s);
    }
    return best;
}

inline DensityRows rows_of(const VolterraSolution& s) {
    DensityRows d;
    d.times = s.t;
    d.rows = s.p;
    d.x0 = 0.0;
    d.dx = s.dz();
    return d;
}

} // namespace reactfront
