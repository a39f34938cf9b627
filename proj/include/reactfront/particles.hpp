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
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "reactfront/error.hpp"
#include "reactfront/kernel.hpp"
#include "reactfront/model.hpp"
#include "reactfront/rng.hpp"

namespace reactfront {

enum class ReflectionScheme {
    euler,  // project the Euler endpoint; local time biased low by O(sqrt(dt))
    bridge  // sample the exact one-step minimum of the frozen-coefficient bridge
};

/// Reflected density of |N(0, delta)|: psi_delta(y) = 2 (2 pi delta)^{-1/2} exp(-y^2 / 2 delta).
inline double psi_delta(double y, double delta) { return 2.0 * num::gauss(y, delta); }

/// State of one particle update inside a step. Pure arithmetic so the three
/// branches (free move, push, kill) can be unit tested directly.
struct StepResult {
    double y;
    double dell;   // local-time increment, twice the Skorokhod push
    bool killed;
    double frac;   // fraction of the step at which the kill happened
};

/// Moves a particle from frame coordinate y by increment w (drift plus noise),
/// reflecting at 0. `bridge_min` is the minimum of the free path relative to
/// its start; pass +inf for the plain projection scheme.
inline StepResult reflect_and_kill(double y, double w, double bridge_min, double gamma, double Lambda,
                                   double chi) {
    StepResult r{y + w, 0.0, false, 1.0};
    double push = 0.0;
    if (std::isfinite(bridge_min)) {
        push = std::max(0.0, -(y + bridge_min));
        r.y = y + w + push;
    } else if (r.y < 0.0) {
        push = -r.y;
        r.y = 0.0;
    }
    r.dell = 2.0 * push;
    const double dLambda = gamma * r.dell;
    if (dLambda > 0.0 && Lambda + dLambda >= chi) {
        r.killed = true;
        r.frac = std::clamp((chi - Lambda) / dLambda, 0.0, 1.0);
    }
    return r;
}

/// Minimum over the step of a Brownian bridge from 0 to w with variance v,
/// sampled by inversion from one open uniform.
inline double bridge_minimum(double w, double v, double u) {
    return 0.5 * (w - std::sqrt(w * w - 2.0 * v * std::log(u)));
}

struct SimulationConfig {
    std::size_t n = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::vector<double> snapshot_times;
    ReflectionScheme scheme = ReflectionScheme::euler;
    /// Mollification widths for the boundary-flux diagnostic; empty disables it.
    std::vector<double> flux_deltas;
    /// If set, A, A' and C are read from this path instead of the empirical
    /// one (decoupled particles in a given environment).
    std::optional<PathBundle> exogenous;
    /// Stream index per particle; empty means the identity assignment.
    std::vector<std::uint64_t> stream_of;
};

struct Snapshot {
    double t = 0.0;
    double A = 0.0;
    std::size_t n = 0;              // ensemble size, the normalizer
    std::vector<double> positions;  // sorted physical positions of alive particles
};

/// (number of positions > x) / n.
inline double empirical_survivor_cdf(const Snapshot& s, double x) {
    if (s.n == 0) return 0.0;
    const auto it = std::upper_bound(s.positions.begin(), s.positions.end(), x);
    return static_cast<double>(s.positions.end() - it) / static_cast<double>(s.n);
}

struct FluxSeries {
    double delta;
    std::vector<double> with_gamma;  // cumulative int gamma <mu, sigma^2 psi_delta> ds per node
    std::vector<double> plain;       // same without gamma
};

struct SimulationOutput {
    PathBundle path;
    std::vector<Snapshot> snapshots;
    std::vector<std::size_t> killed_count;  // per node
    std::vector<double> positions;          // final physical positions
    std::vector<std::uint8_t> alive;
    std::vector<double> local_time;
    std::vector<double> kill_time;          // NaN while alive
    std::vector<double> mean_local_time;    // (1/n) sum l^i_{t and tau} per node
    std::vector<double> compensator;        // (1/n) sum int 1_{s<tau} gamma dl^i per node
    std::vector<FluxSeries> flux;
    std::size_t n = 0;
    double dt = 0.0;

    /// M_T = I_T - compensator_T.
    double martingale() const { return path.I.back() - compensator.back(); }
};

/// Thread count from REACTFRONT_THREADS, else the OpenMP default.
inline int configured_threads() {
    if (const char* env = std::getenv("REACTFRONT_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace detail {

inline constexpr std::size_t kChunk = 4096;

struct ChunkTotals {
    std::size_t kills = 0;
    double ell = 0.0;
    double Lambda = 0.0;
    std::vector<double> flux;  // sum of sigma^2 psi_delta over alive particles, per delta
};

} // namespace detail

/// Time-marches the n-particle system. Output is a pure function of the
/// configuration and seed; the per-chunk partial sums are combined in chunk
/// order so the thread count never changes a bit of it.
inline SimulationOutput simulate(const ScenarioSpec& spec, const SimulationConfig& cfg) {
    if (cfg.n < 1) throw ValidationError("simulate: n must be at least 1");
    if (!(cfg.dt > 0.0)) throw ValidationError("simulate: dt must be positive");
    if (cfg.dt > spec.kernel.duration()) throw ValidationError("simulate: dt must not exceed the kernel duration");
    const long K = num::steps_in(spec.horizon, cfg.dt);
    if (K < 1) throw ValidationError("simulate: dt must divide the horizon");
    std::vector<long> snap_steps;
    for (double ts : cfg.snapshot_times) {
        const long s = num::steps_in(ts, cfg.dt);
        if (s < 0 || s > K) throw ValidationError("simulate: dt must divide every snapshot time within [0, T]");
        snap_steps.push_back(s);
    }
    if (!cfg.stream_of.empty() && cfg.stream_of.size() != cfg.n)
        throw ValidationError("simulate: stream assignment has the wrong length");
    if (cfg.exogenous && cfg.exogenous->horizon() + 1e-12 < spec.horizon)
        throw ValidationError("simulate: exogenous path is shorter than the horizon");
    for (double d : cfg.flux_deltas)
        if (!(d > 0.0)) throw ValidationError("simulate: flux deltas must be positive");

    const std::size_t n = cfg.n;
    const double inv_n = 1.0 / static_cast<double>(n);
    const double sqdt = std::sqrt(cfg.dt);
    const rng::Stream stream(cfg.seed);
    auto sid = [&](std::size_t i) -> std::uint64_t { return cfg.stream_of.empty() ? i : cfg.stream_of[i]; };

    std::vector<double> y(n), ell(n, 0.0), Lambda(n, 0.0), chi(n), tau(n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = spec.initial.sample(stream.block(sid(i), 0, rng::Purpose::initial_position).u0, spec.a0) - spec.a0;
        chi[i] = rng::exponential_from(stream.block(sid(i), 0, rng::Purpose::clock).u0);
    }

    const FrontCalculator fc(spec);
    History hist(cfg.dt, Interp::step);
    hist.push_back(0.0);

    SimulationOutput out;
    out.n = n;
    out.dt = cfg.dt;
    out.path.dt = cfg.dt;
    const std::size_t nd = cfg.flux_deltas.size();
    for (double d : cfg.flux_deltas) out.flux.push_back({d, {0.0}, {0.0}});

    std::size_t killed = 0;
    auto environment = [&](long k, double& A, double& Ap, double& C) {
        const double t = static_cast<double>(k) * cfg.dt;
        if (cfg.exogenous) {
            A = cfg.exogenous->A_at(t);
            Ap = cfg.exogenous->Aprime_at(t);
            C = cfg.exogenous->C_at(t);
        } else {
            A = fc.advance_front(hist, t);
            Ap = fc.front_velocity(hist, t);
            C = fc.contagiousness(hist, t);
        }
    };
    auto take_snapshot = [&](long k, double A) {
        Snapshot s;
        s.t = static_cast<double>(k) * cfg.dt;
        s.A = A;
        s.n = n;
        for (std::size_t i = 0; i < n; ++i)
            if (alive[i]) s.positions.push_back(A + y[i]);
        std::sort(s.positions.begin(), s.positions.end());
        out.snapshots.push_back(std::move(s));
    };

    const std::size_t nchunks = (n + detail::kChunk - 1) / detail::kChunk;
    std::vector<detail::ChunkTotals> totals(nchunks);
    const int threads = configured_threads();
    (void)threads;

    double A = 0.0, Ap = 0.0, C = 0.0;
    environment(0, A, Ap, C);
    out.path.push(0.0, 0.0, A, C, Ap);
    out.killed_count.push_back(0);
    out.mean_local_time.push_back(0.0);
    out.compensator.push_back(0.0);
    for (std::size_t s = 0; s < snap_steps.size(); ++s)
        if (snap_steps[s] == 0) take_snapshot(0, A);

    for (long k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        const double gamma = spec.reactivity(t, C);
        const bool bridge = cfg.scheme == ReflectionScheme::bridge;

#pragma omp parallel for schedule(static) num_threads(threads)
        for (std::size_t c = 0; c < nchunks; ++c) {
            detail::ChunkTotals& tot = totals[c];
            tot.kills = 0;
            tot.ell = 0.0;
            tot.Lambda = 0.0;
            tot.flux.assign(nd, 0.0);
            const std::size_t lo = c * detail::kChunk, hi = std::min(n, lo + detail::kChunk);
            for (std::size_t i = lo; i < hi; ++i) {
                if (alive[i]) {
                    const double x = A + y[i];
                    const double b = spec.drift(t, x);
                    const double sig = spec.volatility(t, x);
                    for (std::size_t d = 0; d < nd; ++d)
                        tot.flux[d] += sig * sig * psi_delta(y[i], cfg.flux_deltas[d]);
                    const auto blk = stream.block(sid(i), static_cast<std::uint32_t>(k + 1), rng::Purpose::step);
                    const double w = (b - Ap) * cfg.dt + sig * sqdt * rng::normal_from(blk.u0, blk.u1);
                    double m = std::numeric_limits<double>::infinity();
                    if (bridge) {
                        const auto u = stream.block(sid(i), static_cast<std::uint32_t>(k + 1), rng::Purpose::step, 1);
                        m = bridge_minimum(w, sig * sig * cfg.dt, u.u0);
                    }
                    const StepResult r = reflect_and_kill(y[i], w, m, gamma, Lambda[i], chi[i]);
                    if (r.killed) {
                        ell[i] += r.frac * r.dell;
                        Lambda[i] = chi[i];
                        tau[i] = t + r.frac * cfg.dt;
                        alive[i] = 0;
                        y[i] = r.y;
                        ++tot.kills;
                    } else {
                        y[i] = r.y;
                        ell[i] += r.dell;
                        Lambda[i] += gamma * r.dell;
                    }
                }
                tot.ell += ell[i];
                tot.Lambda += Lambda[i];
            }
        }

        double sum_ell = 0.0, sum_Lambda = 0.0;
        std::vector<double> flux(nd, 0.0);
        for (const auto& tot : totals) {
            killed += tot.kills;
            sum_ell += tot.ell;
            sum_Lambda += tot.Lambda;
            for (std::size_t d = 0; d < nd; ++d) flux[d] += tot.flux[d];
        }
        for (std::size_t d = 0; d < nd; ++d) {
            auto& fs = out.flux[d];
            fs.with_gamma.push_back(fs.with_gamma.back() + gamma * flux[d] * inv_n * cfg.dt);
            fs.plain.push_back(fs.plain.back() + flux[d] * inv_n * cfg.dt);
        }

        const double I = static_cast<double>(killed) / static_cast<double>(n);
        hist.push_back(I);
        environment(k + 1, A, Ap, C);
        out.path.push(static_cast<double>(k + 1) * cfg.dt, I, A, C, Ap);
        out.killed_count.push_back(killed);
        out.mean_local_time.push_back(sum_ell * inv_n);
        out.compensator.push_back(sum_Lambda * inv_n);
        for (std::size_t s = 0; s < snap_steps.size(); ++s)
            if (snap_steps[s] == k + 1) take_snapshot(k + 1, A);
    }

    out.positions.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.positions[i] = A + y[i];
    out.alive = std::move(alive);
    out.local_time = std::move(ell);
    out.kill_time = std::move(tau);
    return out;
}

} // namespace reactfront
