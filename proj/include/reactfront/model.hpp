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
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "reactfront/error.hpp"
#include "reactfront/numerics.hpp"
#include "reactfront/rng.hpp"

namespace reactfront {

// ---------------------------------------------------------------------------
// Coefficient families
// ---------------------------------------------------------------------------

enum class FamilyKind { constant, affine, logistic };

/// Optional multiplicative time modulation m(t) = 1 + eps * sin(omega * t).
struct Modulation {
    double eps = 0.0;
    double omega = 0.0;

    double operator()(double t) const { return 1.0 + eps * std::sin(omega * t); }
    double low() const { return 1.0 - std::abs(eps); }
    double high() const { return 1.0 + std::abs(eps); }
};

/// Parametric coefficient f(t, x) = m(t) * g(x) where g is one of
///   constant:  c
///   affine:    c0 + c1 x
///   logistic:  base + amplitude / (1 + exp(-steepness (x - center)))
/// The logistic family takes 2 or 4 parameters; steepness and center default
/// to 1 and 0.
class CoefficientFamily {
public:
    CoefficientFamily() : CoefficientFamily(FamilyKind::constant, {0.0}) {}

    CoefficientFamily(FamilyKind kind, std::vector<double> params, Modulation mod = {})
        : kind_(kind), params_(std::move(params)), mod_(mod) {
        const std::size_t n = params_.size();
        const bool ok = (kind_ == FamilyKind::constant && n == 1) ||
                        (kind_ == FamilyKind::affine && n == 2) ||
                        (kind_ == FamilyKind::logistic && (n == 2 || n == 4));
        if (!ok) throw ValidationError("coefficient family: wrong number of parameters for " + kind_name(kind_));
        for (double p : params_)
            if (!std::isfinite(p)) throw ValidationError("coefficient family: non-finite parameter");
        if (!(std::abs(mod_.eps) < 1.0) || !std::isfinite(mod_.omega))
            throw ValidationError("coefficient family: modulation needs |eps| < 1");
    }

    static CoefficientFamily constant(double c, Modulation mod = {}) {
        return {FamilyKind::constant, {c}, mod};
    }
    static CoefficientFamily affine(double c0, double c1, Modulation mod = {}) {
        return {FamilyKind::affine, {c0, c1}, mod};
    }
    static CoefficientFamily logistic(double base, double amplitude, double steepness = 1.0,
                                      double center = 0.0, Modulation mod = {}) {
        return {FamilyKind::logistic, {base, amplitude, steepness, center}, mod};
    }

    FamilyKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    const Modulation& modulation() const { return mod_; }

    bool is_constant() const { return kind_ == FamilyKind::constant && mod_.eps == 0.0; }

    double operator()(double t, double x) const { return mod_(t) * shape(x); }

    /// d/dx f(t, x).
    double derivative(double t, double x) const {
        switch (kind_) {
        case FamilyKind::constant: return 0.0;
        case FamilyKind::affine: return mod_(t) * params_[1];
        case FamilyKind::logistic: {
            const double l = logistic_value(x);
            return mod_(t) * params_[1] * steepness() * l * (1.0 - l);
        }
        }
        return 0.0;
    }

    /// Declared Lipschitz constant in x, uniform in t.
    double lipschitz() const {
        switch (kind_) {
        case FamilyKind::constant: return 0.0;
        case FamilyKind::affine: return std::abs(params_[1]) * mod_.high();
        case FamilyKind::logistic: return std::abs(params_[1] * steepness()) * 0.25 * mod_.high();
        }
        return 0.0;
    }

    /// Declared growth constant: |f(t, x)| <= growth * (1 + |x|).
    double growth() const {
        switch (kind_) {
        case FamilyKind::constant: return std::abs(params_[0]) * mod_.high();
        case FamilyKind::affine:
            return std::max(std::abs(params_[0]), std::abs(params_[1])) * mod_.high();
        case FamilyKind::logistic: {
            const auto [lo, hi] = shape_range();
            return std::max(std::abs(lo), std::abs(hi)) * mod_.high();
        }
        }
        return 0.0;
    }

    /// Infimum / supremum over all (t, x); +-infinity for unbounded families.
    double infimum() const { return bounds().first; }
    double supremum() const { return bounds().second; }

    static std::string kind_name(FamilyKind k) {
        switch (k) {
        case FamilyKind::constant: return "constant";
        case FamilyKind::affine: return "affine";
        case FamilyKind::logistic: return "logistic";
        }
        return "?";
    }

    static FamilyKind kind_from(const std::string& name) {
        if (name == "constant") return FamilyKind::constant;
        if (name == "affine") return FamilyKind::affine;
        if (name == "logistic" || name == "sigmoid") return FamilyKind::logistic;
        throw ValidationError("unknown coefficient family '" + name + "'");
    }

private:
    double steepness() const { return params_.size() == 4 ? params_[2] : 1.0; }
    double center() const { return params_.size() == 4 ? params_[3] : 0.0; }

    double logistic_value(double x) const {
        return 1.0 / (1.0 + std::exp(-steepness() * (x - center())));
    }

    double shape(double x) const {
        switch (kind_) {
        case FamilyKind::constant: return params_[0];
        case FamilyKind::affine: return params_[0] + params_[1] * x;
        case FamilyKind::logistic: return params_[0] + params_[1] * logistic_value(x);
        }
        return 0.0;
    }

    std::pair<double, double> shape_range() const {
        switch (kind_) {
        case FamilyKind::constant: return {params_[0], params_[0]};
        case FamilyKind::affine: {
            if (params_[1] == 0.0) return {params_[0], params_[0]};
            constexpr double inf = std::numeric_limits<double>::infinity();
            return {-inf, inf};
        }
        case FamilyKind::logistic: {
            const double a = params_[0];
            const double b = params_[0] + (steepness() == 0.0 ? 0.5 * params_[1] : params_[1]);
            return {std::min(a, b), std::max(a, b)};
        }
        }
        return {0.0, 0.0};
    }

    std::pair<double, double> bounds() const {
        const auto [lo, hi] = shape_range();
        if (!std::isfinite(lo) || !std::isfinite(hi)) return {lo, hi};
        const double c[4] = {lo * mod_.low(), lo * mod_.high(), hi * mod_.low(), hi * mod_.high()};
        return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
    }

    FamilyKind kind_;
    std::vector<double> params_;
    Modulation mod_;
};

// ---------------------------------------------------------------------------
// Infection-to-recovery kernel
// ---------------------------------------------------------------------------

enum class KernelKind { constant, triangular, piecewise_linear };

struct KernelNode {
    double s;
    double value;
};

/// Nonnegative, right-continuous, piecewise-linear kernel supported on [0, d],
/// normalized to unit mass at construction. A jump is encoded by two nodes at
/// the same abscissa (left value first). The value at d is the last node value.
class KernelSpec {
public:
    KernelSpec() : KernelSpec(constant(1.0)) {}

    static KernelSpec constant(double duration) {
        check_duration(duration);
        return KernelSpec(KernelKind::constant, duration, {}, {{0.0, 1.0}, {duration, 1.0}});
    }

    /// Tent of the given raw height with its apex at `peak` in [0, duration].
    static KernelSpec triangular(double duration, double height = 1.0, double peak = 0.0) {
        check_duration(duration);
        if (!(peak >= 0.0 && peak <= duration))
            throw ValidationError("kernel: triangular peak must lie in [0, duration]");
        std::vector<KernelNode> nodes;
        if (peak == 0.0) nodes = {{0.0, height}, {duration, 0.0}};
        else if (peak == duration) nodes = {{0.0, 0.0}, {duration, height}};
        else nodes = {{0.0, 0.0}, {peak, height}, {duration, 0.0}};
        return KernelSpec(KernelKind::triangular, duration, {height, peak}, std::move(nodes));
    }

    static KernelSpec piecewise_linear(std::vector<KernelNode> nodes) {
        if (nodes.size() < 2) throw ValidationError("kernel: piecewise-linear needs at least two nodes");
        const double duration = nodes.back().s;
        check_duration(duration);
        return KernelSpec(KernelKind::piecewise_linear, duration, {}, std::move(nodes));
    }

    KernelKind kind() const { return kind_; }
    double duration() const { return duration_; }
    const std::vector<double>& params() const { return params_; }
    const std::vector<KernelNode>& raw_nodes() const { return raw_nodes_; }
    const std::vector<KernelNode>& nodes() const { return nodes_; }
    double raw_mass() const { return raw_mass_; }

    /// Mass of the normalized kernel, recomputed from its nodes.
    double mass() const { return integrate_nodes(nodes_); }

    double at_start() const { return (*this)(0.0); }
    double at_end() const { return nodes_.back().value; }
    double sup() const {
        double m = 0.0;
        for (const auto& n : nodes_) m = std::max(m, n.value);
        return m;
    }

    /// rho(u): zero outside [0, d], right-continuous inside.
    double operator()(double u) const {
        if (u < 0.0 || u > duration_) return 0.0;
        if (u == duration_) return nodes_.back().value;
        // last node with s <= u; right-continuity picks the right value of a jump
        auto it = std::upper_bound(nodes_.begin(), nodes_.end(), u,
                                   [](double x, const KernelNode& n) { return x < n.s; });
        const KernelNode& a = *(it - 1);
        const KernelNode& b = *it;
        if (b.s == a.s) return a.value;
        return a.value + (b.value - a.value) * (u - a.s) / (b.s - a.s);
    }

    static std::string kind_name(KernelKind k) {
        switch (k) {
        case KernelKind::constant: return "constant";
        case KernelKind::triangular: return "triangular";
        case KernelKind::piecewise_linear: return "piecewise-linear";
        }
        return "?";
    }

private:
    KernelSpec(KernelKind kind, double duration, std::vector<double> params,
               std::vector<KernelNode> raw)
        : kind_(kind), duration_(duration), params_(std::move(params)), raw_nodes_(std::move(raw)) {
        if (raw_nodes_.front().s != 0.0) throw ValidationError("kernel: first node must sit at s = 0");
        for (std::size_t i = 0; i < raw_nodes_.size(); ++i) {
            const auto& n = raw_nodes_[i];
            if (!std::isfinite(n.s) || !std::isfinite(n.value))
                throw ValidationError("kernel: non-finite node");
            if (n.value < 0.0) throw ValidationError("kernel: negative node value");
            if (i > 0 && n.s < raw_nodes_[i - 1].s) throw ValidationError("kernel: nodes must be sorted");
            if (i > 1 && n.s == raw_nodes_[i - 2].s)
                throw ValidationError("kernel: at most two nodes may share an abscissa");
        }
        raw_mass_ = integrate_nodes(raw_nodes_);
        if (!(raw_mass_ > 0.0) || !std::isfinite(raw_mass_))
            throw ValidationError("kernel: cannot normalize a kernel with zero mass");
        nodes_ = raw_nodes_;
        for (auto& n : nodes_) n.value /= raw_mass_;
    }

    static void check_duration(double d) {
        if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("kernel: duration must be positive");
    }

    static double integrate_nodes(const std::vector<KernelNode>& nodes) {
        double m = 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i)
            m += 0.5 * (nodes[i].value + nodes[i - 1].value) * (nodes[i].s - nodes[i - 1].s);
        return m;
    }

    KernelKind kind_;
    double duration_;
    std::vector<double> params_;
    std::vector<KernelNode> raw_nodes_;
    std::vector<KernelNode> nodes_;
    double raw_mass_ = 0.0;
};

// ---------------------------------------------------------------------------
// Initial law
// ---------------------------------------------------------------------------

enum class InitialKind { point_mass, truncated_gaussian, shifted_exponential };

/// Initial law P0 on [a0, inf):
///   point-mass           params {x0}
///   truncated-gaussian   params {mean, sd}, truncated below at a0
///   shifted-exponential  params {rate}, a0 + Exp(rate)
class InitialDistribution {
public:
    InitialDistribution() : InitialDistribution(InitialKind::point_mass, {0.0}) {}

    InitialDistribution(InitialKind kind, std::vector<double> params)
        : kind_(kind), params_(std::move(params)) {
        const std::size_t n = params_.size();
        const bool ok = (kind_ == InitialKind::point_mass && n == 1) ||
                        (kind_ == InitialKind::truncated_gaussian && n == 2) ||
                        (kind_ == InitialKind::shifted_exponential && n == 1);
        if (!ok) throw ValidationError("initial law: wrong number of parameters for " + kind_name(kind_));
        for (double p : params_)
            if (!std::isfinite(p)) throw ValidationError("initial law: non-finite parameter");
        if (kind_ == InitialKind::truncated_gaussian && !(params_[1] > 0.0))
            throw ValidationError("initial law: truncated-gaussian needs sd > 0");
        if (kind_ == InitialKind::shifted_exponential && !(params_[0] > 0.0))
            throw ValidationError("initial law: shifted-exponential needs rate > 0");
    }

    static InitialDistribution point_mass(double x0) { return {InitialKind::point_mass, {x0}}; }
    static InitialDistribution truncated_gaussian(double mean, double sd) {
        return {InitialKind::truncated_gaussian, {mean, sd}};
    }
    static InitialDistribution shifted_exponential(double rate) {
        return {InitialKind::shifted_exponential, {rate}};
    }

    InitialKind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    bool is_atomic() const { return kind_ == InitialKind::point_mass; }
    bool gaussian_tail() const { return kind_ != InitialKind::shifted_exponential; }

    /// P(X0 > x).
    double survivor(double x, double a0) const {
        switch (kind_) {
        case InitialKind::point_mass: return x < params_[0] ? 1.0 : 0.0;
        case InitialKind::truncated_gaussian: {
            if (x <= a0) return 1.0;
            const double m = params_[0], s = params_[1];
            return num::normal_sf((x - m) / s) / num::normal_sf((a0 - m) / s);
        }
        case InitialKind::shifted_exponential:
            return x <= a0 ? 1.0 : std::exp(-params_[0] * (x - a0));
        }
        return 0.0;
    }

    /// Density on (a0, inf); zero for the atomic law.
    double density(double x, double a0) const {
        if (x < a0) return 0.0;
        switch (kind_) {
        case InitialKind::point_mass: return 0.0;
        case InitialKind::truncated_gaussian: {
            const double m = params_[0], s = params_[1];
            return num::normal_pdf((x - m) / s) / (s * num::normal_sf((a0 - m) / s));
        }
        case InitialKind::shifted_exponential: return params_[0] * std::exp(-params_[0] * (x - a0));
        }
        return 0.0;
    }

    double mean(double a0) const {
        switch (kind_) {
        case InitialKind::point_mass: return params_[0];
        case InitialKind::truncated_gaussian: {
            const double m = params_[0], s = params_[1];
            const double z = (a0 - m) / s;
            return m + s * num::normal_pdf(z) / num::normal_sf(z);
        }
        case InitialKind::shifted_exponential: return a0 + 1.0 / params_[0];
        }
        return 0.0;
    }

    /// Inverse-survivor sampling from one open uniform.
    double sample(double u, double a0) const {
        switch (kind_) {
        case InitialKind::point_mass: return params_[0];
        case InitialKind::truncated_gaussian: {
            const double m = params_[0], s = params_[1];
            const double tail = num::normal_sf((a0 - m) / s);
            const double z = std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u * tail);
            return std::max(a0, m + s * z);
        }
        case InitialKind::shifted_exponential: return a0 - std::log(u) / params_[0];
        }
        return a0;
    }

    static std::string kind_name(InitialKind k) {
        switch (k) {
        case InitialKind::point_mass: return "point-mass";
        case InitialKind::truncated_gaussian: return "truncated-gaussian";
        case InitialKind::shifted_exponential: return "shifted-exponential";
        }
        return "?";
    }

    static InitialKind kind_from(const std::string& name) {
        if (name == "point-mass") return InitialKind::point_mass;
        if (name == "truncated-gaussian") return InitialKind::truncated_gaussian;
        if (name == "shifted-exponential") return InitialKind::shifted_exponential;
        throw ValidationError("unknown initial law '" + name + "'");
    }

private:
    InitialKind kind_;
    std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct ScenarioSpec {
    CoefficientFamily drift = CoefficientFamily::constant(0.0);
    CoefficientFamily volatility = CoefficientFamily::constant(1.0);
    CoefficientFamily reactivity = CoefficientFamily::constant(1.0);
    KernelSpec kernel = KernelSpec::constant(1.0);
    double alpha = 1.0;
    double a0 = 0.0;
    double horizon = 1.0;
    InitialDistribution initial = InitialDistribution::truncated_gaussian(1.0, 0.5);

    double b(double t, double x) const { return drift(t, x); }
    double sigma(double t, double x) const { return volatility(t, x); }
    double gamma(double t, double c) const { return reactivity(t, c); }
};

struct CoefficientValues {
    double b;
    double sigma;
    double sigma_sq;
};

inline CoefficientValues eval_coefficients(const ScenarioSpec& spec, double t, double x) {
    const double s = spec.volatility(t, x);
    return {spec.drift(t, x), s, s * s};
}

/// n i.i.d. draws from P0, each a pure function of (seed, particle index).
inline std::vector<double> sample_initial(const ScenarioSpec& spec, std::size_t n,
                                          const rng::Stream& stream) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto blk = stream.block(i, 0, rng::Purpose::initial_position);
        out[i] = spec.initial.sample(blk.u0, spec.a0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assumption checks
// ---------------------------------------------------------------------------

struct ValidationClause {
    std::string name;
    bool passed;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationClause> clauses;
    std::vector<std::string> warnings;
    double kappa = 0.0;          // declared drift constant
    double kappa_probed = 0.0;   // largest probed Lipschitz / growth ratio
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double gamma_min = 0.0;
    double gamma_max = 0.0;
    double kernel_mass = 0.0;

    bool ok() const {
        return std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed; });
    }

    std::string failures() const {
        std::string s;
        for (const auto& c : clauses)
            if (!c.passed) s += (s.empty() ? "" : "; ") + c.name + ": " + c.detail;
        return s;
    }
};

/// Lattice used for probing: t over [0, T], x over a box around the reachable
/// region, c over [0, 1] (the range of the contagiousness).
struct ProbeLattice {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> c;

    static ProbeLattice for_scenario(const ScenarioSpec& spec, std::size_t refine = 1) {
        const double reach = std::max(spec.initial.mean(spec.a0) - spec.a0, 0.0) + spec.alpha + 12.0;
        return {num::linspace(0.0, spec.horizon, 16 * refine + 1),
                num::linspace(spec.a0 - 1.0, spec.a0 + reach, 400 * refine + 1),
                num::linspace(0.0, 1.0, 100 * refine + 1)};
    }
};

/// Largest |f(t,x_{i+1}) - f(t,x_i)| / (x_{i+1} - x_i) over the lattice.
inline double probe_lipschitz(const CoefficientFamily& f, const std::vector<double>& ts,
                              const std::vector<double>& xs) {
    double best = 0.0;
    for (double t : ts)
        for (std::size_t i = 1; i < xs.size(); ++i)
            best = std::max(best, std::abs(f(t, xs[i]) - f(t, xs[i - 1])) / (xs[i] - xs[i - 1]));
    return best;
}

inline ValidationReport validate_scenario(const ScenarioSpec& spec) {
    ValidationReport r;
    auto clause = [&](std::string name, bool ok, std::string detail) {
        r.clauses.push_back({std::move(name), ok, std::move(detail)});
    };
    const ProbeLattice lat = ProbeLattice::for_scenario(spec);

    clause("parameters", spec.alpha >= 0.0 && spec.horizon > 0.0 && spec.kernel.duration() > 0.0 &&
                             std::isfinite(spec.alpha) && std::isfinite(spec.horizon) && std::isfinite(spec.a0),
           "need alpha >= 0, T > 0, d > 0");
    if (spec.alpha == 0.0) r.warnings.push_back("alpha = 0: frozen boundary");

    // drift: Lipschitz in x with at most linear growth
    r.kappa = std::max(spec.drift.lipschitz(), spec.drift.growth());
    double probed = probe_lipschitz(spec.drift, lat.t, lat.x);
    for (double t : lat.t)
        for (double x : lat.x) probed = std::max(probed, std::abs(spec.drift(t, x)) / (1.0 + std::abs(x)));
    r.kappa_probed = probed;
    clause("drift: Lipschitz, linear growth", std::isfinite(r.kappa) && probed <= 1.01 * r.kappa + 1e-12,
           "declared kappa " + std::to_string(r.kappa) + ", probed " + std::to_string(probed));

    // volatility: non-degenerate, bounded, Lipschitz
    r.sigma_min = spec.volatility.infimum();
    r.sigma_max = spec.volatility.supremum();
    double probed_min = std::numeric_limits<double>::infinity();
    for (double t : lat.t)
        for (double x : lat.x) probed_min = std::min(probed_min, spec.volatility(t, x));
    clause("volatility: non-degenerate", r.sigma_min > 0.0 && probed_min > 0.0,
           r.sigma_min > 0.0 ? "ok" : "degenerate diffusion (infimum " + std::to_string(r.sigma_min) + ")");
    clause("volatility: bounded", std::isfinite(r.sigma_max), "supremum " + std::to_string(r.sigma_max));
    clause("volatility: Lipschitz",
           probe_lipschitz(spec.volatility, lat.t, lat.x) <= 1.01 * spec.volatility.lipschitz() + 1e-12, "ok");

    // reactivity: bounded, bounded away from zero, Lipschitz in c
    r.gamma_min = spec.reactivity.infimum();
    r.gamma_max = spec.reactivity.supremum();
    clause("reactivity: bounded away from zero", r.gamma_min > 0.0,
           "infimum " + std::to_string(r.gamma_min));
    clause("reactivity: bounded", std::isfinite(r.gamma_max), "supremum " + std::to_string(r.gamma_max));
    clause("reactivity: Lipschitz",
           probe_lipschitz(spec.reactivity, lat.t, lat.c) <= 1.01 * spec.reactivity.lipschitz() + 1e-12, "ok");

    // kernel
    r.kernel_mass = spec.kernel.mass();
    bool nonneg = true;
    for (const auto& n : spec.kernel.nodes()) nonneg = nonneg && n.value >= 0.0;
    clause("kernel: nonnegative", nonneg, "ok");
    clause("kernel: unit mass", std::abs(r.kernel_mass - 1.0) <= 1e-12,
           "mass " + std::to_string(r.kernel_mass));

    // initial law
    bool support = true;
    if (spec.initial.kind() == InitialKind::point_mass) support = spec.initial.params()[0] >= spec.a0;
    clause("initial: support in [a0, inf)", support, support ? "ok" : "point mass below a0");
    clause("initial: sub-Gaussian tail", true, spec.initial.gaussian_tail() ? "ok" : "exponential tail admitted");
    if (!spec.initial.gaussian_tail())
        r.warnings.push_back("initial law has exponential, not Gaussian, tails");
    return r;
}

} // namespace reactfront
