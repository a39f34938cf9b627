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
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reactfront/error.hpp"
#include "reactfront/model.hpp"

namespace reactfront {

// ---------------------------------------------------------------------------
// Histories on a uniform grid
// ---------------------------------------------------------------------------

enum class Interp {
    step,   // right-continuous: value_k on [t_k, t_{k+1})
    linear  // linear between nodes
};

/// A scalar history s -> f(s) sampled at s_k = k dt, zero for s < 0 and held
/// constant after the last node. Keeps running integrals
///   J(s) = int_0^s f,   K(s) = int_0^s J
/// so that kernel convolutions against it are exact for piecewise-linear rho.
class History {
public:
    History(double dt, Interp mode) : dt_(dt), mode_(mode) {
        if (!(dt > 0.0)) throw ValidationError("history: dt must be positive");
    }

    void push_back(double v) {
        if (!values_.empty()) {
            const std::size_t k = values_.size() - 1;
            const long double h = dt_;
            const long double a = values_[k];
            const long double d = mode_ == Interp::linear ? (static_cast<long double>(v) - a) : 0.0L;
            J_.push_back(J_[k] + a * h + d * h / 2);
            K_.push_back(K_[k] + J_[k] * h + a * h * h / 2 + d * h * h / 6);
        } else {
            J_.push_back(0.0L);
            K_.push_back(0.0L);
        }
        values_.push_back(v);
    }

    void pop_back() {
        values_.pop_back();
        J_.pop_back();
        K_.pop_back();
    }

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double dt() const { return dt_; }
    Interp mode() const { return mode_; }
    const std::vector<double>& values() const { return values_; }
    double back() const { return values_.back(); }

    double operator()(double s) const {
        if (s < 0.0 || values_.empty()) return 0.0;
        std::size_t k;
        double theta;
        locate(s, k, theta);
        if (mode_ == Interp::step || k + 1 >= values_.size()) return values_[k];
        return values_[k] + (values_[k + 1] - values_[k]) * theta / dt_;
    }

    long double J(double s) const {
        if (s <= 0.0 || values_.empty()) return 0.0L;
        std::size_t k;
        double theta;
        locate(s, k, theta);
        const long double th = theta;
        const long double a = values_[k];
        const long double d = slope(k);
        return J_[k] + a * th + d * th * th / 2;
    }

    long double K(double s) const {
        if (s <= 0.0 || values_.empty()) return 0.0L;
        std::size_t k;
        double theta;
        locate(s, k, theta);
        const long double th = theta;
        const long double a = values_[k];
        const long double d = slope(k);
        return K_[k] + J_[k] * th + a * th * th / 2 + d * th * th * th / 6;
    }

private:
    void locate(double s, std::size_t& k, double& theta) const {
        const double q = s / dt_;
        // snap values within roundoff of a node onto it
        double f = std::floor(q);
        if (q - f > 1.0 - 1e-9) f += 1.0;
        const auto last = values_.size() - 1;
        if (f >= static_cast<double>(last)) {
            k = last;
            theta = s - static_cast<double>(last) * dt_;
            return;
        }
        k = static_cast<std::size_t>(f);
        theta = std::max(0.0, s - static_cast<double>(k) * dt_);
    }

    long double slope(std::size_t k) const {
        if (mode_ == Interp::step || k + 1 >= values_.size()) return 0.0L;
        return (static_cast<long double>(values_[k + 1]) - values_[k]) / dt_;
    }

    double dt_;
    Interp mode_;
    std::vector<double> values_;
    std::vector<long double> J_;
    std::vector<long double> K_;
};

// ---------------------------------------------------------------------------
// Front, contagiousness, velocity
// ---------------------------------------------------------------------------

/// Convolutions of an infected-proportion history against the normalized
/// kernel. All integrals are exact for the history's interpolant.
class FrontCalculator {
public:
    FrontCalculator(const KernelSpec& kernel, double alpha, double a0)
        : alpha_(alpha), a0_(a0), duration_(kernel.duration()),
          rho0_(kernel.at_start()), rho_end_(kernel.at_end()) {
        const auto& n = kernel.nodes();
        for (std::size_t i = 1; i < n.size(); ++i) {
            if (n[i].s > n[i - 1].s)
                segments_.push_back({n[i - 1].s, n[i].s, n[i - 1].value,
                                     (n[i].value - n[i - 1].value) / (n[i].s - n[i - 1].s)});
            else if (n[i].s < duration_)
                jumps_.push_back({n[i].s, n[i].value - n[i - 1].value});
        }
    }

    explicit FrontCalculator(const ScenarioSpec& spec) : FrontCalculator(spec.kernel, spec.alpha, spec.a0) {}

    /// int_0^d rho(u) f(t - u) du.
    double window(const History& h, double t) const {
        long double acc = 0.0L;
        for (const auto& s : segments_) {
            const double ta = t - s.ua, tb = t - s.ub;
            if (ta <= 0.0) break;
            const long double Ja = h.J(ta), Jb = h.J(tb);
            acc += s.ra * (Ja - Jb) + s.m * (-(s.ub - s.ua) * Jb + h.K(ta) - h.K(tb));
        }
        return static_cast<double>(acc);
    }

    double advance_front(const History& I, double t) const { return a0_ + alpha_ * window(I, t); }

    double contagiousness(const History& I, double t) const {
        return window(I, t) - window(I, t - duration_);
    }

    /// Bounded-variation form: alpha [rho(0) I_t - rho(d) I_{t-d} + int I_{t-s} drho(s)].
    double front_velocity(const History& I, double t) const {
        long double acc = rho0_ * I(t) - rho_end_ * I(t - duration_);
        for (const auto& s : segments_) {
            if (s.m == 0.0) continue;
            acc += s.m * (I.J(t - s.ua) - I.J(t - s.ub));
        }
        for (const auto& j : jumps_) acc += j.delta * I(t - j.s);
        return alpha_ * static_cast<double>(acc);
    }

    /// Rate form: alpha int_0^{min(t,d)} rho(u) I'(t - u) du.
    double velocity_from_rate(const History& Iprime, double t) const { return alpha_ * window(Iprime, t); }

    double alpha() const { return alpha_; }
    double a0() const { return a0_; }
    double duration() const { return duration_; }

private:
    struct Segment {
        double ua, ub, ra, m;
    };
    struct Jump {
        double s, delta;
    };

    double alpha_;
    double a0_;
    double duration_;
    double rho0_;
    double rho_end_;
    std::vector<Segment> segments_;
    std::vector<Jump> jumps_;
};

inline double advance_front(const History& I, double t, const ScenarioSpec& spec) {
    return FrontCalculator(spec).advance_front(I, t);
}

inline double current_contagiousness(const History& I, double t, const ScenarioSpec& spec) {
    return FrontCalculator(spec).contagiousness(I, t);
}

inline double front_velocity(const History& I, double t, const ScenarioSpec& spec) {
    return FrontCalculator(spec).front_velocity(I, t);
}

// ---------------------------------------------------------------------------
// PathBundle
// ---------------------------------------------------------------------------

struct PathBundle {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<double> I;
    std::vector<double> A;
    std::vector<double> C;
    std::vector<double> Aprime;

    std::size_t size() const { return t.size(); }
    double horizon() const { return t.empty() ? 0.0 : t.back(); }

    void push(double tk, double Ik, double Ak, double Ck, double Apk) {
        t.push_back(tk);
        I.push_back(Ik);
        A.push_back(Ak);
        C.push_back(Ck);
        Aprime.push_back(Apk);
    }

    /// Linear interpolation of one column; constant outside the grid.
    static double interpolate(const std::vector<double>& col, double dt, double s) {
        if (col.empty()) return 0.0;
        if (s <= 0.0) return col.front();
        const double q = s / dt;
        const auto k = static_cast<std::size_t>(q);
        if (k + 1 >= col.size()) return col.back();
        const double th = q - static_cast<double>(k);
        return col[k] + (col[k + 1] - col[k]) * th;
    }

    double A_at(double s) const { return interpolate(A, dt, s); }
    double C_at(double s) const { return interpolate(C, dt, s); }
    double Aprime_at(double s) const { return interpolate(Aprime, dt, s); }
    double I_at(double s) const { return interpolate(I, dt, s); }
};

/// Builds a full bundle from node values of I on a uniform grid.
inline PathBundle complete_path(const ScenarioSpec& spec, double dt, const std::vector<double>& I,
                                Interp mode = Interp::step) {
    const FrontCalculator fc(spec);
    History h(dt, mode);
    for (double v : I) h.push_back(v);
    PathBundle p;
    p.dt = dt;
    for (std::size_t k = 0; k < I.size(); ++k) {
        const double tk = static_cast<double>(k) * dt;
        p.push(tk, I[k], fc.advance_front(h, tk), fc.contagiousness(h, tk), fc.front_velocity(h, tk));
    }
    return p;
}

/// max_k |C_k - (A_k - A(t_k - d)) / alpha|, with A = a0 before time zero.
inline double c_identity_gap(const PathBundle& p, const ScenarioSpec& spec) {
    if (spec.alpha == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double back = p.t[k] - spec.kernel.duration();
        const double Aback = back < -1e-12 ? spec.a0 : p.A_at(std::max(back, 0.0));
        worst = std::max(worst, std::abs(p.C[k] - (p.A[k] - Aback) / spec.alpha));
    }
    return worst;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_path_bundle(const PathBundle& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "t,I,A,C,Aprime\n";
    for (std::size_t k = 0; k < p.size(); ++k)
        out << format_double(p.t[k]) << ',' << format_double(p.I[k]) << ',' << format_double(p.A[k]) << ','
            << format_double(p.C[k]) << ',' << format_double(p.Aprime[k]) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline PathBundle read_path_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "t,I,A,C,Aprime") throw ValidationError(path + ": not a path table");
    PathBundle p;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        double v[5];
        char comma;
        ss >> v[0] >> comma >> v[1] >> comma >> v[2] >> comma >> v[3] >> comma >> v[4];
        if (!ss) throw ValidationError(path + ": malformed row");
        p.push(v[0], v[1], v[2], v[3], v[4]);
    }
    if (p.size() < 2) throw ValidationError(path + ": path table needs at least two rows");
    p.dt = p.t[1] - p.t[0];
    return p;
}

} // namespace reactfront
