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
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace reactfront::num {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail P(Z > x), accurate far into the right tail.
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// log P(Z > x) without underflow in the far tail.
inline double log_normal_sf(double x) {
    if (x < 30.0) return std::log(normal_sf(x));
    const double r = 1.0 / (x * x);
    return -0.5 * x * x - std::log(x * std::sqrt(2.0 * std::numbers::pi)) + std::log1p(-r + 3.0 * r * r);
}

/// Gaussian density with variance `var` centred at zero.
inline double gauss(double x, double var) {
    return std::exp(-0.5 * x * x / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// x / (exp(x) - 1), the Bernoulli function used in exponentially fitted fluxes.
inline double bernoulli(double x) {
    if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
    return x / std::expm1(x);
}

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double h = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = lo + h * static_cast<double>(i);
    out.back() = hi;
    return out;
}

/// Solves a tridiagonal system in place (Thomas algorithm). `lower[0]` and
/// `upper[n-1]` are ignored. The matrices assembled in this project are
/// M-matrices, so no pivoting is needed.
inline void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                              std::span<const double> upper, std::span<double> rhs,
                              std::vector<double>& scratch) {
    const std::size_t n = diag.size();
    scratch.resize(n);
    double denom = diag[0];
    scratch[0] = upper[0] / denom;
    rhs[0] /= denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = (i + 1 < n) ? upper[i] / denom : 0.0;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

/// Integer number of steps of size dt in `span`, or -1 if dt does not divide it.
inline long steps_in(double span, double dt) {
    const double q = span / dt;
    const double r = std::round(q);
    if (std::abs(q - r) > 1e-9 * std::max(1.0, q)) return -1;
    return static_cast<long>(r);
}

} // namespace reactfront::num
