// Copyright 2026 The stbem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "stbem/types.hpp"

namespace stbem {

/// Exponent arguments beyond this evaluate to exactly zero.
inline constexpr double kUnderflowArgument = 700.0;

/// Returns {E1(z), exp(-z)}. Power series for z <= 1, modified Lentz
/// continued fraction above; both terms are 0 for z > 700.
template <typename Scalar>
std::pair<Scalar, Scalar> exp_integral_e1_and_exp(Scalar z) {
  if (!(z > 0)) throw ValidationError("E1 requires z > 0");
  if (z > Scalar(kUnderflowArgument)) return {Scalar(0), Scalar(0)};
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  if (z <= 1) {
    const Scalar euler = std::numbers::egamma_v<Scalar>;
    // sum_{k>=1} (-1)^(k+1) z^k / (k k!)
    Scalar term = 1;
    Scalar sum = 0;
    for (int k = 1; k < 100; ++k) {
      term *= -z / Scalar(k);
      const Scalar add = -term / Scalar(k);
      sum += add;
      if (std::abs(add) < eps * std::abs(sum)) break;
    }
    return {-euler - std::log(z) + sum, std::exp(-z)};
  }
  const Scalar tiny = std::numeric_limits<Scalar>::min() / eps;
  Scalar b = z + 1;
  Scalar c = 1 / tiny;
  Scalar d = 1 / b;
  Scalar h = d;
  for (int i = 1; i < 1000; ++i) {
    const Scalar an = -Scalar(i) * Scalar(i);
    b += 2;
    d = 1 / (an * d + b);
    c = b + an / c;
    const Scalar del = c * d;
    h *= del;
    if (std::abs(del - 1) <= eps) break;
  }
  const Scalar ex = std::exp(-z);
  return {h * ex, ex};
}

/// Exponential integral E1(z) = int_z^inf e^-t / t dt.
template <typename Scalar>
Scalar exp_integral_e1(Scalar z) {
  return exp_integral_e1_and_exp(z).first;
}

/// Fundamental solution alpha / (4 pi s) exp(-alpha r2 / (4 s)); zero for s <= 0.
template <typename Scalar>
Scalar ustar(Scalar alpha, Scalar r2, Scalar s) {
  if (!(s > 0)) return Scalar(0);
  const Scalar arg = alpha * r2 / (4 * s);
  if (arg > Scalar(kUnderflowArgument)) return Scalar(0);
  return alpha / (4 * std::numbers::pi_v<Scalar> * s) * std::exp(-arg);
}

/// Normal derivative of U*(x - y, s) with respect to y in direction n_y.
template <typename Scalar>
Scalar ustar_normal_dy(Scalar alpha, const Vector2<Scalar>& x, const Vector2<Scalar>& y,
                       const Vector2<Scalar>& n_y, Scalar s) {
  if (!(s > 0)) return Scalar(0);
  const Vector2<Scalar> d = x - y;
  const Scalar arg = alpha * d.squaredNorm() / (4 * s);
  if (arg > Scalar(kUnderflowArgument)) return Scalar(0);
  return alpha * alpha * d.dot(n_y) / (8 * std::numbers::pi_v<Scalar> * s * s) * std::exp(-arg);
}

/// Antiderivative in s of ustar with F(0) = 0 for r2 > 0. For r2 = 0 the
/// logarithmic branch (alpha / 4 pi) ln s is returned; it is only meaningful
/// in differences.
template <typename Scalar>
Scalar ustar_time_antideriv(Scalar alpha, Scalar r2, Scalar s) {
  if (s < 0) throw ValidationError("time antiderivative requires s >= 0");
  const Scalar scale = alpha / (4 * std::numbers::pi_v<Scalar>);
  if (r2 > 0) {
    if (s == 0) return Scalar(0);
    return scale * exp_integral_e1(alpha * r2 / (4 * s));
  }
  if (s == 0) throw SingularError("time antiderivative is singular at r2 = 0, s = 0");
  return scale * std::log(s);
}

/// Antiderivative in s of ustar_normal_dy: alpha dot / (2 pi r2) exp(-alpha r2 / (4 s)).
template <typename Scalar>
Scalar ustar_dny_time_antideriv(Scalar alpha, Scalar dot, Scalar r2, Scalar s) {
  if (s < 0) throw ValidationError("time antiderivative requires s >= 0");
  if (!(r2 > 0)) throw SingularError("double-layer time antiderivative is singular at r2 = 0");
  if (s == 0) return Scalar(0);
  const Scalar arg = alpha * r2 / (4 * s);
  if (arg > Scalar(kUnderflowArgument)) return Scalar(0);
  return alpha * dot / (2 * std::numbers::pi_v<Scalar> * r2) * std::exp(-arg);
}

/// Signed time lags of a time-integrated kernel. A double time integral over
/// test [t0, t1] and trial [c0, c1] of f(t - tau) equals
///   F(t1 - c0) - F(t0 - c0) - F(t1 - c1) + F(t0 - c1)
/// for a second antiderivative F that vanishes for lags <= 0.
struct LagSet {
  int count = 0;
  std::array<double, 4> lag{};
  std::array<double, 4> sign{};

  static LagSet intervals(double test_begin, double test_end, double trial_begin, double trial_end) {
    return LagSet{4,
                  {test_end - trial_begin, test_begin - trial_begin, test_end - trial_end,
                   test_begin - trial_end},
                  {1.0, -1.0, -1.0, 1.0}};
  }
  /// Test interval against a single source instant (initial time, jump).
  static LagSet interval_instant(double test_begin, double test_end, double instant) {
    return LagSet{2, {test_end - instant, test_begin - instant, 0.0, 0.0}, {1.0, -1.0, 0.0, 0.0}};
  }
  /// Single evaluation time against a trial interval.
  static LagSet instant_interval(double t, double trial_begin, double trial_end) {
    return LagSet{2, {t - trial_begin, t - trial_end, 0.0, 0.0}, {1.0, -1.0, 0.0, 0.0}};
  }

  bool any_active() const {
    for (int i = 0; i < count; ++i)
      if (lag[i] > 0) return true;
    return false;
  }
};

/// Signed lag sums of the four antiderivative families at a = alpha r2 / 4,
/// without their prefactors:
///   e1    = sum sign E1(a/s)                       (first antiderivative of U*)
///   phi   = sum sign [(s + a) E1(a/s) - s e^{-a/s}] (second antiderivative of U*)
///   ex    = sum sign e^{-a/s}                      (first antiderivative of dU*/dn)
///   psi   = sum sign [s e^{-a/s} - a E1(a/s)]      (second antiderivative of dU*/dn)
/// Lags <= 0 contribute nothing. At a = 0 the finite limits are returned when
/// the logarithmic parts cancel; otherwise the sum is +-infinity.
struct LagSums {
  double e1 = 0.0;
  double phi = 0.0;
  double ex = 0.0;
  double psi = 0.0;
};

inline LagSums lag_sums(double a, const LagSet& lags) {
  LagSums out;
  if (a > 0) {
    double prev_s = -1.0;
    std::pair<double, double> prev{0.0, 0.0};
    for (int i = 0; i < lags.count; ++i) {
      const double s = lags.lag[i];
      if (!(s > 0)) continue;
      // Uniform partitions repeat the middle lag.
      const auto v = (s == prev_s) ? prev : exp_integral_e1_and_exp(a / s);
      prev_s = s;
      prev = v;
      const double w = lags.sign[i];
      out.e1 += w * v.first;
      out.phi += w * ((s + a) * v.first - s * v.second);
      out.ex += w * v.second;
      out.psi += w * (s * v.second - a * v.first);
    }
    return out;
  }
  double sum_sign = 0.0, sum_lag = 0.0, max_lag = 0.0;
  double log_sum = 0.0, slog_sum = 0.0;
  for (int i = 0; i < lags.count; ++i) {
    const double s = lags.lag[i];
    if (!(s > 0)) continue;
    const double w = lags.sign[i];
    sum_sign += w;
    sum_lag += w * s;
    max_lag = std::max(max_lag, s);
    log_sum += w * std::log(s);
    slog_sum += w * s * std::log(s);
  }
  const double inf = std::numeric_limits<double>::infinity();
  out.e1 = (sum_sign == 0.0) ? log_sum : inf;
  out.phi = (std::abs(sum_lag) <= 1e-12 * max_lag) ? slog_sum : inf;
  out.ex = sum_sign;
  out.psi = sum_lag;
  return out;
}

}  // namespace stbem
