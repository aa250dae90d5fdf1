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

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include "stbem/types.hpp"

namespace stbem {

/// Points and weights on [0, 1].
template <typename Scalar>
struct QuadratureRule {
  std::vector<Scalar> points;
  std::vector<Scalar> weights;

  std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre rule with `order` points on [0, 1] (Newton iteration on the
/// Legendre recurrence). Exact for polynomials of degree 2*order-1.
template <typename Scalar>
QuadratureRule<Scalar> gauss_legendre(int order) {
  if (order < 1) throw ValidationError("quadrature order must be >= 1");
  QuadratureRule<Scalar> rule;
  rule.points.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const int n = order;
  // Returns (P_n(x), P_n'(x)).
  auto legendre = [n](Scalar x) {
    Scalar p0 = 1, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair<Scalar, Scalar>{p1, n * (x * p1 - p0) / (x * x - 1)};
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const Scalar dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 2 * std::numeric_limits<Scalar>::epsilon()) break;
    }
    const Scalar dp = legendre(x).second;
    const Scalar w = 2 / ((1 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.points[lo] = (1 - x) / 2;
    rule.points[hi] = (1 + x) / 2;
    rule.weights[lo] = w / 2;
    rule.weights[hi] = w / 2;
  }
  return rule;
}

/// Cached double-precision Gauss-Legendre rule.
const QuadratureRule<double>& gauss_rule(int order);

/// Composite Gauss rule on [0, 1] geometrically graded toward 0:
/// subintervals [r^(k+1), r^k] for k < levels, plus [0, r^levels].
QuadratureRule<double> graded_rule(int order, int levels, double ratio);
/// Cached graded rule with the default grading used by singular integration.
const QuadratureRule<double>& graded_rule_cached(int order);

/// Extra Gauss points per level used by the graded rules on singular pairs.
inline constexpr int kSingularExtraOrder = 4;

/// Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2.
struct TriangleRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

/// Collapsed (Duffy) tensor Gauss rule with order x order points.
TriangleRule collapsed_triangle_rule(int order);
const TriangleRule& triangle_rule(int order);

}  // namespace stbem
