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

#include "stbem/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace stbem {
namespace {

// Grading used for every singular/near-singular integral.
constexpr int kGradedLevels = 12;
constexpr double kGradedRatio = 0.15;

template <typename Rule, typename Make>
const Rule& cached(std::map<int, Rule>& cache, std::mutex& mutex, int order, Make make) {
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make(order)).first;
  return it->second;
}

}  // namespace

const QuadratureRule<double>& gauss_rule(int order) {
  static std::map<int, QuadratureRule<double>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, order, [](int q) { return gauss_legendre<double>(q); });
}

QuadratureRule<double> graded_rule(int order, int levels, double ratio) {
  if (levels < 0 || !(ratio > 0.0 && ratio < 1.0)) throw ValidationError("invalid grading");
  const auto& base = gauss_rule(order);
  QuadratureRule<double> rule;
  double hi = 1.0;
  for (int k = 0; k <= levels; ++k) {
    const double lo = (k == levels) ? 0.0 : hi * ratio;
    const double len = hi - lo;
    for (std::size_t i = 0; i < base.size(); ++i) {
      rule.points.push_back(lo + len * base.points[i]);
      rule.weights.push_back(len * base.weights[i]);
    }
    hi = lo;
  }
  return rule;
}

const QuadratureRule<double>& graded_rule_cached(int order) {
  static std::map<int, QuadratureRule<double>> cache;
  static std::mutex mutex;
  return cached(cache, mutex, order,
                [](int q) { return graded_rule(q, kGradedLevels, kGradedRatio); });
}

TriangleRule collapsed_triangle_rule(int order) {
  const auto& g = gauss_rule(order);
  TriangleRule rule;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double s = g.points[i];
      const double t = g.points[j];
      // (s, t) in the unit square -> (s (1 - t), s t) in the triangle, Jacobian s.
      rule.points.emplace_back(s * (1.0 - t), s * t);
      rule.weights.push_back(g.weights[i] * g.weights[j] * s);
    }
  }
  return rule;
}

const TriangleRule& triangle_rule(int order) {
  static std::map<int, TriangleRule> cache;
  static std::mutex mutex;
  return cached(cache, mutex, order, [](int q) { return collapsed_triangle_rule(q); });
}

}  // namespace stbem
