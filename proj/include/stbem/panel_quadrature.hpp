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

#include <algorithm>
#include <cmath>

#include "stbem/quadrature.hpp"
#include "stbem/types.hpp"

namespace stbem {

enum class PairRelation { disjoint, near, identical, shared_vertex };

/// Relative position of two straight panels A = [a0, a1], B = [b0, b1].
/// For shared_vertex, end_a / end_b name the coincident end (0 -> start, 1 -> end).
struct PanelPair {
  PairRelation relation = PairRelation::disjoint;
  int end_a = 0;
  int end_b = 0;
};

/// Euclidean distance between two segments.
template <typename Scalar>
Scalar segment_distance(const Vector2<Scalar>& a0, const Vector2<Scalar>& a1,
                        const Vector2<Scalar>& b0, const Vector2<Scalar>& b1) {
  auto point_segment = [](const Vector2<Scalar>& p, const Vector2<Scalar>& s0,
                          const Vector2<Scalar>& s1) {
    const Vector2<Scalar> d = s1 - s0;
    const Scalar len2 = d.squaredNorm();
    Scalar t = len2 > 0 ? (p - s0).dot(d) / len2 : Scalar(0);
    t = std::clamp(t, Scalar(0), Scalar(1));
    return (s0 + t * d - p).norm();
  };
  auto cross = [](const Vector2<Scalar>& u, const Vector2<Scalar>& v) {
    return u.x() * v.y() - u.y() * v.x();
  };
  const Scalar c1 = cross(a1 - a0, b0 - a0), c2 = cross(a1 - a0, b1 - a0);
  const Scalar c3 = cross(b1 - b0, a0 - b0), c4 = cross(b1 - b0, a1 - b0);
  if (((c1 > 0 && c2 < 0) || (c1 < 0 && c2 > 0)) && ((c3 > 0 && c4 < 0) || (c3 < 0 && c4 > 0)))
    return Scalar(0);
  return std::min({point_segment(a0, b0, b1), point_segment(a1, b0, b1),
                   point_segment(b0, a0, a1), point_segment(b1, a0, a1)});
}

/// Classifies a pair of panels with no shared topology: near when the gap is
/// below the larger panel length.
inline PanelPair classify_separated(const Vec2& a0, const Vec2& a1, const Vec2& b0,
                                    const Vec2& b1) {
  const double len = std::max((a1 - a0).norm(), (b1 - b0).norm());
  const double gap = segment_distance(a0, a1, b0, b1);
  return PanelPair{gap < len * (1.0 + 1e-12) ? PairRelation::near : PairRelation::disjoint, 0, 0};
}

/// Integrates f(u, v) over the parameter square [0,1]^2 of a panel pair.
/// f is called as f(u, v, weight); weights refer to the parameter square.
/// Singular relations use graded Duffy-type rules towards the coincidence.
template <typename F>
void integrate_panel_pair(const PanelPair& pair, int order, F&& f) {
  switch (pair.relation) {
    case PairRelation::disjoint:
    case PairRelation::near: {
      const auto& g = gauss_rule(pair.relation == PairRelation::near ? 2 * order : order);
      for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
          f(g.points[i], g.points[j], g.weights[i] * g.weights[j]);
      return;
    }
    case PairRelation::identical: {
      // int_0^1 drho int_rho^1 [f(u, u - rho) + f(u - rho, u)] du
      const auto& rho_rule = graded_rule_cached(order + kSingularExtraOrder);
      const auto& g = gauss_rule(2 * order);
      for (std::size_t i = 0; i < rho_rule.size(); ++i) {
        const double rho = rho_rule.points[i];
        const double span = 1.0 - rho;
        for (std::size_t j = 0; j < g.size(); ++j) {
          const double u = rho + span * g.points[j];
          const double w = rho_rule.weights[i] * span * g.weights[j];
          f(u, u - rho, w);
          f(u - rho, u, w);
        }
      }
      return;
    }
    case PairRelation::shared_vertex: {
      // Local distances (p, r) from the common vertex; two Duffy triangles.
      const auto& rho_rule = graded_rule_cached(order + kSingularExtraOrder);
      const auto& g = gauss_rule(2 * order);
      auto map_a = [&](double p) { return pair.end_a == 0 ? p : 1.0 - p; };
      auto map_b = [&](double r) { return pair.end_b == 0 ? r : 1.0 - r; };
      for (std::size_t i = 0; i < rho_rule.size(); ++i) {
        const double rho = rho_rule.points[i];
        for (std::size_t j = 0; j < g.size(); ++j) {
          const double eta = g.points[j];
          const double w = rho_rule.weights[i] * g.weights[j] * rho;
          f(map_a(rho), map_b(rho * eta), w);
          f(map_a(rho * eta), map_b(rho), w);
        }
      }
      return;
    }
  }
}

}  // namespace stbem
