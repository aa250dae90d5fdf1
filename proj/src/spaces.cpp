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

#include "stbem/spaces.hpp"

#include <algorithm>

namespace stbem {

TrialSpace make_space(SpaceKind kind, const SpaceTimeMesh& mesh) {
  if (kind == SpaceKind::domain_linear)
    throw ValidationError("domain space needs a domain mesh");
  return TrialSpace{kind, mesh.num_segments(), mesh.num_intervals()};
}

TrialSpace make_space(const DomainMesh& domain) {
  return TrialSpace{SpaceKind::domain_linear, domain.num_vertices(), 1};
}

std::vector<std::pair<Index, double>> primal_hat_values(const BoundaryMesh& mesh, Index segment,
                                                        double u) {
  const Index n = mesh.num_segments();
  return {{segment, 1.0 - u}, {(segment + 1) % n, u}};
}

std::vector<std::pair<Index, double>> dual_hat_values(const DualBoundaryMesh& dual, Index segment,
                                                      double u) {
  const Index half = u < 0.5 ? 2 * segment : 2 * segment + 1;
  const double v = u < 0.5 ? 2.0 * u : 2.0 * u - 1.0;
  const auto& hs = dual.halves[static_cast<std::size_t>(half)];
  std::vector<std::pair<Index, double>> out;
  for (int h = 0; h < 2; ++h)
    out.emplace_back(hs.hats[h], (1.0 - v) * hs.values[h][0] + v * hs.values[h][1]);
  return out;
}

std::array<double, 3> domain_hat_values(const DomainMesh& domain, Index t, const Vec2& y) {
  const auto& tri = domain.triangles[static_cast<std::size_t>(t)];
  const Vec2& p0 = domain.vertices[tri[0]];
  const Vec2 e1 = domain.vertices[tri[1]] - p0;
  const Vec2 e2 = domain.vertices[tri[2]] - p0;
  Eigen::Matrix2d m;
  m << e1, e2;
  const Vec2 lam = m.partialPivLu().solve(y - p0);
  return {1.0 - lam[0] - lam[1], lam[0], lam[1]};
}

std::array<double, 2> primal_hat_on_half(const BoundaryMesh& mesh, Index hat, Index half) {
  const Index n = mesh.num_segments();
  const Index seg = half / 2;
  const bool first = (half % 2) == 0;
  if (seg == hat) return first ? std::array<double, 2>{1.0, 0.5} : std::array<double, 2>{0.5, 0.0};
  if ((seg + 1) % n == hat)
    return first ? std::array<double, 2>{0.0, 0.5} : std::array<double, 2>{0.5, 1.0};
  return {0.0, 0.0};
}

VectorXd interpolate_primal_linear(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f) {
  const Index ng = mesh.num_segments();
  VectorXd out(mesh.size());
  for (Index k = 0; k < mesh.num_intervals(); ++k) {
    const double t = 0.5 * (mesh.time.begin(k) + mesh.time.end(k));
    for (Index i = 0; i < ng; ++i) out[mesh.index(i, k)] = f(mesh.boundary.start(i), t);
  }
  return out;
}

VectorXd interpolate_dual_linear(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f) {
  const Index ng = mesh.num_segments();
  VectorXd out(mesh.size());
  for (Index k = 0; k < mesh.num_intervals(); ++k) {
    const double t = 0.5 * (mesh.time.begin(k) + mesh.time.end(k));
    for (Index i = 0; i < ng; ++i) out[mesh.index(i, k)] = f(mesh.boundary.midpoint(i), t);
  }
  return out;
}

VectorXd interpolate_piecewise_constant(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f) {
  return interpolate_dual_linear(mesh, f);
}

VectorXd interpolate_domain(const DomainMesh& domain, const SpaceFunction& f) {
  VectorXd out(domain.num_vertices());
  for (Index v = 0; v < domain.num_vertices(); ++v) out[v] = f(domain.vertices[v]);
  return out;
}

Index locate_interval(const TimePartition& time, double t) {
  const auto& bp = time.breakpoints;
  const double slack = 1e-12 * (bp.back() - bp.front());
  if (!(t >= bp.front() - slack && t <= bp.back() + slack))
    throw ValidationError("time outside the partition");
  auto it = std::upper_bound(bp.begin(), bp.end(), t);
  Index k = static_cast<Index>(it - bp.begin()) - 1;
  return std::clamp<Index>(k, 0, time.num_intervals() - 1);
}

double evaluate_piecewise_constant(const SpaceTimeMesh& mesh, const VectorXd& coeffs,
                                   Index segment, double t) {
  return coeffs[mesh.index(segment, locate_interval(mesh.time, t))];
}

double evaluate_primal_linear(const SpaceTimeMesh& mesh, const VectorXd& coeffs, Index segment,
                              double u, double t) {
  const Index k = locate_interval(mesh.time, t);
  double sum = 0.0;
  for (auto [dof, value] : primal_hat_values(mesh.boundary, segment, u))
    sum += value * coeffs[mesh.index(dof, k)];
  return sum;
}

double evaluate_dual_linear(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual,
                            const VectorXd& coeffs, Index segment, double u, double t) {
  const Index k = locate_interval(mesh.time, t);
  double sum = 0.0;
  for (auto [dof, value] : dual_hat_values(dual, segment, u))
    sum += value * coeffs[mesh.index(dof, k)];
  return sum;
}

}  // namespace stbem
