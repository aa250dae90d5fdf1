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

#include <functional>
#include <utility>
#include <vector>

#include "stbem/geometry.hpp"

namespace stbem {

enum class SpaceKind {
  piecewise_constant,  // X^{0,0} on the primal space-time mesh
  primal_linear,       // X^{1,0}: hats at primal nodes, constant in time
  dual_linear,         // Y_h: hats at dual nodes (primal midpoints), constant in time
  domain_linear        // S^1 on the domain triangulation
};

struct TrialSpace {
  SpaceKind kind;
  Index dofs_per_step;
  Index steps;

  Index size() const { return dofs_per_step * steps; }
};

TrialSpace make_space(SpaceKind kind, const SpaceTimeMesh& mesh);
TrialSpace make_space(const DomainMesh& domain);

/// Nonzero basis values at the boundary point with parameter u in [0,1] on
/// primal segment `segment`, as (spatial dof, value) pairs.
std::vector<std::pair<Index, double>> primal_hat_values(const BoundaryMesh& mesh, Index segment,
                                                        double u);
std::vector<std::pair<Index, double>> dual_hat_values(const DualBoundaryMesh& dual, Index segment,
                                                      double u);
/// Barycentric values of the three vertex hats of triangle t at point y.
std::array<double, 3> domain_hat_values(const DomainMesh& domain, Index t, const Vec2& y);

/// Coefficients of a primal hat on a half segment in the local linear basis
/// {1 - v, v}; zero when the hat vanishes there.
std::array<double, 2> primal_hat_on_half(const BoundaryMesh& mesh, Index hat, Index half);

using SpaceTimeFunction = std::function<double(const Vec2&, double)>;
using SpaceFunction = std::function<double(const Vec2&)>;

/// Nodal interpolation into X^{1,0}: node values at each interval midpoint.
VectorXd interpolate_primal_linear(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f);
/// Same for the dual space: values at primal midpoints.
VectorXd interpolate_dual_linear(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f);
/// Piecewise constants by element-midpoint sampling.
VectorXd interpolate_piecewise_constant(const SpaceTimeMesh& mesh, const SpaceTimeFunction& f);
/// Nodal interpolation into S^1.
VectorXd interpolate_domain(const DomainMesh& domain, const SpaceFunction& f);

/// Point evaluation on Gamma x (0,T); `segment`, `u` locate x, t is the time.
double evaluate_piecewise_constant(const SpaceTimeMesh& mesh, const VectorXd& coeffs,
                                   Index segment, double t);
double evaluate_primal_linear(const SpaceTimeMesh& mesh, const VectorXd& coeffs, Index segment,
                              double u, double t);
double evaluate_dual_linear(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual,
                            const VectorXd& coeffs, Index segment, double u, double t);

/// Time interval containing t (right-continuous, last interval for t = T).
Index locate_interval(const TimePartition& time, double t);

}  // namespace stbem
