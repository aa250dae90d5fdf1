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
#include <numbers>
#include <string>
#include <vector>

#include "stbem/assembly.hpp"
#include "stbem/solver.hpp"
#include "stbem/spaces.hpp"

namespace stbem {

/// u(x, t) = exp(-t / alpha) sin(x . d), d = (cos(pi/8), sin(pi/8)); solves
/// alpha u_t - Laplace u = 0.
struct AnalyticSolution {
  double alpha = 10.0;
  double angle = std::numbers::pi / 8.0;

  Vec2 direction() const { return Vec2(std::cos(angle), std::sin(angle)); }
  double u(const Vec2& x, double t) const {
    return std::exp(-t / alpha) * std::sin(x.dot(direction()));
  }
  double g(const Vec2& x, double t) const { return u(x, t); }
  double u0(const Vec2& x) const { return u(x, 0.0); }
  double dudn(const Vec2& x, double t, const Vec2& n) const {
    return std::exp(-t / alpha) * std::cos(x.dot(direction())) * direction().dot(n);
  }
};

struct SpaceTimePoint {
  Vec2 x;
  double t;
};

/// Everything the Table-1 pipeline needs for one level.
struct AssembledProblem {
  ProblemConfig config;
  int order = kDefaultOrder;
  UniformMeshes meshes;
  DualBoundaryMesh dual;
  BoundaryOperators ops;
  BlockMatrix m_primal;
  BlockMatrix m_dual;
  MatrixXd m0;
  VectorXd g;
  VectorXd u0;
  VectorXd rhs;
  double seconds = 0.0;
};

/// Meshes, operators, data interpolants and the right-hand side of the
/// analytic test problem. D_h is skipped unless with_preconditioner is set.
AssembledProblem assemble_problem(const ProblemConfig& config, int order = kDefaultOrder,
                                  bool with_preconditioner = true);

Preconditioner make_preconditioner(const AssembledProblem& problem, bool enabled,
                                   MassMode mass = MassMode::lumped);

/// u_h(x, t) = (M0 u0)(x, t) + (V w)(x, t) - (W g)(x, t) at interior points.
/// Points closer than one element to the boundary or to t = 0 are rejected.
std::vector<double> evaluate_interior(const SpaceTimeMesh& mesh, const DomainMesh& domain,
                                      double alpha, const VectorXd& w, const VectorXd& g,
                                      const VectorXd& u0,
                                      const std::vector<SpaceTimePoint>& points,
                                      int order = kDefaultOrder);

/// ||w_h - q||_{L2(Sigma)} for piecewise constant w_h.
double l2_sigma_error(const SpaceTimeMesh& mesh, const VectorXd& w,
                      const std::function<double(const Vec2&, double, const Vec2&)>& exact,
                      int order = kDefaultOrder);

struct StudyOptions {
  std::vector<int> levels;
  bool unpreconditioned = true;
  bool preconditioned = true;
  double alpha = 10.0;
  double final_time = 1.0;
  int order = kDefaultOrder;
  SolveOptions solve;
  SpaceTimePoint probe{Vec2(0.5, 0.5), 0.5};
};

/// Solves one assembled level and fills the error columns of the report.
SolveOutcome solve_analytic(const AssembledProblem& problem, bool preconditioned,
                            const StudyOptions& options, MassMode mass = MassMode::lumped);

/// Runs mesh -> assemble -> solve -> errors per level. Non-convergence is
/// reported in the row and does not stop the study.
std::vector<SolveReport> study(const StudyOptions& options);

/// Table-1 style summary: L,N,iters,iters_prec,l2_error_w,interior_err.
std::string study_table(const std::vector<SolveReport>& rows);

}  // namespace stbem
