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

#include "stbem/postprocess.hpp"

#include <chrono>
#include <iomanip>
#include <map>
#include <sstream>

#include "stbem/kernels.hpp"
#include "stbem/panel_quadrature.hpp"
#include "stbem/quadrature.hpp"

namespace stbem {

AssembledProblem assemble_problem(const ProblemConfig& config, int order,
                                  bool with_preconditioner) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  AssembledProblem p;
  p.config = config;
  p.order = order;
  p.meshes = build_uniform_meshes(config);
  const SpaceTimeMesh& mesh = p.meshes.space_time;
  p.dual = build_dual_mesh(mesh.boundary);
  unsigned mask = kSingleLayer | kDoubleLayer;
  if (with_preconditioner) mask |= kHypersingular;
  p.ops = assemble_boundary_operators(mesh, p.dual, config.alpha, order, mask);
  p.m_primal = assemble_M_primal(mesh);
  p.m_dual = assemble_M_dual(mesh, p.dual);
  p.m0 = assemble_M0(mesh, p.meshes.domain, config.alpha, order);
  const AnalyticSolution exact{config.alpha};
  p.g = interpolate_primal_linear(mesh, [&](const Vec2& x, double t) { return exact.g(x, t); });
  p.u0 = interpolate_domain(p.meshes.domain, [&](const Vec2& x) { return exact.u0(x); });
  p.rhs = build_rhs(p.ops.K, p.m_primal, p.m0, p.g, p.u0);
  p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return p;
}

Preconditioner make_preconditioner(const AssembledProblem& problem, bool enabled, MassMode mass) {
  if (!enabled) return Preconditioner::identity();
  if (problem.ops.D.rows() == 0) throw ValidationError("problem was assembled without D_h");
  return Preconditioner::opposite_order(problem.ops.D, problem.m_dual, mass);
}

namespace {

bool inside_polygon(const std::vector<Vec2>& nodes, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, j = nodes.size() - 1; i < nodes.size(); j = i++) {
    const Vec2& a = nodes[i];
    const Vec2& b = nodes[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

}  // namespace

std::vector<double> evaluate_interior(const SpaceTimeMesh& mesh, const DomainMesh& domain,
                                      double alpha, const VectorXd& w, const VectorXd& g,
                                      const VectorXd& u0,
                                      const std::vector<SpaceTimePoint>& points, int order) {
  if (w.size() != mesh.size() || g.size() != mesh.size())
    throw ValidationError("boundary densities do not match the mesh");
  if (u0.size() != domain.num_vertices()) throw ValidationError("initial datum size mismatch");
  const Index ng = mesh.num_segments();
  const Index nt = mesh.num_intervals();
  const auto& boundary = mesh.boundary;
  double hmax = 0.0;
  for (const auto& s : boundary.segments) hmax = std::max(hmax, s.length);
  double tmin = mesh.time.length(0);
  for (Index k = 1; k < nt; ++k) tmin = std::min(tmin, mesh.time.length(k));
  const auto& gs = gauss_rule(order);
  const auto& tri = triangle_rule(order);
  constexpr double inv4pi = 0.25 / std::numbers::pi;
  constexpr double inv2pi = 0.5 / std::numbers::pi;

  std::vector<double> values;
  for (const auto& pt : points) {
    const Vec2& x = pt.x;
    double dist = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < ng; ++i)
      dist = std::min(dist, segment_distance(x, x, boundary.start(i), boundary.end(i)));
    if (!inside_polygon(boundary.nodes, x) || dist < hmax * (1.0 - 1e-12) ||
        pt.t < tmin * (1.0 - 1e-12) || pt.t > mesh.time.final_time()) {
      std::ostringstream msg;
      msg << "point (" << x.x() << ", " << x.y() << ", t=" << pt.t
          << ") is too close to the boundary: distance " << dist << " (need " << hmax
          << "), time " << pt.t << " (need >= " << tmin << ")";
      throw ValidationError(msg.str());
    }
    double initial = 0.0;
    for (Index t = 0; t < domain.num_triangles(); ++t) {
      const auto& tr = domain.triangles[static_cast<std::size_t>(t)];
      const Vec2& p0 = domain.vertices[tr[0]];
      const Vec2 e1 = domain.vertices[tr[1]] - p0;
      const Vec2 e2 = domain.vertices[tr[2]] - p0;
      const double jac = 2.0 * domain.triangle_area(t);
      for (std::size_t q = 0; q < tri.size(); ++q) {
        const Vec2& r = tri.points[q];
        const Vec2 y = p0 + r.x() * e1 + r.y() * e2;
        const double uh =
            (1.0 - r.x() - r.y()) * u0[tr[0]] + r.x() * u0[tr[1]] + r.y() * u0[tr[2]];
        initial += tri.weights[q] * jac * ustar(alpha, (x - y).squaredNorm(), pt.t) * uh;
      }
    }
    double single = 0.0, dbl = 0.0;
    for (Index j = 0; j < ng; ++j) {
      const Vec2& y0 = boundary.start(j);
      const Vec2 dy = boundary.end(j) - y0;
      const double len = boundary.segments[j].length;
      const Vec2& n = boundary.segments[j].normal;
      const Index next = (j + 1) % ng;
      for (std::size_t q = 0; q < gs.size(); ++q) {
        const double u = gs.points[q];
        const Vec2 y = y0 + u * dy;
        const Vec2 d = x - y;
        const double r2 = d.squaredNorm();
        const double a = 0.25 * alpha * r2;
        const double wq = gs.weights[q] * len;
        for (Index m = 0; m < nt && mesh.time.begin(m) < pt.t; ++m) {
          const LagSums s =
              lag_sums(a, LagSet::instant_interval(pt.t, mesh.time.begin(m), mesh.time.end(m)));
          single += wq * inv4pi * s.e1 * w[mesh.index(j, m)];
          const double gh = (1.0 - u) * g[mesh.index(j, m)] + u * g[mesh.index(next, m)];
          dbl += wq * inv2pi * d.dot(n) / r2 * s.ex * gh;
        }
      }
    }
    values.push_back(initial + single - dbl);
  }
  return values;
}

double l2_sigma_error(const SpaceTimeMesh& mesh, const VectorXd& w,
                      const std::function<double(const Vec2&, double, const Vec2&)>& exact,
                      int order) {
  if (w.size() != mesh.size()) throw ValidationError("density does not match the mesh");
  const auto& gs = gauss_rule(order);
  double sum = 0.0;
  for (Index k = 0; k < mesh.num_intervals(); ++k)
    for (Index i = 0; i < mesh.num_segments(); ++i) {
      const auto& seg = mesh.boundary.segments[i];
      const Vec2& a = mesh.boundary.start(i);
      const Vec2 d = mesh.boundary.end(i) - a;
      const double wl = w[mesh.index(i, k)];
      double local = 0.0;
      for (std::size_t p = 0; p < gs.size(); ++p)
        for (std::size_t q = 0; q < gs.size(); ++q) {
          const double t = mesh.time.begin(k) + gs.points[q] * mesh.time.length(k);
          const double e = wl - exact(a + gs.points[p] * d, t, seg.normal);
          local += gs.weights[p] * gs.weights[q] * e * e;
        }
      sum += local * seg.length * mesh.time.length(k);
    }
  return std::sqrt(sum);
}

SolveOutcome solve_analytic(const AssembledProblem& problem, bool preconditioned,
                            const StudyOptions& options, MassMode mass) {
  const AnalyticSolution exact{problem.config.alpha};
  const SpaceTimeMesh& mesh = problem.meshes.space_time;
  SolveOutcome out = solve_system(problem.ops.V, problem.rhs,
                                  make_preconditioner(problem, preconditioned, mass), options.solve);
  SolveReport& r = out.report;
  r.level = problem.config.level;
  r.l2_error_w = l2_sigma_error(
      mesh, out.w, [&](const Vec2& x, double t, const Vec2& n) { return exact.dudn(x, t, n); },
      options.order);
  const auto uh = evaluate_interior(mesh, problem.meshes.domain, problem.config.alpha, out.w,
                                    problem.g, problem.u0, {options.probe}, options.order);
  r.interior_error = std::abs(uh[0] - exact.u(options.probe.x, options.probe.t));
  r.seconds_assembly = problem.seconds;
  r.seconds = r.seconds_assembly + r.seconds_solve;
  return out;
}

std::vector<SolveReport> study(const StudyOptions& options) {
  std::vector<SolveReport> rows;
  for (int level : options.levels) {
    ProblemConfig config;
    config.alpha = options.alpha;
    config.final_time = options.final_time;
    config.level = level;
    const AssembledProblem problem = assemble_problem(config, options.order, options.preconditioned);
    for (bool prec : {false, true}) {
      if (prec ? !options.preconditioned : !options.unpreconditioned) continue;
      rows.push_back(solve_analytic(problem, prec, options).report);
    }
  }
  return rows;
}

std::string study_table(const std::vector<SolveReport>& rows) {
  struct Row {
    Index n = 0;
    int iters = -1, iters_prec = -1;
    double l2 = std::numeric_limits<double>::quiet_NaN();
    double interior = std::numeric_limits<double>::quiet_NaN();
  };
  std::map<int, Row> table;
  for (const auto& r : rows) {
    Row& t = table[r.level];
    t.n = r.n;
    (r.preconditioned ? t.iters_prec : t.iters) = r.iterations;
    t.l2 = r.l2_error_w;
    t.interior = r.interior_error;
  }
  std::ostringstream os;
  os << "L,N,iters,iters_prec,l2_error_w,interior_err\n";
  for (const auto& [level, t] : table)
    os << level << ',' << t.n << ',' << t.iters << ',' << t.iters_prec << ',' << std::scientific
       << std::setprecision(6) << t.l2 << ',' << t.interior << std::defaultfloat << '\n';
  return os.str();
}

}  // namespace stbem
