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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Criterion numbers may be given as arguments to run a
// subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "oracles.hpp"
#include "stbem/assembly.hpp"
#include "stbem/distribution.hpp"
#include "stbem/kernels.hpp"
#include "stbem/postprocess.hpp"
#include "stbem/solver.hpp"

using namespace stbem;

namespace {

constexpr double kAlpha = 10.0;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

UniformMeshes level(int l) {
  ProblemConfig config;
  config.level = l;
  return build_uniform_meshes(config);
}

double rel_err(double got, double want) {
  if (want == 0.0) return got == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(got - want) / std::abs(want);
}

const std::vector<SolveReport>& study_rows() {
  static const std::vector<SolveReport> rows = [] {
    StudyOptions options;
    options.levels = {2, 3, 4, 5, 6};
    auto r = study(options);
    std::cout << study_table(r) << std::flush;
    return r;
  }();
  return rows;
}

const SolveReport& row(int l, bool prec) {
  for (const auto& r : study_rows())
    if (r.level == l && r.preconditioned == prec) return r;
  throw Error("missing study row");
}

// 1. iteration counts over L = 2..6
Verdict iteration_counts() {
  Verdict v;
  const std::map<int, int> reference{{2, 14}, {3, 19}, {4, 24}, {5, 35}, {6, 50}};
  int lo = 1 << 30, hi = 0;
  v.detail << "unprec";
  for (const auto& [l, ref] : reference) {
    const int it = row(l, false).iterations;
    v.detail << ' ' << it;
    v.require(row(l, false).converged, "L=" + std::to_string(l) + " converged");
    v.require(std::abs(it - ref) <= 0.3 * ref, "L=" + std::to_string(l) + " within 30% of " +
                                                   std::to_string(ref));
    if (l >= 3) v.require(it > row(l - 1, false).iterations, "strictly increasing at L=" +
                                                                 std::to_string(l));
  }
  v.detail << "; prec";
  for (int l = 2; l <= 6; ++l) {
    const int it = row(l, true).iterations;
    v.detail << ' ' << it;
    v.require(row(l, true).converged, "preconditioned L=" + std::to_string(l) + " converged");
    v.require(it <= 25, "preconditioned L=" + std::to_string(l) + " <= 25");
    if (l >= 3) {
      lo = std::min(lo, it);
      hi = std::max(hi, it);
    }
  }
  v.require(hi - lo <= 5, "preconditioned spread over L=3..6 <= 5");
  return v;
}

// 2. L=6 against L=4
Verdict boundedness() {
  Verdict v;
  const int dp = row(6, true).iterations - row(4, true).iterations;
  const int du = row(6, false).iterations - row(4, false).iterations;
  v.detail << "prec L6-L4 = " << dp << ", unprec L6-L4 = " << du;
  v.require(dp <= 2, "preconditioned growth <= 2");
  v.require(du >= 15, "unpreconditioned growth >= 15");
  return v;
}

// 3. L=1 entries against adaptive quadrature; D against -dW/dn
Verdict quadrature_oracles() {
  Verdict v;
  const auto meshes = level(1);
  const auto& mesh = meshes.space_time;
  const auto dual = build_dual_mesh(mesh.boundary);
  const auto ops = assemble_boundary_operators(mesh, dual, kAlpha);
  const Index ng = mesh.num_segments(), nt = mesh.num_intervals();

  double worst_v = 0.0, worst_k = 0.0, worst_m0 = 0.0;
  for (Index n = 0; n < nt; ++n)
    for (Index i = 0; i < ng; ++i)
      for (Index m = 0; m <= n; ++m)
        for (Index j = 0; j < ng; ++j) {
          const Index r = mesh.index(i, n), c = mesh.index(j, m);
          worst_v = std::max(worst_v, rel_err(ops.V.entry(r, c), oracle::v_entry(mesh, kAlpha, i, n, j, m)));
          worst_k = std::max(worst_k, rel_err(ops.K.entry(r, c), oracle::k_entry(mesh, kAlpha, i, n, j, m)));
        }
  const MatrixXd m0 = assemble_M0(mesh, meshes.domain, kAlpha);
  for (Index n = 0; n < nt; ++n)
    for (Index i = 0; i < ng; ++i)
      for (Index j = 0; j < meshes.domain.num_vertices(); ++j)
        worst_m0 = std::max(worst_m0, rel_err(m0(mesh.index(i, n), j),
                                              oracle::m0_entry(mesh, meshes.domain, kAlpha, i, n, j, 1e-8)));

  // smooth dual densities
  VectorXd c(mesh.size()), e(mesh.size());
  for (Index n = 0; n < nt; ++n)
    for (Index i = 0; i < ng; ++i) {
      const Vec2 p = dual.dual_nodes[static_cast<std::size_t>(i)];
      const double t = mesh.time.begin(n) + 0.5 * mesh.time.length(n);
      c[mesh.index(i, n)] = (1 + p.x() + 0.5 * p.y() * p.y()) * (1 + 0.5 * t);
      e[mesh.index(i, n)] = std::cos(p.x() - 0.5 * p.y()) * (2 - t);
    }
  double worst_d = 0.0;
  for (auto [a, b] : {std::pair{&c, &c}, {&c, &e}}) {
    const double fd = oracle::hypersingular_form_fd(mesh, kAlpha, *a, *b, 3e-4);
    worst_d = std::max(worst_d, rel_err(b->dot(ops.D.multiply(*a)), fd));
  }
  v.detail << "max rel err V " << worst_v << ", K " << worst_k << ", M0 " << worst_m0
           << ", D form " << worst_d;
  v.require(worst_v <= 1e-6, "V entries 1e-6");
  v.require(worst_k <= 1e-6, "K entries 1e-6");
  v.require(worst_m0 <= 1e-6, "M0 entries 1e-6");
  v.require(worst_d <= 1e-2, "D form 1%");
  return v;
}

// 4. causality and blocked == monolithic
Verdict structure() {
  Verdict v;
  Index zeros = 0;
  for (int l : {1, 2, 3}) {
    const auto mesh = level(l).space_time;
    const auto dual = build_dual_mesh(mesh.boundary);
    const auto ops = assemble_boundary_operators(mesh, dual, kAlpha);
    const Index ng = mesh.num_segments();
    const std::vector<std::pair<std::string, BlockMatrix>> all{
        {"V", ops.V}, {"K", ops.K}, {"D", ops.D},
        {"M", assemble_M_primal(mesh)}, {"Md", assemble_M_dual(mesh, dual)}};
    for (const auto& [name, a] : all) {
      const MatrixXd dense = a.to_dense();
      for (Index r = 0; r < dense.rows(); ++r)
        for (Index col = (r / ng + 1) * ng; col < dense.cols(); ++col) {
          v.require(dense(r, col) == 0.0, name + " causal at L=" + std::to_string(l));
          ++zeros;
        }
    }
    v.require(ops.V.to_dense() == assemble_dense(kSingleLayer, mesh, kAlpha), "V blocked at L=" + std::to_string(l));
    v.require(ops.K.to_dense() == assemble_dense(kDoubleLayer, mesh, kAlpha), "K blocked at L=" + std::to_string(l));
    v.require(ops.D.to_dense() == assemble_dense(kHypersingular, mesh, kAlpha), "D blocked at L=" + std::to_string(l));
  }
  v.detail << zeros << " anti-causal entries zero; blocked V, K, D identical to monolithic for L<=3";
  return v;
}

// 5. plans, distributed matvec and GMRES
Verdict distribution() {
  Verdict v;
  for (Index p = 1; p <= 64; ++p) {
    const auto plan = build_plan(p);
    std::set<BlockId> seen;
    for (Index w = 0; w < p; ++w) {
      std::vector<Index> diagonals;
      for (const auto& b : plan.blocks_of(w)) {
        v.require(b.second <= b.first && seen.insert(b).second, "disjoint tiling P=" + std::to_string(p));
        if (b.first == b.second) diagonals.push_back(b.first);
      }
      v.require(diagonals == std::vector<Index>{w}, "own diagonal block P=" + std::to_string(p));
    }
    v.require(static_cast<Index>(seen.size()) == p * (p + 1) / 2, "complete tiling P=" + std::to_string(p));
    // owner(i,j) = q  <=>  owner(i-q, j-q) = 0. A diameter (i - j = P/2) is
    // fixed by the half turn, so for it q is determined up to P/2.
    auto rot = [p](Index i, Index q) { return ((i - q) % p + p) % p; };
    for (Index i = 0; i < p; ++i)
      for (Index j = 0; j <= i; ++j)
        for (Index q = 0; q < p; ++q) {
          const Index owner = plan.owner(i, j);
          const bool owns = owner == q;
          const bool base = plan.owner(rot(i, q), rot(j, q)) == 0;
          const bool ok = 2 * (i - j) == p ? (!owns || base) && (!base || (q - owner) % (p / 2) == 0)
                                           : owns == base;
          v.require(ok, "rotation symmetry P=" + std::to_string(p));
        }
  }

  ProblemConfig config;
  config.level = 4;
  const auto problem = assemble_problem(config);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const VectorXd x = VectorXd::NullaryExpr(problem.rhs.size(), [&] { return u(rng); });
  double worst = 0.0;
  for (auto kind : {TransportKind::threads, TransportKind::processes})
    for (Index p : {1, 2, 3, 4, 8})
      for (const BlockMatrix* a : {&problem.ops.V, &problem.ops.D}) {
        const VectorXd serial = a->multiply(x);
        const VectorXd dist = distributed_matvec(build_plan(p), *a, x, kind);
        worst = std::max(worst, (dist - serial).norm() / serial.norm());
      }
  v.require(worst <= 1e-13, "distributed matvec 1e-13");

  std::ostringstream counts;
  for (bool prec : {false, true}) {
    const auto pc = make_preconditioner(problem, prec);
    SolveOptions serial_opts;
    const int base = solve_system(problem.ops.V, problem.rhs, pc, serial_opts).report.iterations;
    counts << (prec ? " prec" : " unprec") << ' ' << base;
    for (Index p : {1, 2, 4, 8}) {
      SolveOptions opts;
      opts.workers = p;
      opts.transport = p == 8 ? TransportKind::processes : TransportKind::threads;
      const int it = solve_system(problem.ops.V, problem.rhs, pc, opts).report.iterations;
      counts << '/' << it;
      v.require(it == base, "GMRES iterations P=" + std::to_string(p));
    }
  }
  v.detail << "plans P<=64 tile, rotate, one diagonal each; matvec max rel diff " << worst
           << "; L=4 iterations serial/P1/P2/P4/P8:" << counts.str();
  return v;
}

// 6. convergence of the boundary density and the interior value
Verdict convergence() {
  Verdict v;
  v.detail << "L2 rates";
  for (int l = 2; l <= 5; ++l) {
    const auto& r = row(l, true);
    if (l > 2) {
      const auto& prev = row(l - 1, true);
      const double rate = std::log2(prev.l2_error_w / r.l2_error_w);
      v.detail << ' ' << rate;
      v.require(r.l2_error_w < prev.l2_error_w, "L2 error decreases at L=" + std::to_string(l));
      v.require(r.interior_error < prev.interior_error, "interior error decreases at L=" + std::to_string(l));
      v.require(rate >= 0.8, "rate >= 0.8 at L=" + std::to_string(l));
    }
  }
  v.detail << "; interior " << row(2, true).interior_error << " -> " << row(5, true).interior_error;
  return v;
}

// 7. kernel analytics
Verdict kernel_analytics() {
  Verdict v;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 1.0), al(0.5, 20.0);
  double worst_fd = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double alpha = al(rng), s = pos(rng);
    const Vec2 x(u(rng), u(rng)), y(u(rng), u(rng));
    const double angle = std::numbers::pi * u(rng);
    const Vec2 ny(std::cos(angle), std::sin(angle));
    const double h = 1e-5;
    const double fd = (ustar(alpha, (x - (y + h * ny)).squaredNorm(), s) -
                       ustar(alpha, (x - (y - h * ny)).squaredNorm(), s)) / (2 * h);
    const double exact = ustar_normal_dy(alpha, x, y, ny, s);
    // relative to the kernel scale where the derivative itself vanishes
    const double scale = std::max(std::abs(exact), 1e-3 * ustar(alpha, 0.0, s));
    worst_fd = std::max(worst_fd, std::abs(fd - exact) / scale);
  }
  double worst_e1 = 0.0;
  for (double z = 1e-10; z <= 650.0; z *= 1.7)
    worst_e1 = std::max(worst_e1, rel_err(exp_integral_e1(z), oracle::e1_integral(z)));

  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double worst_anti = 0.0;
  std::uniform_real_distribution<double> t(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec2 x(u(rng), u(rng)), y(u(rng), u(rng)), n(0.6, 0.8);
    const double r2 = (x - y).squaredNorm(), dot = (x - y).dot(n);
    double s1 = t(rng), s2 = t(rng);
    if (s1 > s2) std::swap(s1, s2);
    const double single = ustar_time_antideriv(kAlpha, r2, s2) - ustar_time_antideriv(kAlpha, r2, s1);
    const double qs = GK::integrate([&](double s) { return ustar(kAlpha, r2, s); }, s1, s2, 12, 1e-14);
    const double dbl = ustar_dny_time_antideriv(kAlpha, dot, r2, s2) -
                       ustar_dny_time_antideriv(kAlpha, dot, r2, s1);
    const double qd =
        GK::integrate([&](double s) { return ustar_normal_dy(kAlpha, x, y, n, s); }, s1, s2, 12, 1e-14);
    const double floor = 1e-300;
    worst_anti = std::max(worst_anti, std::abs(single - qs) / std::max(std::abs(qs), floor));
    if (qd != 0.0) worst_anti = std::max(worst_anti, std::abs(dbl - qd) / std::abs(qd));
  }
  v.detail << "normal derivative FD " << worst_fd << ", E1 " << worst_e1 << ", antiderivatives "
           << worst_anti;
  v.require(worst_fd <= 1e-6, "normal derivative 1e-6");
  v.require(worst_e1 <= 1e-13, "E1 1e-13");
  v.require(worst_anti <= 1e-10, "antiderivatives 1e-10");
  return v;
}

// 8. inf-sup surrogate of the dual pairing
Verdict stability() {
  Verdict v;
  double first = 0.0, lowest = std::numeric_limits<double>::infinity();
  v.detail << "ratio";
  for (int l : {2, 3, 4}) {
    const auto mesh = level(l).space_time;
    const auto rep = stability_diagnostic(mesh, build_dual_mesh(mesh.boundary));
    v.detail << ' ' << rep.ratio;
    v.require(rep.ratio > 0.0, "positive at L=" + std::to_string(l));
    if (l == 2) first = rep.ratio;
    lowest = std::min(lowest, rep.ratio);
  }
  v.require(lowest >= 0.5 * first, "min >= 0.5 x L=2 value");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"iteration counts L=2..6", iteration_counts},
      {"preconditioned boundedness L=6 vs L=4", boundedness},
      {"quadrature oracle equivalence at L=1", quadrature_oracles},
      {"causality and blocked assembly", structure},
      {"distribution plans, matvec and GMRES", distribution},
      {"convergence L=2..5", convergence},
      {"kernel analytics", kernel_analytics},
      {"stability diagnostic L=2,3,4", stability},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) selected.insert(std::atoi(argv[a]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[k].first
              << "): " << v.detail.str() << " [" << std::fixed << std::setprecision(1) << secs
              << " s]" << std::defaultfloat << std::endl;
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
