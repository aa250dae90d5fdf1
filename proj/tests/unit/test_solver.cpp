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


#include <doctest.h>

#include <map>
#include <random>

#include "stbem/postprocess.hpp"
#include "stbem/solver.hpp"

using namespace stbem;

namespace {

VectorXd random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

auto identity_op() {
  return [](const VectorXd& x) { return x; };
}

double condition(const MatrixXd& a) {
  const VectorXd s = Eigen::JacobiSVD<MatrixXd>(a).singularValues();
  return s[0] / s[s.size() - 1];
}

const AssembledProblem& problem(int l) {
  static std::map<int, AssembledProblem> cache;
  auto it = cache.find(l);
  if (it == cache.end()) {
    ProblemConfig config;
    config.level = l;
    it = cache.emplace(l, assemble_problem(config)).first;
  }
  return it->second;
}

}  // namespace

TEST_SUITE("solver") {
  TEST_CASE("GMRES on the identity converges in one step") {
    const VectorXd b = random_vector(20, 1);
    const auto r = gmres<double>(identity_op(), identity_op(), b, GmresConfig{});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK((r.x - b).norm() < 1e-14);
  }

  TEST_CASE("zero right-hand side needs no iterations") {
    const auto r = gmres<double>(identity_op(), identity_op(), VectorXd::Zero(7), GmresConfig{});
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.x.isZero(0.0));
  }

  TEST_CASE("GMRES solves a nonsymmetric system with monotone residuals") {
    const Index n = 40;
    std::mt19937 rng(2);
    std::normal_distribution<double> z;
    const MatrixXd a = MatrixXd::Identity(n, n) * 4 + MatrixXd::NullaryExpr(n, n, [&] { return 0.3 * z(rng); });
    const VectorXd b = random_vector(n, 3);
    GmresConfig cfg;
    cfg.rel_tol = 1e-12;
    const auto r = gmres<double>([&](const VectorXd& x) { VectorXd y = a * x; return y; },
                                 identity_op(), b, cfg);
    CHECK(r.converged);
    CHECK(r.iterations <= n);
    CHECK((r.x - a.partialPivLu().solve(b)).norm() < 1e-10 * b.norm());
    for (std::size_t k = 1; k < r.residuals.size(); ++k) CHECK(r.residuals[k] <= r.residuals[k - 1]);
    CHECK((a * r.x - b).norm() <= 1e-11 * b.norm());

    cfg.max_iter = 3;
    const auto capped = gmres<double>([&](const VectorXd& x) { VectorXd y = a * x; return y; },
                                      identity_op(), b, cfg);
    CHECK_FALSE(capped.converged);
    CHECK(capped.iterations == 3);
  }

  TEST_CASE("GMRES runs in long double") {
    const VectorX<long double> b = VectorX<long double>::Ones(5);
    const auto r = gmres<long double>([](const VectorX<long double>& x) { VectorX<long double> y = 2 * x; return y; },
                                      [](const VectorX<long double>& x) { return x; }, b, GmresConfig{});
    CHECK(r.converged);
    CHECK(static_cast<double>(r.x[0]) == doctest::Approx(0.5));
  }

  TEST_CASE("configuration checks") {
    GmresConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.rel_tol = 1e-8;
    cfg.max_iter = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }

  TEST_CASE("right-hand side is linear in the data") {
    const auto& p = problem(2);
    const VectorXd g1 = random_vector(p.g.size(), 4), g2 = random_vector(p.g.size(), 5);
    const VectorXd u1 = random_vector(p.u0.size(), 6), u2 = random_vector(p.u0.size(), 7);
    const auto rhs = [&](const VectorXd& g, const VectorXd& u) {
      return build_rhs(p.ops.K, p.m_primal, p.m0, g, u);
    };
    const VectorXd lhs = rhs(2 * g1 - g2, 2 * u1 - u2);
    const VectorXd want = 2 * rhs(g1, u1) - rhs(g2, u2);
    CHECK((lhs - want).norm() < 1e-12 * want.norm());
    CHECK((p.rhs - rhs(p.g, p.u0)).norm() == 0.0);
    CHECK_THROWS_AS(rhs(VectorXd::Zero(3), u1), ValidationError);
    CHECK_THROWS_AS(rhs(g1, VectorXd::Zero(3)), ValidationError);
  }

  TEST_CASE("preconditioner application") {
    const auto& p = problem(2);
    const VectorXd r = random_vector(p.rhs.size(), 8);
    CHECK(Preconditioner::identity().apply(r) == r);

    const auto prec = make_preconditioner(p, true);
    const VectorXd s = random_vector(p.rhs.size(), 9);
    const VectorXd lin = prec.apply(3 * r - s);
    CHECK((lin - (3 * prec.apply(r) - prec.apply(s))).norm() < 1e-12 * lin.norm());
    // lumped: D between two diagonal scalings
    const VectorXd want = p.ops.D.multiply(r.cwiseQuotient(prec.lumped)).cwiseQuotient(prec.lumped);
    CHECK((prec.apply(r) - want).norm() == 0.0);

    const auto exact = make_preconditioner(p, true, MassMode::exact);
    const VectorXd back = p.m_dual.multiply(exact.scale_out(r));
    CHECK((back - r).norm() < 1e-12 * r.norm());
    CHECK_THROWS_AS(Preconditioner::opposite_order(p.ops.D, assemble_M_dual(problem(1).meshes.space_time,
                                                                            problem(1).dual)),
                    ValidationError);
  }

  TEST_CASE("preconditioning keeps the condition number bounded") {
    double kv[2], kp[2];
    for (int l : {2, 3}) {
      const auto& p = problem(l);
      const auto prec = make_preconditioner(p, true);
      const MatrixXd v = p.ops.V.to_dense();
      MatrixXd pv(v.rows(), v.cols());
      for (Index j = 0; j < v.cols(); ++j) pv.col(j) = prec.apply(v.col(j));
      kv[l - 2] = condition(v);
      kp[l - 2] = condition(pv);
    }
    CHECK(kp[0] < kv[0]);
    CHECK(kp[1] < kv[1]);
    CHECK(kv[1] / kv[0] > 1.5);
    CHECK(kp[1] / kp[0] < 1.1);
  }

  TEST_CASE("stability diagnostic stays bounded away from zero") {
    double first = 0.0, lowest = 1e300;
    for (int l : {2, 3, 4}) {
      ProblemConfig config;
      config.level = l;
      const auto mesh = build_uniform_meshes(config).space_time;
      const auto rep = stability_diagnostic(mesh, build_dual_mesh(mesh.boundary));
      CHECK(rep.ratio > 0.0);
      CHECK(rep.min_singular_mass > 0.0);
      if (l == 2) first = rep.ratio;
      lowest = std::min(lowest, rep.ratio);
    }
    CHECK(lowest >= 0.5 * first);
  }

  TEST_CASE("distributed solves reproduce the serial iteration count") {
    const auto& p = problem(2);
    SolveOptions serial;
    const auto base = solve_system(p.ops.V, p.rhs, make_preconditioner(p, true), serial);
    CHECK(base.report.converged);
    for (Index w : {2, 4}) {
      SolveOptions opts;
      opts.workers = w;
      const auto out = solve_system(p.ops.V, p.rhs, make_preconditioner(p, true), opts);
      CHECK(out.report.iterations == base.report.iterations);
      CHECK((out.w - base.w).norm() < 1e-10 * base.w.norm());
    }
    CHECK_THROWS_AS(solve_system(p.ops.V, VectorXd::Zero(3), Preconditioner::identity(), serial),
                    ValidationError);
  }

  TEST_CASE("report rows") {
    SolveReport r;
    r.level = 3;
    r.n = 256;
    r.preconditioned = true;
    r.iterations = 15;
    r.final_rel_res = 5e-9;
    r.l2_error_w = 0.0182;
    r.interior_error = 4.87e-4;
    r.seconds = 1.25;
    CHECK(csv_header() == "L,N,precond,iters,final_rel_res,l2_error_w,interior_err,seconds");
    CHECK(csv_row(r) == "3,256,1,15,5.000000e-09,1.820000e-02,4.870000e-04,1.250");
    CHECK(csv_row(r, false) == "3,256,1,15,5.000000e-09,1.820000e-02,4.870000e-04,0.000");
  }
}
