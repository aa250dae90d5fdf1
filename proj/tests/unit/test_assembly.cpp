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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stbem/assembly.hpp"

using namespace stbem;

namespace {

constexpr double kAlpha = 10.0;

UniformMeshes level(int l) {
  ProblemConfig config;
  config.level = l;
  return build_uniform_meshes(config);
}

VectorXd random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

double rel(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("single layer entries agree with adaptive quadrature") {
    const auto mesh = level(1).space_time;
    const auto v = assemble_V(mesh, kAlpha);
    // coincident, touching, separated; same step and one step later
    for (auto [i, n, k, m] : {std::array<Index, 4>{0, 0, 0, 0}, {0, 0, 1, 0}, {0, 0, 4, 0},
                              {3, 1, 3, 0}, {2, 1, 6, 1}}) {
      CAPTURE(i);
      CAPTURE(k);
      const double want = oracle::v_entry(mesh, kAlpha, i, n, k, m);
      CHECK(rel(v.entry(mesh.index(i, n), mesh.index(k, m)), want) < 1e-6);
    }
  }

  TEST_CASE("double layer entries agree with adaptive quadrature") {
    const auto mesh = level(1).space_time;
    const auto k = assemble_K(mesh, kAlpha);
    // node 1 sits inside the bottom edge, as does segment 0
    CHECK(k.entry(mesh.index(0, 0), mesh.index(1, 0)) == 0.0);
    CHECK(k.entry(mesh.index(0, 1), mesh.index(1, 0)) == 0.0);
    for (auto [i, n, j, m] : {std::array<Index, 4>{0, 0, 3, 0}, {1, 0, 2, 0}, {0, 1, 5, 0},
                              {5, 1, 0, 1}}) {
      CAPTURE(i);
      CAPTURE(j);
      const double want = oracle::k_entry(mesh, kAlpha, i, n, j, m);
      CHECK(rel(k.entry(mesh.index(i, n), mesh.index(j, m)), want) < 1e-6);
    }
  }

  TEST_CASE("operators are causal") {
    const auto mesh = level(2).space_time;
    const auto dual = build_dual_mesh(mesh.boundary);
    const auto ops = assemble_boundary_operators(mesh, dual, kAlpha);
    const Index ng = mesh.num_segments();
    for (const BlockMatrix* a : {&ops.V, &ops.K, &ops.D}) {
      const MatrixXd dense = a->to_dense();
      for (Index n = 0; n < mesh.num_intervals(); ++n)
        for (Index m = n + 1; m < mesh.num_intervals(); ++m)
          CHECK(dense.block(n * ng, m * ng, ng, ng).isZero(0.0));
    }
  }

  TEST_CASE("blocked assembly equals monolithic assembly") {
    for (int l : {1, 2, 3}) {
      CAPTURE(l);
      const auto mesh = level(l).space_time;
      const auto dual = build_dual_mesh(mesh.boundary);
      const auto ops = assemble_boundary_operators(mesh, dual, kAlpha);
      CHECK(ops.V.is_toeplitz());
      CHECK(ops.V.to_dense() == assemble_dense(kSingleLayer, mesh, kAlpha));
      CHECK(ops.K.to_dense() == assemble_dense(kDoubleLayer, mesh, kAlpha));
      CHECK(ops.D.to_dense() == assemble_dense(kHypersingular, mesh, kAlpha));
      CHECK_THROWS_AS(assemble_dense(OperatorMask(kSingleLayer | kDoubleLayer), mesh, kAlpha),
                      ValidationError);
    }
  }

  TEST_CASE("graded time steps assemble a general block matrix") {
    auto mesh = level(1).space_time;
    mesh.time.breakpoints = {0.0, 0.3, 1.0};
    const auto v = assemble_V(mesh, kAlpha);
    CHECK_FALSE(v.is_toeplitz());
    CHECK(rel(v.entry(mesh.index(2, 1), mesh.index(5, 0)), oracle::v_entry(mesh, kAlpha, 2, 1, 5, 0)) <
          1e-6);
    CHECK(rel(v.entry(mesh.index(2, 1), mesh.index(2, 1)), oracle::v_entry(mesh, kAlpha, 2, 1, 2, 1)) <
          1e-6);
  }

  TEST_CASE("mass matrices") {
    const auto mesh = level(2).space_time;
    const auto dual = build_dual_mesh(mesh.boundary);
    const auto mp = assemble_M_primal(mesh);
    const auto md = assemble_M_dual(mesh, dual);
    const double h = 0.25, ht = 0.25;
    CHECK(mp.entry(mesh.index(3, 1), mesh.index(3, 1)) == doctest::Approx(0.5 * h * ht));
    CHECK(mp.entry(mesh.index(3, 1), mesh.index(4, 1)) == doctest::Approx(0.5 * h * ht));
    CHECK(mp.entry(mesh.index(3, 1), mesh.index(5, 1)) == 0.0);
    CHECK(mp.entry(mesh.index(3, 1), mesh.index(3, 0)) == 0.0);
    const MatrixXd dense = md.to_dense();
    for (Index l = 0; l < mesh.size(); ++l) CHECK(dense.row(l).sum() == doctest::Approx(mesh.measure(l)));
    // element i overlaps dual cells i (its midpoint) and its two neighbours
    CHECK(md.entry(mesh.index(3, 0), mesh.index(3, 0)) == doctest::Approx(0.75 * h * ht));
    CHECK(md.entry(mesh.index(3, 0), mesh.index(2, 0)) == doctest::Approx(0.125 * h * ht));
    CHECK(md.entry(mesh.index(3, 0), mesh.index(4, 0)) == doctest::Approx(0.125 * h * ht));
    const VectorXd lumped = lump_mass(md);
    for (Index l = 0; l < mesh.size(); ++l) CHECK(lumped[l] == doctest::Approx(dense.row(l).sum()));
  }

  TEST_CASE("lumped dual mass on non-uniform segments") {
    // rectangle 6 x 1 split into lengths 1, 2, 1, 2, ... around the boundary
    SpaceTimeMesh mesh;
    mesh.boundary = make_boundary_mesh({Vec2(0, 0), Vec2(1, 0), Vec2(3, 0), Vec2(4, 0), Vec2(6, 0),
                                        Vec2(6, 1), Vec2(5, 1), Vec2(3, 1), Vec2(2, 1), Vec2(0, 1)});
    mesh.time = uniform_time_partition(1.0, 2);
    const auto d = lump_mass(assemble_M_dual(mesh, build_dual_mesh(mesh.boundary)));
    for (Index l = 0; l < mesh.size(); ++l) CHECK(d[l] == doctest::Approx(mesh.measure(l)));

    auto zero = BlockMatrix::toeplitz(2, {MatrixXd::Zero(3, 3)});
    CHECK_THROWS_AS(lump_mass(zero), ValidationError);
  }

  TEST_CASE("single layer and hypersingular matrices are definite") {
    for (int l : {1, 2}) {
      const auto mesh = level(l).space_time;
      const auto ops = assemble_boundary_operators(mesh, build_dual_mesh(mesh.boundary), kAlpha);
      for (const BlockMatrix* a : {&ops.V, &ops.D}) {
        const MatrixXd dense = a->to_dense();
        const MatrixXd sym = 0.5 * (dense + dense.transpose());
        CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(sym).eigenvalues().minCoeff() > 0.0);
      }
    }
  }

  TEST_CASE("assembly is reproducible") {
    const auto meshes = level(2);
    const auto& mesh = meshes.space_time;
    const auto dual = build_dual_mesh(mesh.boundary);
    const auto a = assemble_boundary_operators(mesh, dual, kAlpha);
    const auto b = assemble_boundary_operators(mesh, dual, kAlpha);
    CHECK(a.V.to_dense() == b.V.to_dense());
    CHECK(a.K.to_dense() == b.K.to_dense());
    CHECK(a.D.to_dense() == b.D.to_dense());
    CHECK(assemble_M0(mesh, meshes.domain, kAlpha) == assemble_M0(mesh, meshes.domain, kAlpha));
    CHECK_THROWS_AS(assemble_V(mesh, kAlpha, 0), ValidationError);
  }

  TEST_CASE("hypersingular form is positive") {
    const auto mesh = level(2).space_time;
    const auto d = assemble_D(mesh, build_dual_mesh(mesh.boundary), kAlpha);
    for (unsigned s = 0; s < 100; ++s) {
      const VectorXd x = random_vector(mesh.size(), s);
      CHECK(x.dot(d.multiply(x)) > 0.0);
    }
  }

  TEST_CASE("hypersingular form agrees with the normal derivative of the double layer") {
    const auto mesh = level(1).space_time;
    const auto dual = build_dual_mesh(mesh.boundary);
    const auto d = assemble_D(mesh, dual, kAlpha);
    const Index ng = mesh.num_segments();
    VectorXd c(mesh.size()), e(mesh.size());
    for (Index n = 0; n < mesh.num_intervals(); ++n)
      for (Index i = 0; i < ng; ++i) {
        const Vec2 p = dual.dual_nodes[static_cast<std::size_t>(i)];
        const double t = mesh.time.begin(n) + 0.5 * mesh.time.length(n);
        c[mesh.index(i, n)] = (1 + p.x() + 0.5 * p.y() * p.y()) * (1 + 0.5 * t);
        e[mesh.index(i, n)] = std::cos(p.x() - 0.5 * p.y()) * (2 - t);
      }
    const double want = oracle::hypersingular_form_fd(mesh, kAlpha, c, e, 1e-3);
    CHECK(rel(e.dot(d.multiply(c)), want) < 1e-2);
    // constant in space: the arc-length term drops out, the time-jump term remains
    VectorXd flat(mesh.size());
    for (Index l = 0; l < mesh.size(); ++l) flat[l] = 1.0 + 0.5 * static_cast<double>(mesh.element(l).second);
    const double want_flat = oracle::hypersingular_form_fd(mesh, kAlpha, flat, e, 1e-3);
    CHECK(rel(e.dot(d.multiply(flat)), want_flat) < 1e-2);
  }

  TEST_CASE("initial potential matrix") {
    const auto meshes = level(1);
    const MatrixXd m0 = assemble_M0(meshes.space_time, meshes.domain, kAlpha);
    CHECK(m0.rows() == 16);
    CHECK(m0.cols() == meshes.domain.num_vertices());
    CHECK(m0.minCoeff() >= 0.0);
    // entries touching the boundary at t = 0 and a smooth later one
    const auto& st = meshes.space_time;
    CHECK(rel(m0(0, 0), oracle::m0_entry(st, meshes.domain, kAlpha, 0, 0, 0, 1e-8)) < 1e-6);
    CHECK(rel(m0(0, 4), oracle::m0_entry(st, meshes.domain, kAlpha, 0, 0, 4, 1e-8)) < 1e-6);
    const Index late = meshes.space_time.index(5, 1);
    CHECK(rel(m0(late, 4),
              oracle::m0_entry(st, meshes.domain, kAlpha, 5, 1, 4, 1e-8)) < 1e-6);
    // the rows integrate a constant datum against the kernel
    for (Index l = 0; l < 16; ++l) CHECK(m0.row(l).sum() > 0.0);
  }
}
