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

#include <algorithm>
#include <random>
#include <set>

#include "stbem/distribution.hpp"

using namespace stbem;

namespace {

BlockMatrix random_lower(Index steps, Index dofs, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<MatrixXd> tiles;
  for (Index n = 0; n < steps; ++n)
    for (Index d = 0; d < steps; ++d)
      tiles.push_back(d <= n ? MatrixXd(MatrixXd::NullaryExpr(dofs, dofs, [&] { return u(rng); }))
                             : MatrixXd());
  return BlockMatrix::general(steps, steps, tiles);
}

VectorXd random_vector(Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return VectorXd::NullaryExpr(n, [&] { return u(rng); });
}

Index rotate(Index i, Index p, Index workers) { return ((i - p) % workers + workers) % workers; }

}  // namespace

TEST_SUITE("distribution") {
  TEST_CASE("plans tile the block triangle for every P up to 64") {
    for (Index p = 1; p <= 64; ++p) {
      CAPTURE(p);
      const auto plan = build_plan(p);
      std::set<BlockId> seen;
      Index total = 0;
      for (Index w = 0; w < p; ++w) {
        Index diagonals = 0;
        for (const auto& b : plan.blocks_of(w)) {
          CHECK(b.second <= b.first);
          CHECK(seen.insert(b).second);
          if (b.first == b.second) {
            ++diagonals;
            CHECK(b.first == w);
          }
          ++total;
        }
        CHECK(diagonals == 1);
      }
      CHECK(total == p * (p + 1) / 2);
      CHECK(static_cast<Index>(seen.size()) == total);

      const auto report = plan_metrics(plan);
      CHECK(report.total_blocks() == p * (p + 1) / 2);
      for (const auto& s : report.slices)
        CHECK(static_cast<Index>(s.size()) <= slice_bound(p));
    }
  }

  TEST_CASE("plans are rotations of the generator") {
    for (Index p = 1; p <= 64; ++p) {
      CAPTURE(p);
      const auto plan = build_plan(p);
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j <= i; ++j) {
          const Index w = plan.owner(i, j);
          // the owner sees the block as a generator block shifted by w
          CHECK(plan.owner(rotate(i, w, p), rotate(j, w, p)) == 0);
          for (Index q = 0; q < p; ++q) {
            if (plan.owner(rotate(i, q, p), rotate(j, q, p)) != 0) continue;
            // a diameter is fixed by the half turn, so two rotations reach it
            const bool diameter = 2 * (i - j) == p;
            CHECK((q == w || (diameter && (q - w + p) % p == p / 2)));
          }
        }
    }
  }

  TEST_CASE("small plans") {
    const auto one = build_plan(1);
    CHECK(one.blocks_of(0) == std::vector<BlockId>{{0, 0}});
    CHECK(plan_metrics(one).comm_estimate[0] == 0.0);

    auto counts = plan_metrics(build_plan(4)).blocks;
    std::sort(counts.begin(), counts.end());
    CHECK(counts == std::vector<Index>{2, 2, 3, 3});

    const auto seven = plan_metrics(build_plan(7));
    for (Index w = 0; w < 7; ++w) {
      CHECK(seven.blocks[static_cast<std::size_t>(w)] == 4);
      CHECK(seven.slices[static_cast<std::size_t>(w)].size() <= 4);
    }
    CHECK_THROWS_AS(build_plan(0), ValidationError);
    CHECK(slice_bound(7) == 6);
  }

  TEST_CASE("distributed matvec matches the serial product") {
    const auto a = random_lower(8, 8, 11);
    const VectorXd x = random_vector(a.cols(), 12);
    const VectorXd serial = a.multiply(x);
    for (auto kind : {TransportKind::threads, TransportKind::processes})
      for (Index p : {1, 2, 3, 4, 8}) {
        CAPTURE(p);
        const VectorXd y = distributed_matvec(build_plan(p), a, x, kind);
        CHECK((y - serial).norm() <= 1e-13 * serial.norm());
        if (p == 1) CHECK(y == serial);
      }
  }

  TEST_CASE("block identity is reproduced exactly") {
    const auto id = BlockMatrix::toeplitz(6, {MatrixXd::Identity(5, 5)});
    const VectorXd x = random_vector(30, 13);
    for (Index p : {1, 3, 6}) CHECK(distributed_matvec(build_plan(p), id, x) == x);
  }

  TEST_CASE("a pool serves repeated products of several operators") {
    const auto a = random_lower(8, 3, 14);
    const auto b = random_lower(8, 3, 15);
    WorkerPool pool(build_plan(4), {a, b}, TransportKind::processes);
    for (unsigned s = 0; s < 3; ++s) {
      const VectorXd x = random_vector(24, 16 + s);
      CHECK((pool.apply(0, x) - a.multiply(x)).norm() <= 1e-13 * a.multiply(x).norm());
      CHECK((pool.apply(1, x) - b.multiply(x)).norm() <= 1e-13 * b.multiply(x).norm());
    }
  }

  TEST_CASE("protocol violations name the offending block") {
    const auto a = random_lower(4, 2, 17);
    const auto plan = build_plan(4);
    auto resident = std::vector<std::vector<BlockId>>();
    for (Index w = 0; w < 4; ++w) resident.push_back(plan.blocks_of(w));
    const Index w = plan.owner(3, 1);
    auto& mine = resident[static_cast<std::size_t>(w)];
    mine.erase(std::find(mine.begin(), mine.end(), BlockId{3, 1}));
    for (auto kind : {TransportKind::threads, TransportKind::processes}) {
      WorkerPool pool(plan, {a}, kind, resident);
      try {
        pool.apply(0, VectorXd::Ones(8));
        FAIL("missing block not reported");
      } catch (const ProtocolError& e) {
        CHECK(e.block_row() == 3);
        CHECK(e.block_col() == 1);
      }
    }

    WorkerPool pool(plan, {a});
    std::vector<VectorXd> slices(4, VectorXd::Ones(2));
    slices[2] = VectorXd::Ones(3);
    try {
      pool.apply(0, slices);
      FAIL("misdistributed vector not reported");
    } catch (const ProtocolError& e) {
      CHECK(e.block_row() == 2);
      CHECK(e.block_col() == 2);
    }
    CHECK_THROWS_AS(pool.apply(0, std::vector<VectorXd>(3, VectorXd::Ones(2))), ProtocolError);
  }

  TEST_CASE("more workers than time steps are rejected before spawning") {
    const auto a = random_lower(4, 2, 18);
    CHECK_THROWS_AS(distributed_matvec(build_plan(5), a, VectorXd::Ones(8)), ValidationError);
  }
}
