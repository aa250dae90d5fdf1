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

#include <memory>
#include <utility>
#include <vector>

#include "stbem/block_matrix.hpp"
#include "stbem/transport.hpp"

namespace stbem {

using BlockId = std::pair<Index, Index>;  // (row slice i, column slice j), j <= i

/// Assignment of the lower-triangular slice blocks to P workers. Blocks are
/// the edges (and loops) of the complete graph K_P; worker p owns the loop
/// (p, p) and the generator graph G_0 rotated by p.
struct DistributionPlan {
  Index workers = 0;
  std::vector<Index> generator_vertices;       // V_0, contains 0
  std::vector<BlockId> generator_edges;        // (a, b) with a < b, one per difference class
  std::vector<Index> owners;                   // packed lower triangle, i (i + 1) / 2 + j

  Index owner(Index i, Index j) const;
  std::vector<BlockId> blocks_of(Index worker) const;
  /// Owners of blocks in column j, ascending, without repetitions.
  std::vector<Index> column_owners(Index j) const;
};

DistributionPlan build_plan(Index workers);

struct BalanceReport {
  std::vector<Index> blocks;                   // per worker
  std::vector<std::vector<Index>> slices;      // distinct slices touched per worker
  std::vector<double> comm_estimate;           // per worker, per matvec
  Index total_blocks() const;
};

/// comm_estimate counts distinct foreign trial slices received plus distinct
/// foreign test slices sent, each weighted by slice_length.
BalanceReport plan_metrics(const DistributionPlan& plan, double slice_length = 1.0);

/// Upper bound on distinct slices per worker checked for P <= 64.
Index slice_bound(Index workers);

/// Worker pool holding the blocks of one or more operators by plan.
/// Each apply is one epoch: x_p goes to worker p, workers forward it to the
/// owners of column-p blocks, block products are reduced at the owner of
/// (i, i) in ascending j and y_i returns to the orchestrator.
class WorkerPool {
 public:
  /// resident[p] overrides the blocks worker p holds (defaults to the plan).
  WorkerPool(DistributionPlan plan, std::vector<BlockMatrix> operators,
             TransportKind kind = TransportKind::threads,
             std::vector<std::vector<BlockId>> resident = {});
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  const DistributionPlan& plan() const { return plan_; }
  Index num_operators() const { return static_cast<Index>(operators_.size()); }

  /// Distributed product with operator `op`; x and y are split by slices.
  std::vector<VectorXd> apply(int op, const std::vector<VectorXd>& x_slices);
  VectorXd apply(int op, const VectorXd& x);

  std::vector<VectorXd> split(int op, const VectorXd& x) const;

 private:
  DistributionPlan plan_;
  std::vector<BlockMatrix> operators_;
  std::unique_ptr<Cluster> cluster_;
  std::uint64_t epoch_ = 0;
};

/// One-shot distributed product y = A x over a fresh worker pool.
VectorXd distributed_matvec(const DistributionPlan& plan, const BlockMatrix& a, const VectorXd& x,
                            TransportKind kind = TransportKind::threads);

}  // namespace stbem
