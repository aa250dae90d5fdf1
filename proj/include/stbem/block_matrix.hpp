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
#include <vector>

#include "stbem/geometry.hpp"

namespace stbem {

/// Block-lower-triangular space-time operator.
///
/// Entries are stored as per-time-step tiles: tile(n, m) couples test step n
/// with trial step m (m <= n, n - m < bandwidth). For uniform time partitions
/// tiles depend only on the lag n - m and are shared. The P x P slice blocks
/// (I, J) are views over the tiles; block (I, J) with J > I is zero.
class BlockMatrix {
 public:
  BlockMatrix() = default;

  /// One tile per lag d = 0 .. lag_tiles.size() - 1.
  static BlockMatrix toeplitz(Index steps, std::vector<MatrixXd> lag_tiles, Index slices = 1);
  /// tiles[n * bandwidth + (n - m)] holds tile(n, m); unused slots may be empty.
  static BlockMatrix general(Index steps, Index bandwidth, std::vector<MatrixXd> tiles,
                             Index slices = 1);

  Index steps() const { return steps_; }
  Index bandwidth() const { return bandwidth_; }
  Index rows_per_step() const { return rows_per_step_; }
  Index cols_per_step() const { return cols_per_step_; }
  Index rows() const { return steps_ * rows_per_step_; }
  Index cols() const { return steps_ * cols_per_step_; }
  bool is_toeplitz() const { return toeplitz_; }

  /// Tile coupling test step n and trial step m, or nullptr when zero.
  const MatrixXd* tile(Index n, Index m) const;

  Index num_slices() const { return static_cast<Index>(row_slices_.size()); }
  const std::vector<SliceRange>& row_slices() const { return row_slices_; }
  const std::vector<SliceRange>& col_slices() const { return col_slices_; }
  /// Same tiles, re-partitioned into P temporal slices.
  BlockMatrix with_slices(Index slices) const;

  bool has_block(Index i, Index j) const { return j <= i; }
  /// Materialized slice block (dense).
  MatrixXd block(Index i, Index j) const;
  /// y_i += A_ij x_j with x_j, y_i slice-local.
  void apply_block(Index i, Index j, const Eigen::Ref<const VectorXd>& x_j,
                   Eigen::Ref<VectorXd> y_i) const;

  /// Blockwise product; row i sums its block partials in ascending j.
  VectorXd multiply(const VectorXd& x) const;
  MatrixXd to_dense() const;
  double entry(Index row, Index col) const;

 private:
  void set_slices(Index slices);

  Index steps_ = 0;
  Index bandwidth_ = 0;
  Index rows_per_step_ = 0;
  Index cols_per_step_ = 0;
  bool toeplitz_ = false;
  std::shared_ptr<const std::vector<MatrixXd>> tiles_;
  std::vector<SliceRange> row_slices_;
  std::vector<SliceRange> col_slices_;
};

}  // namespace stbem
