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

#include "stbem/block_matrix.hpp"

#include <algorithm>

namespace stbem {

BlockMatrix BlockMatrix::toeplitz(Index steps, std::vector<MatrixXd> lag_tiles, Index slices) {
  if (lag_tiles.empty()) throw ValidationError("toeplitz operator needs at least one tile");
  BlockMatrix a;
  a.steps_ = steps;
  a.bandwidth_ = std::min<Index>(steps, static_cast<Index>(lag_tiles.size()));
  a.rows_per_step_ = lag_tiles.front().rows();
  a.cols_per_step_ = lag_tiles.front().cols();
  for (const auto& t : lag_tiles)
    if (t.rows() != a.rows_per_step_ || t.cols() != a.cols_per_step_)
      throw ValidationError("inconsistent tile shapes");
  a.toeplitz_ = true;
  a.tiles_ = std::make_shared<const std::vector<MatrixXd>>(std::move(lag_tiles));
  a.set_slices(slices);
  return a;
}

BlockMatrix BlockMatrix::general(Index steps, Index bandwidth, std::vector<MatrixXd> tiles,
                                 Index slices) {
  if (bandwidth < 1 || static_cast<Index>(tiles.size()) != steps * bandwidth)
    throw ValidationError("tile table does not match steps x bandwidth");
  BlockMatrix a;
  a.steps_ = steps;
  a.bandwidth_ = bandwidth;
  a.rows_per_step_ = tiles.front().rows();
  a.cols_per_step_ = tiles.front().cols();
  for (Index n = 0; n < steps; ++n)
    for (Index d = 0; d < bandwidth && d <= n; ++d) {
      const auto& t = tiles[static_cast<std::size_t>(n * bandwidth + d)];
      if (t.rows() != a.rows_per_step_ || t.cols() != a.cols_per_step_)
        throw ValidationError("inconsistent tile shapes");
    }
  a.tiles_ = std::make_shared<const std::vector<MatrixXd>>(std::move(tiles));
  a.set_slices(slices);
  return a;
}

void BlockMatrix::set_slices(Index slices) {
  row_slices_ = slice_ranges(steps_, rows_per_step_, slices);
  col_slices_ = slice_ranges(steps_, cols_per_step_, slices);
}

BlockMatrix BlockMatrix::with_slices(Index slices) const {
  BlockMatrix a = *this;
  a.set_slices(slices);
  return a;
}

const MatrixXd* BlockMatrix::tile(Index n, Index m) const {
  const Index d = n - m;
  if (d < 0 || d >= bandwidth_ || n >= steps_ || m < 0) return nullptr;
  const auto& tiles = *tiles_;
  return toeplitz_ ? &tiles[static_cast<std::size_t>(d)]
                   : &tiles[static_cast<std::size_t>(n * bandwidth_ + d)];
}

MatrixXd BlockMatrix::block(Index i, Index j) const {
  const auto& rs = row_slices_.at(static_cast<std::size_t>(i));
  const auto& cs = col_slices_.at(static_cast<std::size_t>(j));
  MatrixXd out = MatrixXd::Zero(rs.size(), cs.size());
  for (Index n = rs.first_step; n < rs.end_step; ++n)
    for (Index m = cs.first_step; m < cs.end_step; ++m)
      if (const MatrixXd* t = tile(n, m))
        out.block((n - rs.first_step) * rows_per_step_, (m - cs.first_step) * cols_per_step_,
                  rows_per_step_, cols_per_step_) = *t;
  return out;
}

void BlockMatrix::apply_block(Index i, Index j, const Eigen::Ref<const VectorXd>& x_j,
                              Eigen::Ref<VectorXd> y_i) const {
  const auto& rs = row_slices_.at(static_cast<std::size_t>(i));
  const auto& cs = col_slices_.at(static_cast<std::size_t>(j));
  if (x_j.size() != cs.size() || y_i.size() != rs.size())
    throw ValidationError("slice vector length mismatch");
  if (j > i) return;
  for (Index n = rs.first_step; n < rs.end_step; ++n) {
    auto y = y_i.segment((n - rs.first_step) * rows_per_step_, rows_per_step_);
    for (Index m = cs.first_step; m < cs.end_step; ++m)
      if (const MatrixXd* t = tile(n, m))
        y.noalias() += *t * x_j.segment((m - cs.first_step) * cols_per_step_, cols_per_step_);
  }
}

VectorXd BlockMatrix::multiply(const VectorXd& x) const {
  if (x.size() != cols()) throw ValidationError("operand length mismatch");
  VectorXd y = VectorXd::Zero(rows());
  VectorXd partial;
  for (Index i = 0; i < num_slices(); ++i) {
    const auto& rs = row_slices_[static_cast<std::size_t>(i)];
    auto yi = y.segment(rs.first_index, rs.size());
    for (Index j = 0; j <= i; ++j) {
      const auto& cs = col_slices_[static_cast<std::size_t>(j)];
      partial.setZero(rs.size());
      apply_block(i, j, x.segment(cs.first_index, cs.size()), partial);
      yi += partial;
    }
  }
  return y;
}

MatrixXd BlockMatrix::to_dense() const {
  MatrixXd out = MatrixXd::Zero(rows(), cols());
  for (Index n = 0; n < steps_; ++n)
    for (Index m = 0; m <= n; ++m)
      if (const MatrixXd* t = tile(n, m))
        out.block(n * rows_per_step_, m * cols_per_step_, rows_per_step_, cols_per_step_) = *t;
  return out;
}

double BlockMatrix::entry(Index row, Index col) const {
  const MatrixXd* t = tile(row / rows_per_step_, col / cols_per_step_);
  return t ? (*t)(row % rows_per_step_, col % cols_per_step_) : 0.0;
}

}  // namespace stbem
