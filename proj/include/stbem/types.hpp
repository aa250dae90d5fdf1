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

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace stbem {

using Index = Eigen::Index;

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec2 = Vector2<double>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input rejected by a precondition check.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A kernel quantity was requested at a point where it is not defined.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Distributed matvec protocol violation; carries the offending block.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, Index block_row, Index block_col)
      : Error(what + " (block " + std::to_string(block_row) + "," +
              std::to_string(block_col) + ")"),
        block_row_(block_row),
        block_col_(block_col) {}

  Index block_row() const { return block_row_; }
  Index block_col() const { return block_col_; }

 private:
  Index block_row_;
  Index block_col_;
};

}  // namespace stbem
