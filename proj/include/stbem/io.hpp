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

#include <iosfwd>
#include <string>
#include <vector>

#include "stbem/block_matrix.hpp"
#include "stbem/distribution.hpp"
#include "stbem/geometry.hpp"

namespace stbem {

/// Plain-text mesh export. Header `N_Gamma N_I M_Omega`, then records
///   node <i> <x> <y>
///   segment <i> <a> <b> <length> <nx> <ny>
///   interval <k> <t0> <t1>
///   vertex <j> <x> <y>
///   triangle <t> <a> <b> <c>
/// in fixed decimal notation.
void write_mesh(std::ostream& os, const SpaceTimeMesh& mesh, const DomainMesh& domain);

enum class DumpFormat { hexfloat, binary };

/// Header `rows cols P`, a block index line `B i j row0 col0 nrows ncols ...`,
/// then each listed block row-major: hex-float text (one block row per line)
/// or raw native doubles.
void write_matrix_dump(std::ostream& os, const BlockMatrix& a, DumpFormat format);
/// Dense matrix dump with a single block.
void write_matrix_dump(std::ostream& os, const MatrixXd& a, DumpFormat format);

struct MatrixDump {
  Index rows = 0;
  Index cols = 0;
  Index slices = 0;
  std::vector<BlockId> blocks;
  MatrixXd dense;
};

MatrixDump read_matrix_dump(std::istream& is, DumpFormat format);

/// CSV of the balance report: `worker,blocks,distinct_slices,comm_estimate`.
void write_plan_csv(std::ostream& os, const BalanceReport& report);

}  // namespace stbem
