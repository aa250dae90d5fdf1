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

#include "stbem/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace stbem {

void write_mesh(std::ostream& os, const SpaceTimeMesh& mesh, const DomainMesh& domain) {
  const auto& b = mesh.boundary;
  os << mesh.num_segments() << ' ' << mesh.num_intervals() << ' ' << domain.num_vertices() << '\n';
  os << std::fixed << std::setprecision(12);
  for (std::size_t i = 0; i < b.nodes.size(); ++i)
    os << "node " << i << ' ' << b.nodes[i].x() << ' ' << b.nodes[i].y() << '\n';
  for (Index i = 0; i < b.num_segments(); ++i) {
    const auto& s = b.segments[i];
    // + 0.0 maps -0 to 0
    os << "segment " << i << ' ' << s.start << ' ' << s.end << ' ' << s.length << ' '
       << s.normal.x() + 0.0 << ' ' << s.normal.y() + 0.0 << '\n';
  }
  for (Index k = 0; k < mesh.num_intervals(); ++k)
    os << "interval " << k << ' ' << mesh.time.begin(k) << ' ' << mesh.time.end(k) << '\n';
  for (Index j = 0; j < domain.num_vertices(); ++j)
    os << "vertex " << j << ' ' << domain.vertices[j].x() << ' ' << domain.vertices[j].y() << '\n';
  for (Index t = 0; t < domain.num_triangles(); ++t) {
    const auto& tr = domain.triangles[static_cast<std::size_t>(t)];
    os << "triangle " << t << ' ' << tr[0] << ' ' << tr[1] << ' ' << tr[2] << '\n';
  }
}

namespace {

struct DumpBlock {
  BlockId id;
  Index row0, col0;
  MatrixXd values;
};

void write_blocks(std::ostream& os, Index rows, Index cols, Index slices,
                  const std::vector<DumpBlock>& blocks, DumpFormat format) {
  os << rows << ' ' << cols << ' ' << slices << '\n';
  os << blocks.size();
  for (const auto& b : blocks)
    os << ' ' << b.id.first << ' ' << b.id.second << ' ' << b.row0 << ' ' << b.col0 << ' '
       << b.values.rows() << ' ' << b.values.cols();
  os << '\n';
  for (const auto& b : blocks) {
    for (Index i = 0; i < b.values.rows(); ++i) {
      if (format == DumpFormat::binary) {
        for (Index j = 0; j < b.values.cols(); ++j) {
          const double v = b.values(i, j);
          os.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
        continue;
      }
      char buf[64];
      for (Index j = 0; j < b.values.cols(); ++j) {
        std::snprintf(buf, sizeof buf, "%a", b.values(i, j));
        os << (j ? " " : "") << buf;
      }
      os << '\n';
    }
  }
}

}  // namespace

void write_matrix_dump(std::ostream& os, const BlockMatrix& a, DumpFormat format) {
  std::vector<DumpBlock> blocks;
  for (Index i = 0; i < a.num_slices(); ++i)
    for (Index j = 0; j <= i; ++j)
      blocks.push_back({{i, j},
                        a.row_slices()[static_cast<std::size_t>(i)].first_index,
                        a.col_slices()[static_cast<std::size_t>(j)].first_index,
                        a.block(i, j)});
  write_blocks(os, a.rows(), a.cols(), a.num_slices(), blocks, format);
}

void write_matrix_dump(std::ostream& os, const MatrixXd& a, DumpFormat format) {
  write_blocks(os, a.rows(), a.cols(), 1, {{{0, 0}, 0, 0, a}}, format);
}

MatrixDump read_matrix_dump(std::istream& is, DumpFormat format) {
  MatrixDump d;
  std::size_t count = 0;
  if (!(is >> d.rows >> d.cols >> d.slices >> count)) throw ValidationError("bad dump header");
  struct Entry {
    Index row0, col0, nr, nc;
  };
  std::vector<Entry> entries;
  for (std::size_t b = 0; b < count; ++b) {
    Index i, j;
    Entry e{};
    if (!(is >> i >> j >> e.row0 >> e.col0 >> e.nr >> e.nc))
      throw ValidationError("bad dump block list");
    d.blocks.emplace_back(i, j);
    entries.push_back(e);
  }
  is.get();  // newline ending the index line
  d.dense = MatrixXd::Zero(d.rows, d.cols);
  for (const auto& e : entries)
    for (Index r = 0; r < e.nr; ++r)
      for (Index c = 0; c < e.nc; ++c) {
        double v = 0.0;
        if (format == DumpFormat::binary) {
          is.read(reinterpret_cast<char*>(&v), sizeof v);
        } else {
          std::string tok;
          is >> tok;
          v = std::strtod(tok.c_str(), nullptr);
        }
        if (!is) throw ValidationError("truncated dump");
        d.dense(e.row0 + r, e.col0 + c) = v;
      }
  return d;
}

void write_plan_csv(std::ostream& os, const BalanceReport& report) {
  os << "worker,blocks,distinct_slices,comm_estimate\n";
  for (std::size_t w = 0; w < report.blocks.size(); ++w)
    os << w << ',' << report.blocks[w] << ',' << report.slices[w].size() << ','
       << report.comm_estimate[w] << '\n';
}

}  // namespace stbem
