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

#include <array>
#include <utility>
#include <vector>

#include "stbem/types.hpp"

namespace stbem {

/// Polygon vertices of the unit square, counter-clockwise from the origin.
std::vector<Vec2> unit_square();
bool is_unit_square(const std::vector<Vec2>& polygon);

/// Signed area of a closed polygon (positive for counter-clockwise order).
double signed_area(const std::vector<Vec2>& polygon);

/// Throws ValidationError unless the polygon is closed, simple and
/// counter-clockwise.
void validate_polygon(const std::vector<Vec2>& polygon);

struct ProblemConfig {
  double alpha = 10.0;
  double final_time = 1.0;
  std::vector<Vec2> domain = unit_square();
  int level = 1;

  void validate() const;
};

struct BoundarySegment {
  Index start;
  Index end;
  double length;
  Vec2 normal;  // outward unit normal
};

/// Closed polygonal boundary. Segment i runs from node i to node i+1 (mod n),
/// counter-clockwise, so node and segment counts agree.
struct BoundaryMesh {
  std::vector<Vec2> nodes;
  std::vector<BoundarySegment> segments;

  Index num_segments() const { return static_cast<Index>(segments.size()); }
  const Vec2& start(Index i) const { return nodes[segments[i].start]; }
  const Vec2& end(Index i) const { return nodes[segments[i].end]; }
  Vec2 midpoint(Index i) const { return 0.5 * (start(i) + end(i)); }
  Vec2 tangent(Index i) const { return (end(i) - start(i)) / segments[i].length; }
  double perimeter() const;
  /// Largest ratio of neighbouring segment lengths (local quasi-uniformity).
  double mesh_ratio() const;
};

/// Builds a boundary loop through the given points (counter-clockwise).
BoundaryMesh make_boundary_mesh(std::vector<Vec2> nodes);
/// Splits every polygon edge into `segments_per_edge` equal segments.
BoundaryMesh build_boundary_mesh(const std::vector<Vec2>& polygon, Index segments_per_edge);
void validate(const BoundaryMesh& mesh);

struct TimePartition {
  std::vector<double> breakpoints;

  Index num_intervals() const { return static_cast<Index>(breakpoints.size()) - 1; }
  double begin(Index k) const { return breakpoints[k]; }
  double end(Index k) const { return breakpoints[k + 1]; }
  double length(Index k) const { return breakpoints[k + 1] - breakpoints[k]; }
  double final_time() const { return breakpoints.back(); }
  bool is_uniform() const;
};

TimePartition uniform_time_partition(double final_time, Index intervals);
void validate(const TimePartition& time);

/// Tensor product of the boundary mesh and the time partition. Elements are
/// numbered time-major: l = k * N_Gamma + i.
struct SpaceTimeMesh {
  BoundaryMesh boundary;
  TimePartition time;

  Index num_segments() const { return boundary.num_segments(); }
  Index num_intervals() const { return time.num_intervals(); }
  Index size() const { return num_segments() * num_intervals(); }
  Index index(Index segment, Index interval) const { return interval * num_segments() + segment; }
  std::pair<Index, Index> element(Index l) const {
    return {l % num_segments(), l / num_segments()};
  }
  double measure(Index l) const {
    auto [i, k] = element(l);
    return boundary.segments[i].length * time.length(k);
  }
};

/// Piece of a dual segment lying on a single primal segment.
struct HalfSegment {
  Vec2 a;
  Vec2 b;
  double length;
  Vec2 normal;
  Index primal_segment;
  /// The two dual hats that are nonzero here.
  std::array<Index, 2> hats;
  /// values[h][e]: hat h evaluated at end e (0 -> a, 1 -> b).
  std::array<std::array<double, 2>, 2> values;
  /// Arc-length derivative of hat h (counter-clockwise orientation).
  std::array<double, 2> slopes;
};

/// Node-centred dual of a boundary mesh. Dual segment v spans from the
/// midpoint of primal segment v-1 through node v to the midpoint of segment v.
/// Dual nodes are the primal midpoints; dual hat i peaks at the midpoint of
/// primal segment i.
struct DualBoundaryMesh {
  std::vector<double> lengths;          // dual segment length per primal node
  std::vector<Vec2> dual_nodes;         // primal midpoints
  std::vector<HalfSegment> halves;      // 2 per primal segment: (v_i, m_i), (m_i, v_i+1)

  Index num_segments() const { return static_cast<Index>(lengths.size()); }
  double perimeter() const;
  double mesh_ratio() const;
};

DualBoundaryMesh build_dual_mesh(const BoundaryMesh& mesh);

/// Conforming triangulation of the domain.
struct DomainMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<Index, 3>> triangles;

  Index num_vertices() const { return static_cast<Index>(vertices.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles.size()); }
  double triangle_area(Index t) const;
  double area() const;
};

/// Ear-clips the polygon and refines every coarse triangle uniformly into
/// divisions^2 triangles. On the unit square this is the structured
/// right-triangle grid with `divisions` cells per axis.
DomainMesh build_domain_mesh(const std::vector<Vec2>& polygon, Index divisions);
void validate(const DomainMesh& mesh, const std::vector<Vec2>& polygon);

struct UniformMeshes {
  SpaceTimeMesh space_time;
  DomainMesh domain;
};

/// Level-L meshes: 2^L segments per polygon edge (N_Gamma = 2^(L+2) on the
/// square), N_I = 2^L time steps, 2^L domain divisions per coarse edge.
UniformMeshes build_uniform_meshes(const ProblemConfig& config);

/// Contiguous range of time steps and the matching element index range.
struct SliceRange {
  Index first_step;
  Index end_step;
  Index first_index;
  Index end_index;

  Index steps() const { return end_step - first_step; }
  Index size() const { return end_index - first_index; }
};

/// Splits the time steps into P balanced contiguous slices.
std::vector<SliceRange> slice_ranges(Index num_intervals, Index dofs_per_step, Index slices);
std::vector<SliceRange> slice_ranges(const SpaceTimeMesh& mesh, Index slices);

}  // namespace stbem
