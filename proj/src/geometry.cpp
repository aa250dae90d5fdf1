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

#include "stbem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace stbem {
namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(q2 - q1, p1 - q1);
  const double d2 = cross(q2 - q1, p2 - q1);
  const double d3 = cross(p2 - p1, q1 - p1);
  const double d4 = cross(p2 - p1, q2 - p1);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

bool point_in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  const double eps = 1e-14;
  return cross(b - a, p - a) >= -eps && cross(c - b, p - b) >= -eps && cross(a - c, p - c) >= -eps;
}

std::vector<std::array<Index, 3>> ear_clip(const std::vector<Vec2>& polygon) {
  std::vector<Index> remaining(polygon.size());
  std::iota(remaining.begin(), remaining.end(), Index{0});
  std::vector<std::array<Index, 3>> triangles;
  while (remaining.size() > 3) {
    const std::size_t n = remaining.size();
    bool clipped = false;
    for (std::size_t k = 0; k < n && !clipped; ++k) {
      const Index ia = remaining[(k + n - 1) % n];
      const Index ib = remaining[k];
      const Index ic = remaining[(k + 1) % n];
      const Vec2& a = polygon[ia];
      const Vec2& b = polygon[ib];
      const Vec2& c = polygon[ic];
      if (cross(b - a, c - b) <= 0) continue;  // reflex or degenerate
      bool empty = true;
      for (Index j : remaining) {
        if (j == ia || j == ib || j == ic) continue;
        if (point_in_triangle(polygon[j], a, b, c)) {
          empty = false;
          break;
        }
      }
      if (!empty) continue;
      triangles.push_back({ia, ib, ic});
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
    }
    if (!clipped) throw ValidationError("ear clipping failed: polygon is not simple");
  }
  triangles.push_back({remaining[0], remaining[1], remaining[2]});
  return triangles;
}

}  // namespace

std::vector<Vec2> unit_square() { return {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}; }

bool is_unit_square(const std::vector<Vec2>& polygon) { return polygon == unit_square(); }

double signed_area(const std::vector<Vec2>& polygon) {
  double area = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) area += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * area;
}

void validate_polygon(const std::vector<Vec2>& polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) throw ValidationError("polygon needs at least 3 vertices");
  for (std::size_t i = 0; i < n; ++i) {
    if ((polygon[i] - polygon[(i + 1) % n]).norm() == 0.0)
      throw ValidationError("polygon has a repeated vertex");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      if (segments_intersect(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]))
        throw ValidationError("polygon is not simple");
    }
  }
  if (signed_area(polygon) <= 0.0) throw ValidationError("polygon must be counter-clockwise");
}

void ProblemConfig::validate() const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(final_time > 0.0)) throw ValidationError("final time must be positive");
  if (level < 1) throw ValidationError("refinement level must be >= 1");
  validate_polygon(domain);
}

double BoundaryMesh::perimeter() const {
  double sum = 0.0;
  for (const auto& s : segments) sum += s.length;
  return sum;
}

double BoundaryMesh::mesh_ratio() const {
  double ratio = 1.0;
  const Index n = num_segments();
  for (Index i = 0; i < n; ++i) {
    const double a = segments[i].length;
    const double b = segments[(i + 1) % n].length;
    ratio = std::max(ratio, std::max(a / b, b / a));
  }
  return ratio;
}

BoundaryMesh make_boundary_mesh(std::vector<Vec2> nodes) {
  BoundaryMesh mesh;
  mesh.nodes = std::move(nodes);
  const Index n = static_cast<Index>(mesh.nodes.size());
  mesh.segments.reserve(mesh.nodes.size());
  for (Index i = 0; i < n; ++i) {
    const Index j = (i + 1) % n;
    const Vec2 d = mesh.nodes[j] - mesh.nodes[i];
    const double len = d.norm();
    mesh.segments.push_back({i, j, len, Vec2(d.y(), -d.x()) / len});
  }
  validate(mesh);
  return mesh;
}

BoundaryMesh build_boundary_mesh(const std::vector<Vec2>& polygon, Index segments_per_edge) {
  validate_polygon(polygon);
  if (segments_per_edge < 1) throw ValidationError("segments per edge must be >= 1");
  std::vector<Vec2> nodes;
  const std::size_t n = polygon.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2& a = polygon[e];
    const Vec2& b = polygon[(e + 1) % n];
    for (Index k = 0; k < segments_per_edge; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(segments_per_edge);
      nodes.push_back(a + s * (b - a));
    }
  }
  return make_boundary_mesh(std::move(nodes));
}

void validate(const BoundaryMesh& mesh) {
  const Index n = mesh.num_segments();
  if (n < 3) throw ValidationError("boundary mesh needs at least 3 segments");
  if (static_cast<Index>(mesh.nodes.size()) != n)
    throw ValidationError("closed boundary mesh must have as many nodes as segments");
  std::vector<int> incidence(mesh.nodes.size(), 0);
  for (Index i = 0; i < n; ++i) {
    const auto& s = mesh.segments[i];
    if (s.start != i || s.end != (i + 1) % n)
      throw ValidationError("boundary segments must form a single ordered loop");
    if (!(s.length > 0.0)) throw ValidationError("boundary segment of zero length");
    if (std::abs(s.normal.norm() - 1.0) > 1e-12) throw ValidationError("normal is not unit length");
    ++incidence[s.start];
    ++incidence[s.end];
  }
  for (int c : incidence)
    if (c != 2) throw ValidationError("every boundary node needs exactly two segments");
  if (signed_area(mesh.nodes) <= 0.0)
    throw ValidationError("boundary loop must be counter-clockwise (outward normals)");
}

bool TimePartition::is_uniform() const {
  const double h = final_time() / static_cast<double>(num_intervals());
  for (Index k = 0; k < num_intervals(); ++k)
    if (std::abs(length(k) - h) > 1e-13 * h) return false;
  return true;
}

TimePartition uniform_time_partition(double final_time, Index intervals) {
  if (!(final_time > 0.0)) throw ValidationError("final time must be positive");
  if (intervals < 1) throw ValidationError("need at least one time step");
  TimePartition time;
  time.breakpoints.resize(static_cast<std::size_t>(intervals) + 1);
  for (Index k = 0; k <= intervals; ++k)
    time.breakpoints[k] = final_time * static_cast<double>(k) / static_cast<double>(intervals);
  return time;
}

void validate(const TimePartition& time) {
  if (time.breakpoints.size() < 2) throw ValidationError("time partition needs an interval");
  if (time.breakpoints.front() != 0.0) throw ValidationError("time partition must start at 0");
  for (Index k = 0; k < time.num_intervals(); ++k)
    if (!(time.length(k) > 0.0)) throw ValidationError("time breakpoints must increase strictly");
}

double DualBoundaryMesh::perimeter() const {
  return std::accumulate(lengths.begin(), lengths.end(), 0.0);
}

double DualBoundaryMesh::mesh_ratio() const {
  double ratio = 1.0;
  const std::size_t n = lengths.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lengths[i];
    const double b = lengths[(i + 1) % n];
    ratio = std::max(ratio, std::max(a / b, b / a));
  }
  return ratio;
}

DualBoundaryMesh build_dual_mesh(const BoundaryMesh& mesh) {
  validate(mesh);
  const Index n = mesh.num_segments();
  DualBoundaryMesh dual;
  dual.lengths.resize(n);
  dual.dual_nodes.resize(n);
  for (Index v = 0; v < n; ++v) {
    const Index prev = (v + n - 1) % n;
    dual.lengths[v] = 0.5 * (mesh.segments[prev].length + mesh.segments[v].length);
    dual.dual_nodes[v] = mesh.midpoint(v);
  }
  dual.halves.reserve(2 * static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const Index prev = (i + n - 1) % n;
    const Index next = (i + 1) % n;
    const auto& seg = mesh.segments[i];
    const double half = 0.5 * seg.length;
    const Vec2 mid = mesh.midpoint(i);

    // (v_i, m_i): inside the dual segment of node i.
    const double li = dual.lengths[i];
    HalfSegment first{mesh.start(i), mid, half, seg.normal, i, {prev, i}, {}, {}};
    first.values[0] = {half / li, 0.0};
    first.values[1] = {0.5 * mesh.segments[prev].length / li, 1.0};
    first.slopes = {-1.0 / li, 1.0 / li};
    dual.halves.push_back(first);

    // (m_i, v_{i+1}): inside the dual segment of node i+1.
    const double ln = dual.lengths[next];
    HalfSegment second{mid, mesh.end(i), half, seg.normal, i, {i, next}, {}, {}};
    second.values[0] = {1.0, 0.5 * mesh.segments[next].length / ln};
    second.values[1] = {0.0, half / ln};
    second.slopes = {-1.0 / ln, 1.0 / ln};
    dual.halves.push_back(second);
  }
  return dual;
}

double DomainMesh::triangle_area(Index t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

double DomainMesh::area() const {
  double sum = 0.0;
  for (Index t = 0; t < num_triangles(); ++t) sum += triangle_area(t);
  return sum;
}

DomainMesh build_domain_mesh(const std::vector<Vec2>& polygon, Index divisions) {
  validate_polygon(polygon);
  if (divisions < 1) throw ValidationError("domain divisions must be >= 1");
  const auto coarse = ear_clip(polygon);
  const Index n = divisions;
  DomainMesh mesh;
  // Coarse vertices keep their polygon index so the boundary nodes come first
  // in a predictable order.
  mesh.vertices = polygon;
  std::map<std::tuple<Index, Index, Index>, Index> edge_points;

  auto edge_point = [&](Index a, Index b, Index k) -> Index {
    // Point k/n along a->b, computed canonically from the smaller index.
    if (k == 0) return a;
    if (k == n) return b;
    if (a > b) {
      std::swap(a, b);
      k = n - k;
    }
    const auto key = std::make_tuple(a, b, k);
    auto it = edge_points.find(key);
    if (it != edge_points.end()) return it->second;
    const double s = static_cast<double>(k) / static_cast<double>(n);
    mesh.vertices.push_back(polygon[a] + s * (polygon[b] - polygon[a]));
    const Index id = static_cast<Index>(mesh.vertices.size()) - 1;
    edge_points.emplace(key, id);
    return id;
  };

  for (const auto& tri : coarse) {
    const Index A = tri[0], B = tri[1], C = tri[2];
    // grid(i, j) = A + i/n (B - A) + j/n (C - A), i + j <= n
    std::vector<Index> grid(static_cast<std::size_t>((n + 1) * (n + 1)), -1);
    auto at = [&](Index i, Index j) -> Index& { return grid[static_cast<std::size_t>(i * (n + 1) + j)]; };
    for (Index i = 0; i <= n; ++i) {
      for (Index j = 0; i + j <= n; ++j) {
        if (j == 0) {
          at(i, j) = edge_point(A, B, i);
        } else if (i == 0) {
          at(i, j) = edge_point(A, C, j);
        } else if (i + j == n) {
          at(i, j) = edge_point(B, C, j);
        } else {
          const double s = static_cast<double>(i) / static_cast<double>(n);
          const double t = static_cast<double>(j) / static_cast<double>(n);
          mesh.vertices.push_back(polygon[A] + s * (polygon[B] - polygon[A]) + t * (polygon[C] - polygon[A]));
          at(i, j) = static_cast<Index>(mesh.vertices.size()) - 1;
        }
      }
    }
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; i + j < n; ++j) {
        mesh.triangles.push_back({at(i, j), at(i + 1, j), at(i, j + 1)});
        if (i + j + 1 < n) mesh.triangles.push_back({at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)});
      }
    }
  }
  return mesh;
}

void validate(const DomainMesh& mesh, const std::vector<Vec2>& polygon) {
  for (Index t = 0; t < mesh.num_triangles(); ++t)
    if (!(mesh.triangle_area(t) > 0.0)) throw ValidationError("domain triangle with non-positive area");
  const double target = signed_area(polygon);
  if (std::abs(mesh.area() - target) > 1e-10 * target)
    throw ValidationError("domain triangulation does not cover the polygon");
}

UniformMeshes build_uniform_meshes(const ProblemConfig& config) {
  config.validate();
  const Index divisions = Index{1} << config.level;
  UniformMeshes meshes;
  meshes.space_time.boundary = build_boundary_mesh(config.domain, divisions);
  meshes.space_time.time = uniform_time_partition(config.final_time, divisions);
  meshes.domain = build_domain_mesh(config.domain, divisions);
  return meshes;
}

std::vector<SliceRange> slice_ranges(Index num_intervals, Index dofs_per_step, Index slices) {
  if (slices < 1) throw ValidationError("need at least one slice");
  if (slices > num_intervals) {
    std::ostringstream msg;
    msg << "cannot split " << num_intervals << " time steps into " << slices
        << " slices: the worker count is limited by the temporal decomposition";
    throw ValidationError(msg.str());
  }
  std::vector<SliceRange> ranges;
  ranges.reserve(static_cast<std::size_t>(slices));
  const Index base = num_intervals / slices;
  const Index extra = num_intervals % slices;
  Index step = 0;
  for (Index p = 0; p < slices; ++p) {
    const Index count = base + (p < extra ? 1 : 0);
    ranges.push_back({step, step + count, step * dofs_per_step, (step + count) * dofs_per_step});
    step += count;
  }
  return ranges;
}

std::vector<SliceRange> slice_ranges(const SpaceTimeMesh& mesh, Index slices) {
  return slice_ranges(mesh.num_intervals(), mesh.num_segments(), slices);
}

}  // namespace stbem
