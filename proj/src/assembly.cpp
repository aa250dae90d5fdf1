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

#include "stbem/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "stbem/kernels.hpp"
#include "stbem/panel_quadrature.hpp"
#include "stbem/parallel.hpp"
#include "stbem/quadrature.hpp"
#include "stbem/spaces.hpp"

namespace stbem {
namespace {

constexpr double kInvFourPi = 0.25 / std::numbers::pi;
constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

// Per half pair and tile: phi, e1 moments (4), K moments test A (2), test B (2).
constexpr int kQuantities = 9;

struct TileLags {
  Index test_step;
  Index trial_step;
  LagSet lags;
  std::array<int, 4> ids;  // into TimeLayout::values, -1 when inactive
  bool smooth;             // all four lags positive: no log singularity left
};

struct TimeLayout {
  std::vector<double> values;
  std::vector<TileLags> tiles;
};

TimeLayout make_layout(const TimePartition& time, bool toeplitz) {
  TimeLayout layout;
  const Index nt = time.num_intervals();
  for (Index n = 0; n < nt; ++n)
    for (Index m = 0; m <= (toeplitz ? 0 : n); ++m) {
      TileLags t{n, m, LagSet::intervals(time.begin(n), time.end(n), time.begin(m), time.end(m)),
                 {-1, -1, -1, -1}, true};
      for (int i = 0; i < 4; ++i) {
        if (t.lags.lag[i] > 0)
          layout.values.push_back(t.lags.lag[i]);
        else
          t.smooth = false;
      }
      layout.tiles.push_back(t);
    }
  std::sort(layout.values.begin(), layout.values.end());
  layout.values.erase(std::unique(layout.values.begin(), layout.values.end()),
                      layout.values.end());
  for (auto& t : layout.tiles)
    for (int i = 0; i < 4; ++i)
      if (t.lags.lag[i] > 0)
        t.ids[i] = static_cast<int>(
            std::lower_bound(layout.values.begin(), layout.values.end(), t.lags.lag[i]) -
            layout.values.begin());
  return layout;
}

bool collinear(const HalfSegment& a, const HalfSegment& b) {
  const double tol = 1e-12 * std::max(a.length, b.length);
  return std::abs(a.normal.dot(b.normal)) > 1.0 - 1e-14 &&
         std::abs(a.normal.dot(b.a - a.a)) <= tol && std::abs(a.normal.dot(b.b - a.a)) <= tol;
}

PanelPair half_relation(const DualBoundaryMesh& dual, Index a, Index b) {
  const Index h = static_cast<Index>(dual.halves.size());
  if (a == b) return {PairRelation::identical, 0, 0};
  if (b == a + 1) return {PairRelation::shared_vertex, 1, 0};
  if (a == 0 && b == h - 1) return {PairRelation::shared_vertex, 0, 1};
  const auto& ha = dual.halves[static_cast<std::size_t>(a)];
  const auto& hb = dual.halves[static_cast<std::size_t>(b)];
  return classify_separated(ha.a, ha.b, hb.a, hb.b);
}

// Accumulates the time-integrated kernel moments of one half pair for a subset
// of tiles; out points at the pair's row of the chunk table.
class HalfPairIntegrator {
 public:
  HalfPairIntegrator(const TimeLayout& layout, double alpha, unsigned mask)
      : layout_(layout), alpha_(alpha), mask_(mask), e1_(layout.values.size()),
        sx_(layout.values.size()) {}

  void run(const HalfSegment& A, const HalfSegment& B, const PanelPair& rule, int order,
           const std::vector<int>& tiles, const std::vector<int>& value_ids, Index chunk_begin,
           bool with_k, double* out) {
    if (tiles.empty()) return;
    const double scale = A.length * B.length;
    const Vec2 da = B.a - A.a;
    const Vec2 ta = A.b - A.a;
    const Vec2 tb = B.b - B.a;
    const bool want_e1 = mask_ & kHypersingular;
    const bool want_phi = mask_ & (kSingleLayer | kHypersingular);
    integrate_panel_pair(rule, order, [&](double u, double v, double w) {
      const Vec2 d = u * ta - da - v * tb;  // x - y
      const double r2 = d.squaredNorm();
      const double a = 0.25 * alpha_ * r2;
      const double wt = w * scale;
      if (a > 0) {
        for (int id : value_ids) {
          const double s = layout_.values[static_cast<std::size_t>(id)];
          const auto [e, x] = exp_integral_e1_and_exp(a / s);
          e1_[static_cast<std::size_t>(id)] = e;
          sx_[static_cast<std::size_t>(id)] = s * x;
        }
      }
      const double sa[2] = {1.0 - u, u};
      const double sb[2] = {1.0 - v, v};
      const double kab = with_k ? d.dot(B.normal) / r2 : 0.0;
      const double kba = with_k ? -d.dot(A.normal) / r2 : 0.0;
      for (int t : tiles) {
        const auto& tile = layout_.tiles[static_cast<std::size_t>(t)];
        double e1 = 0.0, phi = 0.0, psi = 0.0;
        if (a > 0) {
          for (int i = 0; i < 4; ++i) {
            const int id = tile.ids[i];
            if (id < 0) continue;
            const double sg = tile.lags.sign[i];
            const double s = tile.lags.lag[i];
            const double e = e1_[static_cast<std::size_t>(id)];
            const double sx = sx_[static_cast<std::size_t>(id)];
            e1 += sg * e;
            phi += sg * ((s + a) * e - sx);
            psi += sg * (sx - a * e);
          }
        } else {
          const LagSums sums = lag_sums(0.0, tile.lags);
          e1 = sums.e1;
          phi = sums.phi;
          psi = sums.psi;
        }
        double* q = out + (t - chunk_begin) * kQuantities;
        if (want_phi) q[0] += wt * phi;
        if (want_e1) {
          const double we = wt * e1;
          q[1] += we * sa[0] * sb[0];
          q[2] += we * sa[0] * sb[1];
          q[3] += we * sa[1] * sb[0];
          q[4] += we * sa[1] * sb[1];
        }
        if (with_k) {
          const double wab = wt * kab * psi;
          const double wba = wt * kba * psi;
          q[5] += wab * sb[0];
          q[6] += wab * sb[1];
          q[7] += wba * sa[0];
          q[8] += wba * sa[1];
        }
      }
    });
  }

 private:
  const TimeLayout& layout_;
  double alpha_;
  unsigned mask_;
  std::vector<double> e1_;
  std::vector<double> sx_;
};

std::vector<int> value_ids_of(const TimeLayout& layout, const std::vector<int>& tiles) {
  std::vector<int> ids;
  for (int t : tiles)
    for (int id : layout.tiles[static_cast<std::size_t>(t)].ids)
      if (id >= 0) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

struct Support {
  Index half;
  std::array<double, 2> coeffs;  // in the local basis {1 - v, v}
  double slope;
};

struct OperatorTiles {
  std::vector<MatrixXd> V, K, D;
};

OperatorTiles assemble_tiles(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual,
                             double alpha, int order, unsigned mask, const TimeLayout& layout) {
  if (order < 1) throw ValidationError("quadrature order must be >= 1");
  if (!(alpha > 0)) throw ValidationError("alpha must be positive");
  const Index ng = mesh.num_segments();
  const Index nh = static_cast<Index>(dual.halves.size());
  const Index pairs = nh * (nh + 1) / 2;
  const Index ntiles = static_cast<Index>(layout.tiles.size());
  auto pair_index = [nh](Index a, Index b) { return a * nh - a * (a - 1) / 2 + (b - a); };

  std::vector<std::vector<Support>> dual_support(static_cast<std::size_t>(ng));
  std::vector<std::vector<Support>> primal_support(static_cast<std::size_t>(ng));
  for (Index h = 0; h < nh; ++h) {
    const auto& hs = dual.halves[static_cast<std::size_t>(h)];
    for (int l = 0; l < 2; ++l)
      dual_support[static_cast<std::size_t>(hs.hats[l])].push_back(
          {h, {hs.values[l][0], hs.values[l][1]}, hs.slopes[l]});
    const Index seg = h / 2;
    for (Index hat : {seg, (seg + 1) % ng})
      primal_support[static_cast<std::size_t>(hat)].push_back(
          {h, primal_hat_on_half(mesh.boundary, hat, h), 0.0});
  }

  OperatorTiles out;
  if (mask & kSingleLayer) out.V.resize(static_cast<std::size_t>(ntiles));
  if (mask & kDoubleLayer) out.K.resize(static_cast<std::size_t>(ntiles));
  if (mask & kHypersingular) out.D.resize(static_cast<std::size_t>(ntiles));

  const Index budget = Index(1) << 25;
  const Index per_chunk = std::clamp<Index>(budget / (pairs * kQuantities), 1, ntiles);
  std::vector<double> table;

  for (Index c0 = 0; c0 < ntiles; c0 += per_chunk) {
    const Index c1 = std::min(ntiles, c0 + per_chunk);
    std::vector<int> all, smooth, singular;
    for (Index t = c0; t < c1; ++t) {
      all.push_back(static_cast<int>(t));
      (layout.tiles[static_cast<std::size_t>(t)].smooth ? smooth : singular)
          .push_back(static_cast<int>(t));
    }
    const auto ids_all = value_ids_of(layout, all);
    const auto ids_smooth = value_ids_of(layout, smooth);
    const auto ids_singular = value_ids_of(layout, singular);
    const Index width = (c1 - c0) * kQuantities;
    table.assign(static_cast<std::size_t>(pairs * width), 0.0);

    parallel_for(0, nh, [&](Index a) {
      HalfPairIntegrator integrator(layout, alpha, mask);
      const auto& ha = dual.halves[static_cast<std::size_t>(a)];
      for (Index b = a; b < nh; ++b) {
        const auto& hb = dual.halves[static_cast<std::size_t>(b)];
        const PanelPair rel = half_relation(dual, a, b);
        const bool with_k = (mask & kDoubleLayer) && !collinear(ha, hb);
        double* row = table.data() + pair_index(a, b) * width;
        if (rel.relation == PairRelation::identical ||
            rel.relation == PairRelation::shared_vertex) {
          integrator.run(ha, hb, PanelPair{PairRelation::near}, order, smooth, ids_smooth, c0,
                         with_k, row);
          integrator.run(ha, hb, rel, order, singular, ids_singular, c0, with_k, row);
        } else {
          integrator.run(ha, hb, rel, order, all, ids_all, c0, with_k, row);
        }
      }
    });

    parallel_for(c0, c1, [&](Index t) {
      const Index off = (t - c0) * kQuantities;
      auto q = [&](Index x, Index y) { return table.data() + pair_index(x, y) * width + off; };
      if (mask & kSingleLayer) {
        MatrixXd tile(ng, ng);
        for (Index i = 0; i < ng; ++i)
          for (Index j = 0; j < ng; ++j) {
            double sum = 0.0;
            for (Index x : {2 * i, 2 * i + 1})
              for (Index y : {2 * j, 2 * j + 1}) sum += (x <= y ? q(x, y) : q(y, x))[0];
            tile(i, j) = kInvFourPi * sum;
          }
        out.V[static_cast<std::size_t>(t)] = std::move(tile);
      }
      if (mask & kDoubleLayer) {
        MatrixXd tile(ng, ng);
        for (Index i = 0; i < ng; ++i)
          for (Index j = 0; j < ng; ++j) {
            double sum = 0.0;
            for (Index x : {2 * i, 2 * i + 1})
              for (const auto& sy : primal_support[static_cast<std::size_t>(j)]) {
                const Index y = sy.half;
                const double* v = x <= y ? q(x, y) + 5 : q(y, x) + 7;
                sum += sy.coeffs[0] * v[0] + sy.coeffs[1] * v[1];
              }
            tile(i, j) = kInvTwoPi * sum;
          }
        out.K[static_cast<std::size_t>(t)] = std::move(tile);
      }
      if (mask & kHypersingular) {
        MatrixXd tile(ng, ng);
        for (Index i = 0; i < ng; ++i)
          for (Index j = 0; j < ng; ++j) {
            double sum = 0.0;
            for (const auto& sx : dual_support[static_cast<std::size_t>(i)]) {
              const Vec2& nx = dual.halves[static_cast<std::size_t>(sx.half)].normal;
              for (const auto& sy : dual_support[static_cast<std::size_t>(j)]) {
                const Vec2& ny = dual.halves[static_cast<std::size_t>(sy.half)].normal;
                const bool fwd = sx.half <= sy.half;
                const double* v = fwd ? q(sx.half, sy.half) : q(sy.half, sx.half);
                double moment = 0.0;
                for (int a = 0; a < 2; ++a)
                  for (int b = 0; b < 2; ++b)
                    moment += sx.coeffs[a] * sy.coeffs[b] * v[1 + (fwd ? 2 * a + b : 2 * b + a)];
                sum += kInvFourPi * (sx.slope * sy.slope * v[0] + nx.dot(ny) * alpha * moment);
              }
            }
            tile(i, j) = sum;
          }
        out.D[static_cast<std::size_t>(t)] = std::move(tile);
      }
    });
  }
  return out;
}

BlockMatrix wrap(const TimePartition& time, bool toeplitz, std::vector<MatrixXd> tiles) {
  const Index nt = time.num_intervals();
  if (toeplitz) return BlockMatrix::toeplitz(nt, std::move(tiles));
  // Lower-triangular packing (n, m), m <= n -> n * nt + (n - m).
  std::vector<MatrixXd> packed(static_cast<std::size_t>(nt * nt));
  std::size_t k = 0;
  for (Index n = 0; n < nt; ++n)
    for (Index m = 0; m <= n; ++m) packed[static_cast<std::size_t>(n * nt + n - m)] = std::move(tiles[k++]);
  return BlockMatrix::general(nt, nt, std::move(packed));
}

}  // namespace

BoundaryOperators assemble_boundary_operators(const SpaceTimeMesh& mesh,
                                              const DualBoundaryMesh& dual, double alpha,
                                              int order, unsigned mask) {
  validate(mesh.boundary);
  validate(mesh.time);
  const bool toeplitz = mesh.time.is_uniform();
  const TimeLayout layout = make_layout(mesh.time, toeplitz);
  OperatorTiles tiles = assemble_tiles(mesh, dual, alpha, order, mask, layout);
  BoundaryOperators ops;
  if (mask & kSingleLayer) ops.V = wrap(mesh.time, toeplitz, std::move(tiles.V));
  if (mask & kDoubleLayer) ops.K = wrap(mesh.time, toeplitz, std::move(tiles.K));
  if (mask & kHypersingular) ops.D = wrap(mesh.time, toeplitz, std::move(tiles.D));
  return ops;
}

BlockMatrix assemble_V(const SpaceTimeMesh& mesh, double alpha, int order) {
  return assemble_boundary_operators(mesh, build_dual_mesh(mesh.boundary), alpha, order,
                                     kSingleLayer)
      .V;
}

BlockMatrix assemble_K(const SpaceTimeMesh& mesh, double alpha, int order) {
  return assemble_boundary_operators(mesh, build_dual_mesh(mesh.boundary), alpha, order,
                                     kDoubleLayer)
      .K;
}

BlockMatrix assemble_D(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual, double alpha,
                       int order) {
  return assemble_boundary_operators(mesh, dual, alpha, order, kHypersingular).D;
}

MatrixXd assemble_dense(OperatorMask op, const SpaceTimeMesh& mesh, double alpha, int order) {
  const DualBoundaryMesh dual = build_dual_mesh(mesh.boundary);
  const TimeLayout layout = make_layout(mesh.time, false);
  OperatorTiles tiles = assemble_tiles(mesh, dual, alpha, order, op, layout);
  const auto& list = op == kSingleLayer ? tiles.V : op == kDoubleLayer ? tiles.K : tiles.D;
  if (list.empty()) throw ValidationError("assemble_dense expects a single operator");
  const Index ng = mesh.num_segments();
  MatrixXd out = MatrixXd::Zero(mesh.size(), mesh.size());
  for (std::size_t k = 0; k < layout.tiles.size(); ++k)
    out.block(layout.tiles[k].test_step * ng, layout.tiles[k].trial_step * ng, ng, ng) = list[k];
  return out;
}

namespace {

BlockMatrix step_diagonal(const TimePartition& time, const MatrixXd& spatial) {
  const Index nt = time.num_intervals();
  if (time.is_uniform()) return BlockMatrix::toeplitz(nt, {time.length(0) * spatial});
  std::vector<MatrixXd> tiles;
  for (Index n = 0; n < nt; ++n) tiles.push_back(time.length(n) * spatial);
  return BlockMatrix::general(nt, 1, std::move(tiles));
}

}  // namespace

BlockMatrix assemble_M_primal(const SpaceTimeMesh& mesh) {
  const Index ng = mesh.num_segments();
  MatrixXd spatial = MatrixXd::Zero(ng, ng);
  for (Index i = 0; i < ng; ++i) {
    const double h = mesh.boundary.segments[i].length;
    spatial(i, i) += 0.5 * h;
    spatial(i, (i + 1) % ng) += 0.5 * h;
  }
  return step_diagonal(mesh.time, spatial);
}

BlockMatrix assemble_M_dual(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual) {
  const Index ng = mesh.num_segments();
  MatrixXd spatial = MatrixXd::Zero(ng, ng);
  for (const auto& hs : dual.halves)
    for (int l = 0; l < 2; ++l)
      spatial(hs.primal_segment, hs.hats[l]) +=
          0.5 * hs.length * (hs.values[l][0] + hs.values[l][1]);
  return step_diagonal(mesh.time, spatial);
}

VectorXd lump_mass(const BlockMatrix& mass) {
  VectorXd d = VectorXd::Zero(mass.rows());
  const Index rp = mass.rows_per_step();
  for (Index n = 0; n < mass.steps(); ++n)
    for (Index m = 0; m <= n; ++m)
      if (const MatrixXd* t = mass.tile(n, m)) d.segment(n * rp, rp) += t->rowwise().sum();
  for (Index l = 0; l < d.size(); ++l)
    if (!(d[l] > 0)) throw ValidationError("lumped mass has a non-positive row " + std::to_string(l));
  return d;
}

namespace {

using TriangleKey = std::array<double, 8>;

Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return a + t * d;
}

Vec2 closest_point_on_triangle(const Vec2& p, const std::array<Vec2, 3>& v) {
  const double area = (v[1] - v[0]).x() * (v[2] - v[0]).y() - (v[1] - v[0]).y() * (v[2] - v[0]).x();
  bool inside = true;
  for (int k = 0; k < 3; ++k) {
    const Vec2 e = v[(k + 1) % 3] - v[k];
    const Vec2 w = p - v[k];
    const double c = e.x() * w.y() - e.y() * w.x();
    if (c * area < -1e-14 * std::abs(area)) inside = false;
  }
  if (inside) return p;
  Vec2 best = v[0];
  double dist = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const Vec2 c = closest_point_on_segment(p, v[k], v[(k + 1) % 3]);
    const double d = (c - p).norm();
    if (d < dist) {
      dist = d;
      best = c;
    }
  }
  return best;
}

double segment_triangle_distance(const Vec2& s0, const Vec2& s1, const std::array<Vec2, 3>& v) {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) d = std::min(d, segment_distance(s0, s1, v[k], v[(k + 1) % 3]));
  for (const Vec2& p : {s0, s1}) d = std::min(d, (closest_point_on_triangle(p, v) - p).norm());
  return d;
}

// Time-step integrals of one (segment, triangle) configuration, relative to
// the segment start: values[n * 3 + v] for hat v of the triangle.
class InitialIntegrator {
 public:
  InitialIntegrator(const TimePartition& time, double alpha, int order)
      : time_(time), alpha_(alpha), order_(order) {}

  std::vector<double> run(const TriangleKey& key) {
    const Index nt = time_.num_intervals();
    const Vec2 s0(0.0, 0.0), s1(key[0], key[1]);
    const std::array<Vec2, 3> v = {Vec2(key[2], key[3]), Vec2(key[4], key[5]), Vec2(key[6], key[7])};
    const double len = s1.norm();
    const Vec2 e1 = v[1] - v[0], e2 = v[2] - v[0];
    const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    double diam = 0.0;
    for (int k = 0; k < 3; ++k) diam = std::max(diam, (v[(k + 1) % 3] - v[k]).norm());
    const double size = std::max(len, diam);
    const double gap = segment_triangle_distance(s0, s1, v);
    const bool touching = gap <= 1e-12 * size;
    int q = order_;
    if (gap >= 2.0 * size) q = std::max(3, order_ - 2);
    if (gap <= size) q = order_ + 2;

    acc_.assign(static_cast<std::size_t>((nt + 1) * 3), 0.0);
    Eigen::Matrix2d frame;
    frame << e1, e2;
    const Eigen::Matrix2d inv = frame.inverse();

    // Regular rule: all steps, or steps >= 1 when the first step is singular.
    const Index first = touching ? 1 : 0;
    const auto& gx = gauss_rule(q);
    const auto& tri = triangle_rule(q);
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const Vec2 x = s0 + gx.points[i] * s1;
      for (std::size_t j = 0; j < tri.size(); ++j) {
        const Vec2& ref = tri.points[j];
        const Vec2 y = v[0] + ref.x() * e1 + ref.y() * e2;
        const double w = gx.weights[i] * len * tri.weights[j] * jac;
        const double phi[3] = {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
        accumulate(x, y, w, phi, nt);
      }
    }
    std::vector<double> values(static_cast<std::size_t>(nt * 3), 0.0);
    for (Index n = first; n < nt; ++n)
      for (int h = 0; h < 3; ++h)
        values[static_cast<std::size_t>(n * 3 + h)] =
            kInvFourPi * alpha_ * (acc_[static_cast<std::size_t>((n + 1) * 3 + h)] -
                                   acc_[static_cast<std::size_t>(n * 3 + h)]);
    if (touching) {
      const auto first_step = singular_first_step(s0, s1, v, inv);
      for (int h = 0; h < 3; ++h) values[static_cast<std::size_t>(h)] = first_step[h];
    }
    return values;
  }

 private:
  // acc[k * 3 + h] += w phi_h E1(a / t_k), k = 1 .. nt; acc[0] stays 0.
  void accumulate(const Vec2& x, const Vec2& y, double w, const double* phi, Index nt) {
    const double a = 0.25 * alpha_ * (x - y).squaredNorm();
    if (!(a > 0)) return;
    for (Index k = 1; k <= nt; ++k) {
      const double z = a / time_.breakpoints[static_cast<std::size_t>(k)];
      if (z > kUnderflowArgument) continue;
      const double e = exp_integral_e1(z);
      for (int h = 0; h < 3; ++h) acc_[static_cast<std::size_t>(k * 3 + h)] += w * phi[h] * e;
    }
  }

  // First time step with a triangle touching the segment: graded in x towards
  // both ends, triangle split into Duffy triangles at the point nearest to x.
  std::array<double, 3> singular_first_step(const Vec2& s0, const Vec2& s1,
                                            const std::array<Vec2, 3>& v,
                                            const Eigen::Matrix2d& inv) const {
    const double t1 = time_.breakpoints[1];
    const double len = (s1 - s0).norm();
    const auto& graded = graded_rule_cached(order_ + 2 * kSingularExtraOrder);
    const auto& g = gauss_rule(order_ + 2 * kSingularExtraOrder);
    std::array<double, 3> sum = {0.0, 0.0, 0.0};
    auto per_x = [&](double u, double wu) {
      const Vec2 x = s0 + u * (s1 - s0);
      const Vec2 p = closest_point_on_triangle(x, v);
      for (int k = 0; k < 3; ++k) {
        const Vec2 b = v[k] - p, c = v[(k + 1) % 3] - p;
        const double jac = std::abs(b.x() * c.y() - b.y() * c.x());
        if (jac <= 1e-14 * (v[1] - v[0]).squaredNorm()) continue;
        for (std::size_t i = 0; i < graded.size(); ++i) {
          const double s = graded.points[i];
          for (std::size_t j = 0; j < g.size(); ++j) {
            const double t = g.points[j];
            const Vec2 y = p + s * (1.0 - t) * b + s * t * c;
            const double a = 0.25 * alpha_ * (x - y).squaredNorm();
            if (!(a > 0)) continue;
            const double z = a / t1;
            if (z > kUnderflowArgument) continue;
            const Vec2 lam = inv * (y - v[0]);
            const double phi[3] = {1.0 - lam.x() - lam.y(), lam.x(), lam.y()};
            const double w = wu * len * graded.weights[i] * g.weights[j] * s * jac;
            const double e = exp_integral_e1(z);
            for (int h = 0; h < 3; ++h) sum[h] += w * phi[h] * e;
          }
        }
      }
    };
    for (std::size_t i = 0; i < graded.size(); ++i) {
      per_x(0.5 * graded.points[i], 0.5 * graded.weights[i]);
      per_x(1.0 - 0.5 * graded.points[i], 0.5 * graded.weights[i]);
    }
    for (double& s : sum) s *= kInvFourPi * alpha_;
    return sum;
  }

  const TimePartition& time_;
  double alpha_;
  int order_;
  std::vector<double> acc_;
};

}  // namespace

MatrixXd assemble_M0(const SpaceTimeMesh& mesh, const DomainMesh& domain, double alpha,
                     int order) {
  if (order < 1) throw ValidationError("quadrature order must be >= 1");
  if (!(alpha > 0)) throw ValidationError("alpha must be positive");
  const Index ng = mesh.num_segments();
  const Index nt = mesh.num_intervals();
  const Index ntri = domain.num_triangles();

  // Translation-invariant configurations share their integrals.
  std::map<TriangleKey, Index> ids;
  std::vector<TriangleKey> keys;
  std::vector<Index> pair_key(static_cast<std::size_t>(ng * ntri));
  for (Index i = 0; i < ng; ++i) {
    const Vec2& s0 = mesh.boundary.start(i);
    const Vec2 s1 = mesh.boundary.end(i) - s0;
    for (Index t = 0; t < ntri; ++t) {
      const auto& tri = domain.triangles[static_cast<std::size_t>(t)];
      TriangleKey key{s1.x(), s1.y(), 0, 0, 0, 0, 0, 0};
      for (int k = 0; k < 3; ++k) {
        const Vec2 r = domain.vertices[tri[k]] - s0;
        key[2 + 2 * k] = r.x();
        key[3 + 2 * k] = r.y();
      }
      auto [it, inserted] = ids.emplace(key, static_cast<Index>(keys.size()));
      if (inserted) keys.push_back(key);
      pair_key[static_cast<std::size_t>(i * ntri + t)] = it->second;
    }
  }

  std::vector<std::vector<double>> values(keys.size());
  parallel_for(0, static_cast<Index>(keys.size()), [&](Index k) {
    InitialIntegrator integrator(mesh.time, alpha, order);
    values[static_cast<std::size_t>(k)] = integrator.run(keys[static_cast<std::size_t>(k)]);
  });

  MatrixXd m0 = MatrixXd::Zero(mesh.size(), domain.num_vertices());
  parallel_for(0, ng, [&](Index i) {
    for (Index t = 0; t < ntri; ++t) {
      const auto& tri = domain.triangles[static_cast<std::size_t>(t)];
      const auto& v = values[static_cast<std::size_t>(pair_key[static_cast<std::size_t>(i * ntri + t)])];
      for (Index n = 0; n < nt; ++n)
        for (int h = 0; h < 3; ++h)
          m0(mesh.index(i, n), tri[h]) += v[static_cast<std::size_t>(n * 3 + h)];
    }
  });
  return m0;
}

}  // namespace stbem
