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

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "stbem/block_matrix.hpp"
#include "stbem/geometry.hpp"
#include "stbem/transport.hpp"

namespace stbem {

struct GmresConfig {
  double rel_tol = 1e-8;
  int max_iter = 500;

  void validate() const {
    if (!(rel_tol > 0)) throw ValidationError("GMRES tolerance must be positive");
    if (max_iter < 1) throw ValidationError("GMRES needs max_iter >= 1");
  }
};

template <typename Scalar>
struct GmresResult {
  VectorX<Scalar> x;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;             // Hessenberg subdiagonal below 1e-300
  std::vector<Scalar> residuals;      // preconditioned, relative to |P b|
  Scalar final_rel_res = 0;
};

/// Left-preconditioned full GMRES (no restart) with modified Gram-Schmidt and
/// Givens rotations, zero initial guess. Stops once |P r| / |P b| <= rel_tol.
template <typename Scalar, typename ApplyA, typename ApplyP>
GmresResult<Scalar> gmres(ApplyA&& apply_a, ApplyP&& apply_p, const VectorX<Scalar>& b,
                          const GmresConfig& cfg) {
  cfg.validate();
  using Vec = VectorX<Scalar>;
  GmresResult<Scalar> out;
  out.x = Vec::Zero(b.size());
  const Vec r0 = apply_p(b);
  const Scalar beta = r0.norm();
  out.residuals.push_back(beta > 0 ? Scalar(1) : Scalar(0));
  if (beta == 0) {
    out.converged = true;
    return out;
  }
  const int m = cfg.max_iter;
  std::vector<Vec> basis;
  basis.push_back(r0 / beta);
  MatrixX<Scalar> h = MatrixX<Scalar>::Zero(m + 1, m);
  std::vector<Scalar> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
  VectorX<Scalar> g = VectorX<Scalar>::Zero(m + 1);
  g[0] = beta;
  int k = 0;
  for (int j = 0; j < m; ++j) {
    Vec w = apply_p(apply_a(basis[static_cast<std::size_t>(j)]));
    for (int i = 0; i <= j; ++i) {
      h(i, j) = w.dot(basis[static_cast<std::size_t>(i)]);
      w -= h(i, j) * basis[static_cast<std::size_t>(i)];
    }
    h(j + 1, j) = w.norm();
    const Scalar sub = h(j + 1, j);
    for (int i = 0; i < j; ++i) {
      const Scalar t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
      h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
      h(i, j) = t;
    }
    const Scalar rr = std::hypot(h(j, j), h(j + 1, j));
    cs[j] = rr > 0 ? h(j, j) / rr : Scalar(1);
    sn[j] = rr > 0 ? h(j + 1, j) / rr : Scalar(0);
    h(j, j) = rr;
    h(j + 1, j) = 0;
    g[j + 1] = -sn[j] * g[j];
    g[j] = cs[j] * g[j];
    k = j + 1;
    const Scalar rel = std::abs(g[j + 1]) / beta;
    out.residuals.push_back(rel);
    out.final_rel_res = rel;
    if (rel <= Scalar(cfg.rel_tol)) out.converged = true;
    if (sub < Scalar(1e-300)) out.breakdown = true;
    if (out.converged || out.breakdown) break;
    basis.push_back(w / sub);
  }
  out.iterations = k;
  const VectorX<Scalar> y =
      h.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
  for (int i = 0; i < k; ++i) out.x += y[i] * basis[static_cast<std::size_t>(i)];
  return out;
}

enum class PreconditionerMode { identity, opposite_order };
enum class MassMode { lumped, exact };

/// C_V^{-1} = M_h^{-1} D_h M_h^{-T} with the dual pairing M_h (rows primal
/// elements, columns dual hats).
struct Preconditioner {
  PreconditionerMode mode = PreconditionerMode::identity;
  MassMode mass_mode = MassMode::lumped;
  BlockMatrix D;
  BlockMatrix M;      // dual pairing, kept for the exact mode
  VectorXd lumped;    // row sums of M

  static Preconditioner identity();
  static Preconditioner opposite_order(BlockMatrix d, BlockMatrix m_dual,
                                       MassMode mass = MassMode::lumped);

  /// z = P r; apply_d overrides the D_h product (e.g. distributed).
  VectorXd apply(const VectorXd& r) const;
  template <typename ApplyD>
  VectorXd apply(const VectorXd& r, ApplyD&& apply_d) const;

  VectorXd scale_in(const VectorXd& r) const;   // M^{-T} r
  VectorXd scale_out(const VectorXd& v) const;  // M^{-1} v
};

template <typename ApplyD>
VectorXd Preconditioner::apply(const VectorXd& r, ApplyD&& apply_d) const {
  if (mode == PreconditionerMode::identity) return r;
  return scale_out(apply_d(scale_in(r)));
}

VectorXd apply_preconditioner(const Preconditioner& prec, const VectorXd& r);

/// rhs = (1/2 M_h + K_h) g - M0_h u0.
VectorXd build_rhs(const BlockMatrix& k, const BlockMatrix& m_primal, const MatrixXd& m0,
                   const VectorXd& g, const VectorXd& u0);

struct StabilityReport {
  double ratio = 0.0;             // min over time steps of the scaled inf-sup ratio
  double min_singular_mass = 0.0; // smallest singular value of the spatial dual pairing
};

/// Discrete inf-sup ratio of <tau_h, v_h> between X^{0,0} and Y_h with mesh
/// power surrogates for the anisotropic norms.
StabilityReport stability_diagnostic(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual);

struct SolveReport {
  int level = 0;
  Index n = 0;
  Index n_gamma = 0;
  Index n_intervals = 0;
  bool preconditioned = false;
  int iterations = 0;
  bool converged = false;
  bool breakdown = false;
  std::vector<double> residuals;
  double final_rel_res = 0.0;
  double l2_error_w = std::numeric_limits<double>::quiet_NaN();
  double interior_error = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  double seconds_assembly = 0.0;
  double seconds_solve = 0.0;
  Index workers = 1;
};

std::string csv_header();
/// `L,N,precond,iters,final_rel_res,l2_error_w,interior_err,seconds`; seconds
/// is written as 0 when timings are disabled.
std::string csv_row(const SolveReport& report, bool timings = true);

struct SolveOptions {
  GmresConfig gmres;
  Index workers = 1;
  TransportKind transport = TransportKind::threads;
};

struct SolveOutcome {
  VectorXd w;
  SolveReport report;
};

/// Solves V_h w = rhs. With workers > 1 the V_h and D_h products run on a
/// worker pool distributed by the cyclic plan.
SolveOutcome solve_system(const BlockMatrix& v, const VectorXd& rhs, const Preconditioner& prec,
                          const SolveOptions& options);

}  // namespace stbem
