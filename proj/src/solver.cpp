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

#include "stbem/solver.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "stbem/assembly.hpp"
#include "stbem/distribution.hpp"

namespace stbem {

Preconditioner Preconditioner::identity() { return Preconditioner{}; }

Preconditioner Preconditioner::opposite_order(BlockMatrix d, BlockMatrix m_dual, MassMode mass) {
  if (d.rows() != m_dual.cols() || d.cols() != m_dual.cols() || m_dual.rows() != m_dual.cols())
    throw ValidationError("preconditioner dimensions do not match");
  Preconditioner p;
  p.mode = PreconditionerMode::opposite_order;
  p.mass_mode = mass;
  p.lumped = lump_mass(m_dual);
  p.D = std::move(d);
  p.M = std::move(m_dual);
  return p;
}

namespace {

// Solves the step-diagonal mass system (transposed if asked) step by step.
VectorXd solve_mass(const BlockMatrix& m, const VectorXd& rhs, bool transpose) {
  VectorXd out(rhs.size());
  const Index n = m.rows_per_step();
  for (Index k = 0; k < m.steps(); ++k) {
    const MatrixXd* t = m.tile(k, k);
    const MatrixXd a = transpose ? MatrixXd(t->transpose()) : *t;
    out.segment(k * n, n) = a.partialPivLu().solve(rhs.segment(k * n, n));
  }
  return out;
}

}  // namespace

VectorXd Preconditioner::scale_in(const VectorXd& r) const {
  if (mass_mode == MassMode::lumped) return r.cwiseQuotient(lumped);
  return solve_mass(M, r, true);
}

VectorXd Preconditioner::scale_out(const VectorXd& v) const {
  if (mass_mode == MassMode::lumped) return v.cwiseQuotient(lumped);
  return solve_mass(M, v, false);
}

VectorXd Preconditioner::apply(const VectorXd& r) const {
  return apply(r, [this](const VectorXd& x) { return D.multiply(x); });
}

VectorXd apply_preconditioner(const Preconditioner& prec, const VectorXd& r) {
  return prec.apply(r);
}

VectorXd build_rhs(const BlockMatrix& k, const BlockMatrix& m_primal, const MatrixXd& m0,
                   const VectorXd& g, const VectorXd& u0) {
  if (g.size() != k.cols() || g.size() != m_primal.cols())
    throw ValidationError("Dirichlet coefficients do not match the boundary space");
  if (u0.size() != m0.cols()) throw ValidationError("initial coefficients do not match M0");
  if (m0.rows() != k.rows()) throw ValidationError("M0 rows do not match the boundary operators");
  VectorXd rhs = 0.5 * m_primal.multiply(g);
  rhs += k.multiply(g);
  rhs.noalias() -= m0 * u0;
  return rhs;
}

StabilityReport stability_diagnostic(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual) {
  const Index ng = mesh.num_segments();
  // Spatial dual pairing S(i, j) = int_{gamma_i} psi_j and Gram matrices.
  MatrixXd pairing = MatrixXd::Zero(ng, ng);
  MatrixXd gram_y = MatrixXd::Zero(ng, ng);
  VectorXd gram_x(ng);
  for (Index i = 0; i < ng; ++i) gram_x[i] = mesh.boundary.segments[i].length;
  for (const auto& hs : dual.halves)
    for (int a = 0; a < 2; ++a) {
      const auto& c = hs.values[a];
      pairing(hs.primal_segment, hs.hats[a]) += 0.5 * hs.length * (c[0] + c[1]);
      for (int b = 0; b < 2; ++b) {
        const auto& d = hs.values[b];
        gram_y(hs.hats[a], hs.hats[b]) +=
            hs.length * (c[0] * d[0] / 3.0 + (c[0] * d[1] + c[1] * d[0]) / 6.0 + c[1] * d[1] / 3.0);
      }
    }
  StabilityReport report;
  report.min_singular_mass = Eigen::JacobiSVD<MatrixXd>(pairing).singularValues().minCoeff();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram_y);
  const MatrixXd gy_inv_sqrt = eig.operatorInverseSqrt();
  double hx = 0.0;
  for (Index i = 0; i < ng; ++i) hx = std::max(hx, mesh.boundary.segments[i].length);
  report.ratio = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < mesh.num_intervals(); ++k) {
    const double ht = mesh.time.length(k);
    // Time factors: B = ht S, G_X = ht diag(h), G_Y = ht G; they cancel in the
    // normalized pairing, leaving the norm surrogates.
    const MatrixXd scaled =
        gram_x.cwiseSqrt().cwiseInverse().asDiagonal() * pairing * gy_inv_sqrt;
    const double sigma = Eigen::JacobiSVD<MatrixXd>(scaled).singularValues().minCoeff();
    const double s_y = std::max(std::pow(hx, -0.5), std::pow(ht, -0.25));
    const double s_x = std::min(std::pow(hx, 0.5), std::pow(ht, 0.25));
    report.ratio = std::min(report.ratio, sigma / (s_x * s_y));
  }
  return report;
}

std::string csv_header() { return "L,N,precond,iters,final_rel_res,l2_error_w,interior_err,seconds"; }

std::string csv_row(const SolveReport& r, bool timings) {
  std::ostringstream os;
  os << r.level << ',' << r.n << ',' << (r.preconditioned ? 1 : 0) << ',' << r.iterations << ','
     << std::scientific << std::setprecision(6) << r.final_rel_res << ',' << r.l2_error_w << ','
     << r.interior_error << ',' << std::fixed << std::setprecision(3)
     << (timings ? r.seconds : 0.0);
  return os.str();
}

SolveOutcome solve_system(const BlockMatrix& v, const VectorXd& rhs, const Preconditioner& prec,
                          const SolveOptions& options) {
  options.gmres.validate();
  if (rhs.size() != v.rows()) throw ValidationError("right-hand side length mismatch");
  const auto start = std::chrono::steady_clock::now();
  SolveOutcome out;
  GmresResult<double> result;
  const bool preconditioned = prec.mode == PreconditionerMode::opposite_order;
  if (options.workers <= 1) {
    result = gmres<double>([&](const VectorXd& x) { return v.multiply(x); },
                           [&](const VectorXd& r) { return prec.apply(r); }, rhs, options.gmres);
  } else {
    std::vector<BlockMatrix> ops{v};
    if (preconditioned) ops.push_back(prec.D);
    WorkerPool pool(build_plan(options.workers), std::move(ops), options.transport);
    result = gmres<double>(
        [&](const VectorXd& x) { return pool.apply(0, x); },
        [&](const VectorXd& r) {
          return prec.apply(r, [&](const VectorXd& x) { return pool.apply(1, x); });
        },
        rhs, options.gmres);
  }
  out.w = std::move(result.x);
  auto& rep = out.report;
  rep.n = v.rows();
  rep.n_gamma = v.rows_per_step();
  rep.n_intervals = v.steps();
  rep.preconditioned = preconditioned;
  rep.iterations = result.iterations;
  rep.converged = result.converged;
  rep.breakdown = result.breakdown;
  rep.residuals = std::move(result.residuals);
  rep.final_rel_res = result.final_rel_res;
  rep.workers = std::max<Index>(1, options.workers);
  rep.seconds_solve =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.seconds = rep.seconds_solve;
  return out;
}

}  // namespace stbem
