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

#include "stbem/block_matrix.hpp"
#include "stbem/geometry.hpp"

namespace stbem {

/// Default Gauss order per spatial direction.
inline constexpr int kDefaultOrder = 6;

enum OperatorMask : unsigned {
  kSingleLayer = 1u << 0,   // V_h
  kDoubleLayer = 1u << 1,   // K_h
  kHypersingular = 1u << 2, // D_h
  kAllBoundaryOperators = kSingleLayer | kDoubleLayer | kHypersingular
};

/// Galerkin boundary operators sharing one pass over pairs of half segments.
///   V_h[l,k] = (1/alpha) <U* phi0_k, phi0_l>
///   K_h[l,j] = (1/alpha) <dU*/dn_y phi10_j, phi0_l>
///   D_h[l,k] = (1/alpha) <U* ds psi_k, ds psi_l> + <(n_x . n_y) U* dtau psi_k, psi_l>
/// Time integrals are analytic, space integrals use Gauss rules of the given
/// order with graded Duffy rules on coincident and touching panels.
struct BoundaryOperators {
  BlockMatrix V;
  BlockMatrix K;
  BlockMatrix D;
};

BoundaryOperators assemble_boundary_operators(const SpaceTimeMesh& mesh,
                                              const DualBoundaryMesh& dual, double alpha,
                                              int order = kDefaultOrder,
                                              unsigned mask = kAllBoundaryOperators);

BlockMatrix assemble_V(const SpaceTimeMesh& mesh, double alpha, int order = kDefaultOrder);
BlockMatrix assemble_K(const SpaceTimeMesh& mesh, double alpha, int order = kDefaultOrder);
BlockMatrix assemble_D(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual, double alpha,
                       int order = kDefaultOrder);

/// Dense reference assembly: every time-step pair integrated on its own,
/// without lag sharing or slice blocking. Intended for small meshes.
MatrixXd assemble_dense(OperatorMask op, const SpaceTimeMesh& mesh, double alpha,
                        int order = kDefaultOrder);

/// <phi10_j, phi0_l>: rows primal elements, columns primal hats.
BlockMatrix assemble_M_primal(const SpaceTimeMesh& mesh);
/// <psi_j, phi0_l>: rows primal elements, columns dual hats.
BlockMatrix assemble_M_dual(const SpaceTimeMesh& mesh, const DualBoundaryMesh& dual);

/// Row-sum lumping; throws ValidationError on a non-positive row.
VectorXd lump_mass(const BlockMatrix& mass);

/// M0_h[l,j] = int_{sigma_l} int_Omega U*(x - y, t) phi1_j(y) dy ds_x dt,
/// rows time-major like the boundary operators, columns domain vertices.
MatrixXd assemble_M0(const SpaceTimeMesh& mesh, const DomainMesh& domain, double alpha,
                     int order = kDefaultOrder);

}  // namespace stbem
