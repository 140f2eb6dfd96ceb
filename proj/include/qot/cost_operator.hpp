#pragma once

#include <span>

#include "qot/gaussian_states.hpp"

namespace qot {

/// Compression of the transport cost operator
///   C = (p (x) 1 - 1 (x) p)^2 + (x (x) 1 - 1 (x) x)^2 - 2 hbar
/// to span{e_k (x) f_l}. Product index (k, l) maps to k * N + l.
struct CostMatrix {
  OrthonormalBasis basis_x;
  OrthonormalBasis basis_y;
  CMatrix matrix;
};

/// <z1; z2| C |z3; z4> from closed-form one-body moments.
Complex pair_cost_element(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2, CoherentPoint z3,
                          CoherentPoint z4);

/// Cost matrix between product coherent states, entry ((i,j),(k,l)) =
/// <x_i; y_j| C |x_k; y_l>.
CMatrix coherent_cost_matrix(const PhaseSpaceContext& ctx, std::span<const CoherentPoint> points_x,
                             std::span<const CoherentPoint> points_y);

CostMatrix cost_matrix(const PhaseSpaceContext& ctx, const OrthonormalBasis& basis_x,
                       const OrthonormalBasis& basis_y);

}  // namespace qot
