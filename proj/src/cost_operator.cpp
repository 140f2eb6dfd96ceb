#include "qot/cost_operator.hpp"

namespace qot {

Complex pair_cost_element(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2, CoherentPoint z3,
                          CoherentPoint z4) {
  const OneBodyMoments first = one_body_moments(ctx, z1, z3);
  const OneBodyMoments second = one_body_moments(ctx, z2, z4);
  const Complex kinetic = first.momentum_squared * second.overlap + first.overlap * second.momentum_squared -
                          2.0 * first.momentum * second.momentum;
  const Complex potential = first.position_squared * second.overlap + first.overlap * second.position_squared -
                            2.0 * first.position * second.position;
  return kinetic + potential - 2.0 * ctx.hbar() * first.overlap * second.overlap;
}

CMatrix coherent_cost_matrix(const PhaseSpaceContext& ctx, std::span<const CoherentPoint> points_x,
                             std::span<const CoherentPoint> points_y) {
  const auto m = static_cast<Eigen::Index>(points_x.size());
  const auto n = static_cast<Eigen::Index>(points_y.size());
  CMatrix k(m * n, m * n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
          k(i * n + j, a * n + b) = pair_cost_element(ctx, points_x[i], points_y[j], points_x[a], points_y[b]);
  return k;
}

CostMatrix cost_matrix(const PhaseSpaceContext& ctx, const OrthonormalBasis& basis_x,
                       const OrthonormalBasis& basis_y) {
  const CMatrix raw = coherent_cost_matrix(ctx, basis_x.points, basis_y.points);
  const CMatrix frame = kron(basis_x.change_of_frame, basis_y.change_of_frame);
  CMatrix c = frame.adjoint() * raw * frame;
  c = (0.5 * (c + c.adjoint())).eval();
  return CostMatrix{basis_x, basis_y, std::move(c)};
}

}  // namespace qot
