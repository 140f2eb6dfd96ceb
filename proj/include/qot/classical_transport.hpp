#pragma once

#include <cstdint>
#include <span>

#include "qot/gaussian_states.hpp"
#include "qot/types.hpp"

namespace qot {

/// Optimal plan of the discrete transportation problem together with the
/// potentials (u, v) certifying it: u_i + v_j <= c_ij everywhere, with equality
/// on the support of the plan, and sum m_i u_i + sum n_j v_j = cost.
struct ClassicalCoupling {
  RMatrix plan;
  double cost = 0.0;
  RVector row_potentials;
  RVector column_potentials;
  double dual_value = 0.0;
  double min_reduced_cost = 0.0;
  std::int64_t pivots = 0;
};

/// Transportation simplex (matrix-minimum start, MODI potentials, block
/// pricing with Bland's rule as the anti-cycling fallback). Masses are
/// perturbed by 1e-13 internally to rule out degenerate bases; the reported
/// plan is recomputed from the optimal basis with the original masses.
///
/// Throws InfeasibleMasses when the totals differ by more than 1e-9.
ClassicalCoupling solve_transport(std::span<const double> masses_m, std::span<const double> masses_n,
                                  const RMatrix& cost);

/// |x_i - y_j|^2 on positions.
RMatrix squared_distance_cost(std::span<const double> x, std::span<const double> y);

/// Monotone (quantile) coupling of two measures on the line. Points are the
/// q-coordinates; throws NonzeroMomentum if any momentum is non-zero.
ClassicalCoupling monotone_coupling_1d(const WeightedConfiguration& mu, const WeightedConfiguration& nu);

double w2_squared_1d(const WeightedConfiguration& mu, const WeightedConfiguration& nu);

/// Uniform grid over phase space: node (iq, ip) sits at
/// (q_min + iq * step, p_min + ip * step).
struct PhaseSpaceGrid {
  double q_min = -8.0;
  double p_min = -8.0;
  double step = 0.1;
  int nq = 161;
  int np = 161;

  static PhaseSpaceGrid square(double lo, double hi, double step);
  double q(int iq) const noexcept { return q_min + iq * step; }
  double p(int ip) const noexcept { return p_min + ip * step; }
  friend bool operator==(const PhaseSpaceGrid&, const PhaseSpaceGrid&) = default;
};

/// Density samples on a grid; values(iq, ip) is the density at that node.
struct GridDensity {
  PhaseSpaceGrid grid;
  RMatrix values;
};

struct GridTransportOptions {
  double mass_cutoff = 1e-12;
  // Supports larger than this are aggregated onto k x k blocks (mass moved
  // to the block barycenter) with the smallest k that fits.
  std::size_t max_support = 1500;
};

struct GridTransportResult {
  double value = 0.0;         // W2^2 between the reduced measures
  double dropped_mass = 0.0;  // largest mass removed by the cutoff on either side
  int coarsening = 1;         // block size k in grid nodes
  std::size_t support_f = 0;
  std::size_t support_g = 0;
  // W2 distance between each sampled measure and its aggregated version; the
  // reported value is within (sqrt(value) + shift)^2 - value of the sampled one.
  double aggregation_shift = 0.0;
  double aggregation_error_bound = 0.0;
};

/// W2^2 between two sampled densities on the same grid (quadratic cost in
/// phase space). Throws GridMismatch if the grids differ.
GridTransportResult w2_squared_grid(const GridDensity& f, const GridDensity& g,
                                    const GridTransportOptions& opts = {});

}  // namespace qot
