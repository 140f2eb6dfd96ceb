#pragma once

#include <string>
#include <vector>

#include "qot/classical_transport.hpp"
#include "qot/quantum_transport.hpp"

namespace qot {

struct ToeplitzInequalityReport {
  double mk2 = 0.0;  // MK2^2 between the Toeplitz densities
  double w2 = 0.0;   // W2^2 between the symbols, quadratic cost in phase space
  double slack = 0.0;
  double dual_gap = 0.0;

  bool holds(double tol = 1e-6) const { return slack >= -tol; }
};

/// MK2(R, S)^2 <= W2(mu, nu)^2 for the Toeplitz densities of two configurations.
ToeplitzInequalityReport check_toeplitz_inequality(const PhaseSpaceContext& ctx, const WeightedConfiguration& x,
                                                   const WeightedConfiguration& y, const SdpOptions& opts = {});

/// W2^2 between two point configurations with cost |q - q'|^2 + |p - p'|^2.
double w2_squared_phase_space(const WeightedConfiguration& x, const WeightedConfiguration& y);

struct GridSpec {
  double lo = -8.0;
  double hi = 8.0;
  double step = 0.1;
  double tolerance = 2e-2;  // claimed discretization tolerance
  GridTransportOptions transport;
};

/// Husimi function of `density` sampled on `grid`.
GridDensity sample_husimi(const PhaseSpaceContext& ctx, const DensityMatrix& density, const PhaseSpaceGrid& grid);

struct HusimiBoundReport {
  double w2_husimi = 0.0;  // value on the refined grid (step / 2)
  double w2_coarse = 0.0;
  double mk2 = 0.0;
  double hbar = 0.0;
  double refinement_change = 0.0;    // |w2_husimi - w2_coarse|
  double discretization_error = 0.0; // refinement change + aggregation error bound
  double boundary_mass = 0.0;        // Husimi mass on the outer ring of nodes, max over both sides
  double slack = 0.0;                // mk2 + 4 hbar + tolerance - w2_husimi
  double tolerance = 0.0;

  bool holds() const { return slack >= 0.0; }
};

/// W2(Husimi[R], Husimi[S])^2 <= MK2(R, S)^2 + 4 hbar (d = 1) on a grid.
/// Throws GridTooCoarse if halving the step moves the value by more than
/// spec.tolerance.
HusimiBoundReport check_husimi_bound(const PhaseSpaceContext& ctx, const WeightedConfiguration& x,
                                     const WeightedConfiguration& y, const GridSpec& spec = {},
                                     const SdpOptions& opts = {});

struct GapRow {
  double hbar = 0.0;
  double lambda = 0.0;
  double eps = 0.0;
  double c_classical = 0.0;
  double c_quantum = 0.0;
  double perturbed_value = 0.0;  // trace(C Q_eps)
  double gap = 0.0;
  double dual_gap = 0.0;
  std::int64_t iterations = 0;
};

struct GapTable {
  std::vector<GapRow> rows;
  double slope = 0.0;  // least-squares slope of log(gap) against a^2 / hbar
  bool positive = false;
  bool decreasing = false;
  bool slope_ok = false;  // slope <= 0.8 * (-2)
};

/// Unequal-mass gap C_c - C_q over a sequence of hbar values.
GapTable gap_vs_hbar(double a, double eta, const std::vector<double>& hbars, const SdpOptions& opts = {});

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Invariant suite across all modules; used by `qot verify`.
std::vector<CheckResult> run_invariant_suite(const SdpOptions& opts = {});

}  // namespace qot
