#include "qot/semiclassical_checks.hpp"

#include <algorithm>
#include <cmath>

#include "qot/error.hpp"

namespace qot {

double w2_squared_phase_space(const WeightedConfiguration& x, const WeightedConfiguration& y) {
  RMatrix cost(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double dq = x.points()[i].q - y.points()[j].q;
      const double dp = x.points()[i].p - y.points()[j].p;
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dq * dq + dp * dp;
    }
  return solve_transport(x.weights(), y.weights(), cost).cost;
}

ToeplitzInequalityReport check_toeplitz_inequality(const PhaseSpaceContext& ctx, const WeightedConfiguration& x,
                                                   const WeightedConfiguration& y, const SdpOptions& opts) {
  const Mk2Result q = mk2_squared(ctx, x, y, opts);
  ToeplitzInequalityReport out;
  out.mk2 = q.value;
  out.w2 = w2_squared_phase_space(x, y);
  out.slack = out.w2 - out.mk2;
  out.dual_gap = q.report.gap;
  return out;
}

GridDensity sample_husimi(const PhaseSpaceContext& ctx, const DensityMatrix& density, const PhaseSpaceGrid& grid) {
  GridDensity out{grid, RMatrix(grid.nq, grid.np)};
  for (int i = 0; i < grid.nq; ++i)
    for (int j = 0; j < grid.np; ++j) out.values(i, j) = husimi(ctx, density, {grid.q(i), grid.p(j)});
  return out;
}

namespace {

double ring_mass(const GridDensity& d) {
  const double total = d.values.sum();
  double ring = 0.0;
  const Eigen::Index nq = d.values.rows();
  const Eigen::Index np = d.values.cols();
  for (Eigen::Index i = 0; i < nq; ++i) ring += d.values(i, 0) + d.values(i, np - 1);
  for (Eigen::Index j = 1; j + 1 < np; ++j) ring += d.values(0, j) + d.values(nq - 1, j);
  return total > 0.0 ? ring / total : 0.0;
}

}  // namespace

HusimiBoundReport check_husimi_bound(const PhaseSpaceContext& ctx, const WeightedConfiguration& x,
                                     const WeightedConfiguration& y, const GridSpec& spec, const SdpOptions& opts) {
  if (!(spec.step > 0.0) || !(spec.hi > spec.lo) || !(spec.tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidInput, "invalid grid bounds or step");
  }
  const TransportProblem pr = make_transport_problem(ctx, x, y);
  const Mk2Result q = mk2_squared(pr, opts);

  const PhaseSpaceGrid coarse = PhaseSpaceGrid::square(spec.lo, spec.hi, spec.step);
  const PhaseSpaceGrid fine = PhaseSpaceGrid::square(spec.lo, spec.hi, spec.step / 2.0);
  const GridDensity fc = sample_husimi(ctx, pr.r, coarse);
  const GridDensity gc = sample_husimi(ctx, pr.s, coarse);
  const GridDensity ff = sample_husimi(ctx, pr.r, fine);
  const GridDensity gf = sample_husimi(ctx, pr.s, fine);
  const GridTransportResult wc = w2_squared_grid(fc, gc, spec.transport);
  const GridTransportResult wf = w2_squared_grid(ff, gf, spec.transport);

  HusimiBoundReport out;
  out.w2_coarse = wc.value;
  out.w2_husimi = wf.value;
  out.mk2 = q.value;
  out.hbar = ctx.hbar();
  out.tolerance = spec.tolerance;
  out.refinement_change = std::abs(wf.value - wc.value);
  out.discretization_error = out.refinement_change + wf.aggregation_error_bound;
  out.boundary_mass = std::max(ring_mass(ff), ring_mass(gf));
  out.slack = out.mk2 + 4.0 * ctx.hbar() + spec.tolerance - out.w2_husimi;
  if (out.refinement_change > spec.tolerance) {
    throw Error(ErrorCode::GridTooCoarse, "grid refinement moved W2^2 beyond the claimed tolerance");
  }
  return out;
}

GapTable gap_vs_hbar(double a, double eta, const std::vector<double>& hbars, const SdpOptions& opts) {
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidInput, "eta must lie in (0, 1)");
  if (hbars.empty()) throw Error(ErrorCode::InvalidInput, "empty hbar sequence");
  GapTable table;
  const ScenarioParameters params{a, a, eta};
  for (double hbar : hbars) {
    const PhaseSpaceContext ctx(hbar);
    const TransportProblem pr = unequal_mass_problem(ctx, a, eta);
    GapRow row;
    row.hbar = hbar;
    row.lambda = std::abs(pr.r.basis.gram(0, 1));
    row.c_classical = w2_squared_1d(pr.config_x, pr.config_y);
    const Mk2Result q = mk2_squared(pr, opts);
    row.c_quantum = q.value;
    row.dual_gap = q.report.gap;
    row.iterations = q.report.iterations;
    row.eps = demonstration_eps(ctx, a, eta);
    row.perturbed_value = build_named_coupling(PerturbedCoupling{row.eps}, ctx, params).value;
    row.gap = row.c_classical - row.c_quantum;
    table.rows.push_back(row);
  }

  table.positive = std::all_of(table.rows.begin(), table.rows.end(), [](const GapRow& r) { return r.gap > 0.0; });
  table.decreasing = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    // Decreasing as hbar shrinks, regardless of the order the sequence was given in.
    const GapRow& prev = table.rows[i - 1];
    const GapRow& cur = table.rows[i];
    if ((cur.hbar < prev.hbar) != (cur.gap < prev.gap)) table.decreasing = false;
  }
  if (table.positive && table.rows.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(table.rows.size());
    for (const GapRow& r : table.rows) {
      const double t = a * a / r.hbar;
      const double l = std::log(r.gap);
      sx += t;
      sy += l;
      sxx += t * t;
      sxy += t * l;
    }
    const double denom = n * sxx - sx * sx;
    table.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    // The gap tracks lambda^2 = exp(-2 a^2 / hbar); allow 20% on the rate.
    table.slope_ok = denom != 0.0 && table.slope <= 0.8 * -2.0;
  }
  return table;
}

}  // namespace qot
