#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "qot/types.hpp"

namespace qot {

struct EigenDecomposition {
  RVector values;   // ascending
  CMatrix vectors;  // unitary, column k belongs to values(k)
  int sweeps = 0;
};

/// Cyclic complex Jacobi rotations. Throws NotHermitian if m deviates from
/// m^dagger by more than 1e-10 (relative to max(1, max|m_ij|)).
EigenDecomposition hermitian_eig(const CMatrix& m);

/// Nearest PSD matrix in Frobenius norm (negative eigenvalues clipped).
CMatrix psd_project(const CMatrix& m);

double min_eigenvalue(const CMatrix& m);

/// trace(A Q) = rhs for Hermitian A.
struct TraceConstraint {
  CMatrix matrix;
  double rhs = 0.0;
};

/// minimize Re trace(C Q) subject to trace(A_k Q) = b_k, Q Hermitian PSD.
///
/// Constraints are orthonormalized on construction (modified Gram-Schmidt in
/// the Frobenius inner product). Linearly dependent constraints are dropped
/// after checking that their right-hand sides agree; inconsistent systems throw
/// InvalidInput.
class HermitianSdp {
 public:
  HermitianSdp(CMatrix cost, std::vector<TraceConstraint> constraints);

  /// Known value of trace(Q) on the feasible set, when one exists. Used to turn
  /// any dual vector into a certified lower bound.
  void set_trace_value(double value) { trace_value_ = value; }
  std::optional<double> trace_value() const noexcept { return trace_value_; }

  const CMatrix& cost() const noexcept { return cost_; }
  const std::vector<TraceConstraint>& constraints() const noexcept { return constraints_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(cost_.rows()); }

  // Orthonormal constraint set: row r of `transform()` expresses orthonormal
  // constraint r as a combination of the original constraints.
  const std::vector<TraceConstraint>& orthonormal_constraints() const noexcept { return orthonormal_; }
  const RMatrix& transform() const noexcept { return transform_; }
  std::size_t dropped_constraints() const noexcept { return constraints_.size() - orthonormal_.size(); }

 private:
  CMatrix cost_;
  std::vector<TraceConstraint> constraints_;
  std::vector<TraceConstraint> orthonormal_;
  RMatrix transform_;
  std::optional<double> trace_value_;
};

struct SdpOptions {
  double tolerance = 1e-8;
  std::int64_t max_iterations = 200000;
  double penalty = 1.0;
  int rebalance_interval = 100;
  // CSV rows "iteration,primal,dual,primal_residual,dual_residual,gap,penalty"
  // are written here every `trace_interval` iterations when non-null.
  std::ostream* trace = nullptr;
  int trace_interval = 100;
};

struct SolverReport {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_residual = 0.0;  // ||A(Q) - b|| / (1 + ||b||)
  double dual_residual = 0.0;    // ||C - A*(y) - S|| / (1 + ||C||)
  double gap = 0.0;              // |primal - dual| / (1 + |primal| + |dual|)
  double certified_lower_bound = 0.0;  // needs trace_value(); else equals dual_value
  std::int64_t iterations = 0;
  bool converged = false;
};

struct SdpSolution {
  CMatrix primal;
  RVector dual;       // one multiplier per original constraint (dropped ones get 0)
  CMatrix dual_slack;  // C - sum_k dual_k A_k
  SolverReport report;
};

/// Alternating-direction augmented Lagrangian on the dual (dense, small n).
///
/// Each iteration: dual multiplier update by affine projection, PSD projection
/// of C - A*(y) - mu X via hermitian_eig, multiplier update. The primal
/// iterate is PSD and complementary to the dual slack at every step, so
/// convergence is measured by the two residuals and the objective gap.
///
/// Hitting max_iterations returns normally with report.converged == false.
/// Throws NumericalBreakdown when iterates become non-finite.
SdpSolution solve_sdp(const HermitianSdp& problem, const SdpOptions& opts = {});

}  // namespace qot
