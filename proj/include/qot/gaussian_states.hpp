#pragma once

#include <span>
#include <vector>

#include "qot/types.hpp"

namespace qot {

/// Planck parameter of the phase space R^2 (configuration dimension fixed to 1).
class PhaseSpaceContext {
 public:
  static constexpr int dimension = 1;

  explicit PhaseSpaceContext(double hbar);

  double hbar() const noexcept { return hbar_; }

 private:
  double hbar_;
};

/// Phase-space point (q, p) labelling the coherent state |q,p>.
struct CoherentPoint {
  double q = 0.0;
  double p = 0.0;

  friend bool operator==(const CoherentPoint&, const CoherentPoint&) = default;
};

/// Point masses in phase space: sum_i w_i delta_{z_i}, weights summing to one.
///
/// The same object describes the symbol of a Toeplitz density
/// sum_i w_i |z_i><z_i| and, for zero momenta, the classical measure on the
/// line. Zero weights are allowed; such points still contribute basis vectors.
class WeightedConfiguration {
 public:
  WeightedConfiguration(std::vector<CoherentPoint> points, std::vector<double> weights);

  const std::vector<CoherentPoint>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool has_zero_momenta() const noexcept;

  /// Same points with a different weight vector (validated again).
  WeightedConfiguration with_weights(std::vector<double> weights) const;

 private:
  std::vector<CoherentPoint> points_;
  std::vector<double> weights_;
};

/// Orthonormal basis e_k = sum_j change_of_frame(j, k) |z_j> of span{|z_j>}.
struct OrthonormalBasis {
  std::vector<CoherentPoint> points;
  CMatrix gram;
  CMatrix change_of_frame;
  RVector gram_eigenvalues;  // descending; column k of change_of_frame belongs to entry k

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(change_of_frame.cols()); }
};

/// Hermitian, PSD, unit-trace matrix in the coordinates of `basis`.
struct DensityMatrix {
  OrthonormalBasis basis;
  CMatrix matrix;
};

/// Closed-form matrix elements <z1| O |z2> of the one-body operators used by
/// the cost operator. Derived from the annihilation-operator eigenrelation
/// a|q,p> = (q + i p)/sqrt(2 hbar) |q,p>.
struct OneBodyMoments {
  Complex overlap;
  Complex position;           // <z1| x |z2>
  Complex position_squared;   // <z1| x^2 |z2>
  Complex momentum;           // <z1| p |z2>
  Complex momentum_squared;   // <z1| p^2 |z2>
};

inline constexpr double kNearDependenceCutoff = 1e-10;

Complex overlap(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2);

OneBodyMoments one_body_moments(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2);

CMatrix gram_matrix(const PhaseSpaceContext& ctx, std::span<const CoherentPoint> points);
CMatrix gram_matrix(const PhaseSpaceContext& ctx, const WeightedConfiguration& config);

/// Canonical orthogonalization of the Gram matrix G = U diag(g) U^dagger:
/// change_of_frame = U diag(g)^{-1/2}, columns ordered by descending g.
///
/// Each column's phase is fixed so that its largest-magnitude coefficient is
/// real positive; ties go to the lexicographically largest (q, p). For the
/// pair {(-a,0), (a,0)} this yields exactly (|a> + |-a>)/sqrt(2(1+lambda)) and
/// (|a> - |-a>)/sqrt(2(1-lambda)), in that order.
///
/// Throws NearDependentStates when a Gram eigenvalue falls below `cutoff`.
OrthonormalBasis orthonormalize(const PhaseSpaceContext& ctx, const WeightedConfiguration& config,
                                double cutoff = kNearDependenceCutoff);

/// Components <e_k | z> of a coherent state in the basis.
CVector coherent_components(const PhaseSpaceContext& ctx, const OrthonormalBasis& basis, CoherentPoint z);

/// Matrix of sum_i w_i |z_i><z_i| in `basis`. The basis must come from the
/// same points (in the same order) as `config`.
DensityMatrix assemble_toeplitz_density(const PhaseSpaceContext& ctx, const WeightedConfiguration& config,
                                        const OrthonormalBasis& basis);

/// Husimi function (2 pi hbar)^{-1} <z| R |z>.
double husimi(const PhaseSpaceContext& ctx, const DensityMatrix& density, CoherentPoint z);

}  // namespace qot
