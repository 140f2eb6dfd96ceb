#include "qot/gaussian_states.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "qot/conic_solver.hpp"
#include "qot/error.hpp"

namespace qot {

namespace {

void require_finite(CoherentPoint z) {
  if (!std::isfinite(z.q) || !std::isfinite(z.p)) {
    throw Error(ErrorCode::NonFinite, "coherent point has a non-finite coordinate");
  }
}

Complex alpha(const PhaseSpaceContext& ctx, CoherentPoint z) {
  return Complex(z.q, z.p) / std::sqrt(2.0 * ctx.hbar());
}

bool lexicographically_greater(CoherentPoint a, CoherentPoint b) {
  return a.q > b.q || (a.q == b.q && a.p > b.p);
}

}  // namespace

PhaseSpaceContext::PhaseSpaceContext(double hbar) : hbar_(hbar) {
  if (!std::isfinite(hbar) || hbar <= 0.0) {
    throw Error(ErrorCode::InvalidInput, "hbar must be a positive finite number");
  }
}

WeightedConfiguration::WeightedConfiguration(std::vector<CoherentPoint> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.empty()) throw Error(ErrorCode::InvalidInput, "configuration has no points");
  if (points_.size() != weights_.size()) {
    throw Error(ErrorCode::InvalidInput, "points and weights differ in length");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require_finite(points_[i]);
    if (!std::isfinite(weights_[i])) throw Error(ErrorCode::NonFinite, "non-finite weight");
    if (weights_[i] < 0.0) throw Error(ErrorCode::InvalidInput, "negative weight");
    for (std::size_t j = 0; j < i; ++j) {
      if (points_[i] == points_[j]) throw Error(ErrorCode::InvalidInput, "repeated point in configuration");
    }
  }
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidInput, "weights must sum to 1");
  }
}

bool WeightedConfiguration::has_zero_momenta() const noexcept {
  return std::all_of(points_.begin(), points_.end(), [](CoherentPoint z) { return z.p == 0.0; });
}

WeightedConfiguration WeightedConfiguration::with_weights(std::vector<double> weights) const {
  return WeightedConfiguration(points_, std::move(weights));
}

// <q1,p1|q2,p2> = exp(-(dq^2 + dp^2)/(4 hbar)) exp(i dp (q1 + q2)/(2 hbar))
// for wave functions (pi hbar)^{-1/4} exp(-(x-q)^2/(2 hbar)) exp(i p x/hbar).
Complex overlap(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2) {
  require_finite(z1);
  require_finite(z2);
  const double h = ctx.hbar();
  const double dq = z2.q - z1.q;
  const double dp = z2.p - z1.p;
  const double modulus = std::exp(-(dq * dq + dp * dp) / (4.0 * h));
  const double phase = dp * 0.5 * (z1.q + z2.q) / h;
  return std::polar(modulus, phase);
}

OneBodyMoments one_body_moments(const PhaseSpaceContext& ctx, CoherentPoint z1, CoherentPoint z2) {
  const double h = ctx.hbar();
  const Complex o = overlap(ctx, z1, z2);
  // x = sqrt(h/2)(a + a^dag), p = -i sqrt(h/2)(a - a^dag); a acts on the ket,
  // a^dag on the bra, and [a, a^dag] = 1 gives the +-1 in the squares.
  const Complex sum = alpha(ctx, z2) + std::conj(alpha(ctx, z1));
  const Complex diff = alpha(ctx, z2) - std::conj(alpha(ctx, z1));
  const double s = std::sqrt(0.5 * h);
  OneBodyMoments m;
  m.overlap = o;
  m.position = s * sum * o;
  m.position_squared = 0.5 * h * (sum * sum + 1.0) * o;
  m.momentum = Complex(0.0, -s) * diff * o;
  m.momentum_squared = 0.5 * h * (1.0 - diff * diff) * o;
  return m;
}

CMatrix gram_matrix(const PhaseSpaceContext& ctx, std::span<const CoherentPoint> points) {
  const auto n = static_cast<Eigen::Index>(points.size());
  CMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      g(i, j) = overlap(ctx, points[i], points[j]);
      g(j, i) = std::conj(g(i, j));
    }
  }
  return g;
}

CMatrix gram_matrix(const PhaseSpaceContext& ctx, const WeightedConfiguration& config) {
  return gram_matrix(ctx, std::span<const CoherentPoint>(config.points()));
}

OrthonormalBasis orthonormalize(const PhaseSpaceContext& ctx, const WeightedConfiguration& config, double cutoff) {
  OrthonormalBasis basis;
  basis.points = config.points();
  basis.gram = gram_matrix(ctx, config);

  EigenDecomposition eig = hermitian_eig(basis.gram);
  const Eigen::Index n = basis.gram.rows();
  if (n == 2) {
    // Closed form for a pair, so that nearly degenerate eigenvalues
    // (1 +- |g| with |g| tiny) still give the symmetric/antisymmetric vectors.
    const Complex g = basis.gram(0, 1);
    const Complex phase = std::abs(g) > 0.0 ? g / std::abs(g) : Complex(1.0);
    const double r = 1.0 / std::sqrt(2.0);
    eig.values << 1.0 - std::abs(g), 1.0 + std::abs(g);
    eig.vectors.col(0) << -phase * r, r;
    eig.vectors.col(1) << phase * r, r;
  }
  if (eig.values(0) < cutoff) {
    throw Error(ErrorCode::NearDependentStates,
                "Gram eigenvalue " + std::to_string(eig.values(0)) + " below cutoff");
  }

  basis.change_of_frame.resize(n, n);
  basis.gram_eigenvalues.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;  // descending order
    CVector column = eig.vectors.col(src);

    const double largest = column.cwiseAbs().maxCoeff();
    Eigen::Index pivot = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(column(j)) < largest - 1e-9 * largest) continue;
      if (pivot < 0 || lexicographically_greater(basis.points[j], basis.points[pivot])) pivot = j;
    }
    column *= std::conj(column(pivot)) / std::abs(column(pivot));
    column(pivot) = std::abs(column(pivot));

    basis.gram_eigenvalues(k) = eig.values(src);
    basis.change_of_frame.col(k) = column / std::sqrt(eig.values(src));
  }
  return basis;
}

CVector coherent_components(const PhaseSpaceContext& ctx, const OrthonormalBasis& basis, CoherentPoint z) {
  CVector raw(static_cast<Eigen::Index>(basis.points.size()));
  for (Eigen::Index j = 0; j < raw.size(); ++j) raw(j) = overlap(ctx, basis.points[j], z);
  return basis.change_of_frame.adjoint() * raw;
}

DensityMatrix assemble_toeplitz_density(const PhaseSpaceContext& ctx, const WeightedConfiguration& config,
                                        const OrthonormalBasis& basis) {
  if (config.points() != basis.points) {
    throw Error(ErrorCode::BasisMismatch, "basis was built from different points");
  }
  (void)ctx;
  // <e_k|z_i> = (B^dag G)_{ki}; R = M diag(w) M^dag.
  const CMatrix frame = basis.change_of_frame.adjoint() * basis.gram;
  const auto n = static_cast<Eigen::Index>(config.size());
  RVector w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = config.weights()[static_cast<std::size_t>(i)];
  CMatrix r = frame * w.asDiagonal() * frame.adjoint();
  r = 0.5 * (r + r.adjoint()).eval();
  return DensityMatrix{basis, std::move(r)};
}

double husimi(const PhaseSpaceContext& ctx, const DensityMatrix& density, CoherentPoint z) {
  const CVector v = coherent_components(ctx, density.basis, z);
  const double value = (v.adjoint() * density.matrix * v)(0, 0).real();
  return std::max(0.0, value) / (2.0 * std::numbers::pi * ctx.hbar());
}

}  // namespace qot
