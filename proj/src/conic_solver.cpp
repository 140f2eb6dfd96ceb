#include "qot/conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "qot/error.hpp"

namespace qot {

namespace {

constexpr double kOffDiagonalThreshold = 1e-14;
constexpr int kMaxSweeps = 100;

void require_hermitian(const CMatrix& m, double tolerance) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  const double scale = m.size() ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0;
  if (hermitian_defect(m) > tolerance * scale) {
    throw Error(ErrorCode::NotHermitian, "matrix is not Hermitian");
  }
}

double off_diagonal_norm2(const CMatrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::norm(a(i, j));
  return s;
}

// Rotates rows/columns p, q of the Hermitian `a` so that a(p, q) = 0 and
// accumulates the rotation into `v`.
void jacobi_rotate(CMatrix& a, CMatrix& v, Eigen::Index p, Eigen::Index q) {
  const Complex apq = a(p, q);
  const double mag = std::abs(apq);
  const Complex phase = apq / mag;
  const double tau = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  // Unitary acting on columns (p, q): diag(1, conj(phase)) * [[c, s], [-s, c]].
  const Complex g00 = c;
  const Complex g01 = s;
  const Complex g10 = -s * std::conj(phase);
  const Complex g11 = c * std::conj(phase);

  const Eigen::Index n = a.rows();
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex akp = a(k, p);
    const Complex akq = a(k, q);
    a(k, p) = akp * g00 + akq * g10;
    a(k, q) = akp * g01 + akq * g11;
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex apk = a(p, k);
    const Complex aqk = a(q, k);
    a(p, k) = std::conj(g00) * apk + std::conj(g10) * aqk;
    a(q, k) = std::conj(g01) * apk + std::conj(g11) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();

  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex vkp = v(k, p);
    const Complex vkq = v(k, q);
    v(k, p) = vkp * g00 + vkq * g10;
    v(k, q) = vkp * g01 + vkq * g11;
  }
}

EigenDecomposition jacobi(CMatrix a) {
  const Eigen::Index n = a.rows();
  EigenDecomposition out;
  CMatrix v = CMatrix::Identity(n, n);
  a = (0.5 * (a + a.adjoint())).eval();

  const double total = a.squaredNorm();
  const double target = kOffDiagonalThreshold * kOffDiagonalThreshold * std::max(total, 1e-300);
  int sweep = 0;
  while (off_diagonal_norm2(a) > target) {
    if (sweep == kMaxSweeps) throw Error(ErrorCode::NumericalBreakdown, "Jacobi sweeps exhausted");
    ++sweep;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) > 1e-300) jacobi_rotate(a, v, p, q);
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]).real();
    out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

// Returns (positive part, negative part) of a Hermitian matrix: m = pos - neg.
std::pair<CMatrix, CMatrix> split_spectrum(const CMatrix& m) {
  const EigenDecomposition eig = jacobi(m);
  const Eigen::Index n = m.rows();
  CMatrix pos = CMatrix::Zero(n, n);
  CMatrix neg = CMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = eig.values(k);
    if (w > 0.0) pos.noalias() += w * eig.vectors.col(k) * eig.vectors.col(k).adjoint();
    else if (w < 0.0) neg.noalias() -= w * eig.vectors.col(k) * eig.vectors.col(k).adjoint();
  }
  return {(0.5 * (pos + pos.adjoint())).eval(), (0.5 * (neg + neg.adjoint())).eval()};
}

}  // namespace

EigenDecomposition hermitian_eig(const CMatrix& m) {
  require_hermitian(m, 1e-10);
  return jacobi(m);
}

CMatrix psd_project(const CMatrix& m) {
  require_hermitian(m, 1e-10);
  return split_spectrum(m).first;
}

double min_eigenvalue(const CMatrix& m) { return hermitian_eig(m).values(0); }

HermitianSdp::HermitianSdp(CMatrix cost, std::vector<TraceConstraint> constraints)
    : cost_(std::move(cost)), constraints_(std::move(constraints)) {
  require_hermitian(cost_, 1e-12);
  const Eigen::Index n = cost_.rows();
  for (const auto& c : constraints_) {
    if (c.matrix.rows() != n || c.matrix.cols() != n) {
      throw Error(ErrorCode::DimensionMismatch, "constraint matrix size differs from cost");
    }
    require_hermitian(c.matrix, 1e-12);
    if (!std::isfinite(c.rhs)) throw Error(ErrorCode::NonFinite, "constraint right-hand side");
  }

  const auto m = static_cast<Eigen::Index>(constraints_.size());
  std::vector<RVector> rows;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& original = constraints_[static_cast<std::size_t>(j)];
    CMatrix v = original.matrix;
    double rhs = original.rhs;
    RVector coeffs = RVector::Unit(m, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t r = 0; r < orthonormal_.size(); ++r) {
        const double c = frobenius_dot(orthonormal_[r].matrix, v);
        v -= c * orthonormal_[r].matrix;
        rhs -= c * orthonormal_[r].rhs;
        coeffs -= c * rows[r];
      }
    }
    const double norm = v.norm();
    if (norm <= 1e-10 * std::max(original.matrix.norm(), 1e-300)) {
      if (std::abs(rhs) > 1e-9 * (1.0 + std::abs(original.rhs))) {
        throw Error(ErrorCode::InvalidInput, "linearly dependent constraints are inconsistent");
      }
      continue;
    }
    orthonormal_.push_back({v / norm, rhs / norm});
    rows.push_back(coeffs / norm);
  }
  transform_.resize(static_cast<Eigen::Index>(rows.size()), m);
  for (std::size_t r = 0; r < rows.size(); ++r) transform_.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
}

SdpSolution solve_sdp(const HermitianSdp& problem, const SdpOptions& opts) {
  const auto& cons = problem.orthonormal_constraints();
  const auto n = static_cast<Eigen::Index>(problem.dimension());
  const auto m = static_cast<Eigen::Index>(cons.size());

  const double cost_norm = problem.cost().norm();
  const double scale = std::max(1.0, cost_norm);
  const CMatrix cost = problem.cost() / scale;
  RVector b(m);
  for (Eigen::Index k = 0; k < m; ++k) b(k) = cons[static_cast<std::size_t>(k)].rhs;
  const double b_norm = b.norm();

  auto apply = [&](const CMatrix& x) {
    RVector out(m);
    for (Eigen::Index k = 0; k < m; ++k) out(k) = frobenius_dot(cons[static_cast<std::size_t>(k)].matrix, x);
    return out;
  };
  auto adjoint = [&](const RVector& y) {
    CMatrix out = CMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < m; ++k) out += y(k) * cons[static_cast<std::size_t>(k)].matrix;
    return out;
  };

  CMatrix x = CMatrix::Zero(n, n);
  CMatrix s = CMatrix::Zero(n, n);
  RVector y = RVector::Zero(m);
  double mu = opts.penalty;

  SolverReport report;
  if (opts.trace) *opts.trace << "iteration,primal,dual,primal_residual,dual_residual,gap,penalty\n";

  for (std::int64_t it = 1; it <= opts.max_iterations; ++it) {
    y = mu * (b - apply(x)) + apply(cost - s);
    const CMatrix aty = adjoint(y);
    const CMatrix v = cost - aty - mu * x;
    auto [pos, neg] = split_spectrum(v);
    s = std::move(pos);
    x = neg / mu;

    const double pobj = scale * frobenius_dot(cost, x);
    const double dobj = scale * b.dot(y);
    const double pres = (apply(x) - b).norm() / (1.0 + b_norm);
    const double dres = scale * (cost - aty - s).norm() / (1.0 + cost_norm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(pres) || !std::isfinite(dres)) {
      throw Error(ErrorCode::NumericalBreakdown, "non-finite iterate in SDP solver");
    }

    report.primal_value = pobj;
    report.dual_value = dobj;
    report.primal_residual = pres;
    report.dual_residual = dres;
    report.gap = gap;
    report.iterations = it;

    if (opts.trace && (it % opts.trace_interval == 0 || it == 1)) {
      *opts.trace << it << ',' << pobj << ',' << dobj << ',' << pres << ',' << dres << ',' << gap << ',' << mu
                  << '\n';
    }
    if (std::max({pres, dres, gap}) <= opts.tolerance) {
      report.converged = true;
      break;
    }
    // Residual balancing: a large mu pushes primal feasibility, a small mu
    // pushes dual feasibility.
    if (opts.rebalance_interval > 0 && it % opts.rebalance_interval == 0) {
      if (pres > 4.0 * dres) mu = std::min(mu * 1.6, 1e6);
      else if (dres > 4.0 * pres) mu = std::max(mu / 1.6, 1e-6);
    }
  }

  SdpSolution out;
  out.primal = x;
  const RVector y_unscaled = scale * y;
  out.dual = problem.transform().transpose() * y_unscaled;
  out.dual_slack = problem.cost();
  for (std::size_t k = 0; k < problem.constraints().size(); ++k) {
    out.dual_slack -= out.dual(static_cast<Eigen::Index>(k)) * problem.constraints()[k].matrix;
  }
  const double slack_min = jacobi(out.dual_slack).values(0);
  if (problem.trace_value()) {
    report.certified_lower_bound = report.dual_value + std::min(0.0, slack_min) * *problem.trace_value();
  } else {
    report.certified_lower_bound =
        slack_min >= 0.0 ? report.dual_value : -std::numeric_limits<double>::infinity();
  }
  out.report = report;
  return out;
}

}  // namespace qot
