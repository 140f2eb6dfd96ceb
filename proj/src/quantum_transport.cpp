#include "qot/quantum_transport.hpp"

#include <algorithm>
#include <cmath>

#include "qot/error.hpp"

namespace qot {

namespace {

// Orthonormal (Frobenius) basis of the d x d Hermitian matrices.
std::vector<CMatrix> hermitian_basis(Eigen::Index d) {
  std::vector<CMatrix> out;
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index k = 0; k < d; ++k) {
    CMatrix e = CMatrix::Zero(d, d);
    e(k, k) = 1.0;
    out.push_back(e);
  }
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = k + 1; l < d; ++l) {
      CMatrix re = CMatrix::Zero(d, d);
      re(k, l) = r;
      re(l, k) = r;
      out.push_back(re);
      CMatrix im = CMatrix::Zero(d, d);
      im(k, l) = Complex(0.0, r);
      im(l, k) = Complex(0.0, -r);
      out.push_back(im);
    }
  }
  return out;
}

}  // namespace

CMatrix partial_trace(const CMatrix& m, Eigen::Index dim_x, Eigen::Index dim_y, TraceSide side) {
  if (m.rows() != dim_x * dim_y || m.cols() != dim_x * dim_y) {
    throw Error(ErrorCode::DimensionMismatch, "matrix does not factor as dim_x * dim_y");
  }
  if (side == TraceSide::Second) {
    CMatrix out = CMatrix::Zero(dim_x, dim_x);
    for (Eigen::Index i = 0; i < dim_x; ++i)
      for (Eigen::Index k = 0; k < dim_x; ++k)
        for (Eigen::Index j = 0; j < dim_y; ++j) out(i, k) += m(i * dim_y + j, k * dim_y + j);
    return out;
  }
  CMatrix out = CMatrix::Zero(dim_y, dim_y);
  for (Eigen::Index j = 0; j < dim_y; ++j)
    for (Eigen::Index l = 0; l < dim_y; ++l)
      for (Eigen::Index i = 0; i < dim_x; ++i) out(j, l) += m(i * dim_y + j, i * dim_y + l);
  return out;
}

CouplingDefects coupling_defects(const CMatrix& q, const CMatrix& r, const CMatrix& s) {
  CouplingDefects d;
  d.min_eigenvalue = min_eigenvalue(0.5 * (q + q.adjoint()));
  d.trace_error = std::abs(q.trace() - 1.0);
  d.marginal_x_error = (partial_trace(q, r.rows(), s.rows(), TraceSide::Second) - r).cwiseAbs().maxCoeff();
  d.marginal_y_error = (partial_trace(q, r.rows(), s.rows(), TraceSide::First) - s).cwiseAbs().maxCoeff();
  return d;
}

DualWitness evaluate_witness(const CMatrix& cost, const CMatrix& r, const CMatrix& s, CMatrix a, CMatrix b) {
  DualWitness w;
  w.bound = (r * a).trace().real() + (s * b).trace().real();
  const CMatrix slack = cost - kron(a, CMatrix::Identity(s.rows(), s.rows())) -
                        kron(CMatrix::Identity(r.rows(), r.rows()), b);
  w.slack_spectrum = hermitian_eig(0.5 * (slack + slack.adjoint())).values;
  w.a = std::move(a);
  w.b = std::move(b);
  return w;
}

TransportProblem make_transport_problem(const PhaseSpaceContext& ctx, const WeightedConfiguration& config_x,
                                        const WeightedConfiguration& config_y) {
  const OrthonormalBasis bx = orthonormalize(ctx, config_x);
  const OrthonormalBasis by = orthonormalize(ctx, config_y);
  DensityMatrix r = assemble_toeplitz_density(ctx, config_x, bx);
  DensityMatrix s = assemble_toeplitz_density(ctx, config_y, by);
  CostMatrix c = cost_matrix(ctx, bx, by);
  return TransportProblem{ctx, config_x, config_y, std::move(r), std::move(s), std::move(c)};
}

HermitianSdp coupling_sdp(const CMatrix& cost, const CMatrix& r, const CMatrix& s) {
  const Eigen::Index m = r.rows();
  const Eigen::Index n = s.rows();
  if (cost.rows() != m * n) throw Error(ErrorCode::DimensionMismatch, "cost does not match marginals");
  std::vector<TraceConstraint> constraints;
  constraints.push_back({CMatrix::Identity(m * n, m * n), 1.0});
  for (const CMatrix& h : hermitian_basis(m)) {
    constraints.push_back({kron(h, CMatrix::Identity(n, n)), (r * h).trace().real()});
  }
  for (const CMatrix& k : hermitian_basis(n)) {
    constraints.push_back({kron(CMatrix::Identity(m, m), k), (s * k).trace().real()});
  }
  HermitianSdp sdp(cost, std::move(constraints));
  sdp.set_trace_value(1.0);
  return sdp;
}

namespace {

// Orthonormal columns spanning the eigenvectors of `m` above the cutoff.
CMatrix support(const CMatrix& m, double relative_cutoff) {
  const EigenDecomposition e = hermitian_eig(m);
  const double top = std::max(e.values.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < e.values.size(); ++k)
    if (e.values(k) > relative_cutoff * top) keep.push_back(k);
  CMatrix v(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) v.col(static_cast<Eigen::Index>(k)) = e.vectors.col(keep[k]);
  return v;
}

}  // namespace

Mk2Result mk2_squared(const TransportProblem& problem, const SdpOptions& opts) {
  const CMatrix& r = problem.r.matrix;
  const CMatrix& s = problem.s.matrix;
  const Eigen::Index m = r.rows();
  const Eigen::Index n = s.rows();

  // Couplings live on range(R) (x) range(S), so the SDP is posed there; this
  // keeps a strictly feasible point when a marginal is rank deficient.
  const CMatrix vr = support(r, kSupportCutoff);
  const CMatrix vs = support(s, kSupportCutoff);
  const CMatrix frame = kron(vr, vs);
  auto herm = [](const CMatrix& x) { return (0.5 * (x + x.adjoint())).eval(); };
  const CMatrix r_red = herm(vr.adjoint() * r * vr);
  const CMatrix s_red = herm(vs.adjoint() * s * vs);
  const CMatrix c_red = herm(frame.adjoint() * problem.cost.matrix * frame);
  const Eigen::Index mr = r_red.rows();
  const Eigen::Index nr = s_red.rows();

  const HermitianSdp sdp = coupling_sdp(c_red, r_red, s_red);
  SdpSolution sol = solve_sdp(sdp, opts);

  // Multipliers map back onto A (x) 1 + 1 (x) B: constraint 0 is the trace,
  // then mr^2 constraints on the first factor, then nr^2 on the second.
  const auto hx = hermitian_basis(mr);
  const auto hy = hermitian_basis(nr);
  CMatrix a_red = sol.dual(0) * CMatrix::Identity(mr, mr);
  CMatrix b_red = CMatrix::Zero(nr, nr);
  for (std::size_t k = 0; k < hx.size(); ++k) a_red += sol.dual(static_cast<Eigen::Index>(1 + k)) * hx[k];
  for (std::size_t k = 0; k < hy.size(); ++k)
    b_red += sol.dual(static_cast<Eigen::Index>(1 + hx.size() + k)) * hy[k];

  Mk2Result out;
  const CMatrix q = herm(frame * sol.primal * frame.adjoint());
  out.coupling = Coupling{problem.cost.basis_x, problem.cost.basis_y, q, frobenius_dot(problem.cost.matrix, q)};
  out.value = sol.report.primal_value;
  out.report = sol.report;

  CMatrix a = vr * a_red * vr.adjoint();
  CMatrix b = vs * b_red * vs.adjoint();
  if (mr != m || nr != n) {
    // Off the supports the multipliers are free (R and S vanish there); push
    // them down until the slack on the full space matches the reduced one.
    const double reduced_min = min_eigenvalue(herm(sol.dual_slack));
    const double scale = std::max(1.0, problem.cost.matrix.norm());
    const CMatrix pr_perp = CMatrix::Identity(m, m) - vr * vr.adjoint();
    const CMatrix ps_perp = CMatrix::Identity(n, n) - vs * vs.adjoint();
    double t = scale;
    for (;; t *= 4.0) {
      const DualWitness w = evaluate_witness(problem.cost.matrix, r, s, herm(a - t * pr_perp), herm(b - t * ps_perp));
      if (w.slack_spectrum(0) >= reduced_min - 1e-11 * scale || t > 1e16 * scale) break;
    }
    a = herm(a - t * pr_perp);
    b = herm(b - t * ps_perp);
  }
  // The iterate is dual feasible only up to the solver tolerance; lowering A
  // by the most negative slack eigenvalue makes it exactly feasible and costs
  // that amount in the bound (trace R = 1).
  out.witness = evaluate_witness(problem.cost.matrix, r, s, a, b);
  const double worst = out.witness.slack_spectrum(0);
  if (worst < 0.0) {
    out.witness = evaluate_witness(problem.cost.matrix, r, s, a + worst * CMatrix::Identity(m, m), std::move(b));
  }
  return out;
}

Mk2Result mk2_squared(const PhaseSpaceContext& ctx, const WeightedConfiguration& config_x,
                      const WeightedConfiguration& config_y, const SdpOptions& opts) {
  return mk2_squared(make_transport_problem(ctx, config_x, config_y), opts);
}

double block_determinant(const CMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) throw Error(ErrorCode::DimensionMismatch, "expected a 4x4 matrix");
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      const bool in_pattern = i == j || i + j == 3;
      if (!in_pattern && std::abs(m(i, j)) > 1e-12) {
        throw Error(ErrorCode::PatternViolation, "entry outside the checkerboard pattern");
      }
    }
  const Complex outer = m(0, 0) * m(3, 3) - m(0, 3) * m(3, 0);
  const Complex inner = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  return (outer * inner).real();
}

ToeplitzAnalysis toeplitz_analysis(const Coupling& coupling) {
  const CMatrix& fx = coupling.basis_x.change_of_frame;
  const CMatrix& fy = coupling.basis_y.change_of_frame;
  if (fx.rows() != fx.cols() || fy.rows() != fy.cols()) {
    throw Error(ErrorCode::SingularFrame, "frame change is not square");
  }
  const double smallest = std::min(coupling.basis_x.gram_eigenvalues.minCoeff(),
                                   coupling.basis_y.gram_eigenvalues.minCoeff());
  if (!(smallest > kNearDependenceCutoff)) throw Error(ErrorCode::SingularFrame, "frame change is singular");

  ToeplitzAnalysis out;
  out.dim_x = fx.cols();
  out.dim_y = fy.cols();
  // Q = sum Q_{kl,k'l'} |e_k f_l><e_k' f_l'| with |e_k f_l> = sum K_{ij,kl} |x_i y_j>.
  const CMatrix frame = kron(fx, fy);
  out.coefficients = frame * coupling.matrix * frame.adjoint();

  const Eigen::Index n = out.coefficients.rows();
  out.symbol_weights.resize(static_cast<std::size_t>(n));
  bool diagonal_ok = true;
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (r == c) continue;
      out.off_diagonal_norm = std::max(out.off_diagonal_norm, std::abs(out.coefficients(r, c)));
    }
    const Complex d = out.coefficients(r, r);
    out.symbol_weights[static_cast<std::size_t>(r)] = d.real();
    diagonal_ok = diagonal_ok && d.real() >= -1e-9 && std::abs(d.imag()) <= 1e-9;
  }
  out.is_representable = diagonal_ok && out.off_diagonal_norm <= 1e-9;
  return out;
}

}  // namespace qot
