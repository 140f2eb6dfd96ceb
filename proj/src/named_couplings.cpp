#include <cmath>
#include <string>

#include "qot/error.hpp"
#include "qot/quantum_transport.hpp"

namespace qot {

namespace {

WeightedConfiguration symmetric_pair(double a, double w_minus, double w_plus) {
  return WeightedConfiguration({{-a, 0.0}, {a, 0.0}}, {w_minus, w_plus});
}

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::InvalidInput, std::string(name) + " must be positive");
}

// |<a|-a>| for the pair basis, read off the Gram matrix.
double pair_overlap(const OrthonormalBasis& basis) { return std::abs(basis.gram(0, 1)); }

CMatrix checkerboard(double d0, double d1, double d2, double d3, double outer, double inner) {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = d0;
  m(1, 1) = d1;
  m(2, 2) = d2;
  m(3, 3) = d3;
  m(0, 3) = m(3, 0) = outer;
  m(1, 2) = m(2, 1) = inner;
  return m;
}

CMatrix ansatz_matrix(const AnsatzParameters& prm, double lambda, double mu) {
  const CMatrix q0 = checkerboard(1, 1, 1, 1, 1, 1) / 4.0;
  return q0 + checkerboard(prm.p + lambda + mu, -prm.p + lambda - mu, -prm.p - lambda + mu,
                           prm.p - lambda - mu, prm.u, prm.v) /
                  4.0;
}

CMatrix projector(const CVector& v) { return v * v.adjoint(); }

CVector product_state(const PhaseSpaceContext& ctx, const OrthonormalBasis& bx, const OrthonormalBasis& by,
                      CoherentPoint zx, CoherentPoint zy) {
  return kron(coherent_components(ctx, bx, zx), coherent_components(ctx, by, zy));
}

Coupling verified(const TransportProblem& problem, CMatrix q, const char* what) {
  const CouplingDefects d = coupling_defects(q, problem.r.matrix, problem.s.matrix);
  if (!d.is_coupling()) throw Error(ErrorCode::InfeasibleAnsatz, std::string(what) + " is not a coupling");
  const double value = frobenius_dot(problem.cost.matrix, q);
  return Coupling{problem.cost.basis_x, problem.cost.basis_y, std::move(q), value};
}

struct AnsatzGeometry {
  double lambda, mu, gamma, delta, w_prime;
};

AnsatzGeometry ansatz_geometry(const TransportProblem& pr) {
  const CMatrix& c = pr.cost.matrix;
  const double lambda = pair_overlap(pr.r.basis);
  const double mu = pair_overlap(pr.s.basis);
  const double a = c(0, 0).real(), b = c(1, 1).real(), cc = c(2, 2).real(), d = c(3, 3).real();
  const double w_prime = a + b + cc + d + lambda * (a + b - cc - d) + mu * (a - b + cc - d);
  return {lambda, mu, c(0, 3).real(), c(1, 2).real(), w_prime};
}

// Q_c + eps Q_q on the unequal-mass problem.
CMatrix quantized_classical(const TransportProblem& pr, double a) {
  const auto& bx = pr.cost.basis_x;
  const auto& by = pr.cost.basis_y;
  const PhaseSpaceContext& ctx = pr.ctx;
  const double eta = pr.config_x.weights()[1] - pr.config_x.weights()[0];
  CMatrix q = 0.5 * projector(product_state(ctx, bx, by, {a, 0}, {a, 0}));
  q += 0.5 * (1.0 - eta) * projector(product_state(ctx, bx, by, {-a, 0}, {-a, 0}));
  q += 0.5 * eta * projector(product_state(ctx, bx, by, {a, 0}, {-a, 0}));
  return 0.5 * (q + q.adjoint());
}

CMatrix quantum_correction() { return checkerboard(1, -1, -1, 1, -1, 1); }

}  // namespace

TransportProblem equal_mass_problem(const PhaseSpaceContext& ctx, double a, double b) {
  require_positive(a, "a");
  require_positive(b, "b");
  return make_transport_problem(ctx, symmetric_pair(a, 0.5, 0.5), symmetric_pair(b, 0.5, 0.5));
}

TransportProblem unequal_mass_problem(const PhaseSpaceContext& ctx, double a, double eta) {
  require_positive(a, "a");
  if (!(eta > 0.0 && eta < 1.0)) throw Error(ErrorCode::InvalidInput, "eta must lie in (0, 1)");
  return make_transport_problem(ctx, symmetric_pair(a, 0.5 * (1.0 - eta), 0.5 * (1.0 + eta)),
                                symmetric_pair(a, 0.5, 0.5));
}

bool ansatz_is_feasible(const AnsatzParameters& prm, double lambda, double mu, double tol) {
  const double lo = -1.0 + std::hypot(lambda + mu, prm.big_u());
  const double hi = 1.0 - std::hypot(lambda - mu, prm.big_v());
  return lo <= prm.p + tol && prm.p <= hi + tol;
}

AnsatzParameters saturated_ansatz(double p, double lambda, double mu) {
  const double su = (1.0 + p) * (1.0 + p) - (lambda + mu) * (lambda + mu);
  const double sv = (1.0 - p) * (1.0 - p) - (lambda - mu) * (lambda - mu);
  if (su < -1e-14 || sv < -1e-14 || p < lambda + mu - 1.0 - 1e-14 || p > 1.0 - std::abs(lambda - mu) + 1e-14) {
    throw Error(ErrorCode::InfeasibleAnsatz, "p outside the admissible window");
  }
  return {p, std::sqrt(std::max(su, 0.0)) - 1.0, std::sqrt(std::max(sv, 0.0)) - 1.0};
}

AnsatzOptimum optimize_equal_mass_ansatz(const PhaseSpaceContext& ctx, double a, double b) {
  const TransportProblem pr = equal_mass_problem(ctx, a, b);
  const AnsatzGeometry g = ansatz_geometry(pr);
  const double lo = g.lambda + g.mu - 1.0;
  const double hi = 1.0 - std::abs(g.lambda - g.mu);

  // 4 W(p) = 2 gamma U(p) + 2 delta V(p) + W' is convex (gamma, delta < 0 and
  // U, V concave), so the minimizer is the root of the monotone derivative.
  auto slope = [&](double p) {
    const AnsatzParameters s = saturated_ansatz(p, g.lambda, g.mu);
    return g.gamma * (1.0 + p) / s.big_u() + g.delta * (p - 1.0) / s.big_v();
  };
  double l = lo;
  double h = hi;
  for (int i = 0; i < 200 && h - l > 1e-15; ++i) {
    const double m = 0.5 * (l + h);
    const double d = (m == lo || m == hi) ? 0.0 : slope(m);
    if (d < 0.0) l = m;
    else h = m;
  }
  AnsatzOptimum out;
  out.p = 0.5 * (l + h);
  const AnsatzParameters s = saturated_ansatz(out.p, g.lambda, g.mu);
  out.t = g.gamma * s.big_u() + g.delta * s.big_v();
  out.w_prime = g.w_prime;
  out.value = frobenius_dot(pr.cost.matrix, ansatz_matrix(s, g.lambda, g.mu));
  return out;
}

Coupling build_named_coupling(const CouplingKind& kind, const PhaseSpaceContext& ctx,
                              const ScenarioParameters& params) {
  struct Visitor {
    const PhaseSpaceContext& ctx;
    const ScenarioParameters& prm;

    // Warm-up coupling of the lambda, mu -> 0 limit: marginals I/2 on both
    // sides, value taken against the limiting cost (a^2 + b^2) 1 - 2ab J.
    Coupling operator()(const Q0&) const {
      const TransportProblem pr = equal_mass_problem(ctx, prm.a, prm.b);
      CMatrix q = checkerboard(1, 1, 1, 1, 1, 1) / 4.0;
      const CMatrix c0 = checkerboard(1, 1, 1, 1, 0, 0) * (prm.a * prm.a + prm.b * prm.b) +
                         checkerboard(0, 0, 0, 0, 1, 1) * (-2.0 * prm.a * prm.b);
      const CMatrix half = CMatrix::Identity(2, 2) / 2.0;
      if (!coupling_defects(q, half, half).is_coupling()) {
        throw Error(ErrorCode::InfeasibleAnsatz, "Q0 is not a coupling of the limiting marginals");
      }
      const double value = frobenius_dot(c0, q);
      return Coupling{pr.cost.basis_x, pr.cost.basis_y, std::move(q), value};
    }

    Coupling operator()(const EqualMassAnsatz& k) const {
      const TransportProblem pr = equal_mass_problem(ctx, prm.a, prm.b);
      const AnsatzGeometry g = ansatz_geometry(pr);
      if (!ansatz_is_feasible(k.params, g.lambda, g.mu)) {
        throw Error(ErrorCode::InfeasibleAnsatz, "ansatz parameters outside the admissible window");
      }
      return verified(pr, ansatz_matrix(k.params, g.lambda, g.mu), "ansatz");
    }

    Coupling operator()(const EqualMassOptimal&) const {
      const TransportProblem pr = equal_mass_problem(ctx, prm.a, prm.b);
      const auto& bx = pr.cost.basis_x;
      const auto& by = pr.cost.basis_y;
      CMatrix q = 0.5 * projector(product_state(ctx, bx, by, {prm.a, 0}, {prm.b, 0})) +
                  0.5 * projector(product_state(ctx, bx, by, {-prm.a, 0}, {-prm.b, 0}));
      return verified(pr, 0.5 * (q + q.adjoint()), "optimal equal-mass coupling");
    }

    Coupling operator()(const QuantizedClassical&) const {
      const TransportProblem pr = unequal_mass_problem(ctx, prm.a, prm.eta);
      return verified(pr, quantized_classical(pr, prm.a), "quantized classical coupling");
    }

    Coupling operator()(const QuantumCorrection&) const {
      const TransportProblem pr = unequal_mass_problem(ctx, prm.a, prm.eta);
      CMatrix q = quantum_correction();
      const double value = frobenius_dot(pr.cost.matrix, q);
      return Coupling{pr.cost.basis_x, pr.cost.basis_y, std::move(q), value};
    }

    Coupling operator()(const PerturbedCoupling& k) const {
      if (!std::isfinite(k.eps)) throw Error(ErrorCode::InvalidInput, "eps must be finite");
      const TransportProblem pr = unequal_mass_problem(ctx, prm.a, prm.eta);
      return verified(pr, quantized_classical(pr, prm.a) + k.eps * quantum_correction(), "perturbed coupling");
    }
  };
  return std::visit(Visitor{ctx, params}, kind);
}

double max_feasible_eps(const PhaseSpaceContext& ctx, double a, double eta) {
  const TransportProblem pr = unequal_mass_problem(ctx, a, eta);
  const CMatrix qc = quantized_classical(pr, a);
  const CMatrix qq = quantum_correction();
  auto feasible = [&](double eps) { return min_eigenvalue(qc + eps * qq) >= 0.0; };

  double lo = 0.0;
  double hi = 1e-3;
  while (feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e3) throw Error(ErrorCode::NumericalBreakdown, "no upper bracket for eps");
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

double demonstration_eps(const PhaseSpaceContext& ctx, double a, double eta) {
  return std::min(0.01, 0.5 * max_feasible_eps(ctx, a, eta));
}

EqualMassDualWitness equal_mass_dual_witness(const PhaseSpaceContext& ctx, double a, double b) {
  const TransportProblem pr = equal_mass_problem(ctx, a, b);
  const AnsatzGeometry g = ansatz_geometry(pr);
  const CMatrix& c = pr.cost.matrix;
  const double lam = g.lambda;
  const double mu = g.mu;

  EqualMassDualWitness out;
  out.gamma = g.gamma;
  out.delta = g.delta;
  out.x = -4.0 * a * b * (1.0 - lam * lam * mu * mu) / ((1.0 - lam * lam) * (1.0 - mu * mu));

  // Saturate both 2x2 blocks of C - A (x) 1 - 1 (x) B; the sign of b_bar - c_bar
  // follows the sign of lambda - mu so that the reduced objective is maximal.
  const double d1 = std::sqrt(std::max(0.0, out.x * out.x - 4.0 * g.gamma * g.gamma));
  const double d2 = (lam >= mu ? 1.0 : -1.0) * std::sqrt(std::max(0.0, out.x * out.x - 4.0 * g.delta * g.delta));
  out.a_bar = 0.5 * (out.x + d1);
  out.d_bar = 0.5 * (out.x - d1);
  out.b_bar = 0.5 * (out.x + d2);
  out.c_bar = 0.5 * (out.x - d2);
  out.f_x = 0.5 * out.x + 0.25 * (lam + mu) * d1 + 0.25 * (lam - mu) * d2;

  // Gauge beta2 = 0.
  const double alpha1 = out.b_bar + c(1, 1).real();
  const double alpha2 = out.d_bar + c(3, 3).real();
  const double beta1 = out.a_bar + c(0, 0).real() - alpha1;
  CMatrix am = CMatrix::Zero(2, 2);
  am(0, 0) = alpha1;
  am(1, 1) = alpha2;
  CMatrix bm = CMatrix::Zero(2, 2);
  bm(0, 0) = beta1;
  out.witness = evaluate_witness(c, pr.r.matrix, pr.s.matrix, std::move(am), std::move(bm));
  return out;
}

}  // namespace qot
