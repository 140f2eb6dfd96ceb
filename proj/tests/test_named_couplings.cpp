#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qot/error.hpp"
#include "qot/quantum_transport.hpp"

using namespace qot;

namespace {

CMatrix quantum_correction_oracle() {
  CMatrix m = CMatrix::Zero(4, 4);
  m(0, 0) = m(3, 3) = 1.0;
  m(1, 1) = m(2, 2) = -1.0;
  m(0, 3) = m(3, 0) = -1.0;
  m(1, 2) = m(2, 1) = 1.0;
  return m;
}

// Third elementary symmetric function of the eigenvalues: sum of principal 3x3 minors.
double e3(const CMatrix& m) {
  double s = 0.0;
  for (int skip = 0; skip < 4; ++skip) {
    CMatrix minor(3, 3);
    for (int i = 0, r = 0; i < 4; ++i) {
      if (i == skip) continue;
      for (int j = 0, c = 0; j < 4; ++j) {
        if (j == skip) continue;
        minor(r, c++) = m(i, j);
      }
      ++r;
    }
    s += oracle::cofactor_determinant(minor).real();
  }
  return s;
}

}  // namespace

TEST_CASE("traces of the named operators") {
  const PhaseSpaceContext ctx(1.0);
  for (const auto& [a, b] : {std::pair{1.0, 2.0}, {0.5, 3.0}, {2.0, 0.7}}) {
    const Coupling q0 = build_named_coupling(Q0{}, ctx, {a, b, 0.5});
    CHECK(std::abs(q0.value - (a - b) * (a - b)) < 1e-12);
  }
  // Against the exact cost, Q0 approaches (a - b)^2 only as the overlaps vanish.
  {
    const TransportProblem pr = equal_mass_problem(PhaseSpaceContext(0.05), 1.0, 2.0);
    const Coupling q0 = build_named_coupling(Q0{}, PhaseSpaceContext(0.05), {1.0, 2.0, 0.5});
    CHECK(std::abs(frobenius_dot(pr.cost.matrix, q0.matrix) - 1.0) < 1e-6);
  }

  const double lam = std::exp(-1.0);
  for (double eta : {0.1, 0.5, 0.9}) {
    for (double a : {0.7, 1.0, 1.5}) {
      const double l = std::exp(-a * a);
      const Coupling qc = build_named_coupling(QuantizedClassical{}, ctx, {a, a, eta});
      CHECK(std::abs(qc.value - 2 * eta * a * a) < 1e-12);
      const Coupling qq = build_named_coupling(QuantumCorrection{}, ctx, {a, a, eta});
      CHECK(std::abs(qq.value + 8 * a * a * l * l / (1 - l * l)) < 1e-12);
    }
  }
  const Coupling qq = build_named_coupling(QuantumCorrection{}, ctx, {1.0, 1.0, 0.5});
  CHECK(std::abs(qq.value + 1.252141) < 1e-6);
  CHECK(std::abs(qq.value + 8 * lam * lam / (1 - lam * lam)) < 1e-12);
  CHECK(std::abs(qq.matrix.trace()) < 1e-15);
}

TEST_CASE("quantized classical coupling entries") {
  for (double eta : {0.5, 0.2}) {
    for (double hbar : {1.0, 0.6}) {
      const PhaseSpaceContext ctx(hbar);
      const double lam = std::exp(-1.0 / hbar);
      const Coupling qc = build_named_coupling(QuantizedClassical{}, ctx, {1.0, 1.0, eta});
      const RMatrix ref = oracle::quantized_classical(lam, eta);
      CHECK((qc.matrix - ref.cast<Complex>()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("perturbed coupling") {
  const PhaseSpaceContext ctx(1.0);
  const double a = 1.0, eta = 0.5, lam = std::exp(-1.0);
  const RMatrix qc = oracle::quantized_classical(lam, eta);
  const CMatrix qq = quantum_correction_oracle();

  // det(Q_c + eps Q_q) / eps -> eta lambda^2 (1 - eta) (1 - lambda^2)^2 / 8.
  const double coefficient = eta * lam * lam * (1 - eta) * std::pow(1 - lam * lam, 2) / 8.0;
  auto ratio = [&](double eps) {
    const Coupling q = build_named_coupling(PerturbedCoupling{eps}, ctx, {a, a, eta});
    CHECK(std::abs(q.value - (2 * eta * a * a - eps * 8 * lam * lam / (1 - lam * lam))) < 1e-12);
    CHECK((q.matrix - (qc.cast<Complex>() + eps * qq)).cwiseAbs().maxCoeff() < 1e-12);
    return oracle::cofactor_determinant(q.matrix).real() / eps;
  };
  const double r3 = ratio(1e-3), r4 = ratio(1e-4), r5 = ratio(1e-5);
  CHECK(std::abs(r5 - coefficient) < 1e-2 * coefficient);
  CHECK(std::abs((10 * r4 - r3) / 9 - coefficient) < 1e-3 * coefficient);
  CHECK(std::abs((10 * r5 - r4) / 9 - coefficient) < 1e-4 * coefficient);

  // The characteristic polynomial of Q_c is t P3(t) with
  // P3(0) = -e3 = -(eta / 8)(1 - eta)(1 - lambda^2)^2 < 0.
  for (double e : {0.2, 0.5, 0.8}) {
    const RMatrix m = oracle::quantized_classical(lam, e);
    const Coupling built = build_named_coupling(QuantizedClassical{}, ctx, {a, a, e});
    CHECK(std::abs(oracle::cofactor_determinant(built.matrix)) < 1e-15);
    const double p3 = -e3(built.matrix);
    CHECK(std::abs(p3 + e / 8.0 * (1 - e) * std::pow(1 - lam * lam, 2)) < 1e-14);
    CHECK(std::abs(p3 + e3(m.cast<Complex>())) < 1e-15);
    CHECK(p3 < 0.0);
  }
}

TEST_CASE("largest feasible perturbation") {
  const PhaseSpaceContext ctx(1.0);
  const double eta = 0.5, lam = std::exp(-1.0);
  const double eps = max_feasible_eps(ctx, 1.0, eta);
  CHECK(eps > 0.0);

  const CMatrix qc = oracle::quantized_classical(lam, eta).cast<Complex>();
  const CMatrix qq = quantum_correction_oracle();
  CHECK(std::abs(oracle::min_eigenvalue(qc + eps * qq)) < 1e-9);

  // Dense scan: first eps on a 1e-6 grid over (0, 0.2] where Q_eps stops being PSD.
  double first_bad = 0.0;
  for (int k = 1; k <= 200000; ++k) {
    const double e = k * 1e-6;
    if (oracle::min_eigenvalue(qc + e * qq) < 0.0) {
      first_bad = e;
      break;
    }
  }
  REQUIRE(first_bad > 0.0);
  CHECK(eps <= first_bad);
  CHECK(eps > first_bad - 1e-6 - 1e-9);

  CHECK(std::abs(demonstration_eps(ctx, 1.0, eta) - std::min(0.01, eps / 2)) < 1e-15);
  const Coupling ok = build_named_coupling(PerturbedCoupling{demonstration_eps(ctx, 1.0, eta)}, ctx, {1.0, 1.0, eta});
  CHECK(ok.value < 1.0);
  try {
    build_named_coupling(PerturbedCoupling{2 * eps}, ctx, {1.0, 1.0, eta});
    FAIL("expected InfeasibleAnsatz");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleAnsatz);
  }
}

TEST_CASE("equal-mass ansatz optimum") {
  for (const auto& [a, b, hbar] : {std::tuple{1.0, 2.0, 1.0}, {0.5, 2.0, 0.5}, {1.0, 3.0, 2.0}, {0.5, 1.0, 1.0}}) {
    const PhaseSpaceContext ctx(hbar);
    const double lam = std::exp(-a * a / hbar), mu = std::exp(-b * b / hbar);
    const AnsatzOptimum opt = optimize_equal_mass_ansatz(ctx, a, b);
    CHECK(std::abs(opt.value - (a - b) * (a - b)) < 1e-9);
    CHECK(std::abs(opt.p - lam * mu) < 1e-6);
    CHECK(std::abs(opt.w_prime - 4 * (a * a + b * b)) < 1e-10);
    CHECK(std::abs(opt.t + 4 * a * b) < 1e-9);

    // The ansatz at the optimum is a coupling with that value.
    const Coupling q = build_named_coupling(EqualMassAnsatz{saturated_ansatz(opt.p, lam, mu)}, ctx, {a, b, 0.5});
    CHECK(std::abs(q.value - (a - b) * (a - b)) < 1e-9);

    // Sampled points of the window are never better.
    const double lo = lam + mu - 1, hi = 1 - std::abs(lam - mu);
    for (int k = 0; k <= 50; ++k) {
      const AnsatzParameters s = saturated_ansatz(lo + (hi - lo) * k / 50.0, lam, mu);
      CHECK(ansatz_is_feasible(s, lam, mu));
      CHECK(build_named_coupling(EqualMassAnsatz{s}, ctx, {a, b, 0.5}).value >= opt.value - 1e-12);
    }
  }

  const PhaseSpaceContext ctx(1.0);
  const double lam = std::exp(-1.0), mu = std::exp(-4.0);
  CHECK_THROWS_AS(saturated_ansatz(1.5, lam, mu), Error);
  try {
    build_named_coupling(EqualMassAnsatz{{0.0, 5.0, 5.0}}, ctx, {1.0, 2.0, 0.5});
    FAIL("expected InfeasibleAnsatz");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleAnsatz);
  }
  CHECK_FALSE(ansatz_is_feasible({0.0, 5.0, 5.0}, lam, mu));
}

TEST_CASE("optimal equal-mass coupling") {
  const PhaseSpaceContext ctx(1.0);
  const Coupling q = build_named_coupling(EqualMassOptimal{}, ctx, {1.0, 2.0, 0.5});
  CHECK(std::abs(q.value - 1.0) < 1e-12);
  CHECK(std::abs(q.matrix.trace() - 1.0) < 1e-14);
}

TEST_CASE("equal-mass dual witness") {
  const PhaseSpaceContext ctx(1.0);
  const EqualMassDualWitness w = equal_mass_dual_witness(ctx, 1.0, 2.0);
  const double lam = std::exp(-1.0), mu = std::exp(-4.0);
  CHECK(std::abs(w.x - (-8.0 * (1 - lam * lam * mu * mu) / ((1 - lam * lam) * (1 - mu * mu)))) < 1e-12);
  CHECK(std::abs(w.x + 9.25483) < 1e-5);
  CHECK(std::abs(w.f_x + 4.0) < 1e-9);
  CHECK(std::abs(w.witness.bound - 1.0) < 1e-9);
  CHECK(w.witness.slack_spectrum(0) >= -1e-9);

  // Both 2x2 blocks of the slack are saturated: their determinants vanish.
  const TransportProblem pr = equal_mass_problem(ctx, 1.0, 2.0);
  const CMatrix slack = pr.cost.matrix - kron(w.witness.a, CMatrix::Identity(2, 2)) -
                        kron(CMatrix::Identity(2, 2), w.witness.b);
  const Complex outer = slack(0, 0) * slack(3, 3) - slack(0, 3) * slack(3, 0);
  const Complex inner = slack(1, 1) * slack(2, 2) - slack(1, 2) * slack(2, 1);
  CHECK(std::abs(outer) < 1e-9);
  CHECK(std::abs(inner) < 1e-9);
  CHECK(std::abs(block_determinant(slack)) < 1e-9);

  for (const auto& [a, b, hbar] : {std::tuple{0.5, 2.0, 0.5}, {1.0, 3.0, 2.0}, {2.0, 0.5, 1.0}}) {
    const EqualMassDualWitness v = equal_mass_dual_witness(PhaseSpaceContext(hbar), a, b);
    CHECK(std::abs(v.witness.bound - (a - b) * (a - b)) < 1e-9);
    CHECK(std::abs(v.f_x + 2 * a * b) < 1e-9);
    CHECK(v.witness.slack_spectrum(0) >= -1e-9);
  }
}

TEST_CASE("equal-mass end to end") {
  for (double hbar : {0.25, 1.0, 4.0}) {
    for (const auto& [a, b] : {std::pair{0.5, 1.0}, {0.5, 2.0}, {1.0, 2.0}}) {
      const PhaseSpaceContext ctx(hbar);
      const double expected = (a - b) * (a - b);
      const Mk2Result r = mk2_squared(equal_mass_problem(ctx, a, b));
      CHECK(std::abs(r.value - expected) < 1e-6);
      CHECK(std::abs(optimize_equal_mass_ansatz(ctx, a, b).value - expected) < 1e-6);
      CHECK(std::abs(equal_mass_dual_witness(ctx, a, b).witness.bound - expected) < 1e-6);
      CHECK(std::abs(r.witness.bound - expected) < 1e-6);
    }
  }
}

TEST_CASE("unequal masses are strictly cheaper quantum mechanically") {
  for (double eta : {0.3, 0.5, 0.8}) {
    const PhaseSpaceContext ctx(1.0);
    const double a = 1.0, lam = std::exp(-1.0);
    const double eps = demonstration_eps(ctx, a, eta);
    const Coupling qe = build_named_coupling(PerturbedCoupling{eps}, ctx, {a, a, eta});
    const double expected = 2 * eta * a * a - eps * 8 * a * a * lam * lam / (1 - lam * lam);
    CHECK(std::abs(qe.value - expected) < 1e-12);
    const Mk2Result r = mk2_squared(unequal_mass_problem(ctx, a, eta));
    CHECK(r.value <= qe.value + 1e-6);
    CHECK(qe.value < 2 * eta * a * a);
  }
  CHECK_THROWS_AS(unequal_mass_problem(PhaseSpaceContext(1.0), 1.0, 1.5), Error);
  CHECK_THROWS_AS(equal_mass_problem(PhaseSpaceContext(1.0), -1.0, 1.5), Error);
}
