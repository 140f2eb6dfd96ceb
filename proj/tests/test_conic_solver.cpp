#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qot/classical_transport.hpp"
#include "qot/conic_solver.hpp"
#include "qot/error.hpp"
#include "qot/quantum_transport.hpp"

using namespace qot;

namespace {

CMatrix diag(std::initializer_list<double> d) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
  Eigen::Index k = 0;
  for (double v : d) m(k, k) = v, ++k;
  return m;
}

CMatrix unit(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  CMatrix m = CMatrix::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

// `optimum` comes from an independent oracle; the primal iterate is only
// feasible up to `tol`, so the certified bound is compared against it.
void check_certificate(const HermitianSdp& sdp, const SdpSolution& s, double tol, double optimum) {
  CHECK(oracle::min_eigenvalue(s.primal) >= -1e-10);
  for (const TraceConstraint& c : sdp.constraints())
    CHECK(std::abs(frobenius_dot(c.matrix, s.primal) - c.rhs) < tol);
  CMatrix slack = sdp.cost();
  for (std::size_t k = 0; k < sdp.constraints().size(); ++k)
    slack -= s.dual(static_cast<Eigen::Index>(k)) * sdp.constraints()[k].matrix;
  CHECK((slack - s.dual_slack).cwiseAbs().maxCoeff() < tol);
  CHECK(oracle::min_eigenvalue(s.dual_slack) >= -tol);
  // Complementary slackness.
  CHECK(std::abs(frobenius_dot(s.primal, s.dual_slack)) < tol);
  if (sdp.trace_value()) CHECK(s.report.certified_lower_bound <= optimum + 1e-12);
  CHECK(std::abs(s.report.dual_value - optimum) < tol);
}

}  // namespace

TEST_CASE("jacobi eigensolver") {
  const EigenDecomposition id = hermitian_eig(CMatrix::Identity(4, 4));
  for (int k = 0; k < 4; ++k) CHECK(std::abs(id.values(k) - 1.0) < 1e-15);

  // Checkerboard matrix with spectrum {0, 0, 1/2, 1/2}.
  CMatrix q0 = CMatrix::Zero(4, 4);
  q0(0, 0) = q0(3, 3) = q0(1, 1) = q0(2, 2) = 0.25;
  q0(0, 3) = q0(3, 0) = 0.25;
  q0(1, 2) = q0(2, 1) = 0.25;
  const EigenDecomposition e = hermitian_eig(q0);
  CHECK(std::abs(e.values(0)) < 1e-15);
  CHECK(std::abs(e.values(1)) < 1e-15);
  CHECK(std::abs(e.values(2) - 0.5) < 1e-15);
  CHECK(std::abs(e.values(3) - 0.5) < 1e-15);

  std::mt19937_64 rng(41);
  for (int t = 0; t < 40; ++t) {
    const int n = 1 + t % 8;
    const CMatrix h = oracle::random_hermitian(rng, n);
    const EigenDecomposition d = hermitian_eig(h);
    const CMatrix back = d.vectors * d.values.cast<Complex>().asDiagonal() * d.vectors.adjoint();
    CHECK((back - h).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d.vectors.adjoint() * d.vectors - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-13);
    for (int k = 0; k < n; ++k) CHECK(std::abs(d.values(k) - oracle::bisect_eigenvalue(h, k)) < 1e-8);
    for (int k = 1; k < n; ++k) CHECK(d.values(k - 1) <= d.values(k));
  }

  CMatrix bad = CMatrix::Zero(2, 2);
  bad(0, 1) = 1.0;
  try {
    hermitian_eig(bad);
    FAIL("expected NotHermitian");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NotHermitian);
  }
}

TEST_CASE("psd projection") {
  const CMatrix p = psd_project(diag({1.0, -1.0}));
  CHECK((p - diag({1.0, 0.0})).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  for (int t = 0; t < 5; ++t) {
    const CMatrix m = oracle::random_hermitian(rng, 5);
    const CMatrix proj = psd_project(m);
    CHECK(oracle::min_eigenvalue(proj) >= -1e-12);
    const double best = (m - proj).norm();
    // No random PSD candidate comes closer.
    for (int k = 0; k < 10000; ++k) {
      CMatrix f(5, 2);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) f(i, j) = Complex(g(rng), g(rng));
      const CMatrix cand = proj + 0.05 * f * f.adjoint();
      CHECK((m - cand).norm() >= best - 1e-12);
    }
  }
}

TEST_CASE("scalar sdp") {
  // One-dimensional: minimize c q subject to q = 2.
  const HermitianSdp sdp(diag({3.0}), {{diag({1.0}), 2.0}});
  const SdpSolution s = solve_sdp(sdp);
  CHECK(s.report.converged);
  CHECK(std::abs(s.report.primal_value - 6.0) < 1e-7);
  CHECK(std::abs(s.primal(0, 0) - 2.0) < 1e-7);
}

TEST_CASE("trace-one sdp finds the smallest eigenvalue") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 10; ++t) {
    const int n = 2 + t % 4;
    const CMatrix c = oracle::random_hermitian(rng, n);
    HermitianSdp sdp(c, {{CMatrix::Identity(n, n), 1.0}});
    sdp.set_trace_value(1.0);
    const SdpSolution s = solve_sdp(sdp);
    CHECK(s.report.converged);
    CHECK(std::abs(s.report.primal_value - oracle::min_eigenvalue(c)) < 1e-6);
    CHECK(s.report.certified_lower_bound <= oracle::min_eigenvalue(c) + 1e-12);
    check_certificate(sdp, s, 1e-6, oracle::min_eigenvalue(c));
  }
}

TEST_CASE("fixed-diagonal 2x2 sdp matches the closed form") {
  // Q = [[w, z], [conj z, 1 - w]] with |z|^2 <= w (1 - w); the optimum is
  // c00 w + c11 (1 - w) - 2 |c01| sqrt(w (1 - w)).
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int t = 0; t < 10; ++t) {
    const double w = u(rng);
    const CMatrix c = oracle::random_hermitian(rng, 2);
    const HermitianSdp sdp(c, {{unit(2, 0, 0), w}, {unit(2, 1, 1), 1.0 - w}});
    const SdpSolution s = solve_sdp(sdp);
    const double expected =
        c(0, 0).real() * w + c(1, 1).real() * (1 - w) - 2.0 * std::abs(c(0, 1)) * std::sqrt(w * (1 - w));
    CHECK(s.report.converged);
    CHECK(std::abs(s.report.primal_value - expected) < 1e-6);
    check_certificate(sdp, s, 1e-6, expected);
  }
}

TEST_CASE("diagonal coupling sdp equals the transport LP") {
  // With diagonal cost and marginals, the diagonal of any coupling is a
  // classical plan and every classical plan is a diagonal coupling.
  std::mt19937_64 rng(45);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int t = 0; t < 6; ++t) {
    const int m = 2 + t % 2, n = 2 + (t / 2) % 2;
    const auto a = oracle::random_masses(rng, m);
    const auto b = oracle::random_masses(rng, n);
    RMatrix cost(m, n);
    CMatrix c = CMatrix::Zero(m * n, m * n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i * n + j, i * n + j) = cost(i, j) = u(rng);
    CMatrix r = CMatrix::Zero(m, m), s = CMatrix::Zero(n, n);
    for (int i = 0; i < m; ++i) r(i, i) = a[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) s(j, j) = b[static_cast<std::size_t>(j)];
    const HermitianSdp sdp = coupling_sdp(c, r, s);
    const SdpSolution sol = solve_sdp(sdp);
    CHECK(sol.report.converged);
    const double lp = solve_transport(a, b, cost).cost;
    CHECK(std::abs(sol.report.primal_value - lp) < 1e-6);
    check_certificate(sdp, sol, 1e-6, lp);
  }
}

TEST_CASE("dependent and inconsistent constraints") {
  const CMatrix c = diag({1.0, 2.0});
  const HermitianSdp dup(c, {{unit(2, 0, 0), 0.3}, {2.0 * unit(2, 0, 0), 0.6}, {CMatrix::Identity(2, 2), 1.0}});
  CHECK(dup.dropped_constraints() == 1);
  const SdpSolution s = solve_sdp(dup);
  CHECK(std::abs(s.report.primal_value - (0.3 + 2 * 0.7)) < 1e-7);
  CHECK_THROWS_AS(HermitianSdp(c, {{unit(2, 0, 0), 0.3}, {2.0 * unit(2, 0, 0), 0.5}}), Error);
  CHECK_THROWS_AS(HermitianSdp(unit(2, 0, 1), {{unit(2, 0, 0), 0.3}}), Error);
}

TEST_CASE("solver is deterministic and traces progress") {
  std::mt19937_64 rng(46);
  const CMatrix c = oracle::random_hermitian(rng, 4);
  HermitianSdp sdp(c, {{CMatrix::Identity(4, 4), 1.0}, {unit(4, 0, 0), 0.25}});
  sdp.set_trace_value(1.0);
  std::ostringstream trace;
  SdpOptions opts;
  opts.trace = &trace;
  const SdpSolution a = solve_sdp(sdp, opts);
  const SdpSolution b = solve_sdp(sdp);
  CHECK(a.report.iterations == b.report.iterations);
  CHECK((a.primal - b.primal).cwiseAbs().maxCoeff() == 0.0);
  CHECK(trace.str().rfind("iteration,primal,dual", 0) == 0);

  SdpOptions short_run;
  short_run.max_iterations = 3;
  short_run.tolerance = 1e-15;
  const SdpSolution cut = solve_sdp(sdp, short_run);
  CHECK_FALSE(cut.report.converged);
  CHECK(cut.report.iterations == 3);
  // Any dual vector still certifies a lower bound.
  CHECK(cut.report.certified_lower_bound <= a.report.primal_value + 1e-9);
}
