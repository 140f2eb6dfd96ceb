#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qot/classical_transport.hpp"
#include "qot/error.hpp"

using namespace qot;

namespace {

void check_plan(const ClassicalCoupling& c, const std::vector<double>& m, const std::vector<double>& n,
                const RMatrix& cost) {
  for (Eigen::Index i = 0; i < c.plan.rows(); ++i)
    CHECK(std::abs(c.plan.row(i).sum() - m[static_cast<std::size_t>(i)]) < 1e-9);
  for (Eigen::Index j = 0; j < c.plan.cols(); ++j)
    CHECK(std::abs(c.plan.col(j).sum() - n[static_cast<std::size_t>(j)]) < 1e-9);
  CHECK(c.plan.minCoeff() >= -1e-12);
  CHECK(std::abs((c.plan.array() * cost.array()).sum() - c.cost) < 1e-12);
  // Complementary slackness certificate, checked from scratch.
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      const double reduced = cost(i, j) - c.row_potentials(i) - c.column_potentials(j);
      CHECK(reduced >= -1e-9);
      if (c.plan(i, j) > 1e-9) CHECK(std::abs(reduced) < 1e-9);
    }
  double dual = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) dual += m[i] * c.row_potentials(static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < n.size(); ++j) dual += n[j] * c.column_potentials(static_cast<Eigen::Index>(j));
  CHECK(std::abs(dual - c.cost) < 1e-9);
}

WeightedConfiguration line(std::vector<double> q, std::vector<double> w) {
  std::vector<CoherentPoint> pts;
  for (double x : q) pts.push_back({x, 0.0});
  return WeightedConfiguration(pts, std::move(w));
}

}  // namespace

TEST_CASE("two-point transport examples") {
  {
    const std::vector<double> m{0.5, 0.5}, n{0.5, 0.5};
    const RMatrix c = squared_distance_cost(std::vector<double>{-1, 1}, std::vector<double>{-2, 2});
    const ClassicalCoupling r = solve_transport(m, n, c);
    CHECK(std::abs(r.cost - 1.0) < 1e-12);
    CHECK(std::abs(r.plan(0, 0) - 0.5) < 1e-12);
    CHECK(std::abs(r.plan(1, 1) - 0.5) < 1e-12);
    check_plan(r, m, n, c);
  }
  {
    const double eta = 0.5, a = 1.0;
    const std::vector<double> m{0.5 * (1 - eta), 0.5 * (1 + eta)}, n{0.5, 0.5};
    const RMatrix c = squared_distance_cost(std::vector<double>{-a, a}, std::vector<double>{-a, a});
    const ClassicalCoupling r = solve_transport(m, n, c);
    CHECK(std::abs(r.cost - 2 * eta * a * a) < 1e-12);
    CHECK(std::abs(r.cost - 1.0) < 1e-12);
    check_plan(r, m, n, c);
  }
}

TEST_CASE("infeasible masses are rejected") {
  const std::vector<double> m{0.5, 0.5}, n{0.6, 0.5};
  try {
    solve_transport(m, n, RMatrix::Zero(2, 2));
    FAIL("expected InfeasibleMasses");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleMasses);
  }
  CHECK_THROWS_AS(solve_transport(std::vector<double>{1.0}, std::vector<double>{1.0}, RMatrix::Zero(2, 2)), Error);
}

TEST_CASE("simplex agrees with vertex enumeration") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> size(1, 5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int m = t < 5 ? 5 : size(rng);
    const int n = t < 5 ? 5 : size(rng);
    const auto a = oracle::random_masses(rng, m);
    const auto b = oracle::random_masses(rng, n);
    RMatrix c(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng);
    const ClassicalCoupling r = solve_transport(a, b, c);
    const auto ref = oracle::enumerate_transport(a, b, c);
    REQUIRE(ref.bases > 0);
    worst = std::max(worst, std::abs(r.cost - ref.cost));
    check_plan(r, a, b, c);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("degenerate instances") {
  // Equal masses with integer costs produce many ties and degenerate bases.
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> u(0, 3);
  for (int t = 0; t < 100; ++t) {
    const int m = 2 + t % 4, n = 2 + (t / 4) % 4;
    std::vector<double> a(static_cast<std::size_t>(m), 1.0 / m), b(static_cast<std::size_t>(n), 1.0 / n);
    RMatrix c(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng);
    const ClassicalCoupling r = solve_transport(a, b, c);
    CHECK(std::abs(r.cost - oracle::enumerate_transport(a, b, c).cost) < 1e-9);
    check_plan(r, a, b, c);
  }
}

TEST_CASE("relabeling, transposition and constant shifts") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    const int m = 1 + t % 6, n = 1 + (t / 6) % 6;
    auto a = oracle::random_masses(rng, m);
    auto b = oracle::random_masses(rng, n);
    RMatrix c(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = u(rng);
    const double base = solve_transport(a, b, c).cost;

    CHECK(std::abs(solve_transport(b, a, RMatrix(c.transpose())).cost - base) < 1e-9);
    CHECK(std::abs(solve_transport(a, b, RMatrix(c.array() + 2.5)).cost - (base + 2.5)) < 1e-9);

    std::vector<int> pi(static_cast<std::size_t>(m));
    std::iota(pi.begin(), pi.end(), 0);
    std::shuffle(pi.begin(), pi.end(), rng);
    std::vector<double> a2(a.size());
    RMatrix c2(m, n);
    for (int i = 0; i < m; ++i) {
      a2[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)])];
      c2.row(i) = c.row(pi[static_cast<std::size_t>(i)]);
    }
    CHECK(std::abs(solve_transport(a2, b, c2).cost - base) < 1e-9);
  }
}

TEST_CASE("one-dimensional monotone coupling") {
  const auto mu = line({0.0, 1.0}, {0.5, 0.5});
  CHECK(std::abs(w2_squared_1d(mu, mu)) < 1e-15);
  CHECK(std::abs(w2_squared_1d(mu, line({0.0, 2.0}, {0.5, 0.5})) - 0.5) < 1e-15);
  CHECK(std::abs(w2_squared_1d(line({-1, 1}, {0.5, 0.5}), line({-2, 2}, {0.5, 0.5})) - 1.0) < 1e-15);

  const WeightedConfiguration moving({{0.0, 1.0}}, {1.0});
  try {
    w2_squared_1d(moving, mu);
    FAIL("expected NonzeroMomentum");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonzeroMomentum);
  }
}

TEST_CASE("monotone coupling equals the LP on random instances") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(-5, 5);
  std::uniform_int_distribution<int> size(1, 6);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int m = size(rng), n = size(rng);
    std::vector<double> x(static_cast<std::size_t>(m)), y(static_cast<std::size_t>(n));
    for (double& v : x) v = u(rng);
    for (double& v : y) v = u(rng);
    const auto a = oracle::random_masses(rng, m);
    const auto b = oracle::random_masses(rng, n);
    const double mono = w2_squared_1d(line(x, a), line(y, b));
    const double lp = solve_transport(a, b, squared_distance_cost(x, y)).cost;
    worst = std::max(worst, std::abs(mono - lp));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("grid W2") {
  const PhaseSpaceGrid grid = PhaseSpaceGrid::square(-2.0, 2.0, 0.5);
  REQUIRE(grid.nq == 9);
  GridDensity f{grid, RMatrix::Zero(9, 9)};
  GridDensity g{grid, RMatrix::Zero(9, 9)};
  f.values(1, 2) = 3.0;  // unnormalized on purpose
  g.values(4, 6) = 1.0;
  const GridTransportResult r = w2_squared_grid(f, g);
  const double dq = grid.q(4) - grid.q(1), dp = grid.p(6) - grid.p(2);
  CHECK(std::abs(r.value - (dq * dq + dp * dp)) < 1e-12);
  CHECK(std::abs(w2_squared_grid(f, f).value) < 1e-15);

  GridDensity other{PhaseSpaceGrid::square(-2.0, 2.0, 0.25), RMatrix::Zero(17, 17)};
  other.values(0, 0) = 1.0;
  try {
    w2_squared_grid(f, other);
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridMismatch);
  }

  // Translating a smooth density is transported by the translation itself.
  const PhaseSpaceGrid fine = PhaseSpaceGrid::square(-5.0, 5.0, 0.25);
  GridDensity h1{fine, RMatrix(fine.nq, fine.np)};
  GridDensity h2{fine, RMatrix(fine.nq, fine.np)};
  for (int i = 0; i < fine.nq; ++i)
    for (int j = 0; j < fine.np; ++j) {
      h1.values(i, j) = oracle::gaussian_husimi(0.5, -0.5, 0.0, fine.q(i), fine.p(j));
      h2.values(i, j) = oracle::gaussian_husimi(0.5, 0.5, 0.0, fine.q(i), fine.p(j));
    }
  GridTransportOptions opts;
  opts.max_support = 2000;
  const GridTransportResult t = w2_squared_grid(h1, h2, opts);
  CHECK(std::abs(t.value - 1.0) < 1e-6);
  CHECK(t.coarsening == 1);
}
