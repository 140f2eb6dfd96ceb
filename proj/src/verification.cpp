#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "qot/error.hpp"
#include "qot/semiclassical_checks.hpp"
#include "qot/serialization.hpp"

namespace qot {

namespace {

struct Suite {
  std::vector<CheckResult> results;

  void run(const std::string& name, const std::function<std::string(bool&)>& body) {
    CheckResult r{name, false, {}};
    try {
      bool ok = true;
      r.detail = body(ok);
      r.passed = ok;
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    results.push_back(std::move(r));
  }
};

std::string kv(const char* key, double v) { return std::string(key) + "=" + format_number(v) + " "; }

WeightedConfiguration random_line_config(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0);
  std::uniform_real_distribution<double> mass(0.1, 1.0);
  std::vector<CoherentPoint> pts;
  std::vector<double> w;
  while (static_cast<int>(pts.size()) < n) {
    const double q = pos(rng);
    bool far = true;
    for (const auto& z : pts) far = far && std::abs(z.q - q) > 0.5;
    if (!far) continue;
    pts.push_back({q, 0.0});
    w.push_back(mass(rng));
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  // Absorb rounding so the weights sum to one to machine precision.
  double rest = 1.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) rest -= w[i];
  w.back() = rest;
  return WeightedConfiguration(std::move(pts), std::move(w));
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const SdpOptions& opts) {
  Suite s;
  std::mt19937_64 rng(20240611);

  s.run("jacobi reconstruction", [&](bool& ok) {
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const int n = 1 + t % 10;
      CMatrix m(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = Complex(g(rng), g(rng));
      m = (0.5 * (m + m.adjoint())).eval();
      const EigenDecomposition e = hermitian_eig(m);
      const CMatrix back = e.vectors * e.values.cast<Complex>().asDiagonal() * e.vectors.adjoint();
      worst = std::max(worst, (back - m).norm());
    }
    ok = worst < 1e-10;
    return kv("residual", worst);
  });

  s.run("transport duality", [&](bool& ok) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const int m = 1 + t % 5;
      const int n = 1 + (t / 5) % 5;
      std::vector<double> a(static_cast<std::size_t>(m)), b(static_cast<std::size_t>(n));
      for (double& x : a) x = u(rng) + 0.05;
      for (double& x : b) x = u(rng) + 0.05;
      double sa = 0.0, sb = 0.0;
      for (double x : a) sa += x;
      for (double x : b) sb += x;
      for (double& x : b) x *= sa / sb;
      RMatrix c = RMatrix::NullaryExpr(m, n, [&] { return u(rng); });
      const ClassicalCoupling cc = solve_transport(a, b, c);
      worst = std::max({worst, std::abs(cc.cost - cc.dual_value), -cc.min_reduced_cost});
    }
    ok = worst < 1e-9;
    return kv("worst", worst);
  });

  s.run("equal-mass equality", [&](bool& ok) {
    const PhaseSpaceContext ctx(1.0);
    const Mk2Result r = mk2_squared(equal_mass_problem(ctx, 1.0, 2.0), opts);
    const EqualMassDualWitness w = equal_mass_dual_witness(ctx, 1.0, 2.0);
    const AnsatzOptimum opt = optimize_equal_mass_ansatz(ctx, 1.0, 2.0);
    ok = std::abs(r.value - 1.0) < 1e-6 && std::abs(w.witness.bound - 1.0) < 1e-9 && w.witness.is_valid() &&
         std::abs(opt.value - 1.0) < 1e-9;
    return kv("mk2", r.value) + kv("witness", w.witness.bound) + kv("ansatz", opt.value);
  });

  s.run("unequal-mass improvement", [&](bool& ok) {
    const PhaseSpaceContext ctx(1.0);
    const TransportProblem pr = unequal_mass_problem(ctx, 1.0, 0.5);
    const double cc = w2_squared_1d(pr.config_x, pr.config_y);
    const double eps = demonstration_eps(ctx, 1.0, 0.5);
    const Coupling qe = build_named_coupling(PerturbedCoupling{eps}, ctx, {1.0, 1.0, 0.5});
    const Mk2Result r = mk2_squared(pr, opts);
    ok = r.value <= qe.value + 1e-6 && qe.value < cc;
    return kv("c_classical", cc) + kv("trace_CQeps", qe.value) + kv("c_quantum", r.value);
  });

  s.run("quantum correction marginals", [&](bool& ok) {
    const PhaseSpaceContext ctx(1.0);
    const Coupling qq = build_named_coupling(QuantumCorrection{}, ctx, {1.0, 1.0, 0.5});
    const double t1 = partial_trace(qq.matrix, 2, 2, TraceSide::First).cwiseAbs().maxCoeff();
    const double t2 = partial_trace(qq.matrix, 2, 2, TraceSide::Second).cwiseAbs().maxCoeff();
    ok = t1 < 1e-12 && t2 < 1e-12 && std::abs(qq.matrix.trace()) < 1e-12;
    return kv("trace1", t1) + kv("trace2", t2);
  });

  s.run("toeplitz inequality", [&](bool& ok) {
    const PhaseSpaceContext ctx(1.0);
    double worst = 1e300;
    for (int t = 0; t < 5; ++t) {
      const auto x = random_line_config(rng, 2 + t % 2);
      const auto y = random_line_config(rng, 2 + (t + 1) % 2);
      worst = std::min(worst, check_toeplitz_inequality(ctx, x, y, opts).slack);
    }
    ok = worst >= -1e-6;
    return kv("min_slack", worst);
  });

  s.run("spectator invariance", [&](bool& ok) {
    const PhaseSpaceContext ctx(1.0);
    const auto x = random_line_config(rng, 2);
    const auto y = random_line_config(rng, 2);
    const double base = mk2_squared(ctx, x, y, opts).value;
    auto pts = x.points();
    auto w = x.weights();
    pts.push_back({5.0, 1.0});
    w.push_back(0.0);
    const double padded = mk2_squared(ctx, WeightedConfiguration(pts, w), y, opts).value;
    ok = std::abs(base - padded) < 1e-7;
    return kv("base", base) + kv("padded", padded);
  });

  s.run("gap vs hbar", [&](bool& ok) {
    const GapTable t = gap_vs_hbar(1.0, 0.5, {1.0, 0.5, 0.25}, opts);
    ok = t.positive && t.decreasing && t.slope_ok;
    std::string d;
    for (const auto& r : t.rows) d += kv("gap", r.gap);
    return d + kv("slope", t.slope);
  });

  return s.results;
}

}  // namespace qot
