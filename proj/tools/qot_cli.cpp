// qot: command-line front end for the transport computations.
//
// Exit status: 0 success, 1 a verification failed, 2 bad input.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "qot/error.hpp"
#include "qot/semiclassical_checks.hpp"
#include "qot/serialization.hpp"

namespace {

using namespace qot;

constexpr int kOk = 0;
constexpr int kVerificationFailed = 1;
constexpr int kInputError = 2;

int log_level() {
  const char* env = std::getenv("QOT_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug" || v == "2") return 2;
  if (v == "info" || v == "1") return 1;
  return 0;
}

void log(int level, const std::string& msg) {
  if (log_level() >= level) std::cerr << "[qot] " << msg << '\n';
}

std::string fmt(double v) { return format_number(v); }

struct SolverFlags {
  double tolerance = 1e-8;
  std::int64_t max_iterations = 200000;
  std::string trace_path;

  void attach(CLI::App* app) {
    app->add_option("--sdp-tol", tolerance, "SDP stopping tolerance")->capture_default_str();
    app->add_option("--max-iter", max_iterations, "SDP iteration limit")->capture_default_str();
    app->add_option("--sdp-trace", trace_path, "write the SDP iteration trace as CSV");
  }
};

// Keeps the optional trace stream alive for the duration of a solve.
struct SolverSetup {
  SdpOptions opts;
  std::ofstream trace;

  explicit SolverSetup(const SolverFlags& f) {
    opts.tolerance = f.tolerance;
    opts.max_iterations = f.max_iterations;
    if (!f.trace_path.empty()) {
      trace.open(f.trace_path);
      if (!trace) throw Error(ErrorCode::InvalidInput, "cannot write " + f.trace_path);
      opts.trace = &trace;
    }
  }
};

struct PairFlags {
  std::string config;
  std::string config_x;
  std::string config_y;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "JSON array with the two configurations");
    app->add_option("--config-x", config_x, "JSON file with the first configuration");
    app->add_option("--config-y", config_y, "JSON file with the second configuration");
  }

  std::pair<ConfigFile, ConfigFile> load() const {
    if (!config.empty()) return load_config_pair(config);
    if (config_x.empty() || config_y.empty()) {
      throw Error(ErrorCode::InvalidInput, "give --config or both --config-x and --config-y");
    }
    auto x = load_config(config_x);
    auto y = load_config(config_y);
    if (x.hbar != y.hbar) throw Error(ErrorCode::InvalidInput, "configurations disagree on hbar");
    return {std::move(x), std::move(y)};
  }
};

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path);
  out << j.dump(2) << '\n';
}

int cmd_w2(const PairFlags& pair, const std::string& plan_csv) {
  const auto [x, y] = pair.load();
  RMatrix cost(static_cast<Eigen::Index>(x.config.size()), static_cast<Eigen::Index>(y.config.size()));
  for (std::size_t i = 0; i < x.config.size(); ++i)
    for (std::size_t j = 0; j < y.config.size(); ++j) {
      const double dq = x.config.points()[i].q - y.config.points()[j].q;
      const double dp = x.config.points()[i].p - y.config.points()[j].p;
      cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dq * dq + dp * dp;
    }
  const ClassicalCoupling c = solve_transport(x.config.weights(), y.config.weights(), cost);
  std::cout << "w2_squared " << fmt(c.cost) << '\n';
  std::cout << "dual_value " << fmt(c.dual_value) << '\n';
  if (!plan_csv.empty()) {
    std::ofstream out(plan_csv);
    if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + plan_csv);
    write_csv(out, c.plan);
  }
  return kOk;
}

int cmd_mk2(const PairFlags& pair, const SolverFlags& sf, const std::string& coupling_json,
            const std::string& witness_json) {
  const auto [x, y] = pair.load();
  SolverSetup setup(sf);
  const PhaseSpaceContext ctx(x.hbar);
  const Mk2Result r = mk2_squared(ctx, x.config, y.config, setup.opts);
  std::cout << "mk2_squared " << fmt(r.value) << '\n';
  std::cout << "dual_value " << fmt(r.report.dual_value) << '\n';
  std::cout << "certified_lower_bound " << fmt(r.report.certified_lower_bound) << '\n';
  std::cout << "duality_gap " << fmt(r.report.gap) << '\n';
  std::cout << "witness_bound " << fmt(r.witness.bound) << '\n';
  std::cout << "witness_min_slack " << fmt(r.witness.slack_spectrum(0)) << '\n';
  std::cout << "iterations " << r.report.iterations << '\n';
  if (!coupling_json.empty()) write_json(coupling_json, coupling_to_json(r.coupling));
  if (!witness_json.empty()) write_json(witness_json, witness_to_json(r.witness));
  return r.report.converged ? kOk : kVerificationFailed;
}

int cmd_equal_mass(double a, double b, double hbar, double tol, const SolverFlags& sf) {
  SolverSetup setup(sf);
  const PhaseSpaceContext ctx(hbar);
  const TransportProblem pr = equal_mass_problem(ctx, a, b);
  const double cc = w2_squared_1d(pr.config_x, pr.config_y);
  const Mk2Result r = mk2_squared(pr, setup.opts);
  const AnsatzOptimum opt = optimize_equal_mass_ansatz(ctx, a, b);
  std::cout << "C_c " << fmt(cc) << '\n';
  std::cout << "C_q " << fmt(r.value) << '\n';
  std::cout << "ansatz_value " << fmt(opt.value) << " at p " << fmt(opt.p) << '\n';
  std::cout << "duality_gap " << fmt(r.report.gap) << '\n';
  // The closed-form witness is built for a < b; for a > b the roles swap.
  if (a != b) {
    const EqualMassDualWitness w = a < b ? equal_mass_dual_witness(ctx, a, b) : equal_mass_dual_witness(ctx, b, a);
    std::cout << "witness_bound " << fmt(w.witness.bound) << '\n';
  }
  const bool ok = std::abs(r.value - cc) <= tol * std::max(1.0, std::abs(cc)) && r.report.gap <= tol;
  std::cout << (ok ? "verdict C_q = C_c\n" : "verdict MISMATCH\n");
  return ok ? kOk : kVerificationFailed;
}

int cmd_unequal_mass(double a, double eta, double hbar, std::optional<double> eps_flag, double tol,
                     const SolverFlags& sf) {
  SolverSetup setup(sf);
  const PhaseSpaceContext ctx(hbar);
  const TransportProblem pr = unequal_mass_problem(ctx, a, eta);
  const double cc = w2_squared_1d(pr.config_x, pr.config_y);
  const double eps = eps_flag ? *eps_flag : demonstration_eps(ctx, a, eta);
  const Coupling qe = build_named_coupling(PerturbedCoupling{eps}, ctx, {a, a, eta});
  const Mk2Result r = mk2_squared(pr, setup.opts);
  std::cout << "C_c " << fmt(cc) << '\n';
  std::cout << "eps " << fmt(eps) << '\n';
  std::cout << "trace_CQ_eps " << fmt(qe.value) << '\n';
  std::cout << "C_q " << fmt(r.value) << '\n';
  std::cout << "duality_gap " << fmt(r.report.gap) << '\n';
  const bool ok = r.value <= qe.value + tol && qe.value < cc;
  std::cout << (ok ? "verdict quantum strictly cheaper\n" : "verdict NO IMPROVEMENT\n");
  return ok ? kOk : kVerificationFailed;
}

struct SweepFlags {
  std::string scenario = "equal";
  std::vector<double> a{1.0};
  std::vector<double> b{2.0};
  std::vector<double> eta{0.5};
  std::vector<double> hbar{1.0};
  std::vector<double> eps;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
};

int cmd_sweep(const SweepFlags& f, const SolverFlags& sf) {
  if (f.scenario != "equal" && f.scenario != "unequal") {
    throw Error(ErrorCode::InvalidInput, "scenario must be 'equal' or 'unequal'");
  }
  struct Task {
    double a, b, eta, hbar;
    std::optional<double> eps;
  };
  std::vector<Task> tasks;
  for (double a : f.a)
    for (double h : f.hbar) {
      if (f.scenario == "equal") {
        for (double b : f.b) tasks.push_back({a, b, 0.0, h, std::nullopt});
      } else {
        for (double e : f.eta) {
          if (f.eps.empty()) tasks.push_back({a, a, e, h, std::nullopt});
          for (double eps : f.eps) tasks.push_back({a, a, e, h, eps});
        }
      }
    }

  std::vector<std::string> rows(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::size_t next = 0;
  std::mutex mu;
  SdpOptions opts;
  opts.tolerance = sf.tolerance;
  opts.max_iterations = sf.max_iterations;

  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next == tasks.size()) return;
        k = next++;
      }
      const Task& t = tasks[k];
      try {
        const PhaseSpaceContext ctx(t.hbar);
        const TransportProblem pr =
            f.scenario == "equal" ? equal_mass_problem(ctx, t.a, t.b) : unequal_mass_problem(ctx, t.a, t.eta);
        const double cc = w2_squared_1d(pr.config_x, pr.config_y);
        const Mk2Result r = mk2_squared(pr, opts);
        double eps = 0.0;
        if (f.scenario == "unequal") eps = t.eps ? *t.eps : demonstration_eps(ctx, t.a, t.eta);
        rows[k] = f.scenario + "," + fmt(t.a) + "," + fmt(t.b) + "," + fmt(t.eta) + "," + fmt(t.hbar) + "," +
                  fmt(eps) + "," + fmt(cc) + "," + fmt(r.value) + "," + fmt(cc - r.value) + "," +
                  fmt(r.report.gap) + "," + std::to_string(r.report.iterations);
        log(1, "done " + rows[k]);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < std::max(1u, f.threads); ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!errors[k].empty()) throw Error(ErrorCode::InvalidInput, "sweep entry " + std::to_string(k) + ": " + errors[k]);
  }
  std::ofstream file;
  if (!f.out.empty()) {
    file.open(f.out);
    if (!file) throw Error(ErrorCode::InvalidInput, "cannot write " + f.out);
  }
  std::ostream& out = f.out.empty() ? std::cout : file;
  out << "scenario,a,b,eta,hbar,eps,c_classical,c_quantum,gap,dual_gap,iterations\n";
  for (const auto& r : rows) out << r << '\n';
  return kOk;
}

int cmd_husimi(const PairFlags& pair, double a, double b, double hbar, const GridSpec& grid, const SolverFlags& sf) {
  SolverSetup setup(sf);
  std::optional<PhaseSpaceContext> ctx;
  std::optional<WeightedConfiguration> x, y;
  if (!pair.config.empty() || !pair.config_x.empty()) {
    auto [cx, cy] = pair.load();
    ctx.emplace(cx.hbar);
    x.emplace(cx.config);
    y.emplace(cy.config);
  } else {
    ctx.emplace(hbar);
    const TransportProblem pr = equal_mass_problem(*ctx, a, b);
    x.emplace(pr.config_x);
    y.emplace(pr.config_y);
  }
  const HusimiBoundReport r = check_husimi_bound(*ctx, *x, *y, grid, setup.opts);
  std::cout << "w2_husimi " << fmt(r.w2_husimi) << '\n';
  std::cout << "w2_coarse " << fmt(r.w2_coarse) << '\n';
  std::cout << "mk2_squared " << fmt(r.mk2) << '\n';
  std::cout << "bound " << fmt(r.mk2 + 4.0 * r.hbar) << '\n';
  std::cout << "refinement_change " << fmt(r.refinement_change) << '\n';
  std::cout << "discretization_error " << fmt(r.discretization_error) << '\n';
  std::cout << "boundary_mass " << fmt(r.boundary_mass) << '\n';
  std::cout << "slack " << fmt(r.slack) << '\n';
  std::cout << (r.holds() ? "verdict bound holds\n" : "verdict BOUND VIOLATED\n");
  return r.holds() ? kOk : kVerificationFailed;
}

int cmd_verify(const SolverFlags& sf) {
  SolverSetup setup(sf);
  bool all = true;
  for (const CheckResult& r : run_invariant_suite(setup.opts)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    all = all && r.passed;
  }
  return all ? kOk : kVerificationFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum and classical quadratic transport between coherent-state mixtures"};
  app.require_subcommand(1);
  SolverFlags solver;

  PairFlags w2_pair;
  std::string plan_csv;
  auto* w2 = app.add_subcommand("w2", "classical W2^2 between the symbols of two configurations");
  w2_pair.attach(w2);
  w2->add_option("--plan-csv", plan_csv, "write the optimal plan as CSV");

  PairFlags mk2_pair;
  std::string coupling_json, witness_json;
  auto* mk2 = app.add_subcommand("mk2", "quantum MK2^2 with a dual certificate");
  mk2_pair.attach(mk2);
  solver.attach(mk2);
  mk2->add_option("--coupling-json", coupling_json, "write the optimal coupling as JSON");
  mk2->add_option("--witness-json", witness_json, "write the dual witness as JSON");

  double a = 1.0, b = 2.0, hbar = 1.0, eta = 0.5, tol = 1e-6;
  std::optional<double> eps;
  auto* eq = app.add_subcommand("equal-mass", "two symmetric pairs with equal masses");
  eq->add_option("--a", a)->capture_default_str();
  eq->add_option("--b", b)->capture_default_str();
  eq->add_option("--hbar", hbar)->capture_default_str();
  eq->add_option("--tol", tol, "agreement tolerance")->capture_default_str();
  solver.attach(eq);

  auto* uneq = app.add_subcommand("unequal-mass", "symmetric pair against an unbalanced pair");
  uneq->add_option("--a", a)->capture_default_str();
  uneq->add_option("--eta", eta)->capture_default_str();
  uneq->add_option("--hbar", hbar)->capture_default_str();
  uneq->add_option("--eps", eps, "perturbation size (default min(0.01, eps_max / 2))");
  uneq->add_option("--tol", tol, "comparison tolerance")->capture_default_str();
  solver.attach(uneq);

  SweepFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep written as CSV");
  sweep->add_option("--scenario", sweep_flags.scenario, "equal or unequal")->capture_default_str();
  sweep->add_option("--a", sweep_flags.a)->delimiter(',');
  sweep->add_option("--b", sweep_flags.b)->delimiter(',');
  sweep->add_option("--eta", sweep_flags.eta)->delimiter(',');
  sweep->add_option("--hbar", sweep_flags.hbar)->delimiter(',');
  sweep->add_option("--eps", sweep_flags.eps)->delimiter(',');
  sweep->add_option("--threads", sweep_flags.threads)->capture_default_str();
  sweep->add_option("--out", sweep_flags.out, "CSV path (default stdout)");
  solver.attach(sweep);

  PairFlags husimi_pair;
  GridSpec grid;
  auto* hus = app.add_subcommand("husimi-bound", "Husimi W2 against MK2 + 4 hbar on a grid");
  husimi_pair.attach(hus);
  hus->add_option("--a", a)->capture_default_str();
  hus->add_option("--b", b)->capture_default_str();
  hus->add_option("--hbar", hbar)->capture_default_str();
  hus->add_option("--lo", grid.lo)->capture_default_str();
  hus->add_option("--hi", grid.hi)->capture_default_str();
  hus->add_option("--step", grid.step)->capture_default_str();
  hus->add_option("--grid-tol", grid.tolerance, "claimed discretization tolerance")->capture_default_str();
  hus->add_option("--max-support", grid.transport.max_support)->capture_default_str();
  solver.attach(hus);

  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  solver.attach(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*w2) return cmd_w2(w2_pair, plan_csv);
    if (*mk2) return cmd_mk2(mk2_pair, solver, coupling_json, witness_json);
    if (*eq) return cmd_equal_mass(a, b, hbar, tol, solver);
    if (*uneq) return cmd_unequal_mass(a, eta, hbar, eps, tol, solver);
    if (*sweep) return cmd_sweep(sweep_flags, solver);
    if (*hus) return cmd_husimi(husimi_pair, a, b, hbar, grid, solver);
    if (*verify) return cmd_verify(solver);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool input = e.code() == ErrorCode::InvalidInput || e.code() == ErrorCode::NonFinite ||
                       e.code() == ErrorCode::NearDependentStates || e.code() == ErrorCode::InfeasibleMasses ||
                       e.code() == ErrorCode::NonzeroMomentum || e.code() == ErrorCode::InfeasibleAnsatz ||
                       e.code() == ErrorCode::DimensionMismatch || e.code() == ErrorCode::GridMismatch;
    return input ? kInputError : kVerificationFailed;
  }
  return kOk;
}
