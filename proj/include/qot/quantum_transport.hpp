#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "qot/conic_solver.hpp"
#include "qot/cost_operator.hpp"
#include "qot/gaussian_states.hpp"

namespace qot {

enum class TraceSide {
  First,   // trace out the first factor; result lives on basis_y
  Second,  // trace out the second factor; result lives on basis_x
};

/// Partial trace of an (M N) x (M N) matrix indexed (i, j) -> i * N + j.
CMatrix partial_trace(const CMatrix& m, Eigen::Index dim_x, Eigen::Index dim_y, TraceSide side);

/// Operator on span{e_k (x) f_l} together with trace(C Q). Couplings of R and
/// S are PSD with unit trace and partial traces R (over the second factor)
/// and S (over the first).
struct Coupling {
  OrthonormalBasis basis_x;
  OrthonormalBasis basis_y;
  CMatrix matrix;
  double value = 0.0;
};

struct CouplingDefects {
  double min_eigenvalue = 0.0;
  double trace_error = 0.0;
  double marginal_x_error = 0.0;  // max |trace_2 Q - R|
  double marginal_y_error = 0.0;  // max |trace_1 Q - S|

  bool is_coupling(double psd_tol = 1e-10, double marginal_tol = 1e-9) const {
    return min_eigenvalue >= -psd_tol && trace_error <= psd_tol && marginal_x_error <= marginal_tol &&
           marginal_y_error <= marginal_tol;
  }
};

CouplingDefects coupling_defects(const CMatrix& q, const CMatrix& r, const CMatrix& s);

/// Dual pair with A (x) 1 + 1 (x) B <= C on the compressed space.
struct DualWitness {
  CMatrix a;
  CMatrix b;
  double bound = 0.0;           // trace(R A) + trace(S B)
  RVector slack_spectrum;       // eigenvalues of C - A (x) 1 - 1 (x) B, ascending

  bool is_valid(double tol = 1e-9) const { return slack_spectrum.size() == 0 || slack_spectrum(0) >= -tol; }
};

DualWitness evaluate_witness(const CMatrix& cost, const CMatrix& r, const CMatrix& s, CMatrix a, CMatrix b);

/// Everything needed to pose MK2 between two Toeplitz densities.
struct TransportProblem {
  PhaseSpaceContext ctx;
  WeightedConfiguration config_x;
  WeightedConfiguration config_y;
  DensityMatrix r;
  DensityMatrix s;
  CostMatrix cost;
};

TransportProblem make_transport_problem(const PhaseSpaceContext& ctx, const WeightedConfiguration& config_x,
                                        const WeightedConfiguration& config_y);

/// Eigenvalues of R, S below this fraction of the largest are treated as zero
/// when restricting the SDP to range(R) (x) range(S).
inline constexpr double kSupportCutoff = 1e-12;

/// Coupling SDP: cost = compressed C, constraints trace(Q (H (x) 1)) = trace(R H)
/// and trace(Q (1 (x) K)) = trace(S K) over Hermitian bases H, K, plus trace(Q) = 1.
HermitianSdp coupling_sdp(const CMatrix& cost, const CMatrix& r, const CMatrix& s);

struct Mk2Result {
  double value = 0.0;  // primal objective of the returned coupling
  Coupling coupling;
  SolverReport report;
  DualWitness witness;  // from the SDP multipliers, shifted to be exactly feasible
};

Mk2Result mk2_squared(const TransportProblem& problem, const SdpOptions& opts = {});
Mk2Result mk2_squared(const PhaseSpaceContext& ctx, const WeightedConfiguration& config_x,
                      const WeightedConfiguration& config_y, const SdpOptions& opts = {});

// --- Two-point scenarios -------------------------------------------------

/// R = (|a><a| + |-a><-a|)/2, S = (|b><b| + |-b><-b|)/2 with bases pinned
/// to {phi+, phi-} and {psi+, psi-}.
TransportProblem equal_mass_problem(const PhaseSpaceContext& ctx, double a, double b);

/// R = (1+eta)/2 |a><a| + (1-eta)/2 |-a><-a|, S = (|a><a| + |-a><-a|)/2.
TransportProblem unequal_mass_problem(const PhaseSpaceContext& ctx, double a, double eta);

/// Equal-mass ansatz coordinates; Q = Q0 + (1/4) [checkerboard in p, u, v].
struct AnsatzParameters {
  double p = 0.0;
  double u = 0.0;
  double v = 0.0;

  double big_u() const noexcept { return 1.0 + u; }
  double big_v() const noexcept { return 1.0 + v; }
};

/// -1 + sqrt((l+m)^2 + U^2) <= p <= 1 - sqrt((l-m)^2 + V^2), with a small
/// tolerance for parameters placed exactly on the boundary.
bool ansatz_is_feasible(const AnsatzParameters& params, double lambda, double mu, double tol = 1e-12);

/// Saturated ansatz (U, V on the upper edge of the window) as a function of p.
AnsatzParameters saturated_ansatz(double p, double lambda, double mu);

struct AnsatzOptimum {
  double p = 0.0;
  double value = 0.0;  // trace(C Q) at the optimum
  double t = 0.0;      // gamma U + delta V at the optimum; 4 value = 2 t + w_prime
  double w_prime = 0.0;
};

/// Minimizes trace(C Q(p)) over the admissible p (golden section).
AnsatzOptimum optimize_equal_mass_ansatz(const PhaseSpaceContext& ctx, double a, double b);

struct Q0 {};
struct EqualMassAnsatz {
  AnsatzParameters params;
};
struct EqualMassOptimal {};
struct QuantizedClassical {};
struct QuantumCorrection {};
struct PerturbedCoupling {
  double eps = 0.0;
};

using CouplingKind =
    std::variant<Q0, EqualMassAnsatz, EqualMassOptimal, QuantizedClassical, QuantumCorrection, PerturbedCoupling>;

/// Scenario parameters: (a, b) for the equal-mass kinds, (a, eta) for the
/// unequal-mass kinds (QuantizedClassical, QuantumCorrection, PerturbedCoupling).
struct ScenarioParameters {
  double a = 1.0;
  double b = 2.0;
  double eta = 0.5;
};

/// Builds one of the explicit operators on the two-point product basis.
/// All kinds but QuantumCorrection are verified to be couplings (PSD, unit
/// trace, marginals R and S); failures throw InfeasibleAnsatz.
/// QuantumCorrection is the traceless, indefinite direction Q_q.
Coupling build_named_coupling(const CouplingKind& kind, const PhaseSpaceContext& ctx,
                              const ScenarioParameters& params);

/// Largest eps (bisection to 1e-10) such that Q_c + eps Q_q stays PSD.
double max_feasible_eps(const PhaseSpaceContext& ctx, double a, double eta);

/// eps = min(0.01, max_feasible_eps / 2).
double demonstration_eps(const PhaseSpaceContext& ctx, double a, double eta);

struct EqualMassDualWitness {
  DualWitness witness;
  double x = 0.0;    // a_bar + d_bar = b_bar + c_bar at the optimum
  double f_x = 0.0;  // value of the reduced dual objective
  double a_bar = 0.0;
  double b_bar = 0.0;
  double c_bar = 0.0;
  double d_bar = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
};

/// Diagonal dual ansatz A = diag(alpha1, alpha2), B = diag(beta1, beta2)
/// saturating both 2x2 block constraints. Certifies (a - b)^2.
EqualMassDualWitness equal_mass_dual_witness(const PhaseSpaceContext& ctx, double a, double b);

/// det of a 4x4 matrix with the (1,4)/(2,3) checkerboard pattern as
/// (a d - g^2)(b c - h^2) with the off-diagonal pairs multiplied out.
/// Throws PatternViolation when entries outside the pattern exceed 1e-12.
double block_determinant(const CMatrix& m);

/// Expansion Q = sum q_{ijkl} |x_i; y_j><x_k; y_l| in the coherent frame.
struct ToeplitzAnalysis {
  Eigen::Index dim_x = 0;
  Eigen::Index dim_y = 0;
  CMatrix coefficients;  // row (i, j) -> i * dim_y + j, column (k, l)
  bool is_representable = false;
  double off_diagonal_norm = 0.0;  // max |q_{ijkl}| over (i,j) != (k,l)
  std::vector<double> symbol_weights;  // q_{ijij}, indexed i * dim_y + j

  Complex coefficient(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    return coefficients(i * dim_y + j, k * dim_y + l);
  }
};

ToeplitzAnalysis toeplitz_analysis(const Coupling& coupling);

}  // namespace qot
