#include "qot/classical_transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "qot/error.hpp"

namespace qot {

namespace {

constexpr double kPerturbation = 1e-13;
constexpr int kDegenerateStreakForBland = 32;

struct Arc {
  Eigen::Index row;
  Eigen::Index col;
  double flow;
};

// Spanning tree over M row nodes [0, M) and N column nodes [M, M + N).
class TransportTree {
 public:
  TransportTree(Eigen::Index rows, Eigen::Index cols)
      : rows_(rows), cols_(cols), adjacency_(static_cast<std::size_t>(rows + cols)) {}

  void add(Arc arc) {
    const auto id = static_cast<int>(arcs_.size());
    arcs_.push_back(arc);
    link(id);
  }

  void replace(int id, Arc arc) {
    unlink(id);
    arcs_[static_cast<std::size_t>(id)] = arc;
    link(id);
  }

  std::vector<Arc>& arcs() { return arcs_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  // Breadth-first labelling from node 0: parents, depths and potentials.
  void label(const RMatrix& cost, RVector& u, RVector& v) {
    const auto total = static_cast<std::size_t>(rows_ + cols_);
    parent_arc_.assign(total, -1);
    depth_.assign(total, -1);
    order_.clear();
    order_.push_back(0);
    depth_[0] = 0;
    u(0) = 0.0;
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const int node = order_[head];
      for (int id : adjacency_[static_cast<std::size_t>(node)]) {
        const int other = other_end(id, node);
        if (depth_[static_cast<std::size_t>(other)] >= 0) continue;
        depth_[static_cast<std::size_t>(other)] = depth_[static_cast<std::size_t>(node)] + 1;
        parent_arc_[static_cast<std::size_t>(other)] = id;
        const Arc& a = arcs_[static_cast<std::size_t>(id)];
        if (other >= rows_) v(other - rows_) = cost(a.row, a.col) - u(a.row);
        else u(other) = cost(a.row, a.col) - v(a.col);
        order_.push_back(other);
      }
    }
    if (order_.size() != total) throw Error(ErrorCode::NumericalBreakdown, "transport basis is not spanning");
  }

  // Flows determined by the tree and the given masses (leaf elimination).
  void recompute_flows(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> residual(static_cast<std::size_t>(rows_ + cols_));
    for (Eigen::Index i = 0; i < rows_; ++i) residual[static_cast<std::size_t>(i)] = supply[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < cols_; ++j)
      residual[static_cast<std::size_t>(rows_ + j)] = demand[static_cast<std::size_t>(j)];
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const int node = *it;
      const int id = parent_arc_[static_cast<std::size_t>(node)];
      if (id < 0) continue;
      Arc& a = arcs_[static_cast<std::size_t>(id)];
      a.flow = residual[static_cast<std::size_t>(node)];
      const int up = other_end(id, node);
      residual[static_cast<std::size_t>(up)] -= a.flow;
    }
  }

  // Arcs on the tree path from column node of `col` to row node of `row`,
  // starting at the column end.
  std::vector<int> path(Eigen::Index row, Eigen::Index col) const {
    int a = static_cast<int>(rows_ + col);
    int b = static_cast<int>(row);
    std::vector<int> from_a;
    std::vector<int> from_b;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)]) {
        const int id = parent_arc_[static_cast<std::size_t>(a)];
        from_a.push_back(id);
        a = other_end(id, a);
      } else {
        const int id = parent_arc_[static_cast<std::size_t>(b)];
        from_b.push_back(id);
        b = other_end(id, b);
      }
    }
    from_a.insert(from_a.end(), from_b.rbegin(), from_b.rend());
    return from_a;
  }

 private:
  int other_end(int id, int node) const {
    const Arc& a = arcs_[static_cast<std::size_t>(id)];
    const int r = static_cast<int>(a.row);
    const int c = static_cast<int>(rows_ + a.col);
    return node == r ? c : r;
  }

  void link(int id) {
    const Arc& a = arcs_[static_cast<std::size_t>(id)];
    adjacency_[static_cast<std::size_t>(a.row)].push_back(id);
    adjacency_[static_cast<std::size_t>(rows_ + a.col)].push_back(id);
  }

  void unlink(int id) {
    const Arc& a = arcs_[static_cast<std::size_t>(id)];
    for (auto node : {static_cast<std::size_t>(a.row), static_cast<std::size_t>(rows_ + a.col)}) {
      auto& list = adjacency_[node];
      list.erase(std::find(list.begin(), list.end(), id));
    }
  }

  Eigen::Index rows_;
  Eigen::Index cols_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> parent_arc_;
  std::vector<int> depth_;
  std::vector<int> order_;
};

// Matrix-minimum starting basis; every allocation retires exactly one line so
// the M + N - 1 arcs form a spanning tree even through ties.
void initial_basis(TransportTree& tree, std::span<const double> supply, std::span<const double> demand,
                   const RMatrix& cost) {
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();
  std::vector<Eigen::Index> cells(static_cast<std::size_t>(m * n));
  std::iota(cells.begin(), cells.end(), 0);
  std::stable_sort(cells.begin(), cells.end(), [&](Eigen::Index a, Eigen::Index b) {
    return cost(a / n, a % n) < cost(b / n, b % n);
  });

  std::vector<double> row_left(supply.begin(), supply.end());
  std::vector<double> col_left(demand.begin(), demand.end());
  std::vector<char> row_done(static_cast<std::size_t>(m), 0);
  std::vector<char> col_done(static_cast<std::size_t>(n), 0);
  Eigen::Index rows_open = m;
  Eigen::Index cols_open = n;
  const Eigen::Index needed = m + n - 1;
  Eigen::Index placed = 0;

  for (Eigen::Index cell : cells) {
    if (placed == needed) break;
    const Eigen::Index i = cell / n;
    const Eigen::Index j = cell % n;
    auto& ri = row_left[static_cast<std::size_t>(i)];
    auto& cj = col_left[static_cast<std::size_t>(j)];
    if (row_done[static_cast<std::size_t>(i)] || col_done[static_cast<std::size_t>(j)]) continue;
    const double amount = std::min(ri, cj);
    tree.add({i, j, amount});
    ++placed;
    ri -= amount;
    cj -= amount;
    bool retire_row = ri <= cj;
    if (rows_open == 1) retire_row = false;
    if (cols_open == 1) retire_row = true;
    if (retire_row) {
      row_done[static_cast<std::size_t>(i)] = 1;
      --rows_open;
      cj += ri;  // push rounding residue onto the surviving line
    } else {
      col_done[static_cast<std::size_t>(j)] = 1;
      --cols_open;
      ri += cj;
    }
  }
}

}  // namespace

ClassicalCoupling solve_transport(std::span<const double> masses_m, std::span<const double> masses_n,
                                  const RMatrix& cost) {
  const auto m = static_cast<Eigen::Index>(masses_m.size());
  const auto n = static_cast<Eigen::Index>(masses_n.size());
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidInput, "empty marginal");
  if (cost.rows() != m || cost.cols() != n) throw Error(ErrorCode::DimensionMismatch, "cost matrix shape");
  if (!cost.allFinite()) throw Error(ErrorCode::NonFinite, "cost matrix has non-finite entries");
  for (double w : masses_m)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidInput, "masses must be non-negative");
  for (double w : masses_n)
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidInput, "masses must be non-negative");
  const double total_m = std::accumulate(masses_m.begin(), masses_m.end(), 0.0);
  const double total_n = std::accumulate(masses_n.begin(), masses_n.end(), 0.0);
  if (std::abs(total_m - total_n) > 1e-9 * std::max(1.0, total_m)) {
    throw Error(ErrorCode::InfeasibleMasses, "marginal totals differ");
  }

  const double eps = kPerturbation * std::max(total_m, 1e-300);
  std::vector<double> supply(masses_m.begin(), masses_m.end());
  std::vector<double> demand(masses_n.begin(), masses_n.end());
  for (double& s : supply) s += eps;
  // Balance against the supply total so rounding in the inputs does not leak
  // into the tree flows.
  demand.back() += std::accumulate(supply.begin(), supply.end(), 0.0) -
                   std::accumulate(demand.begin(), demand.end(), 0.0);

  TransportTree tree(m, n);
  initial_basis(tree, supply, demand, cost);

  RVector u(m);
  RVector v(n);
  const double max_cost = cost.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * (1.0 + max_cost);
  const Eigen::Index cells = m * n;
  const Eigen::Index block = std::max<Eigen::Index>(64, static_cast<Eigen::Index>(std::sqrt(double(cells))));
  const std::int64_t max_pivots = 1000 + 50 * static_cast<std::int64_t>(cells);

  Eigen::Index cursor = 0;
  int degenerate_streak = 0;
  std::int64_t pivots = 0;
  tree.label(cost, u, v);
  tree.recompute_flows(supply, demand);

  for (;;) {
    // Pricing.
    Eigen::Index entering = -1;
    if (degenerate_streak >= kDegenerateStreakForBland) {
      for (Eigen::Index c = 0; c < cells && entering < 0; ++c) {
        if (cost(c / n, c % n) - u(c / n) - v(c % n) < -tol) entering = c;
      }
    } else {
      double best = -tol;
      Eigen::Index scanned = 0;
      while (scanned < cells) {
        const Eigen::Index stop = std::min(scanned + block, cells);
        for (; scanned < stop; ++scanned) {
          const Eigen::Index c = cursor;
          cursor = cursor + 1 == cells ? 0 : cursor + 1;
          const double d = cost(c / n, c % n) - u(c / n) - v(c % n);
          if (d < best || (d == best && entering >= 0 && c < entering)) {
            best = d;
            entering = c;
          }
        }
        if (entering >= 0) break;
      }
    }
    if (entering < 0) break;
    if (++pivots > max_pivots) throw Error(ErrorCode::NumericalBreakdown, "transportation simplex pivot limit");

    const Eigen::Index ei = entering / n;
    const Eigen::Index ej = entering % n;
    const std::vector<int> cycle = tree.path(ei, ej);
    // Arcs at even positions of the path (0, 2, ...) lose flow.
    int leaving = -1;
    double theta = std::numeric_limits<double>::infinity();
    Eigen::Index leaving_cell = cells;
    for (std::size_t k = 0; k < cycle.size(); k += 2) {
      const Arc& a = tree.arcs()[static_cast<std::size_t>(cycle[k])];
      const double f = std::max(0.0, a.flow);
      const Eigen::Index cell = a.row * n + a.col;
      if (f < theta || (f == theta && cell < leaving_cell)) {
        theta = f;
        leaving = cycle[k];
        leaving_cell = cell;
      }
    }
    degenerate_streak = theta <= 1e-3 * eps ? degenerate_streak + 1 : 0;
    tree.replace(leaving, {ei, ej, theta});
    tree.label(cost, u, v);
    tree.recompute_flows(supply, demand);
  }

  ClassicalCoupling out;
  tree.recompute_flows(masses_m, masses_n);
  out.plan = RMatrix::Zero(m, n);
  for (const Arc& a : tree.arcs()) out.plan(a.row, a.col) += std::max(0.0, a.flow);
  out.cost = (out.plan.array() * cost.array()).sum();
  out.row_potentials = u;
  out.column_potentials = v;
  double dual = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) dual += masses_m[static_cast<std::size_t>(i)] * u(i);
  for (Eigen::Index j = 0; j < n; ++j) dual += masses_n[static_cast<std::size_t>(j)] * v(j);
  out.dual_value = dual;
  double min_reduced = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) min_reduced = std::min(min_reduced, cost(i, j) - u(i) - v(j));
  out.min_reduced_cost = min_reduced;
  out.pivots = pivots;
  return out;
}

RMatrix squared_distance_cost(std::span<const double> x, std::span<const double> y) {
  RMatrix c(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(y.size()));
  for (Eigen::Index i = 0; i < c.rows(); ++i)
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
      const double d = x[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)];
      c(i, j) = d * d;
    }
  return c;
}

ClassicalCoupling monotone_coupling_1d(const WeightedConfiguration& mu, const WeightedConfiguration& nu) {
  if (!mu.has_zero_momenta() || !nu.has_zero_momenta()) {
    throw Error(ErrorCode::NonzeroMomentum, "1D transport needs zero momenta");
  }
  const auto m = static_cast<Eigen::Index>(mu.size());
  const auto n = static_cast<Eigen::Index>(nu.size());
  auto sorted = [](const WeightedConfiguration& c) {
    std::vector<std::size_t> idx(c.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return c.points()[a].q < c.points()[b].q; });
    return idx;
  };
  const auto sx = sorted(mu);
  const auto sy = sorted(nu);

  ClassicalCoupling out;
  out.plan = RMatrix::Zero(m, n);
  std::size_t a = 0;
  std::size_t b = 0;
  double left_x = mu.weights()[sx[0]];
  double left_y = nu.weights()[sy[0]];
  while (a < sx.size() && b < sy.size()) {
    const double amount = std::min(left_x, left_y);
    out.plan(static_cast<Eigen::Index>(sx[a]), static_cast<Eigen::Index>(sy[b])) += amount;
    left_x -= amount;
    left_y -= amount;
    // Advance whichever side is exhausted; on a tie advance both.
    const bool next_x = left_x <= left_y;
    const bool next_y = left_y <= left_x;
    if (next_x && ++a < sx.size()) left_x = mu.weights()[sx[a]];
    if (next_y && ++b < sy.size()) left_y = nu.weights()[sy[b]];
  }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = mu.points()[static_cast<std::size_t>(i)].q - nu.points()[static_cast<std::size_t>(j)].q;
      out.cost += out.plan(i, j) * d * d;
    }
  out.dual_value = out.cost;
  return out;
}

double w2_squared_1d(const WeightedConfiguration& mu, const WeightedConfiguration& nu) {
  return monotone_coupling_1d(mu, nu).cost;
}

PhaseSpaceGrid PhaseSpaceGrid::square(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi > lo)) throw Error(ErrorCode::InvalidInput, "grid bounds");
  const int nodes = static_cast<int>(std::lround((hi - lo) / step)) + 1;
  return PhaseSpaceGrid{lo, lo, step, nodes, nodes};
}

namespace {

struct Atoms {
  std::vector<double> q;
  std::vector<double> p;
  std::vector<double> mass;
  double dropped = 0.0;
  double shift_squared = 0.0;  // sum of mass * |node - barycenter|^2
};

Atoms aggregate(const GridDensity& f, int k, double cutoff) {
  const PhaseSpaceGrid& g = f.grid;
  const double total = f.values.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidInput, "grid density has no mass");
  Atoms out;
  for (int bq = 0; bq < g.nq; bq += k) {
    for (int bp = 0; bp < g.np; bp += k) {
      double mass = 0.0;
      double mq = 0.0;
      double mp = 0.0;
      for (int iq = bq; iq < std::min(bq + k, g.nq); ++iq)
        for (int ip = bp; ip < std::min(bp + k, g.np); ++ip) {
          const double w = f.values(iq, ip) / total;
          mass += w;
          mq += w * g.q(iq);
          mp += w * g.p(ip);
        }
      if (mass < cutoff) {
        out.dropped += mass;
        continue;
      }
      const double cq = mq / mass;
      const double cp = mp / mass;
      for (int iq = bq; iq < std::min(bq + k, g.nq); ++iq)
        for (int ip = bp; ip < std::min(bp + k, g.np); ++ip) {
          const double w = f.values(iq, ip) / total;
          out.shift_squared += w * ((g.q(iq) - cq) * (g.q(iq) - cq) + (g.p(ip) - cp) * (g.p(ip) - cp));
        }
      out.q.push_back(cq);
      out.p.push_back(cp);
      out.mass.push_back(mass);
    }
  }
  const double kept = std::accumulate(out.mass.begin(), out.mass.end(), 0.0);
  for (double& w : out.mass) w /= kept;
  return out;
}

}  // namespace

GridTransportResult w2_squared_grid(const GridDensity& f, const GridDensity& g, const GridTransportOptions& opts) {
  if (!(f.grid == g.grid) || f.values.rows() != f.grid.nq || f.values.cols() != f.grid.np ||
      g.values.rows() != g.grid.nq || g.values.cols() != g.grid.np) {
    throw Error(ErrorCode::GridMismatch, "densities are sampled on different grids");
  }
  if ((f.values.array() < 0.0).any() || (g.values.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidInput, "negative density sample");
  }

  GridTransportResult out;
  Atoms af;
  Atoms ag;
  for (int k = 1;; ++k) {
    af = aggregate(f, k, opts.mass_cutoff);
    ag = aggregate(g, k, opts.mass_cutoff);
    if (std::max(af.mass.size(), ag.mass.size()) <= opts.max_support) {
      out.coarsening = k;
      break;
    }
  }

  RMatrix cost(static_cast<Eigen::Index>(af.mass.size()), static_cast<Eigen::Index>(ag.mass.size()));
  for (Eigen::Index i = 0; i < cost.rows(); ++i)
    for (Eigen::Index j = 0; j < cost.cols(); ++j) {
      const double dq = af.q[static_cast<std::size_t>(i)] - ag.q[static_cast<std::size_t>(j)];
      const double dp = af.p[static_cast<std::size_t>(i)] - ag.p[static_cast<std::size_t>(j)];
      cost(i, j) = dq * dq + dp * dp;
    }
  const ClassicalCoupling plan = solve_transport(af.mass, ag.mass, cost);

  out.value = plan.cost;
  out.dropped_mass = std::max(af.dropped, ag.dropped);
  out.support_f = af.mass.size();
  out.support_g = ag.mass.size();
  out.aggregation_shift = std::sqrt(af.shift_squared) + std::sqrt(ag.shift_squared);
  const double w = std::sqrt(std::max(0.0, out.value));
  out.aggregation_error_bound = (w + out.aggregation_shift) * (w + out.aggregation_shift) - out.value;
  return out;
}

}  // namespace qot
