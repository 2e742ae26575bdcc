#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rpx/lp.hpp"
#include "rpx/problems.hpp"
#include "rpx/rng.hpp"
#include "rpx/solvers.hpp"

using namespace rpx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solve a square linear system by Gaussian elimination with partial
// pivoting. Returns false when the matrix is singular.
bool solve_square(DenseMatrix a, Vec b, Vec& x) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a.at(r, col)) > std::fabs(a.at(piv, col))) piv = r;
    if (std::fabs(a.at(piv, col)) < 1e-10) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a.at(piv, c), a.at(col, c));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a.at(r, col) / a.at(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a.at(r, c) -= f * a.at(col, c);
      b[r] -= f * b[col];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a.at(i, i);
  return true;
}

struct VertexScan {
  bool any_feasible = false;
  double best = -kInf;
};

// Brute-force oracle: every vertex of {Ax <= b, lo <= x <= hi} is the
// solution of n linearly independent tight constraints drawn from the m
// rows plus the 2n bounds. Enumerate all n-subsets, keep the feasible
// solutions, and take the best objective.
VertexScan enumerate_lp_vertices(const StandardFormLP& lp) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_rows();
  const std::size_t total = m + 2 * n;
  VertexScan scan;

  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;

  while (true) {
    DenseMatrix sys(n, n);
    Vec rhs(n, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
      const std::size_t c = pick[row];
      if (c < m) {
        for (std::size_t j = 0; j < n; ++j) sys.at(row, j) = lp.constraint.at(c, j);
        rhs[row] = lp.rhs[c];
      } else if (c < m + n) {
        sys.at(row, c - m) = 1.0;
        rhs[row] = lp.lower[c - m];
      } else {
        sys.at(row, c - m - n) = 1.0;
        rhs[row] = lp.upper[c - m - n];
      }
    }

    Vec x;
    if (solve_square(sys, rhs, x)) {
      bool ok = true;
      for (std::size_t j = 0; j < m && ok; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += lp.constraint.at(j, i) * x[i];
        if (s > lp.rhs[j] + 1e-9) ok = false;
      }
      for (std::size_t i = 0; i < n && ok; ++i)
        if (x[i] < lp.lower[i] - 1e-9 || x[i] > lp.upper[i] + 1e-9) ok = false;
      if (ok) {
        scan.any_feasible = true;
        scan.best = std::max(scan.best, dot(lp.objective, x));
      }
    }

    // next n-combination of {0..total-1} in lexicographic order
    std::size_t i = n;
    while (i-- > 0) {
      if (pick[i] + (n - i) < total) {
        ++pick[i];
        for (std::size_t j = i + 1; j < n; ++j) pick[j] = pick[j - 1] + 1;
        break;
      }
      if (i == 0) return scan;
    }
  }
}

StandardFormLP random_lp(Rng& rng, std::size_t n, std::size_t m) {
  StandardFormLP lp;
  lp.objective.resize(n);
  for (double& c : lp.objective) c = rng.uniform(-1.0, 2.0);
  lp.constraint = DenseMatrix(m, n);
  for (double& a : lp.constraint.data) a = rng.uniform(-1.0, 2.0);
  lp.rhs.resize(m);
  for (double& b : lp.rhs) b = rng.uniform(-0.5, 3.0);
  lp.lower.assign(n, 0.0);
  lp.upper.resize(n);
  for (double& u : lp.upper) u = rng.uniform(0.5, 2.0);
  return lp;
}

// Exhaustive binary optimum over {0,1}^d with the robust feasibility rule.
double exhaustive_binary_best(const KnapsackInstance& inst) {
  const std::size_t d = inst.dim();
  double best = -kInf;
  for (std::size_t mask = 0; mask < (std::size_t(1) << d); ++mask) {
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = (mask >> i) & 1 ? 1.0 : 0.0;
    EvalTerms t = knapsack_eval(inst, x);
    bool ok = true;
    for (double g : t.worst_cases)
      if (g > 1e-9) ok = false;
    if (ok) best = std::max(best, t.objective);
  }
  return best;
}

KnapsackInstance hand_instance() {
  // One item, one row: 1.5 x <= 1.2 after the robust fattening.
  KnapsackInstance inst;
  inst.values = {2.0};
  inst.nominal_weights = DenseMatrix(1, 1);
  inst.nominal_weights.at(0, 0) = 1.0;
  inst.capacities = {1.2};
  inst.rho = 0.5;
  inst.norm_kind = NormKind::box;
  return inst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Simplex

TEST_CASE("hand LP solves to the shared capacity") {
  StandardFormLP lp;
  lp.objective = {1.0, 1.0};
  lp.constraint = DenseMatrix(1, 2);
  lp.constraint.at(0, 0) = 1.0;
  lp.constraint.at(0, 1) = 1.0;
  lp.rhs = {1.0};
  lp.lower = {0.0, 0.0};
  lp.upper = {1.0, 1.0};

  SolveResult r = simplex_solve(lp);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.x[0] + r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("simplex agrees with vertex enumeration on 200 random LPs") {
  Rng rng(2024);
  int feasible_cases = 0, infeasible_cases = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.index(5);  // up to 6
    const std::size_t m = 1 + rng.index(6);
    StandardFormLP lp = random_lp(rng, n, m);
    VertexScan scan = enumerate_lp_vertices(lp);
    SolveResult r = simplex_solve(lp);

    if (scan.any_feasible) {
      REQUIRE(r.status == SolveStatus::optimal);
      CHECK(r.objective == doctest::Approx(scan.best).epsilon(1e-7));
      // The returned point must satisfy what it claims.
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += lp.constraint.at(j, i) * r.x[i];
        CHECK(s <= lp.rhs[j] + 1e-7);
      }
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(r.x[i] >= lp.lower[i] - 1e-7);
        CHECK(r.x[i] <= lp.upper[i] + 1e-7);
      }
      ++feasible_cases;
    } else {
      CHECK(r.status == SolveStatus::infeasible);
      ++infeasible_cases;
    }
  }
  // The draw ranges are tuned so both outcomes actually occur.
  CHECK(feasible_cases >= 50);
  CHECK(infeasible_cases >= 10);
}

TEST_CASE("duplicated degenerate rows still terminate at the optimum") {
  StandardFormLP lp;
  lp.objective = {3.0, 2.0, 1.0};
  lp.constraint = DenseMatrix(4, 3);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t i = 0; i < 3; ++i) lp.constraint.at(j, i) = 1.0;
  lp.rhs = {2.0, 2.0, 2.0, 2.0};  // same row four times
  lp.lower = {0.0, 0.0, 0.0};
  lp.upper = {1.0, 1.0, 1.0};

  SolveResult r = simplex_solve(lp);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(5.0));  // x = (1,1,0)
}

TEST_CASE("infeasible and unbounded LPs are detected") {
  StandardFormLP infeas;
  infeas.objective = {1.0};
  infeas.constraint = DenseMatrix(1, 1);
  infeas.constraint.at(0, 0) = 1.0;
  infeas.rhs = {-1.0};  // x <= -1 against x in [0,1]
  infeas.lower = {0.0};
  infeas.upper = {1.0};
  CHECK(simplex_solve(infeas).status == SolveStatus::infeasible);

  StandardFormLP unb;
  unb.objective = {1.0};
  unb.constraint = DenseMatrix(1, 1);
  unb.constraint.at(0, 0) = -1.0;
  unb.rhs = {0.0};  // -x <= 0, no upper bound
  unb.lower = {0.0};
  unb.upper = {kInf};
  CHECK(simplex_solve(unb).status == SolveStatus::unbounded);
}

TEST_CASE("a zero iteration budget reports the limit status") {
  StandardFormLP lp;
  lp.objective = {1.0, 1.0};
  lp.constraint = DenseMatrix(1, 2);
  lp.constraint.at(0, 0) = 1.0;
  lp.constraint.at(0, 1) = 1.0;
  lp.rhs = {1.5};
  lp.lower = {0.0, 0.0};
  lp.upper = {1.0, 1.0};
  CHECK(simplex_solve(lp, 0).status == SolveStatus::iteration_limit);
}

TEST_CASE("simplex is deterministic") {
  Rng rng(77);
  StandardFormLP lp = random_lp(rng, 5, 4);
  SolveResult a = simplex_solve(lp);
  SolveResult b = simplex_solve(lp);
  REQUIRE(a.status == b.status);
  REQUIRE(a.x.size() == b.x.size());
  CHECK(std::memcmp(a.x.data(), b.x.data(), a.x.size() * sizeof(double)) == 0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("status names are stable") {
  CHECK(status_name(SolveStatus::optimal) == "optimal");
  CHECK(status_name(SolveStatus::infeasible) == "infeasible");
  CHECK(status_name(SolveStatus::unbounded) == "unbounded");
  CHECK(status_name(SolveStatus::iteration_limit) == "iteration_limit");
  CHECK(status_name(SolveStatus::node_limit) == "node_limit");
}

// ---------------------------------------------------------------------------
// Robust counterpart

TEST_CASE("zero radius counterpart is the nominal LP") {
  KnapsackGenConfig cfg;
  cfg.dim = 5;
  cfg.rows = 3;
  cfg.count = 1;
  cfg.seed = 14;
  cfg.rho = 0.0;
  Dataset ds = generate_knapsack(cfg);
  const KnapsackInstance& inst = ds.knapsack[0];
  StandardFormLP lp = build_counterpart_lp(inst);
  for (std::size_t j = 0; j < inst.rows(); ++j)
    for (std::size_t i = 0; i < inst.dim(); ++i)
      CHECK(lp.constraint.at(j, i) == inst.nominal_weights.at(j, i));
  CHECK(lp.rhs == inst.capacities);
  CHECK(lp.objective == inst.values);
}

TEST_CASE("one-item counterpart solves by hand") {
  SolveResult r = simplex_solve(build_counterpart_lp(hand_instance()));
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.x[0] == doctest::Approx(0.8));
  CHECK(r.objective == doctest::Approx(1.6));
}

TEST_CASE("robustness never helps the optimum") {
  KnapsackGenConfig cfg;
  cfg.dim = 8;
  cfg.rows = 3;
  cfg.count = 100;
  cfg.seed = 15;
  cfg.rho = 0.2;
  Dataset ds = generate_knapsack(cfg);
  for (KnapsackInstance inst : ds.knapsack) {
    SolveResult robust = simplex_solve(build_counterpart_lp(inst));
    KnapsackInstance nominal = inst;
    nominal.rho = 0.0;
    SolveResult plain = simplex_solve(build_counterpart_lp(nominal));
    REQUIRE(robust.status == SolveStatus::optimal);
    REQUIRE(plain.status == SolveStatus::optimal);
    CHECK(robust.objective <= plain.objective + 1e-9);
  }
}

TEST_CASE("ellipsoid instances are refused by the LP oracle") {
  KnapsackInstance inst = hand_instance();
  inst.norm_kind = NormKind::ellipsoid;
  CHECK_THROWS_AS(build_counterpart_lp(inst), std::invalid_argument);
  CHECK_THROWS_AS(branch_and_bound_binary(inst), std::invalid_argument);
}

TEST_CASE("counterpart rows and the closed-form check agree") {
  Rng rng(16);
  KnapsackGenConfig cfg;
  cfg.dim = 6;
  cfg.rows = 3;
  cfg.count = 50;
  cfg.seed = 17;
  cfg.rho = 0.15;
  Dataset ds = generate_knapsack(cfg);
  int checked = 0;
  for (const KnapsackInstance& inst : ds.knapsack) {
    StandardFormLP lp = build_counterpart_lp(inst);
    Vec x(inst.dim());
    for (double& v : x) v = rng.uniform(0.01, 0.99);

    bool rows_ok = true, near_boundary = false;
    for (std::size_t j = 0; j < inst.rows(); ++j) {
      double s = -lp.rhs[j];
      for (std::size_t i = 0; i < inst.dim(); ++i) s += lp.constraint.at(j, i) * x[i];
      if (std::fabs(s) < 1e-5) near_boundary = true;
      if (s > 0.0) rows_ok = false;
    }
    if (near_boundary) continue;  // tolerance semantics differ at the edge

    CHECK(feasibility_check(inst, x).feasible == rows_ok);
    ++checked;
  }
  CHECK(checked >= 30);
}

// ---------------------------------------------------------------------------
// Branch and bound

TEST_CASE("branch and bound equals exhaustive enumeration") {
  Rng seeds(18);
  for (int rep = 0; rep < 50; ++rep) {
    KnapsackGenConfig cfg;
    cfg.dim = 6 + seeds.index(7);  // 6..12
    cfg.rows = 1 + seeds.index(4);
    cfg.count = 1;
    cfg.seed = 1000 + rep;
    cfg.rho = 0.05 + 0.2 * seeds.uniform01();
    cfg.binary_domain = true;
    Dataset ds = generate_knapsack(cfg);
    const KnapsackInstance& inst = ds.knapsack[0];

    SolveResult r = branch_and_bound_binary(inst);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.objective == doctest::Approx(exhaustive_binary_best(inst)).epsilon(1e-12));

    // The reported decision must be a feasible binary vector achieving it.
    for (double v : r.x) CHECK((v == 0.0 || v == 1.0));
    CHECK(feasibility_check(inst, r.x).feasible);
    CHECK(dot(inst.values, r.x) == doctest::Approx(r.objective));
  }
}

TEST_CASE("all items fit when the capacity is huge") {
  KnapsackGenConfig cfg;
  cfg.dim = 10;
  cfg.rows = 2;
  cfg.count = 1;
  cfg.seed = 19;
  cfg.binary_domain = true;
  Dataset ds = generate_knapsack(cfg);
  KnapsackInstance inst = ds.knapsack[0];
  inst.capacities.assign(inst.rows(), 1e6);

  SolveResult r = branch_and_bound_binary(inst);
  REQUIRE(r.status == SolveStatus::optimal);
  double total = 0.0;
  for (double v : inst.values) total += v;
  CHECK(r.objective == doctest::Approx(total));
  for (double v : r.x) CHECK(v == 1.0);
}

TEST_CASE("an extreme radius forces the empty selection") {
  KnapsackGenConfig cfg;
  cfg.dim = 6;
  cfg.rows = 2;
  cfg.count = 1;
  cfg.seed = 20;
  cfg.binary_domain = true;
  Dataset ds = generate_knapsack(cfg);
  KnapsackInstance inst = ds.knapsack[0];
  inst.rho = 100.0;  // any picked item alone exceeds every capacity

  SolveResult r = branch_and_bound_binary(inst);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == 0.0);
  for (double v : r.x) CHECK(v == 0.0);
}

TEST_CASE("the node limit returns the incumbent") {
  KnapsackInstance inst;
  inst.values = {2.0, 1.0};
  inst.nominal_weights = DenseMatrix(1, 2);
  inst.nominal_weights.at(0, 0) = 1.0;
  inst.nominal_weights.at(0, 1) = 1.0;
  inst.capacities = {1.2};
  inst.rho = 0.0;
  inst.norm_kind = NormKind::box;

  // Fractional relaxation (x = (1, 0.2)), so the root must branch; with a
  // single-node budget only the trivial incumbent x = 0 exists.
  SolveResult limited = branch_and_bound_binary(inst, 1);
  CHECK(limited.status == SolveStatus::node_limit);
  CHECK(limited.objective == 0.0);

  SolveResult full = branch_and_bound_binary(inst);
  REQUIRE(full.status == SolveStatus::optimal);
  CHECK(full.objective == doctest::Approx(2.0));
  CHECK(full.x[0] == 1.0);
  CHECK(full.x[1] == 0.0);
}

// ---------------------------------------------------------------------------
// Feasibility checks and reference solves

TEST_CASE("feasibility check clamps and applies the tolerance") {
  FeasibilityResult all_ok = feasibility_check(Vec{-1.0, -0.5});
  CHECK(all_ok.feasible);
  CHECK(all_ok.max_violation == 0.0);

  FeasibilityResult at_tol = feasibility_check(Vec{1e-6, -2.0});
  CHECK(at_tol.feasible);  // exactly at the tolerance still passes

  FeasibilityResult bad = feasibility_check(Vec{2e-6, -2.0});
  CHECK_FALSE(bad.feasible);
  CHECK(bad.max_violation == doctest::Approx(2e-6));
}

TEST_CASE("solver outputs pass their own feasibility check") {
  KnapsackGenConfig cfg;
  cfg.dim = 10;
  cfg.rows = 4;
  cfg.count = 20;
  cfg.seed = 22;
  Dataset ds = generate_knapsack(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SolveResult r = solve_reference(ds, i);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(feasibility_check(ds.knapsack[i], r.x).feasible);
  }
}

TEST_CASE("the saturated decision shows the expected violation") {
  KnapsackInstance inst = hand_instance();
  FeasibilityResult full = feasibility_check(inst, Vec{1.0});
  CHECK_FALSE(full.feasible);
  CHECK(full.max_violation == doctest::Approx(1.5 - 1.2));

  FeasibilityResult zero = feasibility_check(inst, Vec{0.0});
  CHECK(zero.feasible);
  CHECK(zero.max_violation == 0.0);
}

TEST_CASE("feasible points never beat the reference optimum") {
  Rng rng(23);
  KnapsackGenConfig cfg;
  cfg.dim = 8;
  cfg.rows = 3;
  cfg.count = 30;
  cfg.seed = 24;
  Dataset ds = generate_knapsack(cfg);
  int feasible_draws = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const KnapsackInstance& inst = ds.knapsack[i];
    SolveResult best = solve_reference(ds, i);
    REQUIRE(best.status == SolveStatus::optimal);
    for (int rep = 0; rep < 40; ++rep) {
      Vec x(inst.dim());
      for (double& v : x) v = rng.uniform(0.0, 0.35);
      if (!feasibility_check(inst, x).feasible) continue;
      CHECK(dot(inst.values, x) <= best.objective + 1e-6);
      ++feasible_draws;
    }
  }
  CHECK(feasible_draws >= 100);
}

TEST_CASE("binary reference solve routes through branch and bound") {
  KnapsackGenConfig cfg;
  cfg.dim = 8;
  cfg.rows = 2;
  cfg.count = 3;
  cfg.seed = 25;
  cfg.binary_domain = true;
  Dataset ds = generate_knapsack(cfg);
  ds.app = Application::knapsack_bin;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    SolveResult via_ds = solve_reference(ds, i);
    SolveResult direct = branch_and_bound_binary(ds.knapsack[i]);
    REQUIRE(via_ds.status == SolveStatus::optimal);
    CHECK(via_ds.objective == doctest::Approx(direct.objective));
  }
}

TEST_CASE("inventory reference solve is robust-feasible and consistent") {
  InventoryGenConfig cfg;
  cfg.retailers = 4;
  cfg.factors = 2;
  cfg.count = 10;
  cfg.seed = 26;
  Dataset ds = generate_inventory(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const InventoryInstance& inst = ds.inventory[i];
    SolveResult r = solve_reference(ds, i);
    REQUIRE(r.status == SolveStatus::optimal);
    REQUIRE(r.x.size() == decision_dim(ds));

    InventoryDecision d =
        InventoryDecision::unflatten(r.x, inst.retailers(), inst.factors());
    EvalTerms t = inventory_eval(inst, d);
    // LP feasibility tolerance can leave violations of order 1e-7.
    for (double g : t.worst_cases) CHECK(g <= 1e-6);
    // The LP maximizes P, which equals the closed-form objective of the
    // repacked decision once the aux variables sit at their optima.
    CHECK(r.objective == doctest::Approx(t.objective).epsilon(1e-6));
  }
}

TEST_CASE("inventory counterpart layout is coherent") {
  InventoryGenConfig cfg;
  cfg.retailers = 3;
  cfg.factors = 2;
  cfg.count = 1;
  cfg.seed = 27;
  Dataset ds = generate_inventory(cfg);
  const InventoryInstance& inst = ds.inventory[0];
  const InventoryLpLayout lay = inventory_lp_layout(inst);
  const std::size_t n = 3, k = 2;
  CHECK(lay.profit == 0);
  CHECK(lay.x == 1);
  CHECK(lay.Y == 1 + n);
  CHECK(lay.y0 == 1 + n + n * k);
  CHECK(lay.t_profit == 1 + n + n * k + n);
  CHECK(lay.T == lay.t_profit + k);
  CHECK(lay.S == lay.T + n * k);
  CHECK(lay.total == lay.S + n * k);

  StandardFormLP lp = build_counterpart_lp(inst);
  CHECK(lp.num_vars() == lay.total);
  CHECK(lp.num_rows() == 1 + 2 * k + n + 2 * n * k + n + 2 * n * k + 1);

  const std::string dump = lp_debug_dump(lp);
  CHECK(dump.find("max") != std::string::npos);
}
