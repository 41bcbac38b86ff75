#include "lunex/milp.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <functional>
#include <sstream>

using namespace lunex::milp;

namespace {

// Exhaustive lattice enumeration over bounded integer variables; the
// independent oracle for small MILPs.
struct LatticeOracle {
  bool feasible = false;
  double best = 0.0;
  std::vector<double> argmax;
};

LatticeOracle enumerate_lattice(const Problem& p, const std::vector<int>& ubs) {
  LatticeOracle out;
  const int n = p.num_variables();
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  const bool maximize = p.sense() == Sense::Maximize;
  std::function<void(int)> rec = [&](int j) {
    if (j == n) {
      for (const Constraint& c : p.constraints()) {
        double lhs = 0.0;
        for (const Term& t : c.terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
        if (c.rel == Relation::Le && lhs > c.rhs + 1e-9) return;
        if (c.rel == Relation::Ge && lhs < c.rhs - 1e-9) return;
        if (c.rel == Relation::Eq && std::abs(lhs - c.rhs) > 1e-9) return;
      }
      const double v = p.eval_objective(x);
      if (!out.feasible || (maximize ? v > out.best : v < out.best)) {
        out.feasible = true;
        out.best = v;
        out.argmax = x;
      }
      return;
    }
    for (int k = 0; k <= ubs[static_cast<std::size_t>(j)]; ++k) {
      x[static_cast<std::size_t>(j)] = k;
      rec(j + 1);
    }
    x[static_cast<std::size_t>(j)] = 0;
  };
  rec(0);
  return out;
}

}  // namespace

TEST_CASE("two-variable lp solves to the enumerated vertex") {
  // max x1 + x2 s.t. x1 + 2 x2 <= 4; vertex enumeration gives 4 at (4, 0)
  Problem p;
  int x1 = p.add_variable("x1", VarDomain::Continuous);
  int x2 = p.add_variable("x2", VarDomain::Continuous);
  p.add_constraint("c", {{x1, 1.0}, {x2, 2.0}}, Relation::Le, 4.0);
  p.set_objective(Sense::Maximize, {{x1, 1.0}, {x2, 1.0}});
  Solution s = solve_lp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(4.0));
  CHECK(s.values[0] == doctest::Approx(4.0));
  CHECK(s.values[1] == doctest::Approx(0.0));
}

TEST_CASE("empty feasible set reports infeasible") {
  Problem p;
  int x = p.add_variable("x", VarDomain::Continuous);
  p.add_constraint("c", {{x, 1.0}}, Relation::Le, -1.0);
  p.set_objective(Sense::Minimize, {});
  CHECK(solve_lp(p).status == Status::Infeasible);
}

TEST_CASE("free ray reports unbounded") {
  Problem p;
  int x = p.add_variable("x", VarDomain::Continuous);
  p.set_objective(Sense::Maximize, {{x, 1.0}});
  CHECK(solve_lp(p).status == Status::Unbounded);
}

TEST_CASE("milp matches lattice enumeration on the knapsack-like instance") {
  // max x1 + x2 s.t. x1 + 2 x2 <= 4, integers: enumeration gives 4 at (4, 0)
  Problem p;
  int x1 = p.add_variable("x1", VarDomain::Integer, 10);
  int x2 = p.add_variable("x2", VarDomain::Integer, 10);
  p.add_constraint("c", {{x1, 1.0}, {x2, 2.0}}, Relation::Le, 4.0);
  p.set_objective(Sense::Maximize, {{x1, 1.0}, {x2, 1.0}});
  Solution s = solve_milp(p);
  REQUIRE(s.status == Status::Optimal);
  LatticeOracle o = enumerate_lattice(p, {10, 10});
  CHECK(s.objective == doctest::Approx(o.best));
  CHECK(o.best == doctest::Approx(4.0));
}

TEST_CASE("classic two-constraint integer program") {
  // max 5 x1 + 4 x2 s.t. 6 x1 + 4 x2 <= 24, x1 + 2 x2 <= 6
  Problem p;
  int x1 = p.add_variable("x1", VarDomain::Integer, 4);
  int x2 = p.add_variable("x2", VarDomain::Integer, 3);
  p.add_constraint("c1", {{x1, 6.0}, {x2, 4.0}}, Relation::Le, 24.0);
  p.add_constraint("c2", {{x1, 1.0}, {x2, 2.0}}, Relation::Le, 6.0);
  p.set_objective(Sense::Maximize, {{x1, 5.0}, {x2, 4.0}});

  LatticeOracle o = enumerate_lattice(p, {4, 3});
  Solution s = solve_milp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(o.best));

  // relaxation sits at the fractional vertex (3, 1.5) worth 21
  const double bound = dual_bound(p);
  CHECK(bound == doctest::Approx(21.0));
  CHECK(bound >= s.objective - 1e-9);
}

TEST_CASE("degenerate problem with no constraints") {
  Problem p;
  p.add_variable("x", VarDomain::Continuous, 5.0);
  p.set_objective(Sense::Minimize, {});
  Solution s = solve_milp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(0.0));
}

TEST_CASE("check_solution validates solver output and rejects corruptions") {
  Problem p;
  int x1 = p.add_variable("x1", VarDomain::Integer, 9);
  int x2 = p.add_variable("x2", VarDomain::Continuous, 9);
  p.add_constraint("c1", {{x1, 2.0}, {x2, 1.0}}, Relation::Le, 7.0);
  p.add_constraint("c2", {{x1, 1.0}, {x2, 1.0}}, Relation::Ge, 1.0);
  p.set_objective(Sense::Maximize, {{x1, 3.0}, {x2, 1.0}});
  Solution s = solve_milp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(check_solution(p, s));

  Solution bad = s;
  bad.values[0] += 1.0;  // violates c1 by 2
  CHECK_FALSE(check_solution(p, bad));

  Solution frac = s;
  frac.values[0] = 2.5;
  frac.values[1] = 2.0;
  frac.objective = p.eval_objective(frac.values);
  CHECK_FALSE(check_solution(p, frac));
}

TEST_CASE("infeasible relaxation implies infeasible milp") {
  Problem p;
  int x = p.add_variable("x", VarDomain::Integer, 10);
  p.add_constraint("c", {{x, 1.0}}, Relation::Le, -2.0);
  p.set_objective(Sense::Minimize, {{x, 1.0}});
  CHECK(solve_lp(relax(p)).status == Status::Infeasible);
  CHECK(solve_milp(p).status == Status::Infeasible);
}

TEST_CASE("equality constraints are honored") {
  Problem p;
  int x1 = p.add_variable("x1", VarDomain::Continuous);
  int x2 = p.add_variable("x2", VarDomain::Continuous);
  p.add_constraint("sum", {{x1, 1.0}, {x2, 1.0}}, Relation::Eq, 3.0);
  p.add_constraint("cap", {{x1, 1.0}}, Relation::Le, 1.0);
  p.set_objective(Sense::Minimize, {{x1, 1.0}, {x2, 2.0}});
  Solution s = solve_lp(p);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(5.0));  // x1 = 1, x2 = 2
}

TEST_CASE("undeclared variable reference throws") {
  Problem p;
  p.add_variable("x", VarDomain::Continuous);
  p.add_constraint("c", {{3, 1.0}}, Relation::Le, 1.0);
  p.set_objective(Sense::Minimize, {});
  CHECK_THROWS_AS(solve_lp(p), std::invalid_argument);
}

TEST_CASE("random small milps agree with lattice enumeration") {
  std::mt19937 rng(20240817u);
  std::uniform_int_distribution<int> nvars(2, 6);
  std::uniform_int_distribution<int> nrows(1, 5);
  std::uniform_int_distribution<int> ubd(1, 10);
  std::uniform_real_distribution<double> coef(-5.0, 5.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    Problem p;
    const int n = nvars(rng);
    std::vector<int> ubs;
    for (int j = 0; j < n; ++j) {
      const int ub = ubd(rng);
      ubs.push_back(ub);
      p.add_variable("x" + std::to_string(j), VarDomain::Integer, ub);
    }
    const int m = nrows(rng);
    for (int i = 0; i < m; ++i) {
      LinearExpr e;
      for (int j = 0; j < n; ++j)
        if (unit(rng) < 0.7) e.push_back({j, coef(rng)});
      if (e.empty()) e.push_back({0, 1.0});
      const double rhs = coef(rng) * 2.0 + 5.0;
      p.add_constraint("c" + std::to_string(i), e, unit(rng) < 0.8 ? Relation::Le : Relation::Ge,
                       rhs);
    }
    LinearExpr obj;
    for (int j = 0; j < n; ++j) obj.push_back({j, coef(rng)});
    p.set_objective(unit(rng) < 0.5 ? Sense::Maximize : Sense::Minimize, obj);

    LatticeOracle oracle = enumerate_lattice(p, ubs);
    Solution s = solve_milp(p);
    if (!oracle.feasible) {
      CHECK(s.status == Status::Infeasible);
      continue;
    }
    REQUIRE(s.status == Status::Optimal);
    CHECK(std::abs(s.objective - oracle.best) <= 1e-9 * std::max(1.0, std::abs(oracle.best)));
    CHECK(check_solution(p, s));
    // relaxation dominance
    const double bound = dual_bound(p);
    if (p.sense() == Sense::Maximize)
      CHECK(bound >= s.objective - 1e-7 * std::max(1.0, std::abs(bound)));
    else
      CHECK(bound <= s.objective + 1e-7 * std::max(1.0, std::abs(bound)));
    ++solved;
  }
  CHECK(solved > 20);  // the generator must produce a healthy share of feasible instances
}

TEST_CASE("determinism: identical input gives identical assignment") {
  auto build = [] {
    Problem p;
    int a = p.add_variable("a", VarDomain::Integer, 7);
    int b = p.add_variable("b", VarDomain::Integer, 7);
    int c = p.add_variable("c", VarDomain::Continuous, 4);
    p.add_constraint("r1", {{a, 2.0}, {b, 3.0}, {c, 1.0}}, Relation::Le, 12.0);
    p.add_constraint("r2", {{a, 1.0}, {b, -1.0}}, Relation::Ge, -2.0);
    p.set_objective(Sense::Maximize, {{a, 1.0}, {b, 2.0}, {c, 0.3}});
    return p;
  };
  Solution s1 = solve_milp(build());
  Solution s2 = solve_milp(build());
  REQUIRE(s1.status == Status::Optimal);
  REQUIRE(s2.status == Status::Optimal);
  CHECK(s1.objective == s2.objective);
  REQUIRE(s1.values.size() == s2.values.size());
  for (std::size_t i = 0; i < s1.values.size(); ++i) CHECK(s1.values[i] == s2.values[i]);
}

TEST_CASE("lp format dump contains the expected sections") {
  Problem p;
  int x = p.add_variable("launch mass", VarDomain::Continuous, 10.0);
  int k = p.add_variable("units", VarDomain::Integer, 3);
  p.add_constraint("cap", {{x, 1.0}, {k, -5.0}}, Relation::Le, 0.0);
  p.set_objective(Sense::Minimize, {{x, 3.5}, {k, 148.0}});
  const std::string text = to_lp_string(p);
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("Subject To") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK(text.find("Generals") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
  CHECK(text.find("launch_mass") != std::string::npos);
}
