#include <doctest.h>

#include <cmath>

#include "chargeplan/conic.hpp"

using namespace chargeplan;

namespace {

ConicSolution solve(const ConicProgram& prog, const std::vector<VarBounds>& overrides = {},
                    bool tightened = false) {
  BarrierSolver solver;
  return solver.solve(prog, overrides, tightened);
}

}  // namespace

TEST_CASE("a small LP lands on the optimal face") {
  ConicProgram prog;
  const int x = prog.add_variable("x", 0.0, 1.0);
  const int y = prog.add_variable("y", 0.0, 1.0);
  prog.add_row("cover", RowSense::GE, 1.0).coeffs = {{x, 1.0}, {y, 1.0}};
  prog.set_objective(x, 1.0);
  prog.set_objective(y, 1.0);

  const ConicSolution sol = solve(prog);
  REQUIRE(sol.status == SubStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(prog.max_scaled_violation(sol.x) <= kFeasTol);
}

TEST_CASE("minimizing a linear functional over a disk") {
  // min x + 2y over ||(x-3, y-4)|| <= 2; optimum 11 - 2*sqrt(5) at the
  // boundary point (3,4) - 2*(1,2)/sqrt(5).
  ConicProgram prog;
  const int x = prog.add_variable("x", -10.0, 10.0);
  const int y = prog.add_variable("y", -10.0, 10.0);
  SocBlock& soc = prog.add_soc("disk");
  soc.head.constant = 2.0;
  AffineExpr u;
  u.constant = -3.0;
  u.add(x, 1.0);
  AffineExpr v;
  v.constant = -4.0;
  v.add(y, 1.0);
  soc.tail = {u, v};
  prog.set_objective(x, 1.0);
  prog.set_objective(y, 2.0);

  const ConicSolution sol = solve(prog);
  REQUIRE(sol.status == SubStatus::Optimal);
  const double expected = 11.0 - 2.0 * std::sqrt(5.0);
  CHECK(sol.objective == doctest::Approx(expected).epsilon(1e-5));
  CHECK(sol.x[x] == doctest::Approx(3.0 - 2.0 / std::sqrt(5.0)).epsilon(1e-4));
  CHECK(sol.x[y] == doctest::Approx(4.0 - 4.0 / std::sqrt(5.0)).epsilon(1e-4));
  CHECK(prog.max_scaled_violation(sol.x) <= kFeasTol);

  const ConicSolution tight = solve(prog, {}, true);
  REQUIRE(tight.status == SubStatus::Optimal);
  CHECK(tight.objective == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("a cone whose tail is fully pinned still prices its head") {
  ConicProgram prog;
  const int t = prog.add_variable("t", 0.0, 10.0);
  const int x = prog.add_variable("x", -10.0, 10.0);
  const int y = prog.add_variable("y", -10.0, 10.0);
  prog.add_row("fix_x", RowSense::EQ, 1.0).coeffs = {{x, 1.0}};
  prog.add_row("fix_y", RowSense::EQ, 2.0).coeffs = {{y, 1.0}};
  SocBlock& soc = prog.add_soc("norm");
  soc.head = AffineExpr::of(t);
  soc.tail = {AffineExpr::of(x), AffineExpr::of(y)};
  prog.set_objective(t, 1.0);

  const ConicSolution sol = solve(prog);
  REQUIRE(sol.status == SubStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(std::sqrt(5.0)).epsilon(1e-5));
  CHECK(sol.x[x] == doctest::Approx(1.0));
  CHECK(sol.x[y] == doctest::Approx(2.0));
}

TEST_CASE("bound overrides narrow the feasible box") {
  ConicProgram prog;
  const int x = prog.add_variable("x", 0.0, 10.0);
  prog.set_objective(x, 1.0);
  const ConicSolution sol = solve(prog, {{x, 3.0, kInf}});
  REQUIRE(sol.status == SubStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-5));

  const ConicSolution bad = solve(prog, {{x, 5.0, 4.0}});
  CHECK(bad.status == SubStatus::Infeasible);
}

TEST_CASE("interval-consistent but jointly impossible rows are infeasible") {
  // a = 10b, c = a - 3b, c >= 8b force b <= 0 while b >= 0.2; per-row interval
  // arithmetic never empties any single bound, so detection is on the solver.
  ConicProgram prog;
  const int a = prog.add_variable("a", -100.0, 100.0);
  const int b = prog.add_variable("b", 0.2, 1.0);
  const int c = prog.add_variable("c", -100.0, 100.0);
  prog.add_row("def_a", RowSense::EQ, 0.0).coeffs = {{a, 1.0}, {b, -10.0}};
  prog.add_row("def_c", RowSense::EQ, 0.0).coeffs = {{c, 1.0}, {a, -1.0}, {b, 3.0}};
  prog.add_row("floor_c", RowSense::GE, 0.0).coeffs = {{c, 1.0}, {b, -8.0}};
  prog.set_objective(c, 1.0);

  const ConicSolution sol = solve(prog);
  CHECK(sol.status == SubStatus::Infeasible);
}

TEST_CASE("a feasible set with empty interior is still solved") {
  // Same chain with b in [0,1]: the only feasible point is a = b = c = 0.
  // The strict interior is empty, so the solver must recognize the implied
  // equalities rather than report failure.
  ConicProgram prog;
  const int a = prog.add_variable("a", -100.0, 100.0);
  const int b = prog.add_variable("b", 0.0, 1.0);
  const int c = prog.add_variable("c", -100.0, 100.0);
  prog.add_row("def_a", RowSense::EQ, 0.0).coeffs = {{a, 1.0}, {b, -10.0}};
  prog.add_row("def_c", RowSense::EQ, 0.0).coeffs = {{c, 1.0}, {a, -1.0}, {b, 3.0}};
  prog.add_row("floor_c", RowSense::GE, 0.0).coeffs = {{c, 1.0}, {b, -8.0}};
  prog.set_objective(a, 1.0);
  prog.set_objective(b, 1.0);
  prog.set_objective(c, 1.0);

  const ConicSolution sol = solve(prog);
  REQUIRE(sol.status == SubStatus::Optimal);
  CHECK(std::abs(sol.objective) <= 1e-5);
  for (int i : {a, b, c}) CHECK(std::abs(sol.x[i]) <= 1e-5);
}

TEST_CASE("fully pinned programs shortcut to the pinned point") {
  ConicProgram prog;
  const int x = prog.add_variable("x", 0.0, 10.0);
  prog.add_row("fix", RowSense::EQ, 4.0).coeffs = {{x, 1.0}};
  prog.set_objective(x, 2.5);
  prog.objective_constant = 1.0;

  const ConicSolution sol = solve(prog);
  REQUIRE(sol.status == SubStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(11.0));
  CHECK(sol.x == std::vector<double>{4.0});
}
