#include <doctest.h>

#include <random>
#include <sstream>

#include "../support/lp_oracle.hpp"
#include "../support/random_problems.hpp"
#include "gridcast/errors.hpp"
#include "gridcast/lp.hpp"

using namespace gridcast;
using namespace gridcast::lp;

TEST_CASE("one-variable fixtures") {
  LinearProgram lp;
  const auto x = lp.add_variable("x", 1.0, -kInfinity, kInfinity);
  lp.add_greater_equal({{x, 1.0}}, 3.0);
  auto s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.x[0] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(3.0));

  lp.add_less_equal({{x, 1.0}}, 2.0);
  CHECK(solve(lp).status == Status::Infeasible);

  LinearProgram up;
  up.add_variable("x", -1.0);
  CHECK(solve(up).status == Status::Unbounded);
}

TEST_CASE("free, reflected and shifted variables") {
  LinearProgram lp;
  const auto a = lp.add_variable("a", 1.0, -kInfinity, kInfinity);
  const auto b = lp.add_variable("b", -1.0, -kInfinity, 4.0);
  const auto c = lp.add_variable("c", 2.0, -3.0, 5.0);
  lp.add_equality({{a, 1.0}, {b, 1.0}}, 1.0);
  lp.add_greater_equal({{a, 1.0}, {c, -1.0}}, -10.0);
  const auto s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  // b at its upper bound, c at its lower bound, a = 1 - b.
  CHECK(s.x[b] == doctest::Approx(4.0));
  CHECK(s.x[a] == doctest::Approx(-3.0));
  CHECK(s.x[c] == doctest::Approx(-3.0));
  CHECK(check_solution(lp, s, 1e-9).empty());
}

TEST_CASE("check_solution reports violations") {
  LinearProgram lp;
  const auto x = lp.add_variable("x", 1.0, -kInfinity, kInfinity);
  lp.add_greater_equal({{x, 1.0}}, 3.0);
  Solution s{Status::Optimal, {2.0}, 2.0, 0};
  const auto v = check_solution(lp, s, 1e-9);
  REQUIRE(v.size() == 1);
  CHECK(v[0].magnitude == doctest::Approx(1.0));

  Solution good{Status::Optimal, {3.0}, 3.0, 0};
  CHECK(check_solution(lp, good, 1e-9).empty());
  Solution wrong_obj{Status::Optimal, {3.0}, 3.5, 0};
  CHECK(check_solution(lp, wrong_obj, 1e-9).size() == 1);
  Solution short_x{Status::Optimal, {}, 0.0, 0};
  CHECK_THROWS(check_solution(lp, short_x, 1e-9));
}

TEST_CASE("malformed programs are rejected") {
  LinearProgram lp;
  lp.add_variable("x", 1.0, 2.0, 1.0);
  CHECK_THROWS_AS(solve(lp), std::invalid_argument);
  LinearProgram idx;
  idx.add_variable("x", 1.0);
  idx.add_less_equal({{3, 1.0}}, 1.0);
  CHECK_THROWS_AS(solve(idx), std::invalid_argument);
  LinearProgram nan;
  nan.add_variable("x", std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(solve(nan), std::invalid_argument);
}

TEST_CASE("iteration limit is its own error") {
  LinearProgram lp;
  std::vector<Term> row;
  for (std::size_t j = 0; j < 5; ++j) {
    lp.add_variable("x" + std::to_string(j), -1.0 - static_cast<double>(j), 0.0, 10.0);
    row.push_back({j, 1.0});
  }
  lp.add_less_equal(row, 12.0);
  SolverOptions opts;
  opts.max_iters = 1;
  CHECK_THROWS_AS(solve(lp, opts), SolverError);
}

TEST_CASE("degenerate cycling example terminates") {
  // Beale's classic cycling instance under Dantzig pricing.
  LinearProgram lp;
  const auto x4 = lp.add_variable("x4", -0.75);
  const auto x5 = lp.add_variable("x5", 150.0);
  const auto x6 = lp.add_variable("x6", -0.02);
  const auto x7 = lp.add_variable("x7", 6.0);
  lp.add_less_equal({{x4, 0.25}, {x5, -60.0}, {x6, -0.04}, {x7, 9.0}}, 0.0);
  lp.add_less_equal({{x4, 0.5}, {x5, -90.0}, {x6, -0.02}, {x7, 3.0}}, 0.0);
  lp.add_less_equal({{x6, 1.0}}, 1.0);
  const auto s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(-0.05));
}

TEST_CASE("redundant equalities") {
  LinearProgram lp;
  const auto x = lp.add_variable("x", 1.0);
  const auto y = lp.add_variable("y", 2.0);
  lp.add_equality({{x, 1.0}, {y, 1.0}}, 4.0);
  lp.add_equality({{x, 2.0}, {y, 2.0}}, 8.0);
  const auto s = solve(lp);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(4.0));
}

TEST_CASE("random programs match vertex enumeration") {
  std::mt19937_64 rng(2024);
  int optimal = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const auto lp = testgen::random_lp(rng);
    const auto o = oracle::enumerate(lp);
    const auto s = solve(lp);
    INFO("trial " << trial);
    switch (o.outcome) {
      case oracle::Outcome::Infeasible: CHECK(s.status == Status::Infeasible); break;
      case oracle::Outcome::Unbounded: CHECK(s.status == Status::Unbounded); break;
      case oracle::Outcome::Optimal:
        REQUIRE(s.status == Status::Optimal);
        CHECK(std::abs(s.objective - o.objective) <= 1e-6);
        CHECK(check_solution(lp, s, 1e-6).empty());
        ++optimal;
        break;
    }
  }
  CHECK(optimal >= 100);
}

TEST_CASE("objective scaling") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    auto lp = testgen::random_lp(rng);
    const auto s = solve(lp);
    if (s.status != Status::Optimal) continue;
    LinearProgram scaled;
    for (std::size_t j = 0; j < lp.variable_count(); ++j) {
      scaled.add_variable(lp.names()[j], 3.5 * lp.objective()[j], lp.lower()[j], lp.upper()[j]);
    }
    for (const auto& r : lp.equalities()) scaled.add_equality(r.terms, r.rhs);
    for (const auto& r : lp.inequalities()) scaled.add_less_equal(r.terms, r.rhs);
    const auto t = solve(scaled);
    REQUIRE(t.status == Status::Optimal);
    CHECK(t.objective == doctest::Approx(3.5 * s.objective).epsilon(1e-9).scale(1.0));
    CHECK(scaled.objective_value(s.x) == doctest::Approx(t.objective).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("solves are deterministic") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 30; ++trial) {
    const auto lp = testgen::random_lp(rng);
    const auto a = solve(lp);
    const auto b = solve(lp);
    CHECK(a.status == b.status);
    CHECK(a.x == b.x);
    CHECK(a.iterations == b.iterations);
  }
}

TEST_CASE("dump lists variables and rows") {
  LinearProgram lp;
  const auto x = lp.add_variable("x", 2.0, 0.0, 5.0);
  lp.add_less_equal({{x, 1.0}}, 4.0, "cap");
  std::ostringstream out;
  dump(lp, out);
  CHECK(out.str().find("cap") != std::string::npos);
  CHECK(out.str().find("x") != std::string::npos);
}
