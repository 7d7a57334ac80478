#include <cstring>
#include <random>

#include "doctest.h"
#include "pivot/qp.hpp"
#include "support/qp_oracle.hpp"

using namespace pivot;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {

QProblem<double> unconstrained(int n) {
  QProblem<double> p;
  p.H = 2 * Mat::Identity(n, n);
  p.c = Vec::Zero(n);
  return p;
}

}  // namespace

TEST_CASE("unconstrained minimum of x'x is the origin") {
  auto sol = solve(unconstrained(3));
  CHECK(sol.status == QPStatus::Optimal);
  CHECK(sol.x.norm() == doctest::Approx(0.0));
  CHECK(sol.objective == doctest::Approx(0.0));
}

TEST_CASE("active upper bound clamps the minimizer") {
  // min (x-1)^2 = x^2 - 2x + 1 (constant dropped) subject to x <= 0
  QProblem<double> p;
  p.H = 2 * Mat::Identity(1, 1);
  p.c = Vec::Constant(1, -2.0);
  p.lb = Vec::Constant(1, -std::numeric_limits<double>::infinity());
  p.ub = Vec::Zero(1);
  auto sol = solve(p);
  CHECK(sol.status == QPStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(0.0));
}

TEST_CASE("equality projection plus inequality activation") {
  // min |x|^2 s.t. x1 + x2 = 2, x1 >= 1.5  ->  x = (1.5, 0.5)
  QProblem<double> p;
  p.H = 2 * Mat::Identity(2, 2);
  p.c = Vec::Zero(2);
  p.A_eq = Mat::Ones(1, 2);
  p.b_eq = Vec::Constant(1, 2.0);
  p.A_in = Mat::Zero(1, 2);
  p.A_in(0, 0) = 1;
  p.b_in = Vec::Constant(1, 1.5);
  auto sol = solve(p);
  CHECK(sol.status == QPStatus::Optimal);
  CHECK(sol.x(0) == doctest::Approx(1.5));
  CHECK(sol.x(1) == doctest::Approx(0.5));
}

TEST_CASE("contradictory constraints are reported infeasible, not MaxIter") {
  QProblem<double> p;
  p.H = 2 * Mat::Identity(1, 1);
  p.c = Vec::Zero(1);
  p.A_in = Mat::Ones(2, 1);
  p.A_in(1, 0) = -1;
  p.b_in = Vec::Constant(2, 1.0);  // x >= 1 and -x >= 1
  auto sol = solve(p);
  CHECK(sol.status == QPStatus::Infeasible);

  QProblem<double> q;
  q.H = 2 * Mat::Identity(2, 2);
  q.c = Vec::Zero(2);
  q.A_eq = Mat::Ones(2, 2);
  q.b_eq = Vec::Zero(2);
  q.b_eq << 1, 2;  // same row, different right-hand sides
  CHECK(solve(q).status == QPStatus::Infeasible);
}

TEST_CASE("input validation") {
  QProblem<double> p = unconstrained(2);
  p.H(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(solve(p), NotPSD);

  QProblem<double> q = unconstrained(2);
  q.H(0, 0) = -1;
  q.H(1, 1) = -1;
  CHECK_THROWS_AS(solve(q), NotPSD);

  QProblem<double> r = unconstrained(2);
  r.c.resize(3);
  CHECK_THROWS_AS(solve(r), DimensionMismatch);

  QProblem<double> s = unconstrained(2);
  s.A_in = Mat::Ones(1, 3);
  s.b_in = Vec::Zero(1);
  CHECK_THROWS_AS(solve(s), DimensionMismatch);
}

TEST_CASE("solutions are bit-identical across repeated solves") {
  std::mt19937_64 rng(123);
  for (int i = 0; i < 20; ++i) {
    auto p = testsup::random_qp(6, 1, 3, rng);
    auto s1 = solve(p);
    auto s2 = solve(p);
    REQUIRE(s1.status == s2.status);
    REQUIRE(s1.x.size() == s2.x.size());
    CHECK(std::memcmp(s1.x.data(), s2.x.data(), sizeof(double) * s1.x.size()) == 0);
    CHECK(std::memcmp(&s1.objective, &s2.objective, sizeof(double)) == 0);
  }
}

TEST_CASE("KKT residuals hold at every optimal return") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 200; ++i) {
    auto p = testsup::random_qp(6, i % 3 == 0 ? 1 : 0, 3, rng);
    auto sol = solve(p);
    if (sol.status != QPStatus::Optimal) continue;
    // primal feasibility within 1e-6
    if (p.A_eq.rows() > 0)
      CHECK((p.A_eq * sol.x - p.b_eq).lpNorm<Eigen::Infinity>() <= 1e-6);
    if (p.A_in.rows() > 0) CHECK((p.A_in * sol.x - p.b_in).minCoeff() >= -1e-6);
    CHECK((sol.x.array() >= p.lb.array() - 1e-6).all());
    CHECK((sol.x.array() <= p.ub.array() + 1e-6).all());
  }
}

TEST_CASE("1000 random problems match the enumeration oracle") {
  std::mt19937_64 rng(2024);
  int optimal = 0, infeasible = 0;
  for (int i = 0; i < 1000; ++i) {
    auto p = testsup::random_qp(6, i % 4 == 0 ? 1 : 0, i % 3, rng);
    if (i % 40 == 0) {
      // salt in guaranteed-infeasible instances: a strip that excludes the box
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Ones(6);
      int m = static_cast<int>(p.A_in.rows());
      p.A_in.conservativeResize(m + 2, 6);
      p.b_in.conservativeResize(m + 2);
      p.A_in.row(m) = a;
      p.b_in(m) = 0.5;
      p.A_in.row(m + 1) = -a;
      p.b_in(m + 1) = 0.5;  // x'1 >= 0.5 and x'1 <= -0.5
    }
    auto oracle = testsup::enumerate_qp(p);
    auto sol = solve(p);
    REQUIRE(sol.status != QPStatus::MaxIter);
    REQUIRE((sol.status == QPStatus::Optimal) == oracle.feasible);
    if (oracle.feasible) {
      CHECK(sol.objective == doctest::Approx(oracle.objective).epsilon(1e-6));
      CHECK(std::abs(sol.objective - oracle.objective) <= 1e-6 * (1 + std::abs(oracle.objective)));
      ++optimal;
    } else {
      ++infeasible;
    }
  }
  CHECK(optimal > 800);
  CHECK(infeasible > 10);  // the generator must exercise the infeasible path
}
