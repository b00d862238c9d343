#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sheafq/expr.hpp"
#include "sheafq/gfqi.hpp"

using namespace sq;

namespace {

const double kTwoPi = 2 * std::numbers::pi;

Eigen::MatrixXd q1(double a) { return Eigen::MatrixXd::Constant(1, 1, a); }

std::vector<Grid1D> circle_base(int n = 32) { return {Grid1D::circle(n)}; }

GenFun cusp() { return cusp_genfun({Grid1D::interval(-0.5, 1.5, 32)}, 3.0, 96); }

int base_vertex_at(const GenFun& S, double x) {
  for (int b = 0; b < S.n_base(); ++b)
    if (std::fabs(S.base_grid.vertex_coords(b)[0] - x) < 1e-9) return b;
  FAIL("no base vertex at x");
  return -1;
}

}  // namespace

TEST_CASE("expression parser") {
  auto e = Expr::parse("-xi^3/3 + x*xi");
  CHECK(e.eval({1.0}, {-1.0}) == doctest::Approx(-2.0 / 3.0));
  CHECK(Expr::parse("pow(x1, 2) + sin(pi/2) + exp(0) - cos(0)").eval({3.0}, {}) == doctest::Approx(10.0));
  CHECK(Expr::parse("x2 * xi2").max_base_var() == 2);
  try {
    Expr::parse("x + * 2");
    FAIL("expected a parse error");
  } catch (const ExprError& err) {
    CHECK(err.column() == 5);
  }
  CHECK_THROWS_AS(Expr::parse("foo(x)"), ExprError);
  CHECK_THROWS_AS(Expr::parse("x3"), ExprError);
}

TEST_CASE("pure quadratic has one fiber critical point at the origin") {
  for (double sgn : {1.0, -1.0}) {
    auto S = quadratic_genfun(circle_base(8), q1(sgn), 2.0, 16);
    CHECK(S.index == (sgn < 0 ? 1 : 0));
    for (int b = 0; b < S.n_base(); ++b) {
      auto cps = fiber_critical_data(S, b);
      REQUIRE(cps.size() == 1);
      CHECK(cps[0].xi[0] == doctest::Approx(0.0));
      CHECK(cps[0].value == doctest::Approx(0.0));
      CHECK(cps[0].index == S.index);
    }
    CHECK(collar_defect(S) == doctest::Approx(0.0));
  }
}

TEST_CASE("cusp critical data at x = 1") {
  auto S = cusp();
  auto cps = fiber_critical_data(S, base_vertex_at(S, 1.0));
  REQUIRE(cps.size() == 2);
  CHECK(cps[0].xi[0] == doctest::Approx(-1.0).epsilon(1e-3));
  CHECK(cps[0].value == doctest::Approx(-2.0 / 3.0).epsilon(1e-4));
  CHECK(cps[0].index == 0);
  CHECK(cps[1].xi[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(cps[1].value == doctest::Approx(2.0 / 3.0).epsilon(1e-4));
  CHECK(cps[1].index == 1);
  // p = dS/dx = xi at the critical point
  CHECK(cps[1].p[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(S.quadratic_at_infinity);
}

TEST_CASE("graph generating function has one point per base vertex") {
  auto S = graph_genfun("f", circle_base(16), [](const std::vector<double>& x) { return std::sin(kTwoPi * x[0]); });
  for (int b = 0; b < S.n_base(); ++b) {
    auto cps = fiber_critical_data(S, b);
    REQUIRE(cps.size() == 1);
    CHECK(cps[0].value == S.value(b, 0));
    CHECK(cps[0].index == 0);
  }
}

TEST_CASE("cerf diagrams") {
  auto Q = quadratic_genfun(circle_base(8), q1(1), 2.0, 16);
  auto cd = cerf_diagram(Q, Region::all());
  CHECK(cd.strands.size() == 8);
  for (const auto& s : cd.strands) CHECK(s.value == doctest::Approx(0.0));
  CHECK(cd.cusp_locations.empty());

  auto S = cusp();
  auto cc = cerf_diagram(S, Region{{AxisRange::between(0.0, 1.0)}});
  for (const auto& s : cc.strands) {
    double x = s.x[0];
    double c = 2.0 / 3.0 * std::pow(x, 1.5);
    CHECK(std::fabs(std::fabs(s.value) - c) < 0.02);
    CHECK((s.value < 0) == (s.index == 0));
  }
  REQUIRE(cc.cusp_locations.size() >= 1);
  CHECK(cc.cusp_locations[0][0] < 0.1);

  auto fq = add_base_function(Q, [](const std::vector<double>& x) { return std::cos(kTwoPi * x[0]); });
  for (const auto& s : cerf_diagram(fq, Region::all()).strands)
    CHECK(s.value == doctest::Approx(std::cos(kTwoPi * s.x[0])));
}

TEST_CASE("quadratic form on the circle gives the cohomology of the circle after the shift") {
  for (double sgn : {1.0, -1.0}) {
    auto S = quadratic_genfun(circle_base(8), q1(sgn), 2.0, 16);
    CHECK(gf_cohomology(S, Region::all(), -0.5, 0.5) == std::map<int, int>{{0, 1}, {1, 1}});
  }
  Eigen::MatrixXd q2(2, 2);
  q2 << 1, 0, 0, -1;
  auto S2 = quadratic_genfun(circle_base(6), q2, 2.0, 12);
  CHECK(S2.index == 1);
  CHECK(gf_cohomology(S2, Region::all(), -0.5, 0.5) == std::map<int, int>{{0, 1}, {1, 1}});
}

TEST_CASE("graph case equals sublevel cohomology of f") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    double a1 = u(rng), a2 = u(rng), a3 = u(rng);
    auto f = [&](const std::vector<double>& x) {
      return a1 * std::sin(kTwoPi * x[0]) + a2 * std::cos(2 * kTwoPi * x[0]) + a3 * std::sin(3 * kTwoPi * x[0]);
    };
    auto S = graph_genfun("f", circle_base(64), f);
    CubicalGrid g(circle_base(64));
    auto direct = lower_star(g, g.sample(f), Field::F2).complex;
    for (double lam : {-0.7, -0.2, 0.3, 1.1})
      CHECK(gf_cohomology(S, Region::all(), -kInf, lam, Field::F2, false) == direct.window_ranks(-kInf, lam));
  }
}

TEST_CASE("cusp window straddling the upper branch gives rank one") {
  auto S = cusp();
  Region U{{AxisRange::between(0.875, 1.125)}};
  auto r = gf_cohomology(S, U, 0.35, 1.0);
  int total = 0;
  for (auto [p, v] : r) total += v;
  CHECK(total == 1);
  CHECK(r.size() == 1);
}

TEST_CASE("window ends at a critical value are rejected with the strand") {
  auto S = cusp();
  Region U{{AxisRange::between(0.875, 1.125)}};
  try {
    gf_cohomology(S, U, 2.0 / 3.0 * std::pow(0.875, 1.5), 1.5);
    FAIL("expected a rejection");
  } catch (const GfError& e) {
    CHECK(std::string(e.what()).find("window end") != std::string::npos);
  }
}

TEST_CASE("stabilization by an extra quadratic form does not change the cohomology") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 10; ++trial) {
    double a1 = u(rng), a2 = u(rng);
    auto f = [&](const std::vector<double>& x) { return a1 * std::sin(kTwoPi * x[0]) + a2 * std::cos(2 * kTwoPi * x[0]); };
    auto S = graph_genfun("f", circle_base(32), f);
    auto Qp = quadratic_genfun(circle_base(32), q1(trial % 2 ? 1.0 : -1.0), 2.0, 16);
    auto T = box_sum(S, Qp);
    CHECK(T.index == Qp.index);
    for (double lam : {-0.5, 0.1, 0.6})
      CHECK(gf_cohomology(T, Region::all(), -kInf, lam, Field::F2, false) ==
            gf_cohomology(S, Region::all(), -kInf, lam, Field::F2, false));
  }
}

TEST_CASE("S minus S has the cohomology of the base at zero") {
  auto f = [](const std::vector<double>& x) { return 0.3 * std::sin(kTwoPi * x[0]); };
  auto S = graph_genfun("f", circle_base(32), f);
  CHECK(gf_cohomology(ominus(S, S), Region::all(), -0.05, 0.05) == std::map<int, int>{{0, 1}, {1, 1}});
  auto Qp = quadratic_genfun(circle_base(16), q1(1.0), 2.0, 24);
  auto T = add_base_function(Qp, [](const std::vector<double>& x) { return 0.3 * std::cos(kTwoPi * x[0]); });
  auto D = ominus(T, T);
  CHECK(D.index == 1);
  CHECK(gf_cohomology(D, Region::all(), -0.1, 0.1) == std::map<int, int>{{0, 1}, {1, 1}});
}

TEST_CASE("index arithmetic of ominus and box_sum") {
  auto Q = quadratic_genfun(circle_base(4), q1(-1.0), 2.0, 8);
  CHECK(ominus(Q, Q).index == 1);
  CHECK(box_sum(Q, Q).index == 2);
  auto P = quadratic_genfun(circle_base(4), q1(1.0), 2.0, 8);
  CHECK(ominus(P, P).index == 1);
  auto f = graph_genfun("f", circle_base(4), [](const std::vector<double>&) { return 0.0; });
  auto fz = ominus(f, f);
  CHECK(fz.k() == 0);
  CHECK(fz.index == 0);
  CHECK_THROWS_AS(box_sum(f, quadratic_genfun(circle_base(5), q1(1.0), 2.0, 8)), GfError);
}

TEST_CASE("brane of a graph has p = f' and zero grading") {
  auto S = graph_genfun("f", circle_base(64), [](const std::vector<double>& x) { return std::sin(kTwoPi * x[0]); });
  auto br = brane_of(S);
  REQUIRE(br.points.size() == 64);
  for (const auto& pt : br.points) {
    CHECK(pt.m == 0);
    CHECK(pt.p[0] == doctest::Approx(kTwoPi * std::cos(kTwoPi * pt.x[0])).epsilon(0.01));
  }
}
