#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sheafq/sheaf_model.hpp"

using namespace sq;

namespace {

const double kTwoPi = 2 * std::numbers::pi;

GenFun cusp() { return cusp_genfun({Grid1D::interval(-0.5, 1.5, 32)}, 3.0, 96); }

int total(const std::map<int, int>& r) {
  int s = 0;
  for (auto [p, v] : r) s += v;
  return s;
}

GenFun twisted_circle() {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(1, 1, 1.0);
  return make_genfun("twisted", {Grid1D::circle(32)}, 3.0, 48,
                     [](const std::vector<double>& x, const std::vector<double>& xi) {
                       return xi[0] * xi[0] + 0.5 * std::cos(kTwoPi * x[0]) * xi[0] +
                              0.2 * std::sin(kTwoPi * x[0]);
                     },
                     Q);
}

}  // namespace

TEST_CASE("cusp microstalk is k inside the cusp and zero outside") {
  auto F = quantize(cusp());
  for (double x : {0.25, 0.5, 1.0, 1.25}) {
    double edge = 2.0 / 3.0 * std::pow(x, 1.5);
    CHECK(microstalk(F, {x}, 0.0) == std::map<int, int>{{0, 1}});
    CHECK(microstalk(F, {x}, 0.5 * edge) == std::map<int, int>{{0, 1}});
    CHECK(microstalk(F, {x}, edge + 0.3).empty());
    CHECK(microstalk(F, {x}, -edge - 0.3).empty());
  }
  for (double x : {-0.25, -0.125}) CHECK(microstalk(F, {x}, 0.0).empty());
  // the relative jump only sees the front itself
  CHECK(front_jump(F, {1.0}, 0.0).empty());
  CHECK(total(front_jump(F, {1.0}, 2.0 / 3.0)) == 1);
  CHECK(total(front_jump(F, {1.0}, -2.0 / 3.0)) == 1);
  CHECK_THROWS_AS(microstalk(F, {0.01}, 0.0), SheafError);
}

TEST_CASE("microstalk only depends on the data near x") {
  auto big = quantize(cusp());
  auto small = quantize(cusp_genfun({Grid1D::interval(0.75, 1.25, 8)}, 3.0, 96));
  for (double t : {-1.0, -0.3, 0.0, 0.4, 1.0}) CHECK(microstalk(big, {1.0}, t) == microstalk(small, {1.0}, t));
}

TEST_CASE("graph microstalk sits on the graph in degree zero") {
  auto S = graph_genfun("g", {Grid1D::circle(32)},
                        [](const std::vector<double>& x) { return 0.3 * std::sin(kTwoPi * x[0]); });
  auto F = quantize(S);
  for (int b : {0, 5, 13}) {
    auto x = S.base_grid.vertex_coords(b);
    CHECK(front_jump(F, x, S.value(b, 0)) == std::map<int, int>{{0, 1}});
    CHECK(microstalk(F, x, S.value(b, 0)) == std::map<int, int>{{0, 1}});
    CHECK(microstalk(F, x, S.value(b, 0) - 0.1).empty());
  }
  CHECK(F.at_plus_infinity == std::map<int, int>{{0, 1}});
}

TEST_CASE("cellular presentation agrees with the generating function") {
  for (Field f : {Field::F2, Field::Q}) {
    auto S = twisted_circle();
    auto F = quantize(S);
    auto C = to_cellular(F, f, 20, 7);
    CHECK_FALSE(C.is_gf());
    for (double t : {-0.5, -0.2, 0.0, 0.3})
      for (int b : {0, 7, 19}) {
        auto x = S.base_grid.vertex_coords(b);
        CHECK(microstalk(C, x, t, f) == microstalk(F, x, t, f));
      }
    Region arc{{AxisRange::between(0.1, 0.6)}};
    CHECK(sections(C, arc, -kInf, kInf, f, false) == sections(F, arc, -kInf, kInf, f, false));
  }
  auto Fc = quantize(cusp());
  CHECK_NOTHROW(to_cellular(Fc, Field::F2, 20, 3));
}

TEST_CASE("unit sheaf sections") {
  std::vector<Grid1D> base{Grid1D::circle(16)};
  auto F = unit_sheaf(base);
  Region arc{{AxisRange::between(0.25, 0.5)}};
  CHECK(sections(F, arc, -1, 1) == std::map<int, int>{{0, 1}});
  CHECK(sections(F, Region::all(), -1, 1) == std::map<int, int>{{0, 1}, {1, 1}});
  CHECK(sections(F, arc, 0.5, 1).empty());
  CHECK(sections(F, arc, -1, -0.5).empty());
}

TEST_CASE("indicator sheaves of open and closed sets") {
  std::vector<Grid1D> base{Grid1D::circle(16)};
  Region arc{{AxisRange::between(0.25, 0.5)}};
  auto kU = open_set_sheaf(base, arc, Field::Q);
  auto kZ = closed_set_sheaf(base, arc, Field::Q);
  // sections of k_U over the whole circle are compactly supported cochains of U
  CHECK(sections(kU, Region::all(), -1, 1, Field::Q) == std::map<int, int>{{1, 1}});
  CHECK(sections(kZ, Region::all(), -1, 1, Field::Q) == std::map<int, int>{{0, 1}});
  CHECK(sections(kU, Region::all(), 0.5, 1, Field::Q).empty());
  CHECK_THROWS_AS(sections(kU, Region::all(), 0.0, 1, Field::Q), SheafError);
  CHECK_THROWS_AS(sections(kU, Region::all(), -1, 1, Field::F2), SheafError);
  CHECK(microstalk(kU, {0.375}, 0.5, Field::Q) == std::map<int, int>{{0, 1}});
  CHECK(microstalk(kU, {0.25}, 0.5, Field::Q).empty());
  CHECK(microstalk(kZ, {0.25}, 0.5, Field::Q) == std::map<int, int>{{0, 1}});
}

TEST_CASE("validation rejects broken generization data") {
  std::vector<Grid1D> base{Grid1D::interval(0, 1, 1)};
  CellSheaf c;
  c.field = Field::Q;
  c.base = CubicalGrid(base);
  // stalk k[0] at action 0 over every cell
  for (int s = 0; s < 3; ++s) c.stalks.push_back(FilteredComplex(Field::Q, {0}, {0.0}, SparseMatrix(Field::Q, 1, 1)));
  c.stalks[1] = FilteredComplex(Field::Q, {0}, {-1.0}, SparseMatrix(Field::Q, 1, 1));
  c.maps[{0, 1}] = ChainMap{SparseMatrix::identity(Field::Q, 1), 0};
  CHECK_THROWS_AS(from_cells(c, "bad"), SheafError);  // lowers the action

  std::vector<Grid1D> sq2{Grid1D::interval(0, 1, 1), Grid1D::interval(0, 1, 1)};
  CellSheaf d;
  d.field = Field::Q;
  d.base = CubicalGrid(sq2);
  for (int s = 0; s < d.base.num_cells(); ++s)
    d.stalks.push_back(FilteredComplex(Field::Q, {0}, {0.0}, SparseMatrix(Field::Q, 1, 1)));
  for (int t = 0; t < d.base.num_cells(); ++t)
    for (auto [s, sg] : d.base.boundary(t)) d.maps[{s, t}] = ChainMap{SparseMatrix::identity(Field::Q, 1), 0};
  CHECK_NOTHROW(from_cells(d, "ok"));
  auto top = d.base.cell_id({1, 1});
  auto face = d.base.boundary(top)[0].first;
  d.maps[{face, top}] = ChainMap{SparseMatrix::identity(Field::Q, 1).scaled(2), 0};
  CHECK_THROWS_AS(from_cells(d, "square"), SheafError);
}

TEST_CASE("singular support of a graph follows its differential") {
  auto S = graph_genfun("g", {Grid1D::circle(64)},
                        [](const std::vector<double>& x) { return 0.3 * std::sin(kTwoPi * x[0]); });
  auto ss = singular_support(quantize(S), 0.05);
  auto L = conify(brane_of(S));
  CHECK(hausdorff_cells(ss, L, ss.hx, ss.ht, ss.hp) <= 2.0);
  // every sample sits on the graph with p between the one-sided slopes
  for (const auto& q : ss.points) {
    if (q.tau == 0) continue;
    double x = q.x[0];
    CHECK(q.t == doctest::Approx(0.3 * std::sin(kTwoPi * x)));
    CHECK(std::fabs(q.p[0] - 0.3 * kTwoPi * std::cos(kTwoPi * x)) <= ss.hp);
  }
}

TEST_CASE("singular support of generating functions") {
  for (const auto& S : {cusp(), twisted_circle()}) {
    auto ss = singular_support(quantize(S), 0.05);
    auto L = conify(brane_of(S));
    CAPTURE(S.name);
    CHECK(hausdorff_cells(ss, L, ss.hx, ss.ht, ss.hp) <= 2.0);
  }
  auto unit = singular_support(unit_sheaf({Grid1D::circle(16)}), 0.05);
  for (const auto& q : unit.points) {
    CHECK(q.t == 0.0);
    CHECK(q.p[0] == doctest::Approx(0.0));
  }
  CHECK(unit.points.size() == 2 * 16);
}

TEST_CASE("singular support of a closed indicator points outward") {
  std::vector<Grid1D> base{Grid1D::interval(0, 1, 8)};
  auto kZ = closed_set_sheaf(base, Region{{AxisRange::between(0.25, 0.75)}}, Field::F2);
  auto ss = singular_support(kZ, 0.1);
  bool left = false, right = false;
  for (const auto& q : ss.points) {
    CHECK(q.t >= 0.0);
    CHECK(q.x[0] >= 0.25 - 1e-12);
    CHECK(q.x[0] <= 0.75 + 1e-12);
    if (q.tau == 0 || q.p[0] == 0) continue;
    if (q.x[0] == doctest::Approx(0.25)) left |= q.p[0] < 0;
    if (q.x[0] == doctest::Approx(0.75)) right |= q.p[0] > 0;
    CHECK((q.x[0] == doctest::Approx(0.25) || q.x[0] == doctest::Approx(0.75)));
  }
  CHECK(left);
  CHECK(right);
}

TEST_CASE("conormal brane and stratification") {
  std::vector<Grid1D> base{Grid1D::interval(0, 1, 8)};
  auto br = conormal_brane(base, Region{{AxisRange::between(0.25, 0.75)}}, 2.0, 4);
  int zero = 0, rays = 0;
  for (const auto& b : br.points) {
    if (b.p[0] == 0) ++zero;
    if (b.x[0] == doctest::Approx(0.75) && b.p[0] > 0) ++rays;
  }
  CHECK(zero == 3 + 2);
  CHECK(rays == 4);
  auto st = stratification(quantize(cusp()));
  CHECK(st.breakpoints.front() < -0.5);
  CHECK(st.breakpoints.back() > 0.5);
  CHECK(st.csv().rfind("breakpoint\n", 0) == 0);
}
