#include <doctest.h>

#include <cmath>
#include <random>

#include "sheafq/cubical.hpp"

using namespace sq;

namespace {

ChainComplex checked(const ChainComplex& c) {
  return ChainComplex(c.field(), c.degrees(), c.d(), true);
}

std::vector<int> all_cells(const CubicalGrid& g) {
  std::vector<int> c(g.num_cells());
  for (int k = 0; k < g.num_cells(); ++k) c[k] = k;
  return c;
}

// Betti numbers of the strict sublevel set of a function on a circle graph,
// counted directly from runs of vertices.
std::map<int, int> circle_sublevel_betti(const std::vector<double>& h, double lam) {
  int n = static_cast<int>(h.size());
  int below = 0;
  for (double v : h) below += v < lam;
  if (below == 0) return {};
  if (below == n) return {{0, 1}, {1, 1}};
  int comps = 0;
  for (int i = 0; i < n; ++i)
    if (h[i] < lam && !(h[(i + n - 1) % n] < lam)) ++comps;
  return {{0, comps}};
}

}  // namespace

TEST_CASE("cohomology of standard spaces") {
  for (Field f : {Field::F2, Field::Q}) {
    CubicalGrid circle({Grid1D::circle(8)});
    CHECK(checked(cochain_complex(circle, all_cells(circle), f)).cohomology_ranks() ==
          std::map<int, int>{{0, 1}, {1, 1}});
    CubicalGrid torus({Grid1D::circle(5), Grid1D::circle(4)});
    CHECK(checked(cochain_complex(torus, all_cells(torus), f)).cohomology_ranks() ==
          std::map<int, int>{{0, 1}, {1, 2}, {2, 1}});
    CubicalGrid cube({Grid1D::interval(0, 1, 2), Grid1D::interval(0, 1, 3), Grid1D::interval(0, 1, 1)});
    CHECK(checked(cochain_complex(cube, all_cells(cube), f)).cohomology_ranks() ==
          std::map<int, int>{{0, 1}});
    CubicalGrid tiny({Grid1D::circle(1), Grid1D::circle(2)});
    CHECK(checked(cochain_complex(tiny, all_cells(tiny), f)).cohomology_ranks() ==
          std::map<int, int>{{0, 1}, {1, 2}, {2, 1}});
  }
}

TEST_CASE("relative complex of an interval rel endpoints is a shifted point") {
  CubicalGrid g({Grid1D::interval(0, 1, 5)});
  auto W = all_cells(g);
  std::vector<int> A = {g.cell_id({0}), g.cell_id({10})};
  CHECK(checked(relative_cochain_complex(g, W, A, Field::Q)).cohomology_ranks() ==
        std::map<int, int>{{1, 1}});
  std::vector<int> notclosed = {g.cell_id({1})};
  CHECK_THROWS_AS(relative_cochain_complex(g, W, notclosed, Field::Q), ComplexError);
  std::vector<int> W2 = {g.cell_id({0})};
  std::vector<int> A2 = {g.cell_id({2})};
  CHECK_THROWS_AS(relative_cochain_complex(g, W2, A2, Field::Q), ComplexError);
}

TEST_CASE("region cell sets are closed or open as advertised") {
  CubicalGrid g({Grid1D::circle(12), Grid1D::interval(-1, 1, 4)});
  Region r{{AxisRange::between(0.8, 1.3), AxisRange::between(-0.5, 0.5)}};
  auto closed = g.closed_cells(r);
  auto open = g.open_cells(r);
  CHECK(g.is_closed_set(closed));
  CHECK(g.is_open_set(open));
  CHECK_FALSE(closed.empty());
  // arc across the seam: 0.8..1.3 on a circle of length 1 covers vertices 10, 11, 0, 1, 2, 3
  CubicalGrid c({Grid1D::circle(12)});
  auto arc = c.closed_cells(Region{{AxisRange::between(0.8, 1.3)}});
  int nv = 0;
  for (int cell : arc) nv += c.cell_dim(cell) == 0;
  CHECK(nv == 6);
}

TEST_CASE("lower-star barcode on a circle matches sublevel Betti numbers") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (Field f : {Field::F2, Field::Q}) {
    for (int trial = 0; trial < 40; ++trial) {
      int n = 5 + trial % 11;
      CubicalGrid g({Grid1D::circle(n)});
      std::vector<double> h(n);
      for (auto& v : h) v = std::round(u(rng) * 8) / 8;
      auto ls = lower_star(g, h, f);
      auto bc = ls.complex.barcode();
      for (double lam = -1.1; lam < 1.2; lam += 1.0 / 16)
        CHECK(drop_zero(bc.ranks_at(lam)) == circle_sublevel_betti(h, lam));
    }
  }
}

TEST_CASE("lower-star floor keeps a subcomplex") {
  CubicalGrid g({Grid1D::circle(10), Grid1D::interval(-1, 1, 6)});
  auto h = g.sample([](const std::vector<double>& x) { return std::sin(6.28318 * x[0]) + x[1] * x[1]; });
  auto ls = lower_star(g, h, Field::F2, 0.0);
  auto c = ls.complex.complex();
  CHECK_NOTHROW(ChainComplex(c.field(), c.degrees(), c.d(), true));
  for (int j = 0; j < ls.complex.size(); ++j) CHECK(ls.complex.action(j) >= 0.0);
}
