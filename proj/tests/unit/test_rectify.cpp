#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sheafq/rectify.hpp"

using namespace sq;

namespace {

const double kTwoPi = 2 * std::numbers::pi;

// Random functions over a small circle; increments are positive at most
// vertices, so the order has both comparable and incomparable pairs.
CoherentDiagram random_strict(unsigned seed, Field f, int* nfun = nullptr) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 5 + static_cast<int>(seed % 2);
  auto base = std::vector<Grid1D>{Grid1D::circle(n)};
  GraphBrane L{"L", base, {}, 0};
  for (int v = 0; v < n; ++v) L.f.push_back(u(rng));
  const int k = 2 + static_cast<int>(rng() % 3);
  std::vector<GraphBrane> fs;
  std::vector<double> cur(n, -2.0);
  for (int i = 0; i < k; ++i) {
    auto next = cur;
    for (auto& x : next) x += (rng() % 4 == 0 ? -0.1 : 0.3) + 0.3 * (u(rng) + 1);
    fs.push_back({"f" + std::to_string(i), base, next, 0});
    if (rng() % 3) cur = next;
  }
  if (nfun) *nfun = k;
  return geometric_diagram(fs, L, -kInf, kInf, f);
}

}  // namespace

TEST_CASE("rectified differential squares to zero on random coherent diagrams") {
  int higher = 0;
  for (unsigned seed = 1; seed <= 100; ++seed) {
    const Field f = seed % 2 ? Field::Q : Field::F2;
    auto d = perturb_coherent(random_strict(seed, f), seed + 1000);
    for (const auto& V : d.V) CHECK(V.size() <= 12);
    for (const auto& [c, m] : d.phi) higher += c.size() > 2 && !m.is_zero();
    auto rep = check_coherence(d);
    REQUIRE_MESSAGE(rep.pass, rep.first_failure);
    for (int s = 0; s < d.poset.size(); ++s) {
      auto R = rectify_at(d, s);
      CHECK((R.complex.d() * R.complex.d()).is_zero());
      CHECK(is_quasi_iso(d.V[s].complex(), R.complex.complex(), R.inclusion));
    }
  }
  CHECK(higher > 20);
}

TEST_CASE("zero homotopies leave the diagram unchanged") {
  auto d = random_strict(4, Field::Q);
  auto p = perturb_coherent(d, 9, 0.0);
  CHECK(p.phi.size() == d.phi.size());
  for (const auto& [c, m] : d.phi) CHECK(p.phi.at(c) == m);
}

TEST_CASE("coherence report names the failing chain") {
  for (unsigned seed = 1; seed < 50; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    std::vector<int> target;
    for (const auto& c : d.poset.strict_chains())
      if (c.size() == 3 && target.empty()) target = c;
    if (target.empty()) continue;
    const int rows = d.V[target.front()].size(), cols = d.V[target.back()].size();
    SparseMatrix bump(Field::Q, rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (d.V[target.front()].degree(r) == d.V[target.back()].degree(c) - 1) {
          bump.set_col(c, make_vec(Field::Q, {{r, Rational(1)}}));
          break;
        }
    if (bump.is_zero()) continue;
    auto it = d.phi.find(target);
    d.phi[target] = it == d.phi.end() ? bump : it->second + bump;
    auto rep = check_coherence(d);
    CHECK_FALSE(rep.pass);
    std::string name = "(" + std::to_string(target[0]) + "<=" + std::to_string(target[1]) + "<=" +
                       std::to_string(target[2]) + ")";
    CHECK(rep.first_failure.find(name) != std::string::npos);
    return;
  }
  FAIL("no diagram with a chain of length three");
}

TEST_CASE("truncation below lambda respects the filtration") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-2, 3);
    for (int s = 0; s < d.poset.size(); ++s) {
      const double lambda = u(rng);
      auto R = rectify_at(d, s, lambda);
      for (double a : R.complex.actions()) CHECK(a < lambda);
      auto Vl = d.V[s].window(-kInf, lambda);
      CHECK(is_quasi_iso(Vl.complex(), R.complex.complex(), R.inclusion));
      CHECK(drop_zero(R.complex.window_ranks(-kInf, lambda)) == drop_zero(d.V[s].window_ranks(-kInf, lambda)));
    }
  }
}

TEST_CASE("restriction maps compose strictly") {
  int triples = 0;
  for (unsigned seed = 1; seed <= 30; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    std::vector<Rectified> R;
    for (int s = 0; s < d.poset.size(); ++s) R.push_back(rectify_at(d, s, 1.0));
    const int n = d.poset.size();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          if (d.poset.less(a, b) && d.poset.less(b, c)) {
            auto cb = restriction(d, R[c], R[b]);
            auto ba = restriction(d, R[b], R[a]);
            auto ca = restriction(d, R[c], R[a]);
            CHECK(ba.m * cb.m == ca.m);
            ++triples;
          }
    CHECK_THROWS_AS(restriction(d, R[0], rectify_at(d, 0, 2.0)), RectifyError);
  }
  CHECK(triples > 0);
}

TEST_CASE("E2 page sits in chain degree zero") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const Field f = seed % 2 ? Field::Q : Field::F2;
    auto d = perturb_coherent(random_strict(seed, f), seed);
    for (int s = 0; s < d.poset.size(); ++s) {
      auto page = e2_page(d, s);
      std::map<int, int> col0;
      for (auto [pq, r] : page.rank) {
        CHECK(pq.first == 0);
        col0[pq.second] = r;
      }
      CHECK(col0 == drop_zero(d.V[s].complex().cohomology_ranks()));
    }
  }
}

TEST_CASE("brute-force sublemma on chains of length m") {
  for (int m = 2; m <= 5; ++m) {
    auto r = brute_force_sublemma(m);
    CHECK(r.delta_squared_zero);
    CHECK(r.delta_acyclic);
    CHECK(r.d1_homology == std::map<int, int>{{0, 1}});
    CHECK(r.normalized_homology == std::map<int, int>{{0, 1}});
    CHECK_FALSE(r.plus_sign_squares_to_zero);
    CHECK(r.pass);
  }
}

TEST_CASE("mirrored construction gives the dual barcode") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    auto dd = dual_diagram(d);
    REQUIRE(check_coherence(dd).pass);
    for (int s = 0; s < d.poset.size(); ++s) {
      auto a = rectify_at(dd, s).complex.barcode();
      auto b = dual_complex(d.V[s]).barcode();
      a.sort();
      b.sort();
      CHECK(a.csv() == b.csv());
    }
  }
}

TEST_CASE("differential_D validates its input") {
  auto d = random_strict(2, Field::Q);
  REQUIRE(d.poset.size() >= 2);
  CHECK_THROWS_AS(differential_D(d, {0}, SparseVec{}), RectifyError);
  auto big = make_vec(Field::Q, {{d.V[0].size() + 3, Rational(1)}});
  CHECK_THROWS_AS(differential_D(d, {0, 0}, big), RectifyError);
  auto terms = differential_D(d, {0, 0}, make_vec(Field::Q, {{0, Rational(1)}}));
  for (const auto& [key, c] : terms) CHECK(key.first == std::vector<int>{0, 0});
}

TEST_CASE("sheafified graph agrees with its quantization") {
  auto g = graph_genfun("g", {Grid1D::circle(40)}, [](const std::vector<double>& x) {
    return 0.4 * std::sin(kTwoPi * x[0]) + 0.2 * std::cos(3 * kTwoPi * x[0]);
  });
  SheafifyReport rep;
  auto F = sheafify_limit(g, Field::F2, &rep);
  CHECK(rep.stabilized);
  CHECK(rep.history.size() >= 2);
  auto Q = quantize(g);
  auto boxes = regular_boxes({&F, &Q}, Field::F2, 40, 5, 0.02);
  std::string first;
  CHECK_MESSAGE(count_mismatches(F, Q, boxes, Field::F2, &first) == 0, first);
  // Over all of N the sections are the Floer cohomology with the zero section.
  auto lv = regular_levels(g);
  REQUIRE(lv.size() >= 3);
  for (std::size_t i = 0; i < lv.size(); ++i)
    for (std::size_t j = i + 1; j < lv.size(); ++j)
      CHECK(sections(F, Region::all(), lv[i], lv[j]) == drop_zero(gf_floer_ranks(g, lv[i], lv[j])));
}

TEST_CASE("sheafified cusp agrees with its quantization") {
  auto c = cusp_genfun({Grid1D::interval(-1, 1, 12)}, 2.0, 24);
  SheafifyReport rep;
  auto F = sheafify_limit(c, Field::F2, &rep);
  CHECK(rep.stabilized);
  auto Q = quantize(c);
  auto boxes = regular_boxes({&F, &Q}, Field::F2, 40, 7, 0.02);
  std::string first;
  CHECK_MESSAGE(count_mismatches(F, Q, boxes, Field::F2, &first) == 0, first);
}

TEST_CASE("one function: the rectified complex is the complex itself") {
  auto base = std::vector<Grid1D>{Grid1D::circle(6)};
  GraphBrane L = graph_brane("L", base, [](const std::vector<double>& x) { return std::sin(kTwoPi * x[0]); });
  GraphBrane z = graph_brane("z", base, [](const std::vector<double>&) { return 0.0; });
  auto d = geometric_diagram({z}, L, -kInf, kInf, Field::Q);
  auto R = rectify_at(d, 0);
  CHECK(R.complex.size() == d.V[0].size());
  CHECK(R.inclusion.m == SparseMatrix::identity(Field::Q, d.V[0].size()));
  CHECK(R.complex.d() == d.V[0].d());
  CHECK_THROWS_AS(rectify_at(d, 1), RectifyError);
}

TEST_CASE("D on the degenerate pair and on the first continuation term") {
  for (unsigned seed = 1; seed <= 30; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    for (int a = 0; a < d.poset.size(); ++a)
      for (int b = 0; b < d.poset.size(); ++b) {
        if (!d.poset.less(a, b)) continue;
        for (int x = 0; x < d.V[b].size(); ++x) {
          auto ex = make_vec(Field::Q, {{x, Rational(1)}});
          // (a <= a <= b) (x) x carries (a <= a) (x) (a <= b)_* x
          auto terms = differential_D(d, {a, a, b}, ex);
          auto img = d.phi.at({a, b}).apply(ex);
          for (std::size_t k = 0; k < img.idx.size(); ++k)
            CHECK(terms[{std::vector<int>{a, a}, img.idx[k]}] == img.coef(Field::Q, k));
        }
        for (int x = 0; x < d.V[a].size(); ++x) {
          auto ex = make_vec(Field::Q, {{x, Rational(1)}});
          auto terms = differential_D(d, {a, a}, ex);
          auto dx = d.V[a].d().apply(ex);
          CHECK(terms.size() == dx.idx.size());
          for (std::size_t k = 0; k < dx.idx.size(); ++k)
            CHECK(terms[{std::vector<int>{a, a}, dx.idx[k]}] == dx.coef(Field::Q, k));
        }
      }
  }
}

TEST_CASE("D never lowers the action") {
  for (unsigned seed = 1; seed <= 40; ++seed) {
    auto d = perturb_coherent(random_strict(seed, Field::Q), seed);
    for (int s = 0; s < d.poset.size(); ++s) {
      auto R = rectify_at(d, s);
      for (int c = 0; c < R.complex.size(); ++c)
        for (int r : R.complex.d().col(c).idx) CHECK(R.complex.action(r) >= R.complex.action(c));
    }
  }
}

TEST_CASE("E2 page on strict diagrams") {
  for (unsigned seed = 1; seed <= 20; ++seed) {
    auto d = random_strict(seed, Field::F2);
    for (int s = 0; s < d.poset.size(); ++s) {
      std::map<std::pair<int, int>, int> want;
      for (auto [q, r] : drop_zero(d.V[s].complex().cohomology_ranks())) want[{0, q}] = r;
      CHECK(e2_page(d, s).rank == want);
    }
  }
}
