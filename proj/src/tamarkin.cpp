#include "sheafq/tamarkin.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace sq {

namespace {

std::vector<Grid1D> concat(const std::vector<Grid1D>& a, const std::vector<Grid1D>& b) {
  std::vector<Grid1D> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

const CellSheaf& cellular_of(const TameSheaf& F, Field f, TameSheaf& holder) {
  holder = F.is_gf() ? to_cellular(F, f, 0) : F;
  if (holder.cell->field != f) throw SheafError(F.name + ": cellular presentation has another field");
  return *holder.cell;
}

void require_bounded_below(const CellSheaf& c, const std::string& name) {
  for (const auto& st : c.stalks)
    for (double a : st.actions())
      if (!std::isfinite(a)) throw SheafError(name + ": support is not bounded below");
}

SparseMatrix map_or_zero(const CellSheaf& c, int s, int t) {
  if (const ChainMap* m = c.map(s, t)) return m->m;
  return SparseMatrix(c.field, c.stalks[t].size(), c.stalks[s].size());
}

FilteredComplex point_complex(Field f, double action) {
  return FilteredComplex(f, {0}, {action}, SparseMatrix(f, 1, 1), false);
}

bool is_graph(const TameSheaf& F) { return F.is_gf() && F.gf->k() == 0; }

std::vector<int> up_set(const CubicalGrid& g, int s) {
  std::set<int> seen{s};
  std::vector<int> todo{s};
  while (!todo.empty()) {
    int c = todo.back();
    todo.pop_back();
    for (auto [t, inc] : g.coboundary(c))
      if (seen.insert(t).second) todo.push_back(t);
  }
  return {seen.begin(), seen.end()};
}

// z_sigma in degree 0 of every stalk with d z = 0 and rho z_sigma = z_tau, each a
// nonzero class.
std::vector<SparseVec> natural_unit(const CellSheaf& c, const std::string& name) {
  const Field f = c.field;
  const int nc = c.base.num_cells();
  std::vector<std::vector<int>> zero_gens(nc);
  std::vector<int> off(nc + 1, 0);
  for (int s = 0; s < nc; ++s) {
    for (int g = 0; g < c.stalks[s].size(); ++g)
      if (c.stalks[s].degree(g) == 0) zero_gens[s].push_back(g);
    off[s + 1] = off[s] + static_cast<int>(zero_gens[s].size());
  }
  std::vector<std::tuple<int, int, Rational>> trip;
  int row = 0;
  for (int s = 0; s < nc; ++s) {
    // rows: d z_s = 0, one per generator of the stalk
    const auto& d = c.stalks[s].d();
    for (std::size_t k = 0; k < zero_gens[s].size(); ++k) {
      const auto& col = d.col(zero_gens[s][k]);
      for (std::size_t q = 0; q < col.idx.size(); ++q)
        trip.emplace_back(row + col.idx[q], off[s] + static_cast<int>(k), col.coef(f, q));
    }
    row += c.stalks[s].size();
  }
  for (int t = 0; t < nc; ++t)
    for (auto [s, inc] : c.base.boundary(t)) {
      SparseMatrix m = map_or_zero(c, s, t);
      for (std::size_t k = 0; k < zero_gens[s].size(); ++k) {
        const auto& col = m.col(zero_gens[s][k]);
        for (std::size_t q = 0; q < col.idx.size(); ++q)
          trip.emplace_back(row + col.idx[q], off[s] + static_cast<int>(k), col.coef(f, q));
      }
      for (std::size_t k = 0; k < zero_gens[t].size(); ++k)
        trip.emplace_back(row + zero_gens[t][k], off[t] + static_cast<int>(k), Rational(-1));
      row += c.stalks[t].size();
    }
  SparseMatrix M = SparseMatrix::from_triplets(f, row, off[nc], trip);
  Reduction red = reduce_columns(M, true);
  std::vector<SparseVec> kernel;
  for (int j = 0; j < M.cols(); ++j)
    if (red.R[j].empty()) kernel.push_back(red.V[j]);

  auto nonzero_everywhere = [&](const SparseVec& z, std::vector<SparseVec>& out) {
    out.assign(nc, SparseVec{});
    for (int s = 0; s < nc; ++s) {
      std::vector<std::pair<int, Rational>> e;
      for (std::size_t q = 0; q < z.idx.size(); ++q)
        if (z.idx[q] >= off[s] && z.idx[q] < off[s + 1])
          e.emplace_back(zero_gens[s][z.idx[q] - off[s]], z.coef(f, q));
      out[s] = make_vec(f, e);
      if (out[s].empty()) return false;
      // a coboundary would be in the span of the degree -1 columns
      const auto& st = c.stalks[s];
      std::vector<int> rows(st.size()), cols;
      for (int g = 0; g < st.size(); ++g) {
        rows[g] = g;
        if (st.degree(g) == -1) cols.push_back(g);
      }
      if (solve(st.d().submatrix(rows, cols), out[s]).has_value()) return false;
    }
    return true;
  };
  std::mt19937 rng(11);
  std::vector<SparseVec> out;
  for (int attempt = 0; attempt < 8 && !kernel.empty(); ++attempt) {
    SparseVec z;
    for (const auto& k : kernel) {
      int c0 = attempt == 0 ? 1 : static_cast<int>(rng() % 5) - 2;
      if (f == Field::F2) c0 = attempt == 0 ? 1 : static_cast<int>(rng() % 2);
      if (c0 != 0) axpy(f, z, Rational(c0), k);
    }
    if (nonzero_everywhere(z, out)) return out;
  }
  throw SheafError(name + ": no unit map k_{N x R} -> F (F is not k_N near +infinity)");
}

}  // namespace

FilteredComplex filtered_tensor(const FilteredComplex& a, const FilteredComplex& b) {
  const Field f = a.field();
  if (b.field() != f) throw SheafError("tensor of complexes over different fields");
  const int na = a.size(), nb = b.size();
  std::vector<int> deg(na * nb);
  std::vector<double> act(na * nb);
  SparseMatrix d(f, na * nb, na * nb);
  for (int j = 0; j < nb; ++j)
    for (int i = 0; i < na; ++i) {
      const int g = i + na * j;
      deg[g] = a.degree(i) + b.degree(j);
      act[g] = a.action(i) + b.action(j);
      std::vector<std::pair<int, Rational>> e;
      const auto& ca = a.d().col(i);
      for (std::size_t q = 0; q < ca.idx.size(); ++q) e.emplace_back(ca.idx[q] + na * j, ca.coef(f, q));
      const Rational sg = a.degree(i) % 2 ? -1 : 1;
      const auto& cb = b.d().col(j);
      for (std::size_t q = 0; q < cb.idx.size(); ++q) e.emplace_back(i + na * cb.idx[q], sg * cb.coef(f, q));
      d.set_col(g, make_vec(f, std::move(e)));
    }
  return FilteredComplex(f, std::move(deg), std::move(act), std::move(d), false);
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  const Field f = a.field();
  SparseMatrix m(f, a.rows() * b.rows(), a.cols() * b.cols());
  for (int j = 0; j < b.cols(); ++j)
    for (int i = 0; i < a.cols(); ++i) {
      std::vector<std::pair<int, Rational>> e;
      const auto& ca = a.col(i);
      const auto& cb = b.col(j);
      for (std::size_t q = 0; q < ca.idx.size(); ++q)
        for (std::size_t r = 0; r < cb.idx.size(); ++r)
          e.emplace_back(ca.idx[q] + a.rows() * cb.idx[r], ca.coef(f, q) * cb.coef(f, r));
      m.set_col(i + a.cols() * j, make_vec(f, std::move(e)));
    }
  return m;
}

TameSheaf convolve(const TameSheaf& F, const TameSheaf& G, Field f) {
  if (F.is_gf() && G.is_gf()) {
    TameSheaf out = quantize(external_sum(*F.gf, *G.gf));
    out.name = F.name + " * " + G.name;
    return out;
  }
  TameSheaf hf, hg;
  const CellSheaf& a = cellular_of(F, f, hf);
  const CellSheaf& b = cellular_of(G, f, hg);
  require_bounded_below(a, F.name);
  require_bounded_below(b, G.name);
  CellSheaf c;
  c.field = f;
  c.base = CubicalGrid(concat(a.base.axes(), b.base.axes()));
  const int n1 = a.base.num_cells();
  for (int id = 0; id < c.base.num_cells(); ++id)
    c.stalks.push_back(filtered_tensor(a.stalks[id % n1], b.stalks[id / n1]));
  for (int t = 0; t < c.base.num_cells(); ++t)
    for (auto [s, sg] : c.base.boundary(t)) {
      const int s1 = s % n1, s2 = s / n1, t1 = t % n1, t2 = t / n1;
      SparseMatrix m = s2 == t2 ? kron(map_or_zero(a, s1, t1), SparseMatrix::identity(f, b.stalks[t2].size()))
                                : kron(SparseMatrix::identity(f, a.stalks[t1].size()), map_or_zero(b, s2, t2));
      c.maps[{s, t}] = ChainMap{std::move(m), 0};
    }
  return from_cells(std::move(c), F.name + " * " + G.name);
}

TameSheaf tensor(const TameSheaf& F, const TameSheaf& G, Field f) {
  if (!same_base(F.base_axes(), G.base_axes())) throw SheafError("tensor: base grids differ");
  if (F.is_gf() && G.is_gf()) {
    TameSheaf out = quantize(box_sum(*F.gf, *G.gf));
    out.name = F.name + " (x) " + G.name;
    return out;
  }
  TameSheaf hf, hg;
  const CellSheaf& a = cellular_of(F, f, hf);
  const CellSheaf& b = cellular_of(G, f, hg);
  require_bounded_below(a, F.name);
  require_bounded_below(b, G.name);
  CellSheaf c;
  c.field = f;
  c.base = a.base;
  for (int s = 0; s < c.base.num_cells(); ++s) c.stalks.push_back(filtered_tensor(a.stalks[s], b.stalks[s]));
  for (int t = 0; t < c.base.num_cells(); ++t)
    for (auto [s, sg] : c.base.boundary(t))
      c.maps[{s, t}] = ChainMap{kron(map_or_zero(a, s, t), map_or_zero(b, s, t)), 0};
  return from_cells(std::move(c), F.name + " (x) " + G.name);
}

TameSheaf dualize_cellular(const TameSheaf& F, Field f) {
  TameSheaf holder;
  const CellSheaf& c = cellular_of(F, f, holder);
  require_bounded_below(c, F.name);
  const int nc = c.base.num_cells();
  for (int s = 0; s < nc; ++s)
    if (drop_zero(c.stalks[s].window_ranks(-kInf, kInf)) != std::map<int, int>{{0, 1}})
      throw SheafError(F.name + ": stalks are not k near +infinity, no dual");
  auto z = natural_unit(c, F.name);
  double low = 0;
  for (const auto& st : c.stalks)
    for (double a : st.actions()) low = std::min(low, a);
  low -= 1.0;  // action of the k_{N x R} generator, a stand-in for -infinity

  // F-bar = fiber of the unit map, generator 0 from k_{N x R}
  CellSheaf bar;
  bar.field = f;
  bar.base = c.base;
  for (int s = 0; s < nc; ++s) {
    SparseMatrix u(f, c.stalks[s].size(), 1);
    u.set_col(0, z[s]);
    bar.stalks.push_back(mapping_cone(point_complex(f, low), c.stalks[s], ChainMap{u, 0}).shifted(-1));
  }
  for (int t = 0; t < nc; ++t)
    for (auto [s, sg] : c.base.boundary(t)) {
      SparseMatrix m = map_or_zero(c, s, t);
      std::vector<std::tuple<int, int, Rational>> trip{{0, 0, Rational(1)}};
      for (int j = 0; j < m.cols(); ++j) {
        const auto& col = m.col(j);
        for (std::size_t q = 0; q < col.idx.size(); ++q) trip.emplace_back(col.idx[q] + 1, j + 1, col.coef(f, q));
      }
      bar.maps[{s, t}] = ChainMap{SparseMatrix::from_triplets(f, m.rows() + 1, m.cols() + 1, trip), 0};
    }

  // Dual over stars; generators at -low are the k_{N x R} part sitting at +infinity.
  const double top = -low - 0.5;
  const int n = c.base.dim();
  CellSheaf out;
  out.field = f;
  out.base = c.base;
  std::vector<std::map<std::pair<int, int>, int>> index(nc);  // (cell, gen of bar) -> stalk gen
  for (int s = 0; s < nc; ++s) {
    auto star = up_set(c.base, s);
    auto off = bar.total_offsets(star);
    auto D = dual_complex(bar.total(star, false));
    auto keep = D.window_indices(-kInf, top);
    for (std::size_t k = 0; k < keep.size(); ++k) {
      int j = keep[k];
      int i = static_cast<int>(std::upper_bound(off.begin(), off.end(), j) - off.begin()) - 1;
      index[s][{star[i], j - off[i]}] = static_cast<int>(k);
    }
    out.stalks.push_back(D.window(-kInf, top).shifted(dual_degree_shift(n)));
  }
  for (int t = 0; t < nc; ++t)
    for (auto [s, sg] : c.base.boundary(t)) {
      std::vector<std::tuple<int, int, Rational>> trip;
      for (auto [key, k] : index[s]) {
        auto it = index[t].find(key);
        if (it != index[t].end()) trip.emplace_back(it->second, k, Rational(1));
      }
      out.maps[{s, t}] = ChainMap{
          SparseMatrix::from_triplets(f, out.stalks[t].size(), out.stalks[s].size(), trip), 0};
    }
  TameSheaf res = from_cells(std::move(out), "dual " + F.name);
  if (F.is_gf()) res.origin = std::make_shared<const GenFun>(negate(*F.gf));
  else if (F.origin) res.origin = std::make_shared<const GenFun>(negate(*F.origin));
  return res;
}

TameSheaf dualize(const TameSheaf& F, Field f, int cross_checks, unsigned seed) {
  if (!F.is_gf()) return dualize_cellular(F, f);
  if (F.at_plus_infinity != std::map<int, int>{{0, 1}})
    throw SheafError(F.name + ": not k_N near +infinity, no dual");
  TameSheaf out = quantize(negate(*F.gf));
  out.name = "dual " + F.name;
  if (cross_checks > 0) {
    TameSheaf cell = dualize_cellular(F, f);
    auto boxes = regular_boxes({&out, &cell}, f, cross_checks, seed, action_pad(F));
    std::string first;
    if (count_mismatches(out, cell, boxes, f, &first) > 0)
      throw SheafError("dual of " + F.name + ": the two routes disagree, " + first);
  }
  return out;
}

TameSheaf rhom_tensor(const TameSheaf& F, const TameSheaf& G, Field f) {
  TameSheaf out = tensor(dualize(F, f), G, f);
  out.name = "Hom(" + F.name + ", " + G.name + ")";
  return out;
}

TameSheaf unit(const std::vector<Grid1D>& base, Field f) {
  CellSheaf c;
  c.field = f;
  c.base = CubicalGrid(base);
  for (int s = 0; s < c.base.num_cells(); ++s) c.stalks.push_back(point_complex(f, 0.0));
  for (int t = 0; t < c.base.num_cells(); ++t)
    for (auto [s, sg] : c.base.boundary(t)) c.maps[{s, t}] = ChainMap{SparseMatrix::identity(f, 1), 0};
  return from_cells(std::move(c), "unit");
}

void check_morphism(const CellSheaf& a, const CellSheaf& b, const CellMorphism& m) {
  const int nc = a.base.num_cells();
  if (b.base.num_cells() != nc || static_cast<int>(m.at.size()) != nc)
    throw SheafError("morphism: grids differ");
  for (int s = 0; s < nc; ++s) {
    try {
      check_filtered_map(a.stalks[s], b.stalks[s], m.at[s]);
    } catch (const std::exception& e) {
      throw SheafError("morphism at cell " + std::to_string(s) + ": " + e.what());
    }
  }
  for (int t = 0; t < nc; ++t)
    for (auto [s, sg] : a.base.boundary(t))
      if (!(map_or_zero(b, s, t) * m.at[s].m == m.at[t].m * map_or_zero(a, s, t)))
        throw SheafError("morphism does not commute with generization " + std::to_string(s) + " -> " +
                         std::to_string(t));
}

UnitMorphisms unit_morphisms(const TameSheaf& F, Field f) {
  const GenFun* S = F.is_gf() ? F.gf.get() : F.origin.get();
  if (!S || S->k() != 0)
    throw SheafError(F.name + ": unit morphisms need a graph-type quantization");
  GenFun prod = box_sum(negate(*S), *S);
  for (double v : prod.values)
    if (v != 0.0) throw SheafError(F.name + ": f - f is not identically zero");
  UnitMorphisms um;
  um.unit = unit(S->base, f);
  um.product = to_cellular(quantize(prod), f, 0);
  um.product.name = "dual " + F.name + " (x) " + F.name;
  const int nc = um.unit.cell->base.num_cells();
  for (int s = 0; s < nc; ++s) {
    um.u.at.push_back(ChainMap{SparseMatrix::identity(f, 1), 0});
    um.v.at.push_back(ChainMap{SparseMatrix::identity(f, 1), 0});
  }
  check_morphism(*um.unit.cell, *um.product.cell, um.u);
  check_morphism(*um.product.cell, *um.unit.cell, um.v);
  return um;
}

Barcode pushforward_barcode(const TameSheaf& F, Field f) {
  if (F.is_gf()) return gf_filtered(*F.gf, Region::all(), f).complex.shifted(F.gf->index).barcode();
  const auto& c = *F.cell;
  std::vector<int> all(c.base.num_cells());
  for (int s = 0; s < c.base.num_cells(); ++s) all[s] = s;
  return c.total(all).barcode();
}

namespace {

const GenFun& graph_home(const TameSheaf& h) {
  if (!is_graph(h)) throw SheafError(h.name + ": classes need a graph-type home");
  return *h.gf;
}

// Lower-star window complex of the home over all of N together with the
// generator -> cell table.
struct WindowComplex {
  ChainComplex complex;
  std::vector<int> cells;
};

WindowComplex window_complex(const GenFun& S, double lambda, Field f) {
  auto ls = lower_star(S.base_grid, S.values, f);
  auto keep = ls.complex.window_indices(lambda, kInf);
  WindowComplex w;
  w.complex = ls.complex.window(lambda, kInf).complex();
  for (int j : keep) w.cells.push_back(ls.cells[j]);
  return w;
}

Rational entry(const CohomologyClass& c, int cell) { return c.rep.at(c.field, cell); }

}  // namespace

std::vector<CohomologyClass> class_basis(const TameSheaf& home, double lambda, int degree, Field f) {
  const auto& S = graph_home(home);
  auto w = window_complex(S, lambda, f);
  std::vector<CohomologyClass> out;
  for (const auto& z : w.complex.cohomology_reps(degree)) {
    std::vector<std::pair<int, Rational>> e;
    for (std::size_t q = 0; q < z.idx.size(); ++q) e.emplace_back(w.cells[z.idx[q]], z.coef(f, q));
    out.push_back({home, lambda, degree, f, make_vec(f, e)});
  }
  return out;
}

CohomologyClass unit_class(const TameSheaf& home, double lambda, Field f) {
  const auto& S = graph_home(home);
  for (double v : S.values)
    if (v != 0.0) throw SheafError(home.name + ": unit class needs the zero function");
  if (lambda > 0) throw SheafError("unit class lives over [lambda, inf) with lambda <= 0");
  std::vector<std::pair<int, Rational>> e;
  for (int v = 0; v < S.base_grid.num_vertices(); ++v) e.emplace_back(S.base_grid.vertex_cell(v), 1);
  return {home, lambda, 0, f, make_vec(f, e)};
}

void check_closed(const CohomologyClass& c) {
  const auto& S = graph_home(c.home);
  const auto& g = S.base_grid;
  auto act = cell_actions(g, S.values);
  for (std::size_t q = 0; q < c.rep.idx.size(); ++q) {
    int s = c.rep.idx[q];
    if (g.cell_dim(s) != c.degree) throw SheafError("representative has cells of the wrong degree");
    if (act[s] < c.lambda) throw SheafError("representative is not supported in the window");
  }
  for (int t = 0; t < g.num_cells(); ++t) {
    if (g.cell_dim(t) != c.degree + 1) continue;
    Rational s = 0;
    for (auto [face, inc] : g.boundary(t)) s += Rational(inc) * entry(c, face);
    bool zero = c.field == Field::F2 ? numerator(s) % 2 == 0 : s == 0;
    if (!zero) throw SheafError("representative is not closed at cell " + std::to_string(t));
  }
}

bool is_exact(const CohomologyClass& c) {
  const auto& S = graph_home(c.home);
  auto w = window_complex(S, c.lambda, c.field);
  std::vector<int> where(S.base_grid.num_cells(), -1);
  for (std::size_t k = 0; k < w.cells.size(); ++k) where[w.cells[k]] = static_cast<int>(k);
  std::vector<std::pair<int, Rational>> e;
  for (std::size_t q = 0; q < c.rep.idx.size(); ++q) e.emplace_back(where[c.rep.idx[q]], c.rep.coef(c.field, q));
  return solve(w.complex.d(), make_vec(c.field, e)).has_value();
}

CohomologyClass cup_product(const CohomologyClass& a, const CohomologyClass& b) {
  check_closed(a);
  check_closed(b);
  const auto& Sa = graph_home(a.home);
  const auto& Sb = graph_home(b.home);
  if (!same_base(Sa.base, Sb.base)) throw SheafError("cup product: homes live on different bases");
  if (a.field != b.field) throw SheafError("cup product: fields differ");
  const Field f = a.field;
  std::vector<double> vals(Sa.values.size());
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = Sa.values[i] + Sb.values[i];
  CohomologyClass out;
  out.home = quantize(graph_from_values(Sa.name + "+" + Sb.name, Sa.base, vals));
  out.lambda = a.lambda + b.lambda;
  out.degree = a.degree + b.degree;
  out.field = f;

  const auto& g = Sa.base_grid;
  std::vector<std::pair<int, Rational>> e;
  for (int c = 0; c < g.num_cells(); ++c) {
    if (g.cell_dim(c) != out.degree) continue;
    auto pos = g.position(c);
    std::vector<int> edges;
    for (int ax = 0; ax < g.dim(); ++ax)
      if (pos[ax] % 2) edges.push_back(ax);
    const int m = static_cast<int>(edges.size());
    Rational sum = 0;
    for (int mask = 0; mask < (1 << m); ++mask) {
      if (__builtin_popcount(mask) != a.degree) continue;
      auto front = pos, back = pos;
      int inversions = 0;
      for (int i = 0; i < m; ++i) {
        const int ax = edges[i];
        const int P = g.axis(ax).positions();
        if (mask >> i & 1) {
          back[ax] = (pos[ax] + 1) % P;  // axis spanned by the front face
          for (int j = 0; j < i; ++j)
            if (!(mask >> j & 1)) ++inversions;
        } else {
          front[ax] = pos[ax] - 1;
        }
      }
      Rational x = entry(a, g.cell_id(front));
      if (x == 0) continue;
      Rational y = entry(b, g.cell_id(back));
      if (y == 0) continue;
      sum += (inversions % 2 ? -1 : 1) * x * y;
    }
    if (sum != 0) e.emplace_back(c, sum);
  }
  out.rep = make_vec(f, e);
  auto act = cell_actions(g, vals);
  for (int s : out.rep.idx)
    if (act[s] < out.lambda) {
      std::ostringstream os;
      os << "cup product leaves the window [" << out.lambda << ", inf) at cell " << s
         << "; the two thresholds cross on one edge, move them apart";
      throw SheafError(os.str());
    }
  return out;
}

std::vector<std::vector<int>> circle_runs(const GenFun& S, double lambda) {
  const auto& g = S.base_grid;
  if (g.dim() != 1 || g.axis(0).topology != Topology::Circle)
    throw SheafError("circle coordinates need a circle base");
  const int n = g.axis(0).n;
  auto act = cell_actions(g, S.values);
  auto vcell = [&](int v) { return g.cell_id({2 * v}); };
  auto ecell = [&](int i) { return g.cell_id({2 * i + 1}); };  // edge [v_i, v_{i+1}]
  int start = -1;
  for (int v = 0; v < n; ++v)
    if (act[vcell(v)] < lambda) {
      start = v;
      break;
    }
  std::vector<std::vector<int>> runs;
  if (start < 0) {
    runs.emplace_back();
    for (int i = 0; i < n; ++i) runs.back().push_back(ecell(i));
    return runs;
  }
  std::vector<int> cur;
  for (int k = 0; k < n; ++k) {
    int i = (start + k) % n;
    if (act[vcell(i)] < lambda && !cur.empty()) {
      runs.push_back(cur);
      cur.clear();
    }
    if (act[ecell(i)] >= lambda) cur.push_back(ecell(i));
  }
  if (!cur.empty()) runs.push_back(cur);
  std::sort(runs.begin(), runs.end());
  return runs;
}

std::vector<Rational> circle_coordinates(const CohomologyClass& c) {
  const auto& S = graph_home(c.home);
  auto runs = circle_runs(S, c.lambda);
  std::vector<Rational> out;
  if (c.degree == 0) {
    auto act = cell_actions(S.base_grid, S.values);
    for (double a : act)
      if (a < c.lambda) return out;
    out.push_back(entry(c, S.base_grid.vertex_cell(0)));
    return out;
  }
  if (c.degree != 1) return out;
  for (const auto& r : runs) {
    Rational s = 0;
    for (int e : r) s += entry(c, e);
    out.push_back(c.field == Field::F2 ? Rational(numerator(s) % 2 != 0 ? 1 : 0) : s);
  }
  return out;
}

std::vector<CohomologyClass> circle_basis(const TameSheaf& home, double lambda, int degree, Field f) {
  const auto& S = graph_home(home);
  auto runs = circle_runs(S, lambda);
  std::vector<CohomologyClass> out;
  if (degree == 0) {
    for (double a : cell_actions(S.base_grid, S.values))
      if (a < lambda) return out;
    std::vector<std::pair<int, Rational>> e;
    for (int v = 0; v < S.base_grid.num_vertices(); ++v) e.emplace_back(S.base_grid.vertex_cell(v), 1);
    out.push_back({home, lambda, 0, f, make_vec(f, e)});
  } else if (degree == 1) {
    for (const auto& r : runs) out.push_back({home, lambda, 1, f, make_vec(f, {{r.front(), 1}})});
  }
  return out;
}

double action_pad(const TameSheaf& F) {
  const GenFun* S = F.is_gf() ? F.gf.get() : F.origin.get();
  return S ? 2 * value_tolerance(*S) : 1e-6;
}

namespace {

std::vector<double> breakpoints_near(const TameSheaf& F, const Region& U) {
  const auto& axes = F.base_axes();
  Region wide;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    const AxisRange& r = a < U.ranges.size() ? U.ranges[a] : AxisRange::all();
    if (r.full) wide.ranges.push_back(r);
    else wide.ranges.push_back(AxisRange::between(r.lo - 1.01 * axes[a].spacing, r.hi + 1.01 * axes[a].spacing));
  }
  std::vector<double> out;
  if (F.is_gf()) {
    const auto& S = *F.gf;
    for (int b = 0; b < S.n_base(); ++b)
      if (wide.contains(S.base, S.base_grid.vertex_coords(b)))
        for (const auto& s : fiber_critical_data(S, b)) out.push_back(s.value);
    return out;
  }
  const auto& c = *F.cell;
  for (int s : c.base.closed_cells(wide))
    for (const auto& bar : c.stalks[s].barcode().bars)
      for (double e : {bar.birth, bar.death})
        if (std::isfinite(e)) out.push_back(e);
  return out;
}

}  // namespace

std::vector<Box> regular_boxes(const std::vector<const TameSheaf*>& sheaves, Field, int count,
                               unsigned seed, double pad) {
  if (sheaves.empty()) return {};
  const auto& axes = sheaves.front()->base_axes();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit01(0.0, 1.0);
  std::vector<Box> out;
  for (int attempt = 0; attempt < 50 * count && static_cast<int>(out.size()) < count; ++attempt) {
    Box bx;
    for (const auto& ax : axes) {
      double len = ax.period();
      if (unit01(rng) < 0.15) {
        bx.U.ranges.push_back(AxisRange::all());
        continue;
      }
      double lo = ax.origin + unit01(rng) * len;
      double hi = lo + unit01(rng) * (ax.topology == Topology::Circle ? 0.9 * len : ax.origin + len - lo);
      bx.U.ranges.push_back(AxisRange::between(lo, hi));
    }
    std::vector<double> bp;
    for (const auto* F : sheaves) {
      auto more = breakpoints_near(*F, bx.U);
      bp.insert(bp.end(), more.begin(), more.end());
    }
    double lo = -1, hi = 1;
    if (!bp.empty()) {
      lo = *std::min_element(bp.begin(), bp.end()) - 1;
      hi = *std::max_element(bp.begin(), bp.end()) + 1;
    }
    auto clear = [&](double t) {
      if (!std::isfinite(t)) return true;
      for (double p : bp)
        if (std::fabs(p - t) <= pad) return false;
      return true;
    };
    double a = unit01(rng) < 0.2 ? -kInf : lo + unit01(rng) * (hi - lo);
    double b = unit01(rng) < 0.2 ? kInf : lo + unit01(rng) * (hi - lo);
    if (a > b) std::swap(a, b);
    if (!(a < b) || !clear(a) || !clear(b)) continue;
    bx.a = a;
    bx.b = b;
    out.push_back(bx);
  }
  return out;
}

int count_mismatches(const TameSheaf& F, const TameSheaf& G, const std::vector<Box>& boxes, Field f,
                     std::string* first) {
  int bad = 0;
  for (const auto& bx : boxes) {
    auto l = sections(F, bx.U, bx.a, bx.b, f, false);
    auto r = sections(G, bx.U, bx.a, bx.b, f, false);
    if (l == r) continue;
    if (bad == 0 && first) {
      std::ostringstream os;
      os << "window [" << bx.a << ", " << bx.b << "): " << ranks_string(l) << " vs " << ranks_string(r);
      *first = os.str();
    }
    ++bad;
  }
  return bad;
}

}  // namespace sq
