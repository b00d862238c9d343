#include "sheafq/floer_graph.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace sq {

GraphBrane graph_brane(std::string name, std::vector<Grid1D> base,
                       const std::function<double(const std::vector<double>&)>& f, int offset) {
  CubicalGrid g(base);
  return {std::move(name), std::move(base), g.sample(f), offset};
}

GenFun as_genfun(const GraphBrane& L) { return graph_from_values(L.name, L.base, L.f); }

namespace {

// Cells having v as a vertex.
std::vector<int> star_of(const CubicalGrid& g, int v) {
  auto base = g.position(g.vertex_cell(v));
  std::vector<int> out;
  std::vector<int> delta(g.dim(), -1);
  while (true) {
    std::vector<int> pos(g.dim());
    bool ok = true;
    for (int a = 0; a < g.dim() && ok; ++a) {
      int p = base[a] + delta[a];
      const int m = g.axis(a).positions();
      if (g.axis(a).topology == Topology::Circle) p = (p + m) % m;
      else if (p < 0 || p >= m) ok = false;
      pos[a] = p;
    }
    if (ok) out.push_back(g.cell_id(pos));
    int a = 0;
    while (a < g.dim() && delta[a] == 1) delta[a++] = -1;
    if (a == g.dim()) break;
    ++delta[a];
  }
  return out;
}

enum : char { kFree = 0, kCritical = 1, kPaired = 2 };

struct Gradient {
  std::vector<char> state;
  std::vector<int> partner;
  std::vector<int> critical;
};

// Pairs cells inside each lower star; the lower star of v holds the cells whose
// highest vertex in (value, index) order is v.
Gradient lower_star_gradient(const CubicalGrid& g, const std::vector<double>& values) {
  const int nv = g.num_vertices();
  std::vector<int> order(nv), rank(nv);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    return values[x] != values[y] ? values[x] < values[y] : x < y;
  });
  for (int i = 0; i < nv; ++i) rank[order[i]] = i;

  Gradient G;
  G.state.assign(g.num_cells(), kFree);
  G.partner.assign(g.num_cells(), -1);
  auto key = [&](int c) {
    std::vector<int> r;
    for (int v : g.vertices(c)) r.push_back(rank[v]);
    std::sort(r.rbegin(), r.rend());
    return r;
  };
  auto pair_up = [&](int lo, int hi) {
    G.state[lo] = G.state[hi] = kPaired;
    G.partner[lo] = hi;
    G.partner[hi] = lo;
  };

  for (int v : order) {
    std::vector<int> L;
    for (int c : star_of(g, v)) {
      bool lower = true;
      for (int w : g.vertices(c))
        if (rank[w] > rank[v]) lower = false;
      if (lower) L.push_back(c);
    }
    const int vc = g.vertex_cell(v);
    if (L.size() == 1) {
      G.state[vc] = kCritical;
      G.critical.push_back(vc);
      continue;
    }
    auto in_L = [&](int c) { return std::find(L.begin(), L.end(), c) != L.end(); };
    auto unpaired_faces = [&](int c) {
      std::vector<int> out;
      for (auto [face, s] : g.boundary(c))
        if (in_L(face) && G.state[face] == kFree) out.push_back(face);
      return out;
    };
    using Entry = std::pair<std::vector<int>, int>;
    std::set<Entry> pq_zero, pq_one;
    auto push_cofaces = [&](int c) {
      for (int b : L)
        if (G.state[b] == kFree && g.cell_dim(b) == g.cell_dim(c) + 1) {
          bool has = false;
          for (auto [face, s] : g.boundary(b)) has |= face == c;
          if (has && unpaired_faces(b).size() == 1) pq_one.insert({key(b), b});
        }
    };

    int delta = -1;
    for (int c : L)
      if (g.cell_dim(c) == 1 && (delta < 0 || key(c) < key(delta))) delta = c;
    pair_up(vc, delta);
    for (int c : L)
      if (g.cell_dim(c) == 1 && c != delta) pq_zero.insert({key(c), c});
    push_cofaces(delta);

    while (!pq_one.empty() || !pq_zero.empty()) {
      while (!pq_one.empty()) {
        int a = pq_one.begin()->second;
        pq_one.erase(pq_one.begin());
        if (G.state[a] != kFree) continue;
        auto faces = unpaired_faces(a);
        if (faces.empty()) {
          pq_zero.insert({key(a), a});
          continue;
        }
        int t = faces.front();
        pair_up(t, a);
        pq_zero.erase({key(t), t});
        push_cofaces(a);
        push_cofaces(t);
      }
      if (!pq_zero.empty()) {
        int c = pq_zero.begin()->second;
        pq_zero.erase(pq_zero.begin());
        if (G.state[c] != kFree) continue;
        G.state[c] = kCritical;
        G.critical.push_back(c);
        push_cofaces(c);
      }
    }
    for (int c : L)
      if (G.state[c] == kFree) throw FloerError("discrete gradient left a cell unclassified");
  }
  return G;
}

int incidence(const CubicalGrid& g, int cell, int face) {
  for (auto [f, s] : g.boundary(cell))
    if (f == face) return s;
  return 0;
}

// Morse boundary of a critical cell: follow the flow of its boundary until
// only critical cells remain.
std::map<int, Rational> morse_boundary(const CubicalGrid& g, const Gradient& G, int sigma, Field f) {
  const int p = g.cell_dim(sigma);
  std::map<int, Rational> c;
  auto reduce = [&](Rational& x) {
    if (f == Field::F2) x = numerator(x) % 2 != 0 ? 1 : 0;
  };
  auto add = [&](int cell, const Rational& k) {
    Rational& x = c[cell];
    x += k;
    reduce(x);
    if (x == 0) c.erase(cell);
  };
  for (auto [face, s] : g.boundary(sigma)) add(face, s);
  while (true) {
    int t = -1;
    for (auto& [cell, k] : c)
      if (G.state[cell] == kPaired && g.cell_dim(G.partner[cell]) == p) {
        t = cell;
        break;
      }
    if (t < 0) break;
    const int a = G.partner[t];
    Rational k = c[t] / incidence(g, a, t);
    for (auto [face, s] : g.boundary(a)) add(face, -k * s);
  }
  for (auto it = c.begin(); it != c.end();)
    it = G.state[it->first] == kCritical ? std::next(it) : c.erase(it);
  return c;
}

std::vector<double> difference(const GraphBrane& L0, const GraphBrane& L1) {
  if (!same_base(L0.base, L1.base)) throw FloerError("branes live on different base grids");
  std::vector<double> h(L0.f.size());
  for (std::size_t v = 0; v < h.size(); ++v) h[v] = L1.f[v] - L0.f[v];
  return h;
}

double step_tolerance(const CubicalGrid& g, const std::vector<double>& h) {
  double t = 0;
  for (int v = 0; v < g.num_vertices(); ++v)
    for (int a = 0; a < g.dim(); ++a) {
      int w = grid_step(g, v, a, 1);
      if (w >= 0) t = std::max(t, std::fabs(h[w] - h[v]));
    }
  return 0.5 * t + 1e-9;
}

// Throws when a window end sits within tol of an endpoint of a bar of
// positive length starting at or above `floor`.
void check_ends(const FilteredComplex& c, double a, double b, double tol, double floor,
                const std::string& what) {
  for (const Bar& bar : c.barcode().bars) {
    if (bar.death - bar.birth <= 0 || bar.birth < floor) continue;
    for (double end : {a, b})
      for (double x : {bar.birth, bar.death})
        if (std::isfinite(end) && std::isfinite(x) && std::fabs(end - x) <= tol)
          throw FloerError(fmt::format("boundary value hit: {} end {} is within {} of critical value {} (degree {})",
                                       what, end, tol, x, bar.degree));
  }
}

std::map<int, int> shifted_ranks(const std::map<int, int>& r, int shift) {
  std::map<int, int> out;
  for (auto [p, v] : r)
    if (v) out[p - shift] = v;
  return out;
}

}  // namespace

MorseComplex discrete_morse_complex(const CubicalGrid& g, const std::vector<double>& values, Field f) {
  Gradient G = lower_star_gradient(g, values);
  auto act = cell_actions(g, values);
  std::vector<int> crit = G.critical;
  std::sort(crit.begin(), crit.end(), [&](int x, int y) {
    return act[x] != act[y] ? act[x] < act[y] : g.cell_dim(x) != g.cell_dim(y) ? g.cell_dim(x) < g.cell_dim(y) : x < y;
  });
  std::map<int, int> index;
  for (std::size_t j = 0; j < crit.size(); ++j) index[crit[j]] = static_cast<int>(j);

  MorseComplex M;
  std::vector<int> deg;
  std::vector<double> action;
  std::vector<std::tuple<int, int, Rational>> trip;
  for (int s : crit) {
    deg.push_back(g.cell_dim(s));
    action.push_back(act[s]);
    M.generators.push_back({s, g.cell_center(s), act[s], g.cell_dim(s)});
    if (g.cell_dim(s) == 0) continue;
    // d(tau*) has coefficient [d_M sigma : tau] on sigma*
    for (auto& [t, k] : morse_boundary(g, G, s, f)) trip.emplace_back(index[s], index[t], k);
  }
  const int n = static_cast<int>(crit.size());
  M.complex = FilteredComplex(f, deg, action, SparseMatrix::from_triplets(f, n, n, trip));
  return M;
}

MorseComplex floer_complex_full(const GraphBrane& L0, const GraphBrane& L1, Field f) {
  auto h = difference(L0, L1);
  CubicalGrid g(L0.base);
  // A degenerate critical point shows up either as a vertex whose lower link
  // has too much cohomology or, at grid resolution, as two critical vertices
  // sharing a cell. Ties are broken by vertex index and are not flagged.
  double scale = 1;
  for (double x : h) scale = std::max(scale, std::fabs(x));
  std::vector<char> critical(g.num_vertices(), 0);
  for (int v = 0; v < g.num_vertices(); ++v) {
    auto ch = lower_star_change(g, [&](int w) { return h[w]; }, v);
    int total = 0;
    for (auto [p, r] : ch) total += r;
    if (total > 1)
      throw FloerError(fmt::format("degenerate critical cell of {} - {} at vertex {}, local ranks {}", L1.name,
                                   L0.name, v, ranks_string(ch)));
    critical[v] = total == 1;
  }
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (!critical[v]) continue;
    for (int c : star_of(g, v))
      for (int w : g.vertices(c))
        if (w != v && critical[w] && std::fabs(h[w] - h[v]) > 1e-9 * scale)
          throw FloerError(fmt::format("degenerate critical cell of {} - {}: critical vertices {} and {} share a cell",
                                       L1.name, L0.name, v, w));
  }
  MorseComplex M = discrete_morse_complex(g, h, f);
  const int shift = L1.offset - L0.offset;
  M.complex = M.complex.shifted(-shift);
  for (auto& d : M.generators) d.degree += shift;
  return M;
}

FilteredComplex floer_complex(const GraphBrane& L0, const GraphBrane& L1, double a, double b, Field f) {
  if (!(a < b)) throw FloerError("window needs a < b");
  MorseComplex M = floer_complex_full(L0, L1, f);
  CubicalGrid g(L0.base);
  check_ends(M.complex, a, b, step_tolerance(g, difference(L0, L1)), -kInf,
             "FC(" + L0.name + ", " + L1.name + ")");
  return M.complex.window(a, b);
}

std::map<int, int> floer_ranks(const GraphBrane& L0, const GraphBrane& L1, double a, double b, Field f) {
  return drop_zero(floer_complex(L0, L1, a, b, f).complex().cohomology_ranks());
}

namespace {

std::map<int, int> morse_window(const GenFun& S, const std::vector<double>& values, double a, double b,
                                Field f, double tol) {
  const double floor = bottom_level(S);
  MorseComplex M = discrete_morse_complex(S.grid, values, f);
  const double lo = std::max(a, floor);
  check_ends(M.complex, a, b, tol, floor, S.name);
  return shifted_ranks(M.complex.window(lo, b).complex().cohomology_ranks(), S.index);
}

bool is_everything(const Region& U) {
  for (const auto& r : U.ranges)
    if (!r.full) return false;
  return true;
}

}  // namespace

std::map<int, int> gf_floer_ranks(const GenFun& S, double a, double b, Field f) {
  if (!(a < b)) throw FloerError("window needs a < b");
  return morse_window(S, S.values, a, b, f, value_tolerance(S));
}

double region_distance(const std::vector<Grid1D>& axes, const Region& U, const std::vector<double>& x) {
  double s = 0;
  for (std::size_t a = 0; a < axes.size(); ++a) {
    if (a >= U.ranges.size() || U.ranges[a].full) continue;
    const auto& r = U.ranges[a];
    double d;
    if (axes[a].topology == Topology::Circle) {
      const double P = axes[a].period();
      const double len = r.hi - r.lo;
      double t = std::fmod(x[a] - r.lo, P);
      if (t < 0) t += P;
      d = t <= len ? 0 : std::min(t - len, P - t);
    } else {
      d = std::max({0.0, r.lo - x[a], x[a] - r.hi});
    }
    s += d * d;
  }
  return std::sqrt(s);
}

std::string ClampRun::certificate() const {
  std::ostringstream os;
  for (const auto& [k, r] : history) os << fmt::format("k={:.6g} {}\n", k, ranks_string(r));
  os << (stabilized ? "stable " + ranks_string(ranks) : std::string("not stable")) << '\n';
  return os.str();
}

std::vector<double> regular_levels(const GenFun& S, const Region& U) {
  const double tol = value_tolerance(S);
  std::vector<double> vals;
  for (const Bar& bar : discrete_morse_complex(S.grid, S.values, Field::F2).complex.barcode().bars) {
    if (!(bar.death > bar.birth)) continue;
    vals.push_back(bar.birth);
    if (std::isfinite(bar.death)) vals.push_back(bar.death);
  }
  const double floor = bottom_level(S);
  vals.erase(std::remove_if(vals.begin(), vals.end(), [&](double v) { return v < floor; }), vals.end());
  std::sort(vals.begin(), vals.end());
  std::vector<double> cand;
  if (vals.empty()) return {0.0};
  cand.push_back(vals.front() - 3 * tol - 0.1);
  for (std::size_t i = 0; i + 1 < vals.size(); ++i)
    if (vals[i + 1] - vals[i] > 2 * tol) cand.push_back(0.5 * (vals[i] + vals[i + 1]));
  cand.push_back(vals.back() + 3 * tol + 0.1);
  std::vector<double> out;
  for (double t : cand) {
    try {
      check_window(S, U, t, kInf);
      out.push_back(t);
    } catch (const GfError&) {
    }
  }
  return out;
}

ClampRun vstar_U_floer(const Region& U, const GenFun& S, double a, double b, Field f) {
  if (!(a < b)) throw FloerError("window needs a < b");
  ClampRun run;
  const double tol = value_tolerance(S);
  if (is_everything(U)) {
    run.ranks = morse_window(S, S.values, a, b, f, tol);
    run.history.emplace_back(0.0, run.ranks);
    run.stabilized = true;
    return run;
  }
  double lo = kInf, hi = -kInf;
  for (const auto& s : all_strands(S)) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  const double floor = bottom_level(S);
  const double top = std::isfinite(hi) ? hi + std::max(0.5, 0.25 * (hi - lo)) : 1.0;
  // past the top level the whole fiber box is a sublevel set, which the ramp cannot cut
  b = std::min(b, top);
  const double range = top - floor;
  std::vector<double> ramp(S.n_base());
  for (int v = 0; v < S.n_base(); ++v)
    ramp[v] = region_distance(S.base, U, S.base_grid.vertex_coords(v));
  for (int m : {4, 8, 16, 32, 64}) {
    const double k = m * range;
    std::vector<double> vals = S.values;
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] += k * ramp[i % S.n_base()];
    auto r = morse_window(S, vals, a, b, f, tol);
    if (!run.history.empty() && run.history.back().second == r) {
      run.history.emplace_back(k, r);
      run.ranks = r;
      run.stabilized = true;
      return run;
    }
    run.history.emplace_back(k, r);
  }
  throw FloerError("no stabilization along the clamp schedule for " + S.name + ":\n" + run.certificate());
}

ClampRun vstar_U_floer(const Region& U, const GraphBrane& L, double a, double b, Field f) {
  return vstar_U_floer(U, as_genfun(L), a, b, f);
}

std::map<int, int> Continuation::ranks() const {
  return drop_zero(induced_ranks(source.complex(), target.complex(), map));
}

Continuation continuation_map(const GraphBrane& h0, const GraphBrane& h1, const GraphBrane& L, double a,
                              double b, Field f) {
  if (!(a < b)) throw FloerError("window needs a < b");
  auto p0 = difference(L, h0), p1 = difference(L, h1);
  CubicalGrid g(L.base);
  for (std::size_t v = 0; v < p0.size(); ++v)
    if (p0[v] > p1[v] + 1e-12)
      throw FloerError(fmt::format("monotonicity violation at vertex {}: {} > {}", v, h0.f[v], h1.f[v]));
  const double tol = std::max(step_tolerance(g, p0), step_tolerance(g, p1));
  // Strands of the interpolation, followed vertex by vertex, must not cross
  // a level downward.
  const int steps = 16;
  std::vector<double> prev;
  for (int s = 0; s <= steps; ++s) {
    const double tau = double(s) / steps;
    std::vector<double> h(p0.size());
    for (std::size_t v = 0; v < h.size(); ++v) h[v] = (1 - tau) * p0[v] + tau * p1[v];
    if (!prev.empty())
      for (int v = 0; v < g.num_vertices(); ++v) {
        if (lower_star_change(g, [&](int w) { return h[w]; }, v).empty()) continue;
        for (double end : {a, b})
          if (std::isfinite(end) && prev[v] >= end && h[v] < end)
            throw FloerError(fmt::format("window crossing violation at vertex {}, level {}", v, end));
      }
    prev = h;
  }
  LowerStar s0 = lower_star(g, p0, f), s1 = lower_star(g, p1, f);
  check_ends(s0.complex, a, b, tol, -kInf, "source");
  check_ends(s1.complex, a, b, tol, -kInf, "target");
  auto k0 = s0.complex.window_indices(a, b), k1 = s1.complex.window_indices(a, b);
  std::map<int, int> col;
  for (std::size_t i = 0; i < k0.size(); ++i) col[s0.cells[k0[i]]] = static_cast<int>(i);
  std::vector<std::tuple<int, int, Rational>> trip;
  for (std::size_t j = 0; j < k1.size(); ++j) {
    auto it = col.find(s1.cells[k1[j]]);
    if (it != col.end()) trip.emplace_back(static_cast<int>(j), it->second, Rational(1));
  }
  Continuation c;
  c.source = s0.complex.window(a, b);
  c.target = s1.complex.window(a, b);
  c.map = {SparseMatrix::from_triplets(f, c.target.size(), c.source.size(), trip), 0};
  check_chain_map(c.source.complex(), c.target.complex(), c.map);
  return c;
}

Continuation compose(const Continuation& first, const Continuation& second) {
  if (first.target.size() != second.source.size() ||
      first.target.actions() != second.source.actions())
    throw FloerError("continuation maps do not compose: middle complexes differ");
  return {first.source, second.target, {second.map.m * first.map.m, 0}};
}

// ---- circle product ----

namespace {

int circle_size(const GraphBrane& L) {
  if (L.base.size() != 1 || L.base[0].topology != Topology::Circle)
    throw FloerError("the pant product is implemented on a circle base");
  return L.base[0].n;
}

// v strictly inside the cyclic arc from lo to hi; lo == hi means everything
// but lo.
bool in_arc(int n, int lo, int hi, int v) {
  if (v == lo || v == hi) return false;
  if (lo == hi) return true;
  return (v - lo + n) % n < (hi - lo + n) % n;
}

struct CircleMorse {
  int n = 0;
  std::vector<double> h;
  std::vector<int> mins, maxs;  // sorted vertex positions
  std::vector<char> kind;       // 0 regular, 1 min, 2 max

  // The critical points of the other kind on either side of v.
  std::pair<int, int> neighbours(int v, const std::vector<int>& other) const {
    int before = other.back(), after = other.front();
    for (int w : other) {
      if (w < v) before = w;
    }
    for (auto it = other.rbegin(); it != other.rend(); ++it)
      if (*it > v) after = *it;
    return {before, after};
  }
  // Ascending manifold of a minimum, descending manifold of a maximum.
  bool in_cell(int crit, int v) const {
    auto [lo, hi] = neighbours(crit, kind[crit] == 1 ? maxs : mins);
    return v == crit || in_arc(n, lo, hi, v);
  }
  bool on_boundary(int crit, int v) const {
    auto [lo, hi] = neighbours(crit, kind[crit] == 1 ? maxs : mins);
    return v == lo || v == hi;
  }
};

CircleMorse circle_morse(const GraphBrane& L0, const GraphBrane& L1) {
  CircleMorse m;
  m.n = circle_size(L0);
  m.h = difference(L0, L1);
  m.kind.assign(m.n, 0);
  for (auto [v, d] : circle_critical_points(m.h)) {
    m.kind[v] = d == 0 ? 1 : 2;
    (d == 0 ? m.mins : m.maxs).push_back(v);
  }
  return m;
}

// Cyclic components of {h >= lambda} as runs of edges; edge i joins v_i and v_{i+1}.
std::vector<std::vector<int>> superlevel_runs(const std::vector<double>& h, double lambda) {
  const int n = static_cast<int>(h.size());
  std::vector<std::vector<int>> runs;
  int start = -1;
  for (int v = 0; v < n; ++v)
    if (h[v] < lambda) {
      start = v;
      break;
    }
  if (start < 0) {
    runs.emplace_back(n);
    std::iota(runs.back().begin(), runs.back().end(), 0);
    return runs;
  }
  std::vector<int> cur;
  for (int k = 1; k <= n; ++k) {
    int v = (start + k) % n;
    if (h[v] >= lambda) {
      if (cur.empty()) cur.push_back((v - 1 + n) % n);
      cur.push_back(v);
    } else if (!cur.empty()) {
      runs.push_back(cur);
      cur.clear();
    }
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

Rational in_field(Field f, const Rational& x) {
  return f == Field::F2 ? Rational(numerator(x) % 2 != 0 ? 1 : 0) : x;
}

}  // namespace

std::vector<std::pair<int, int>> circle_critical_points(const std::vector<double>& h) {
  const int n = static_cast<int>(h.size());
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < n; ++v) {
    double l = h[(v - 1 + n) % n], r = h[(v + 1) % n];
    if (h[v] == l || h[v] == r) throw FloerError(fmt::format("plateau at vertex {}: degenerate critical point", v));
    if (h[v] < l && h[v] < r) out.emplace_back(v, 0);
    if (h[v] > l && h[v] > r) out.emplace_back(v, 1);
  }
  return out;
}

std::vector<MorseClass> morse_class_basis(const GraphBrane& L0, const GraphBrane& L1, double lambda,
                                          int degree, Field f) {
  CircleMorse m = circle_morse(L0, L1);
  std::vector<MorseClass> out;
  auto blank = [&] { return MorseClass{L0, L1, lambda, degree, f, {}}; };
  if (degree == 0) {
    if (*std::min_element(m.h.begin(), m.h.end()) < lambda) return out;
    out.push_back(blank());
    for (int v : m.mins) out.back().coef[v] = 1;
  } else if (degree == 1) {
    for (const auto& run : superlevel_runs(m.h, lambda)) {
      int best = -1;
      for (int v : run)
        if (m.kind[v] == 2 && m.h[v] >= lambda && (best < 0 || m.h[v] > m.h[best])) best = v;
      if (best < 0) throw FloerError("a superlevel run without a maximum");
      out.push_back(blank());
      out.back().coef[best] = 1;
    }
  }
  return out;
}

MorseClass morse_unit(const GraphBrane& L0, const GraphBrane& L1, double lambda, Field f) {
  auto b = morse_class_basis(L0, L1, lambda, 0, f);
  if (b.empty()) throw FloerError("the unit needs lambda below every value of the difference");
  return b.front();
}

MorseClass pant_product(const MorseClass& a, const MorseClass& b) {
  if (a.target.f != b.source.f || !same_base(a.target.base, b.source.base))
    throw FloerError("pant product: the middle branes differ");
  if (a.field != b.field) throw FloerError("pant product: fields differ");
  CircleMorse m12 = circle_morse(a.source, a.target);
  CircleMorse m23 = circle_morse(b.source, b.target);
  CircleMorse m13 = circle_morse(a.source, b.target);
  MorseClass out{a.source, b.target, a.lambda + b.lambda, a.degree + b.degree, a.field, {}};
  if (out.degree > 1) return out;
  auto generic = [](bool bad, int v) {
    if (bad) throw FloerError(fmt::format("nongeneric triple: critical point at vertex {} sits on a cell boundary", v));
  };
  for (auto& [p, ca] : a.coef)
    for (auto& [q, cb] : b.coef) {
      const Rational c = ca * cb;
      if (a.degree == 0 && b.degree == 0) {
        for (int r : m13.mins) {
          generic(m12.on_boundary(p, r) || m23.on_boundary(q, r), r);
          if (m12.in_cell(p, r) && m23.in_cell(q, r)) out.coef[r] += c;
        }
      } else {
        // the degree-one input is a point; it has to lie in the basin of the
        // other input and in the descending arc of the output maximum
        const int pt = a.degree == 1 ? p : q;
        const CircleMorse& basin = a.degree == 1 ? m23 : m12;
        const int low = a.degree == 1 ? q : p;
        generic(basin.on_boundary(low, pt), pt);
        if (!basin.in_cell(low, pt)) continue;
        for (int r : m13.maxs) {
          generic(m13.on_boundary(r, pt), pt);
          if (m13.in_cell(r, pt)) out.coef[r] += c;
        }
      }
    }
  for (auto it = out.coef.begin(); it != out.coef.end();) {
    it->second = in_field(out.field, it->second);
    if (it->second == 0) {
      it = out.coef.erase(it);
      continue;
    }
    if (m13.h[it->first] < out.lambda)
      throw FloerError(fmt::format("filtration mismatch: product has support at action {} below {}",
                                   m13.h[it->first], out.lambda));
    ++it;
  }
  return out;
}

std::vector<Rational> morse_circle_coordinates(const MorseClass& c) {
  CircleMorse m = circle_morse(c.source, c.target);
  std::vector<Rational> out;
  if (c.degree == 0) {
    if (*std::min_element(m.h.begin(), m.h.end()) < c.lambda) return out;
    auto it = c.coef.find(m.mins.front());
    out.push_back(it == c.coef.end() ? Rational(0) : it->second);
    return out;
  }
  if (c.degree != 1) return out;
  for (const auto& run : superlevel_runs(m.h, c.lambda)) {
    Rational s = 0;
    for (int v : run) {
      auto it = c.coef.find(v);
      if (it != c.coef.end() && m.h[v] >= c.lambda) s += it->second;
    }
    out.push_back(in_field(c.field, s));
  }
  return out;
}

std::vector<GraphBrane> perturb_branes(const std::vector<GraphBrane>& branes, double eps) {
  std::vector<GraphBrane> out = branes;
  const double two_pi = 2 * std::acos(-1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    CubicalGrid g(out[i].base);
    const double P = out[i].base[0].period();
    const double phase = 0.13 + double(i) / (out.size() + 1);
    for (int v = 0; v < g.num_vertices(); ++v)
      out[i].f[v] += eps * std::cos(two_pi * (g.vertex_coords(v)[0] / P + phase));
  }
  return out;
}

// ---- reduction ----

ZReduction reduce_to_Z(const GenFun& S, const Region& Z, double a, double b, Field f) {
  ZReduction out;
  out.sheaf_ranks = drop_zero(sections(quantize(S), Z, a, b, f));
  LowerStar whole = gf_filtered(S, Region::all(), f);
  LowerStar part = gf_filtered(S, Z, f);
  auto ks = whole.complex.window_indices(a, b), kt = part.complex.window_indices(a, b);
  std::map<int, int> col;
  for (std::size_t i = 0; i < ks.size(); ++i) col[whole.cells[ks[i]]] = static_cast<int>(i);
  std::vector<std::tuple<int, int, Rational>> trip;
  for (std::size_t j = 0; j < kt.size(); ++j) {
    auto it = col.find(part.cells[kt[j]]);
    if (it == col.end()) throw FloerError("Z has a cell outside the window over N");
    trip.emplace_back(static_cast<int>(j), it->second, Rational(1));
  }
  auto src = whole.complex.window(a, b).complex(), dst = part.complex.window(a, b).complex();
  ChainMap res{SparseMatrix::from_triplets(f, dst.size(), src.size(), trip), 0};
  check_chain_map(src, dst, res);
  out.restriction_rank = shifted_ranks(induced_ranks(src, dst, res), S.index);
  out.floer = vstar_U_floer(Z, S, a, b, f);
  return out;
}

// ---- window ladder ----

namespace {

std::map<int, int> sub(std::map<int, int> x, const std::map<int, int>& y) {
  for (auto [p, v] : y) x[p] -= v;
  return x;
}

int get(const std::map<int, int>& m, int p) {
  auto it = m.find(p);
  return it == m.end() ? 0 : it->second;
}

std::vector<LadderRung> ladder_on(const FilteredComplex& C, double floor, int index,
                                  const std::vector<double>& t) {
  std::vector<LadderRung> out;
  const Field f = C.field();
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    LadderRung r;
    r.lo = t[i];
    r.hi = t[i + 1];
    auto kA = C.window_indices(r.lo, r.hi), kB = C.window_indices(floor, r.hi),
         kC = C.window_indices(floor, r.lo);
    auto A = C.window(r.lo, r.hi).complex(), B = C.window(floor, r.hi).complex(),
         Cq = C.window(floor, r.lo).complex();
    auto match = [&](const std::vector<int>& from, const std::vector<int>& to) {
      std::map<int, int> pos;
      for (std::size_t k = 0; k < to.size(); ++k) pos[to[k]] = static_cast<int>(k);
      std::vector<std::tuple<int, int, Rational>> trip;
      for (std::size_t k = 0; k < from.size(); ++k) {
        auto it = pos.find(from[k]);
        if (it != pos.end()) trip.emplace_back(it->second, static_cast<int>(k), Rational(1));
      }
      return ChainMap{SparseMatrix::from_triplets(f, static_cast<int>(to.size()),
                                                  static_cast<int>(from.size()), trip), 0};
    };
    auto inc = match(kA, kB), proj = match(kB, kC);
    check_chain_map(A, B, inc);
    check_chain_map(B, Cq, proj);
    r.window = shifted_ranks(A.cohomology_ranks(), index);
    r.above = shifted_ranks(B.cohomology_ranks(), index);
    r.below = shifted_ranks(Cq.cohomology_ranks(), index);
    r.incl = shifted_ranks(induced_ranks(A, B, inc), index);
    r.proj = shifted_ranks(induced_ranks(B, Cq, proj), index);
    // connecting map H^p(-inf, lo) -> H^{p+1}[lo, hi) has rank below - proj
    auto delta = sub(r.below, r.proj);
    std::set<int> degs;
    for (auto* m : {&r.window, &r.above, &r.below}) for (auto [p, v] : *m) degs.insert(p), degs.insert(p + 1);
    r.closes = true;
    for (int p : degs) {
      const int pred = get(r.window, p) - get(delta, p - 1) + get(r.below, p) - get(delta, p);
      if (pred) r.predicted[p] = pred;
      r.closes &= get(r.incl, p) == get(r.window, p) - get(delta, p - 1) && pred == get(r.above, p) &&
                  get(delta, p) >= 0;
    }
    out.push_back(r);
  }
  return out;
}

bool same_rung(const LadderRung& x, const LadderRung& y) {
  return drop_zero(x.below) == drop_zero(y.below) && drop_zero(x.window) == drop_zero(y.window) &&
         drop_zero(x.above) == drop_zero(y.above) && drop_zero(x.incl) == drop_zero(y.incl) &&
         drop_zero(x.proj) == drop_zero(y.proj);
}

}  // namespace

bool Ladder::closes() const {
  if (!routes_agree || floer.empty()) return false;
  for (const auto* side : {&floer, &sheaf})
    for (const auto& r : *side)
      if (!r.closes) return false;
  return true;
}

std::string Ladder::csv() const {
  std::ostringstream os;
  os << "route,lo,hi,degree,below,window,above,incl,proj,predicted,cerf_values,closes\n";
  for (const auto* side : {&floer, &sheaf})
    for (const auto& r : *side) {
      std::set<int> degs;
      for (auto* m : {&r.window, &r.above, &r.below}) for (auto [p, v] : *m) degs.insert(p);
      for (int p : degs)
        os << (side == &floer ? "floer" : "sheaf") << ',' << fmt::format("{:.6g},{:.6g}", r.lo, r.hi) << ','
           << p << ',' << get(r.below, p) << ',' << get(r.window, p) << ',' << get(r.above, p) << ','
           << get(r.incl, p) << ',' << get(r.proj, p) << ',' << get(r.predicted, p) << ',' << r.cerf_values
           << ',' << (r.closes ? 1 : 0) << '\n';
    }
  return os.str();
}

Ladder window_ladder(const GenFun& S, const std::vector<double>& thresholds, Field f) {
  if (thresholds.size() < 2 || !std::is_sorted(thresholds.begin(), thresholds.end()))
    throw FloerError("the ladder needs at least two increasing thresholds");
  const double floor = bottom_level(S);
  for (double t : thresholds) check_window(S, Region::all(), t, kInf);
  MorseComplex M = discrete_morse_complex(S.grid, S.values, f);
  LowerStar L = gf_filtered(S, Region::all(), f);
  Ladder out;
  out.floer = ladder_on(M.complex, floor, S.index, thresholds);
  out.sheaf = ladder_on(L.complex, floor, S.index, thresholds);
  // distinct strand values per rung
  std::vector<double> vals;
  for (const auto& s : all_strands(S)) vals.push_back(s.value);
  std::sort(vals.begin(), vals.end());
  const double tol = value_tolerance(S);
  for (auto* side : {&out.floer, &out.sheaf})
    for (auto& r : *side) {
      double last = -kInf;
      for (double v : vals)
        if (v >= r.lo && v < r.hi && v - last > 2 * tol) {
          ++r.cerf_values;
          last = v;
        }
    }
  out.routes_agree = true;
  for (std::size_t i = 0; i < out.floer.size(); ++i) out.routes_agree &= same_rung(out.floer[i], out.sheaf[i]);
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    for (std::size_t j = i + 1; j < thresholds.size(); ++j)
      out.routes_agree &= drop_zero(M.complex.window_ranks(thresholds[i], thresholds[j])) ==
                          drop_zero(L.complex.window_ranks(thresholds[i], thresholds[j]));
  return out;
}

}  // namespace sq
