#include "sheafq/sheaf_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace sq {

namespace {

FilteredComplex empty_complex(Field f) {
  return FilteredComplex(f, {}, {}, SparseMatrix(f, 0, 0), false);
}

FilteredComplex point_complex(Field f, double action) {
  return FilteredComplex(f, {0}, {action}, SparseMatrix(f, 1, 1), false);
}

Region point_region(const std::vector<double>& x) {
  Region r;
  for (double v : x) r.ranges.push_back(AxisRange::between(v, v));
  return r;
}

// Nearest base vertex to x; throws unless x sits on it.
int snap_vertex(const CubicalGrid& g, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != g.dim()) throw SheafError("point has the wrong dimension");
  std::vector<int> idx(g.dim());
  for (int a = 0; a < g.dim(); ++a) {
    const auto& ax = g.axis(a);
    double u = (x[a] - ax.origin) / ax.spacing;
    int i = static_cast<int>(std::lround(u));
    if (std::fabs(u - i) > 1e-6) throw SheafError("point is not a grid vertex");
    if (ax.topology == Topology::Circle) i = ((i % ax.n) + ax.n) % ax.n;
    else if (i < 0 || i >= ax.vertices()) throw SheafError("point outside the base");
    idx[a] = i;
  }
  return g.vertex_flat(idx);
}

std::vector<double> finite_endpoints(const Barcode& bc) {
  std::vector<double> out;
  for (const auto& b : bc.bars) {
    if (!(b.death > b.birth)) continue;
    out.push_back(b.birth);
    if (std::isfinite(b.death)) out.push_back(b.death);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double half_gap(const std::vector<double>& pts, double t) {
  double g = kInf;
  for (double s : pts)
    if (std::fabs(s - t) > 1e-12) g = std::min(g, std::fabs(s - t));
  return std::isfinite(g) ? 0.5 * g : 0.5;
}

// The filtered complex over the fiber of x, as used for stalks.
FilteredComplex stalk_at(const TameSheaf& F, const std::vector<double>& x, Field f) {
  if (F.is_gf()) {
    const auto& S = *F.gf;
    snap_vertex(S.base_grid, x);
    return gf_filtered(S, point_region(x), f).complex.shifted(S.index);
  }
  const auto& c = *F.cell;
  if (c.field != f) throw SheafError("field differs from the cellular presentation");
  return c.stalks[base_cell_at(c.base, x)];
}

std::vector<double> base_spacings(const std::vector<Grid1D>& axes) {
  std::vector<double> h;
  for (const auto& a : axes) h.push_back(a.spacing);
  return h;
}

std::vector<double> base_periods(const std::vector<Grid1D>& axes) {
  std::vector<double> p;
  for (const auto& a : axes) p.push_back(a.topology == Topology::Circle ? a.period() : 0.0);
  return p;
}

}  // namespace

const ChainMap* CellSheaf::map(int sigma, int tau) const {
  auto it = maps.find({sigma, tau});
  return it == maps.end() ? nullptr : &it->second;
}

void CellSheaf::validate() const {
  if (static_cast<int>(stalks.size()) != base.num_cells())
    throw SheafError("one stalk per base cell is required");
  for (const auto& s : stalks)
    if (s.size() > 0 && s.field() != field) throw SheafError("stalk over the wrong field");
  for (const auto& [key, m] : maps) {
    auto [sigma, tau] = key;
    auto faces = base.boundary(tau);
    if (std::none_of(faces.begin(), faces.end(), [&](auto p) { return p.first == sigma; }))
      throw SheafError("generization map between cells that are not incident");
    if (m.shift != 0) throw SheafError("generization maps preserve degree");
    try {
      check_filtered_map(stalks[sigma], stalks[tau], m);
    } catch (const ComplexError& e) {
      std::ostringstream os;
      os << "generization " << sigma << " -> " << tau << ": " << e.what();
      throw SheafError(os.str());
    }
  }
  auto get = [&](int s, int t) {
    const ChainMap* m = map(s, t);
    return m ? m->m : SparseMatrix(field, stalks[t].size(), stalks[s].size());
  };
  for (int w = 0; w < base.num_cells(); ++w) {
    std::map<int, std::vector<SparseMatrix>> paths;
    for (auto [t, st] : base.boundary(w))
      for (auto [s, ss] : base.boundary(t)) paths[s].push_back(get(t, w) * get(s, t));
    for (const auto& [s, comps] : paths)
      for (std::size_t i = 1; i < comps.size(); ++i)
        if (!(comps[i] == comps[0])) {
          std::ostringstream os;
          os << "generization maps do not commute around the square " << s << " < " << w;
          throw SheafError(os.str());
        }
  }
}

std::vector<int> CellSheaf::total_offsets(const std::vector<int>& cells) const {
  std::vector<int> off(cells.size() + 1, 0);
  for (std::size_t i = 0; i < cells.size(); ++i) off[i + 1] = off[i] + stalks[cells[i]].size();
  return off;
}

FilteredComplex CellSheaf::total(const std::vector<int>& cells, bool require_closed) const {
  if (require_closed && !base.is_closed_set(cells))
    throw SheafError("sections need a closed set of base cells");
  auto off = total_offsets(cells);
  std::vector<int> where(base.num_cells(), -1);
  for (std::size_t i = 0; i < cells.size(); ++i) where[cells[i]] = static_cast<int>(i);
  const int n = off.back();
  std::vector<int> deg(n);
  std::vector<double> act(n);
  SparseMatrix D(field, n, n);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const int s = cells[i];
    const auto& st = stalks[s];
    const int ds = base.cell_dim(s);
    const Rational sg = ds % 2 ? -1 : 1;
    auto cof = base.coboundary(s);
    for (int g = 0; g < st.size(); ++g) {
      const int j = off[i] + g;
      deg[j] = st.degree(g) + ds;
      act[j] = st.action(g);
      std::vector<std::pair<int, Rational>> e;
      const auto& col = st.d().col(g);
      for (std::size_t k = 0; k < col.idx.size(); ++k)
        e.emplace_back(off[i] + col.idx[k], sg * col.coef(field, k));
      for (auto [t, inc] : cof) {
        if (where[t] < 0) continue;
        const ChainMap* m = map(s, t);
        if (!m) continue;
        const auto& mc = m->m.col(g);
        for (std::size_t k = 0; k < mc.idx.size(); ++k)
          e.emplace_back(off[where[t]] + mc.idx[k], Rational(inc) * mc.coef(field, k));
      }
      D.set_col(j, make_vec(field, std::move(e)));
    }
  }
  return FilteredComplex(field, std::move(deg), std::move(act), std::move(D), false);
}

const std::vector<Grid1D>& TameSheaf::base_axes() const {
  return gf ? gf->base : cell->base.axes();
}

TameSheaf quantize(const GenFun& S) {
  TameSheaf F;
  F.name = S.name;
  F.gf = std::make_shared<const GenFun>(S);
  F.shift = S.index;
  F.at_plus_infinity =
      drop_zero(gf_filtered(S, point_region(S.base_grid.vertex_coords(0)), Field::F2)
                    .complex.shifted(S.index)
                    .window_ranks(-kInf, kInf));
  return F;
}

TameSheaf from_cells(CellSheaf c, std::string name) {
  c.validate();
  TameSheaf F;
  F.name = std::move(name);
  if (!c.stalks.empty())
    F.at_plus_infinity = drop_zero(c.stalks[0].window_ranks(-kInf, kInf));
  F.cell = std::make_shared<const CellSheaf>(std::move(c));
  return F;
}

TameSheaf unit_sheaf(const std::vector<Grid1D>& base) {
  return quantize(graph_genfun("unit", base, [](const std::vector<double>&) { return 0.0; }));
}

namespace {

TameSheaf indicator_sheaf(const std::vector<Grid1D>& base, const std::vector<int>& cells, Field f,
                          std::string name) {
  CellSheaf c;
  c.field = f;
  c.base = CubicalGrid(base);
  std::vector<bool> in(c.base.num_cells());
  for (int s : cells) in[s] = true;
  for (int s = 0; s < c.base.num_cells(); ++s)
    c.stalks.push_back(in[s] ? point_complex(f, 0.0) : empty_complex(f));
  for (int t = 0; t < c.base.num_cells(); ++t)
    for (auto [s, sg] : c.base.boundary(t)) {
      SparseMatrix m(f, c.stalks[t].size(), c.stalks[s].size());
      if (in[s] && in[t]) m = SparseMatrix::identity(f, 1);
      c.maps[{s, t}] = ChainMap{m, 0};
    }
  return from_cells(std::move(c), std::move(name));
}

}  // namespace

TameSheaf open_set_sheaf(const std::vector<Grid1D>& base, const Region& U, Field f) {
  CubicalGrid g(base);
  return indicator_sheaf(base, g.open_cells(U), f, "k_U");
}

TameSheaf closed_set_sheaf(const std::vector<Grid1D>& base, const Region& Z, Field f) {
  CubicalGrid g(base);
  return indicator_sheaf(base, g.closed_cells(Z), f, "k_Z");
}

std::map<int, int> sections(const TameSheaf& F, const Region& U, double a, double b, Field f,
                            bool check) {
  if (F.is_gf()) return drop_zero(gf_cohomology(*F.gf, U, a, b, f, check));
  const auto& c = *F.cell;
  if (c.field != f) throw SheafError("field differs from the cellular presentation");
  auto cells = c.base.closed_cells(U);
  if (check) {
    if (!(a < b)) throw SheafError("window needs a < b");
    for (int s : cells)
      for (double v : c.stalks[s].actions())
        for (double e : {a, b})
          if (std::fabs(v - e) < 1e-12) {
            std::ostringstream os;
            os << "window end " << e << " sits on a stalk action over base cell " << s;
            throw SheafError(os.str());
          }
  }
  return drop_zero(c.total(cells).window_ranks(a, b));
}

int base_cell_at(const CubicalGrid& base, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != base.dim()) throw SheafError("point has the wrong dimension");
  std::vector<int> pos(base.dim());
  for (int a = 0; a < base.dim(); ++a) {
    const auto& ax = base.axis(a);
    double u = (x[a] - ax.origin) / ax.spacing;
    if (ax.topology == Topology::Circle) u = std::fmod(std::fmod(u, ax.n) + ax.n, ax.n);
    double r = std::round(u);
    int p;
    if (std::fabs(u - r) < 1e-9) p = 2 * static_cast<int>(r);
    else p = 2 * static_cast<int>(std::floor(u)) + 1;
    if (ax.topology == Topology::Circle) p = (p % ax.positions() + ax.positions()) % ax.positions();
    else if (p < 0 || p >= ax.positions()) throw SheafError("point outside the base");
    pos[a] = p;
  }
  return base.cell_id(pos);
}

std::map<int, int> microstalk(const TameSheaf& F, const std::vector<double>& x, double t, Field f) {
  auto fc = stalk_at(F, x, f);
  double eps = half_gap(finite_endpoints(fc.barcode()), t);
  return drop_zero(fc.window_ranks(-kInf, t + eps));
}

std::map<int, int> front_jump(const TameSheaf& F, const std::vector<double>& x, double t, Field f) {
  auto fc = stalk_at(F, x, f);
  auto ends = finite_endpoints(fc.barcode());
  // a t within sampling tolerance of a sampled jump is read as that jump
  const double tol = F.is_gf() ? value_tolerance(*F.gf) : 1e-9;
  double best = kInf;
  for (double e : ends)
    if (std::fabs(e - t) <= tol && std::fabs(e - t) < std::fabs(best - t)) best = e;
  if (std::isfinite(best)) t = best;
  double eps = half_gap(ends, t);
  return drop_zero(fc.window_ranks(t - eps, t + eps));
}

TameSheaf to_cellular(const TameSheaf& F, Field f, int spot_checks, unsigned seed) {
  if (!F.is_gf()) return F;
  const auto& S = *F.gf;
  const auto& bg = S.base_grid;
  const auto& fg = S.fiber_grid;
  const int nbc = bg.num_cells();
  const auto act = cell_actions(S.grid, S.values);
  const double floor = bottom_level(S);
  CellSheaf c;
  c.field = f;
  c.base = bg;
  std::vector<std::vector<int>> kept(nbc), where(nbc);
  for (int s = 0; s < nbc; ++s) {
    where[s].assign(fg.num_cells(), -1);
    std::vector<double> a;
    for (int fc = 0; fc < fg.num_cells(); ++fc) {
      double v = act[s + nbc * fc];
      if (v < floor) continue;
      where[s][fc] = static_cast<int>(kept[s].size());
      kept[s].push_back(fc);
      a.push_back(v);
    }
    c.stalks.push_back(FilteredComplex(cochain_complex(fg, kept[s], f), std::move(a), false)
                           .shifted(S.index));
  }
  for (int t = 0; t < nbc; ++t)
    for (auto [s, sg] : bg.boundary(t)) {
      std::vector<std::tuple<int, int, Rational>> trip;
      for (std::size_t i = 0; i < kept[s].size(); ++i)
        trip.emplace_back(where[t][kept[s][i]], static_cast<int>(i), Rational(1));
      c.maps[{s, t}] = ChainMap{
          SparseMatrix::from_triplets(f, c.stalks[t].size(), c.stalks[s].size(), trip), 0};
    }
  TameSheaf out = from_cells(std::move(c), F.name);
  out.origin = F.gf;
  out.shift = F.shift;

  std::mt19937 rng(seed);
  double vmin = *std::min_element(S.values.begin(), S.values.end());
  double vmax = *std::max_element(S.values.begin(), S.values.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < spot_checks; ++k) {
    Region U;
    for (const auto& ax : S.base) {
      double len = ax.period();
      double lo = ax.origin + unit(rng) * len;
      double hi = lo + unit(rng) * (ax.topology == Topology::Circle ? len : ax.origin + len - lo);
      U.ranges.push_back(AxisRange::between(lo, hi));
    }
    double a = vmin - 0.5 + unit(rng) * (vmax - vmin + 1.0);
    double b = a + unit(rng) * (vmax + 0.5 - a);
    if (k == 0) {
      U = Region::all();
      a = -kInf;
      b = kInf;
    }
    auto lhs = drop_zero(gf_cohomology(S, U, a, b, f, false));
    auto rhs = sections(out, U, a, b, f, false);
    if (lhs != rhs) {
      std::ostringstream os;
      os << "cellular presentation of " << S.name << " disagrees on [" << a << ", " << b
         << "): " << ranks_string(lhs) << " vs " << ranks_string(rhs);
      throw SheafError(os.str());
    }
  }
  return out;
}

Stratification stratification(const TameSheaf& F) {
  Stratification st;
  std::vector<double> pts;
  if (F.is_gf()) {
    st.tolerance = value_tolerance(*F.gf);
    pts = cerf_diagram(*F.gf, Region::all()).breakpoints;
  } else {
    st.tolerance = 1e-9;
    for (const auto& s : F.cell->stalks)
      for (double v : s.actions())
        if (std::isfinite(v)) pts.push_back(v);
  }
  std::sort(pts.begin(), pts.end());
  for (double v : pts)
    if (st.breakpoints.empty() || v - st.breakpoints.back() > st.tolerance)
      st.breakpoints.push_back(v);
  return st;
}

std::string Stratification::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "breakpoint\n";
  for (double v : breakpoints) os << v << '\n';
  return os.str();
}

std::string ConeSet::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "x,t,p,tau\n";
  auto join = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i];
  };
  for (const auto& q : points) {
    join(q.x);
    os << ',' << q.t << ',';
    join(q.p);
    os << ',' << q.tau << '\n';
  }
  return os.str();
}

std::string ConeSet::svg() const {
  double x0 = kInf, x1 = -kInf, t0 = kInf, t1 = -kInf;
  for (const auto& q : points) {
    if (q.x.empty()) continue;
    x0 = std::min(x0, q.x[0]);
    x1 = std::max(x1, q.x[0]);
    t0 = std::min(t0, q.t);
    t1 = std::max(t1, q.t);
  }
  std::ostringstream os;
  const double W = 480, H = 360, m = 20;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  if (std::isfinite(x0)) {
    double sx = (W - 2 * m) / std::max(1e-9, x1 - x0), st = (H - 2 * m) / std::max(1e-9, t1 - t0);
    for (const auto& q : points) {
      if (q.x.empty()) continue;
      os << "<circle cx=\"" << m + (q.x[0] - x0) * sx << "\" cy=\"" << H - m - (q.t - t0) * st
         << "\" r=\"1.5\" fill=\"" << (q.tau > 0 ? "black" : "gray") << "\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

ConeSet conify(const Brane& B) {
  ConeSet out;
  std::set<std::vector<double>> zero;
  for (const auto& b : B.points) {
    out.points.push_back({b.x, b.f, b.p, 1.0});
    std::vector<double> key = b.x;
    key.push_back(b.f);
    if (zero.insert(key).second)
      out.points.push_back({b.x, b.f, std::vector<double>(b.p.size(), 0.0), 0.0});
  }
  return out;
}

Brane conormal_brane(const std::vector<Grid1D>& base, const Region& U, double pmax, int rays) {
  CubicalGrid g(base);
  Brane br;
  br.source = "conormal";
  for (int v = 0; v < g.num_vertices(); ++v) {
    auto x = g.vertex_coords(v);
    if (U.contains(base, x, true)) {
      br.points.push_back({x, std::vector<double>(base.size(), 0.0), 0.0, 0});
      continue;
    }
    if (!U.contains(base, x)) continue;
    std::vector<double> n(base.size(), 0.0);
    for (int a = 0; a < g.dim(); ++a)
      for (int dir : {-1, 1}) {
        int w = grid_step(g, v, a, dir);
        if (w < 0 || !U.contains(base, g.vertex_coords(w))) n[a] += dir;
      }
    double len = 0;
    for (double c : n) len += c * c;
    len = std::sqrt(len);
    if (len == 0) continue;
    for (int r = 0; r <= rays; ++r) {
      std::vector<double> p(n);
      for (auto& c : p) c *= pmax * r / (rays * len);
      br.points.push_back({x, p, 0.0, 0});
    }
  }
  return br;
}

namespace {

// Displacement in vertex steps from v to w along each axis of the first
// `axes` axes of g, unwrapping circles.
std::vector<int> offset(const CubicalGrid& g, int v, int w, int axes) {
  auto a = g.vertex_multi(v), b = g.vertex_multi(w);
  std::vector<int> d(axes);
  for (int i = 0; i < axes; ++i) {
    d[i] = b[i] - a[i];
    if (g.axis(i).topology == Topology::Circle) {
      int n = g.axis(i).n;
      if (d[i] > 1) d[i] -= n;
      if (d[i] < -1) d[i] += n;
    }
  }
  return d;
}

std::vector<int> star_vertices(const CubicalGrid& g, int v) {
  std::vector<int> out{v};
  for (int a = 0; a < g.dim(); ++a) {
    std::vector<int> next;
    for (int u : out)
      for (int dir : {-1, 0, 1}) {
        int w = dir ? grid_step(g, u, a, dir) : u;
        if (w >= 0) next.push_back(w);
      }
    out.swap(next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool on_base_boundary(const CubicalGrid& bg, int b) {
  for (int a = 0; a < bg.dim(); ++a)
    for (int dir : {-1, 1})
      if (grid_step(bg, b, a, dir) < 0) return true;
  return false;
}

// Vertex v of the product grid is critical for S - p.(y - x) when its lower
// star changes the sublevel cohomology.
bool critical_for(const GenFun& S, int v, const std::vector<double>& p, bool strict = false) {
  const int nb = S.base.size();
  std::vector<double> h = base_spacings(S.base);
  auto fn = [&](int w) {
    if (w == v) return S.values[v];
    auto d = offset(S.grid, v, w, nb);
    double s = S.values[w];
    for (int a = 0; a < nb; ++a) s -= p[a] * d[a] * h[a];
    return s;
  };
  return !lower_star_change(S.grid, fn, v, strict).empty();
}

ConeSet gf_singular_support(const GenFun& S, double tau_res) {
  ConeSet out;
  const auto& bg = S.base_grid;
  const int nb = S.n_base();
  const int dim = bg.dim();
  auto h = base_spacings(S.base);
  out.periods = base_periods(S.base);
  out.hx = *std::max_element(h.begin(), h.end());
  out.ht = value_tolerance(S);
  // p is only resolved up to the spread of one-sided slopes at strand vertices
  double spread = 0;
  std::vector<std::vector<FiberCriticalPoint>> cps(nb);
  for (int b = 0; b < nb; ++b) {
    cps[b] = fiber_critical_data(S, b);
    for (const auto& c : cps[b])
      for (int a = 0; a < dim; ++a) {
        int up = grid_step(bg, b, a, 1), dn = grid_step(bg, b, a, -1);
        if (up < 0 || dn < 0) continue;
        double d2 = S.value(up, c.fiber_vertex) - 2 * S.value(b, c.fiber_vertex) + S.value(dn, c.fiber_vertex);
        spread = std::max(spread, std::fabs(d2) / h[a]);
      }
  }
  out.hp = std::max(tau_res, spread);
  std::set<std::pair<int, int>> seen_front;
  for (int b = 0; b < nb; ++b) {
    if (on_base_boundary(bg, b) || cps[b].empty()) continue;
    auto x = bg.vertex_coords(b);
    std::set<int> cand;
    for (const auto& c : cps[b])
      for (int w : S.k() ? star_vertices(S.fiber_grid, c.fiber_vertex) : std::vector<int>{0}) cand.insert(w);
    for (int fv : cand) {
      const int v = b + nb * fv;
      const double t = S.values[v];
      bool any = false;
      auto emit = [&](const std::vector<double>& p) {
        out.points.push_back({x, t, p, 1.0});
        any = true;
      };
      if (dim == 1) {
        std::vector<double> thr;
        for (int w : star_vertices(S.grid, v)) {
          int d = offset(S.grid, v, w, 1)[0];
          if (d != 0) thr.push_back((S.values[w] - S.values[v]) / (d * h[0]));
        }
        std::sort(thr.begin(), thr.end());
        thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
        std::vector<double> cuts;
        cuts.push_back(thr.empty() ? -1.0 : thr.front() - 1.0);
        for (std::size_t i = 0; i + 1 < thr.size(); ++i) cuts.push_back(0.5 * (thr[i] + thr[i + 1]));
        cuts.push_back(thr.empty() ? 1.0 : thr.back() + 1.0);
        // interval i is (thr[i-1], thr[i]) with open ends at the extremes
        std::vector<bool> crit(cuts.size());
        for (std::size_t i = 0; i < cuts.size(); ++i) crit[i] = critical_for(S, v, {cuts[i]});
        // a threshold can be critical on its own when neighbours tie, as for
        // locally constant functions
        for (std::size_t i = 0; i < thr.size(); ++i)
          if (!crit[i] && !crit[i + 1] && critical_for(S, v, {thr[i]}, true)) emit({thr[i]});
        for (std::size_t i = 0; i < cuts.size(); ++i) {
          if (!crit[i]) continue;
          double lo = i == 0 ? -kInf : thr[i - 1];
          double hi = i < thr.size() ? thr[i] : kInf;
          if (!std::isfinite(lo) || !std::isfinite(hi)) {
            emit({std::isfinite(lo) ? lo : hi});
            continue;
          }
          emit({lo});
          emit({0.5 * (lo + hi)});
          emit({hi});
          for (double q = lo + tau_res; q < hi; q += tau_res) emit({q});
        }
      } else {
        for (const auto& c : cps[b]) {
          const int steps = 6;
          std::vector<int> k(dim, -steps);
          while (true) {
            std::vector<double> p(dim);
            for (int a = 0; a < dim; ++a) p[a] = c.p[a] + 0.5 * out.hp * k[a];
            if (critical_for(S, v, p)) emit(p);
            int a = 0;
            while (a < dim && ++k[a] > steps) k[a++] = -steps;
            if (a == dim) break;
          }
        }
      }
      if (any && seen_front.insert({b, fv}).second)
        out.points.push_back({x, t, std::vector<double>(dim, 0.0), 0.0});
    }
  }
  return out;
}

ConeSet cell_singular_support(const CellSheaf& c, double tau_res) {
  ConeSet out;
  const auto& g = c.base;
  const int dim = g.dim();
  auto h = base_spacings(g.axes());
  out.periods = base_periods(g.axes());
  out.hx = dim ? *std::max_element(h.begin(), h.end()) : 1.0;
  out.ht = tau_res;
  out.hp = tau_res;
  double lo = kInf, hi = -kInf;
  for (const auto& s : c.stalks)
    for (double v : s.actions())
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) return out;
  const double span = std::max(1.0, hi - lo);
  const double pmax = std::max(1.0, span / out.hx);
  for (int v = 0; v < g.num_vertices(); ++v) {
    const int cv = g.vertex_cell(v);
    auto x = g.vertex_coords(v);
    std::set<double> fronts;
    for (double e : finite_endpoints(c.stalks[cv].barcode())) fronts.insert(e);
    // Failure of generization towards an edge points p along that edge; the
    // length of the failure gives |p|, unbounded failures give a ray.
    for (auto [e, sg] : g.coboundary(cv)) {
      const ChainMap* m = c.map(cv, e);
      SparseMatrix zero(c.field, c.stalks[e].size(), c.stalks[cv].size());
      ChainMap rho = m ? *m : ChainMap{zero, 0};
      auto cone = mapping_cone(c.stalks[cv], c.stalks[e], rho);
      std::vector<double> u(dim, 0.0);
      int other = -1;
      for (int w : g.vertices(e))
        if (w != v) other = w;
      auto d = offset(g, v, other, dim);
      for (int a = 0; a < dim; ++a) u[a] = d[a];
      for (const auto& bar : cone.barcode().bars) {
        if (!(bar.death > bar.birth)) continue;
        fronts.insert(bar.birth);
        if (std::isfinite(bar.death)) {
          double slope = (bar.death - bar.birth) / out.hx;
          std::vector<double> p(u);
          for (auto& q : p) q *= slope;
          out.points.push_back({x, bar.birth, p, 1.0});
        } else {
          for (double t = bar.birth; t <= bar.birth + span + 1e-12; t += std::max(tau_res, span / 8)) {
            for (double s = 0; s <= pmax + 1e-12; s += std::max(tau_res, pmax / 8)) {
              std::vector<double> p(u);
              for (auto& q : p) q *= s;
              out.points.push_back({x, t, p, 1.0});
            }
            out.points.push_back({x, t, std::vector<double>(dim, 0.0), 0.0});
          }
        }
      }
    }
    for (double t : fronts) {
      out.points.push_back({x, t, std::vector<double>(dim, 0.0), 1.0});
      out.points.push_back({x, t, std::vector<double>(dim, 0.0), 0.0});
    }
  }
  return out;
}

double cone_distance(const ConePoint& a, const ConePoint& b, const std::vector<double>& periods,
                     double hx, double ht, double hp) {
  double d = std::fabs(a.t - b.t) / ht;
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    double dx = std::fabs(a.x[i] - b.x[i]);
    if (i < periods.size() && periods[i] > 0) dx = std::min(dx, periods[i] - std::fmod(dx, periods[i]));
    d = std::max(d, dx / hx);
  }
  if (a.tau > 0)
    for (std::size_t i = 0; i < a.p.size(); ++i) d = std::max(d, std::fabs(a.p[i] - b.p[i]) / hp);
  return d;
}

}  // namespace

ConeSet singular_support(const TameSheaf& F, double tau_res) {
  if (!(tau_res > 0)) throw SheafError("resolution must be positive");
  if (F.is_gf()) return gf_singular_support(*F.gf, tau_res);
  if (F.origin) return gf_singular_support(*F.origin, tau_res);
  return cell_singular_support(*F.cell, tau_res);
}

double hausdorff_cells(const ConeSet& a, const ConeSet& b, double hx, double ht, double hp) {
  const auto& periods = a.periods.empty() ? b.periods : a.periods;
  double worst = 0;
  for (double tau : {0.0, 1.0}) {
    auto pick = [&](const ConeSet& s) {
      std::vector<const ConePoint*> out;
      for (const auto& q : s.points)
        if ((q.tau > 0) == (tau > 0)) out.push_back(&q);
      return out;
    };
    auto A = pick(a), B = pick(b);
    if (A.empty() && B.empty()) continue;
    if (A.empty() || B.empty()) return kInf;
    auto one_way = [&](const std::vector<const ConePoint*>& P, const std::vector<const ConePoint*>& R) {
      double w = 0;
      for (const auto* p : P) {
        double best = kInf;
        for (const auto* r : R) best = std::min(best, cone_distance(*p, *r, periods, hx, ht, hp));
        w = std::max(w, best);
      }
      return w;
    };
    worst = std::max({worst, one_way(A, B), one_way(B, A)});
  }
  return worst;
}

}  // namespace sq
