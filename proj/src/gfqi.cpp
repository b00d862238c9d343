#include "sheafq/gfqi.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace sq {

namespace {

std::vector<Grid1D> concat(const std::vector<Grid1D>& a, const std::vector<Grid1D>& b) {
  std::vector<Grid1D> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void finish(GenFun& S) {
  S.grid = CubicalGrid(concat(S.base, S.fiber));
  S.base_grid = CubicalGrid(S.base);
  S.fiber_grid = CubicalGrid(S.fiber);
  if (S.Q.rows() != S.k() || S.Q.cols() != S.k())
    throw GfError(S.name + ": quadratic form has the wrong size");
  if (S.quadratic_at_infinity && S.k() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S.Q);
    if (es.eigenvalues().cwiseAbs().minCoeff() < 1e-12)
      throw GfError(S.name + ": quadratic form at infinity is degenerate");
  }
  S.index = negative_eigenvalues(S.Q);
}

Eigen::MatrixXd block_diag(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  m.topLeftCorner(a.rows(), a.cols()) = a;
  m.bottomRightCorner(b.rows(), b.cols()) = b;
  return m;
}

double derivative(const CubicalGrid& g, const std::function<double(int)>& f, int v, int axis) {
  int up = grid_step(g, v, axis, 1), dn = grid_step(g, v, axis, -1);
  double h = g.axis(axis).spacing;
  if (up >= 0 && dn >= 0) return (f(up) - f(dn)) / (2 * h);
  if (up >= 0) return (f(up) - f(v)) / h;
  if (dn >= 0) return (f(v) - f(dn)) / h;
  return 0;
}

}  // namespace

// Neighbouring vertex along an axis, or -1 past the end of an interval.
int grid_step(const CubicalGrid& g, int v, int axis, int dir) {
  auto idx = g.vertex_multi(v);
  const auto& a = g.axis(axis);
  int i = idx[axis] + dir;
  if (a.topology == Topology::Circle) i = (i + a.n) % a.n;
  else if (i < 0 || i >= a.vertices()) return -1;
  idx[axis] = i;
  return g.vertex_flat(idx);
}

// Degrees and ranks of H(lower star of v, lower link) for a function on a grid,
// ties broken by vertex id.
std::map<int, int> lower_star_change(const CubicalGrid& g, const std::function<double(int)>& f,
                                     int v, bool strict_ties) {
  auto below = [&](int w) { return f(w) < f(v) || (!strict_ties && f(w) == f(v) && w < v); };
  auto idx = g.vertex_multi(v);
  std::vector<int> base_pos(g.dim());
  for (int a = 0; a < g.dim(); ++a) base_pos[a] = 2 * idx[a];
  std::vector<int> cells;
  int combos = 1;
  for (int a = 0; a < g.dim(); ++a) combos *= 3;
  for (int c = 0; c < combos; ++c) {
    std::vector<int> pos = base_pos;
    int r = c;
    bool ok = true;
    for (int a = 0; a < g.dim(); ++a) {
      int o = r % 3 - 1;
      r /= 3;
      int P = g.axis(a).positions();
      int q = pos[a] + o;
      if (g.axis(a).topology == Topology::Circle) q = (q + P) % P;
      else if (q < 0 || q >= P) ok = false;
      pos[a] = q;
    }
    if (!ok) continue;
    int cell = g.cell_id(pos);
    auto vs = g.vertices(cell);
    if (std::all_of(vs.begin(), vs.end(), [&](int w) { return w == v || below(w); }))
      cells.push_back(cell);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cochain_complex(g, cells, Field::F2).cohomology_ranks();
}

bool same_base(const std::vector<Grid1D>& a, const std::vector<Grid1D>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].topology != b[i].topology || a[i].n != b[i].n ||
        std::fabs(a[i].spacing - b[i].spacing) > 1e-12 || std::fabs(a[i].origin - b[i].origin) > 1e-12)
      return false;
  return true;
}

double GenFun::quad(const std::vector<double>& xi) const {
  double s = 0;
  for (int i = 0; i < k(); ++i)
    for (int j = 0; j < k(); ++j) s += Q(i, j) * xi[i] * xi[j];
  return s;
}

int negative_eigenvalues(const Eigen::MatrixXd& Q) {
  if (Q.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
  int n = 0;
  for (int i = 0; i < Q.rows(); ++i) n += es.eigenvalues()(i) < -1e-12;
  return n;
}

GenFun make_genfun(std::string name, std::vector<Grid1D> base, double R, int n_fiber,
                   const BaseFiberFn& s, Eigen::MatrixXd Q, bool quadratic_at_infinity) {
  GenFun S;
  S.name = std::move(name);
  S.base = std::move(base);
  for (int i = 0; i < Q.rows(); ++i) S.fiber.push_back(Grid1D::interval(-R, R, n_fiber));
  S.Q = std::move(Q);
  S.quadratic_at_infinity = quadratic_at_infinity;
  finish(S);
  const int nb = S.n_base();
  S.values.resize(S.grid.num_vertices());
  for (int f = 0; f < S.n_fiber(); ++f) {
    auto xi = S.fiber_grid.vertex_coords(f);
    for (int b = 0; b < nb; ++b) S.values[b + nb * f] = s(S.base_grid.vertex_coords(b), xi);
  }
  return S;
}

GenFun graph_genfun(std::string name, std::vector<Grid1D> base,
                    const std::function<double(const std::vector<double>&)>& f) {
  return make_genfun(std::move(name), std::move(base), 1.0, 1,
                     [&](const std::vector<double>& x, const std::vector<double>&) { return f(x); },
                     Eigen::MatrixXd(0, 0));
}

GenFun graph_from_values(std::string name, std::vector<Grid1D> base, std::vector<double> values) {
  GenFun S;
  S.name = std::move(name);
  S.base = std::move(base);
  S.Q = Eigen::MatrixXd(0, 0);
  finish(S);
  if (static_cast<int>(values.size()) != S.n_base()) throw GfError(S.name + ": value count mismatch");
  S.values = std::move(values);
  return S;
}

GenFun quadratic_genfun(std::vector<Grid1D> base, Eigen::MatrixXd Q, double R, int n_fiber) {
  Eigen::MatrixXd q = Q;
  return make_genfun("Q", std::move(base), R, n_fiber,
                     [q](const std::vector<double>&, const std::vector<double>& xi) {
                       double s = 0;
                       for (int i = 0; i < q.rows(); ++i)
                         for (int j = 0; j < q.cols(); ++j) s += q(i, j) * xi[i] * xi[j];
                       return s;
                     },
                     Q);
}

GenFun cusp_genfun(std::vector<Grid1D> base, double R, int n_fiber) {
  return make_genfun("cusp", std::move(base), R, n_fiber,
                     [](const std::vector<double>& x, const std::vector<double>& xi) {
                       return -xi[0] * xi[0] * xi[0] / 3.0 + x[0] * xi[0];
                     },
                     Eigen::MatrixXd::Zero(1, 1), false);
}

double collar_defect(const GenFun& S) {
  if (S.k() == 0) return 0;
  const int nb = S.n_base();
  std::vector<double> sum(nb, 0), cnt(nb, 0);
  std::vector<int> boundary;
  for (int f = 0; f < S.n_fiber(); ++f) {
    auto idx = S.fiber_grid.vertex_multi(f);
    bool edge = false;
    for (int a = 0; a < S.k(); ++a) edge |= idx[a] == 0 || idx[a] == S.fiber[a].vertices() - 1;
    if (edge) boundary.push_back(f);
  }
  for (int f : boundary) {
    double q = S.quad(S.fiber_grid.vertex_coords(f));
    for (int b = 0; b < nb; ++b) {
      sum[b] += S.value(b, f) - q;
      cnt[b] += 1;
    }
  }
  double worst = 0;
  for (int f : boundary) {
    double q = S.quad(S.fiber_grid.vertex_coords(f));
    for (int b = 0; b < nb; ++b) worst = std::max(worst, std::fabs(S.value(b, f) - q - sum[b] / cnt[b]));
  }
  return worst;
}

std::vector<FiberCriticalPoint> fiber_critical_data(const GenFun& S, int b) {
  if (b < 0 || b >= S.n_base()) throw GfError("base vertex out of range");
  std::vector<FiberCriticalPoint> out;
  auto x = S.base_grid.vertex_coords(b);
  auto base_deriv = [&](int f) {
    std::vector<double> p(S.base.size());
    for (std::size_t a = 0; a < S.base.size(); ++a)
      p[a] = derivative(S.base_grid, [&](int bb) { return S.value(bb, f); }, b, static_cast<int>(a));
    return p;
  };
  if (S.k() == 0) {
    out.push_back({b, 0, x, {}, S.value(b, 0), 0, base_deriv(0), false});
    return out;
  }
  const auto& fg = S.fiber_grid;
  auto phi = [&](int f) { return S.value(b, f); };
  for (int f = 0; f < S.n_fiber(); ++f) {
    auto change = lower_star_change(fg, phi, f);
    if (change.empty()) continue;
    auto idx = fg.vertex_multi(f);
    bool near_edge = false, on_edge = false;
    for (int a = 0; a < S.k(); ++a) {
      int last = S.fiber[a].vertices() - 1;
      near_edge |= idx[a] <= 2 || idx[a] >= last - 2;
      on_edge |= idx[a] == 0 || idx[a] == last;
    }
    if (on_edge) continue;  // the truncation boundary itself
    if (near_edge && S.quadratic_at_infinity)
      throw GfError(S.name + ": fiber critical point within two cells of the truncation boundary");
    FiberCriticalPoint cp;
    cp.base_vertex = b;
    cp.fiber_vertex = f;
    cp.x = x;
    cp.xi = fg.vertex_coords(f);
    cp.index = change.begin()->first;
    cp.degenerate = change.size() != 1 || change.begin()->second != 1;
    const int k = S.k();
    Eigen::VectorXd g(k);
    Eigen::MatrixXd H(k, k);
    for (int a = 0; a < k; ++a) {
      double h = S.fiber[a].spacing;
      int up = grid_step(fg, f, a, 1), dn = grid_step(fg, f, a, -1);
      g(a) = (phi(up) - phi(dn)) / (2 * h);
      H(a, a) = (phi(up) - 2 * phi(f) + phi(dn)) / (h * h);
      for (int c = a + 1; c < k; ++c) {
        double hc = S.fiber[c].spacing;
        int pp = grid_step(fg, up, c, 1), pm = grid_step(fg, up, c, -1);
        int mp = grid_step(fg, dn, c, 1), mm = grid_step(fg, dn, c, -1);
        H(a, c) = H(c, a) = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4 * h * hc);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    double smallest = es.eigenvalues().cwiseAbs().minCoeff();
    int hess_index = 0;
    for (int a = 0; a < k; ++a) hess_index += es.eigenvalues()(a) < 0;
    if (smallest < 1e-6 * scale || hess_index != cp.index) cp.degenerate = true;
    cp.value = phi(f);
    cp.p = base_deriv(f);
    if (!cp.degenerate) {
      Eigen::VectorXd delta = -H.ldlt().solve(g);
      bool small = true;
      for (int a = 0; a < k; ++a) small &= std::fabs(delta(a)) <= S.fiber[a].spacing;
      if (small) {
        cp.value += 0.5 * g.dot(delta);
        for (int a = 0; a < k; ++a) cp.xi[a] += delta(a);
      }
    }
    out.push_back(std::move(cp));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& c) { return a.value < c.value; });
  return out;
}

std::vector<FiberCriticalPoint> all_strands(const GenFun& S) {
  std::vector<FiberCriticalPoint> out;
  for (int b = 0; b < S.n_base(); ++b) {
    auto cps = fiber_critical_data(S, b);
    out.insert(out.end(), cps.begin(), cps.end());
  }
  return out;
}

std::string CerfDiagram::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "x,t,index\n";
  for (const auto& s : strands) {
    for (std::size_t a = 0; a < s.x.size(); ++a) os << (a ? ";" : "") << s.x[a];
    os << ',' << s.value << ',' << s.index << '\n';
  }
  return os.str();
}

CerfDiagram cerf_diagram(const GenFun& S, const Region& U) {
  CerfDiagram cd;
  const auto& bg = S.base_grid;
  std::vector<int> count(S.n_base(), -1);
  for (int b = 0; b < S.n_base(); ++b) {
    auto x = bg.vertex_coords(b);
    if (!U.contains(S.base, x)) continue;
    auto cps = fiber_critical_data(S, b);
    count[b] = static_cast<int>(cps.size());
    for (auto& c : cps) {
      cd.breakpoints.push_back(c.value);
      cd.strands.push_back(std::move(c));
    }
  }
  std::sort(cd.breakpoints.begin(), cd.breakpoints.end());
  for (int b = 0; b < S.n_base(); ++b) {
    if (count[b] < 0) continue;
    for (int a = 0; a < bg.dim(); ++a) {
      int nb = grid_step(bg, b, a, 1);
      if (nb < 0 || count[nb] < 0 || count[nb] == count[b]) continue;
      auto x0 = bg.vertex_coords(b);
      x0[a] += 0.5 * bg.axis(a).spacing;
      cd.cusp_locations.push_back(x0);
    }
  }
  return cd;
}

double value_tolerance(const GenFun& S) {
  double hb = 0, hf = 0;
  for (const auto& a : S.base) hb = std::max(hb, a.spacing);
  for (const auto& a : S.fiber) hf = std::max(hf, a.spacing);
  double pmax = 0;
  for (const auto& s : all_strands(S))
    for (double p : s.p) pmax = std::max(pmax, std::fabs(p));
  // curvature along the fiber bounds how far a sampled critical value can be off
  double curv = 0;
  if (S.k() > 0) {
    for (int b = 0; b < S.n_base(); ++b)
      for (const auto& s : fiber_critical_data(S, b)) {
        for (int a = 0; a < S.k(); ++a) {
          int up = grid_step(S.fiber_grid, s.fiber_vertex, a, 1), dn = grid_step(S.fiber_grid, s.fiber_vertex, a, -1);
          if (up < 0 || dn < 0) continue;
          double h = S.fiber[a].spacing;
          curv = std::max(curv, std::fabs(S.value(b, up) - 2 * S.value(b, s.fiber_vertex) + S.value(b, dn)) / (h * h));
        }
      }
  }
  return pmax * hb + 0.5 * curv * hf * hf + 1e-9;
}

double bottom_level(const GenFun& S) {
  double lo = kInf, hi = -kInf;
  for (const auto& s : all_strands(S)) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  if (!std::isfinite(lo)) {
    lo = *std::min_element(S.values.begin(), S.values.end());
    hi = lo;
  }
  return lo - std::max(0.5, 0.25 * (hi - lo));
}

std::vector<int> product_cells(const GenFun& S, const Region& U) {
  auto base_cells = S.base_grid.closed_cells(U);
  std::vector<bool> in(S.base_grid.num_cells());
  for (int c : base_cells) in[c] = true;
  std::vector<int> out;
  const int nbc = S.base_grid.num_cells();
  for (int c = 0; c < S.grid.num_cells(); ++c)
    if (in[c % nbc]) out.push_back(c);
  return out;
}

LowerStar gf_filtered(const GenFun& S, const Region& U, Field f) {
  auto cells = product_cells(S, U);
  return lower_star(S.grid, S.values, f, bottom_level(S), &cells);
}

void check_window(const GenFun& S, const Region& U, double a, double b) {
  if (!(a < b)) throw GfError("window needs a < b");
  const double tol = value_tolerance(S);
  const auto& bg = S.base_grid;
  auto inU = [&](int v) { return U.contains(S.base, bg.vertex_coords(v)); };
  auto near = [&](double t, double v) { return std::isfinite(t) && std::fabs(t - v) <= tol; };
  auto describe = [&](const FiberCriticalPoint& s, double t) {
    std::ostringstream os;
    os << "window end " << t << " hits the strand of index " << s.index << " with value " << s.value
       << " over x = (";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << (i ? ", " : "") << s.x[i];
    os << ") within tolerance " << tol;
    return os.str();
  };
  for (int v = 0; v < S.n_base(); ++v) {
    if (!inU(v)) continue;
    bool collar = false;
    for (int ax = 0; ax < bg.dim(); ++ax)
      for (int dir : {-1, 1}) {
        int w = grid_step(bg, v, ax, dir);
        if (w < 0 || !inU(w)) collar = true;
      }
    if (!collar) continue;
    for (const auto& s : fiber_critical_data(S, v))
      for (double t : {a, b})
        if (near(t, s.value)) throw GfError(describe(s, t));
  }
  auto fc = gf_filtered(S, U, Field::F2).complex;
  for (const auto& bar : fc.barcode().bars)
    for (double t : {a, b})
      for (double e : {bar.birth, bar.death})
        if (near(t, e) && std::isfinite(e)) {
          std::ostringstream os;
          os << "window end " << t << " hits a critical value " << e << " of " << S.name
             << " over the region within tolerance " << tol;
          throw GfError(os.str());
        }
}

std::map<int, int> gf_cohomology(const GenFun& S, const Region& U, double a, double b, Field f,
                                 bool check) {
  if (check) check_window(S, U, a, b);
  auto fc = gf_filtered(S, U, f).complex;
  double lo = std::max(a, bottom_level(S));
  auto r = fc.window_ranks(lo, b);
  std::map<int, int> out;
  for (auto [p, v] : r) out[p - S.index] = v;
  return out;
}

GenFun box_sum(const GenFun& s0, const GenFun& s1) {
  if (!same_base(s0.base, s1.base)) throw GfError("box_sum: base grids differ");
  GenFun S;
  S.name = s0.name + "+" + s1.name;
  S.base = s0.base;
  S.fiber = concat(s0.fiber, s1.fiber);
  S.Q = block_diag(s0.Q, s1.Q);
  S.quadratic_at_infinity = s0.quadratic_at_infinity && s1.quadratic_at_infinity;
  finish(S);
  const int nb = S.n_base(), n0 = s0.n_fiber();
  S.values.resize(S.grid.num_vertices());
  for (int f1 = 0; f1 < s1.n_fiber(); ++f1)
    for (int f0 = 0; f0 < n0; ++f0)
      for (int b = 0; b < nb; ++b)
        S.values[b + nb * (f0 + n0 * f1)] = s0.value(b, f0) + s1.value(b, f1);
  return S;
}

GenFun external_sum(const GenFun& s1, const GenFun& s2) {
  GenFun S;
  S.name = s1.name + "*" + s2.name;
  S.base = concat(s1.base, s2.base);
  S.fiber = concat(s1.fiber, s2.fiber);
  S.Q = block_diag(s1.Q, s2.Q);
  S.quadratic_at_infinity = s1.quadratic_at_infinity && s2.quadratic_at_infinity;
  finish(S);
  const int nb1 = s1.n_base(), nb2 = s2.n_base(), nf1 = s1.n_fiber();
  S.values.resize(S.grid.num_vertices());
  for (int f2 = 0; f2 < s2.n_fiber(); ++f2)
    for (int f1 = 0; f1 < nf1; ++f1)
      for (int b2 = 0; b2 < nb2; ++b2)
        for (int b1 = 0; b1 < nb1; ++b1)
          S.values[(b1 + nb1 * b2) + nb1 * nb2 * (f1 + nf1 * f2)] = s1.value(b1, f1) + s2.value(b2, f2);
  return S;
}

GenFun negate(const GenFun& s) {
  GenFun S = s;
  S.name = "-" + s.name;
  for (auto& v : S.values) v = -v;
  S.Q = -s.Q;
  S.index = negative_eigenvalues(S.Q);
  return S;
}

GenFun ominus(const GenFun& s0, const GenFun& s1) {
  if (!same_base(s0.base, s1.base)) throw GfError("ominus: base grids differ");
  GenFun S = box_sum(s0, negate(s1));
  S.name = s0.name + "-" + s1.name;
  return S;
}

GenFun add_base_function(const GenFun& s,
                         const std::function<double(const std::vector<double>&)>& f) {
  GenFun S = s;
  const int nb = S.n_base();
  std::vector<double> fb(nb);
  for (int b = 0; b < nb; ++b) fb[b] = f(S.base_grid.vertex_coords(b));
  for (std::size_t v = 0; v < S.values.size(); ++v) S.values[v] += fb[v % nb];
  return S;
}

Brane brane_of(const GenFun& S) {
  Brane br;
  br.source = S.name;
  for (const auto& s : all_strands(S)) br.points.push_back({s.x, s.p, s.value, s.index - S.index});
  return br;
}

}  // namespace sq
