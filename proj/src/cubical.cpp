#include "sheafq/cubical.hpp"

#include <algorithm>
#include <cmath>

namespace sq {

int Grid1D::vertex_at(int pos, int offset) const {
  int v = pos / 2 + (pos % 2 ? offset : 0);
  return topology == Topology::Circle ? v % n : v;
}

Grid1D Grid1D::circle(int n, double length, double origin) {
  if (n < 1) throw std::invalid_argument("circle needs at least one vertex");
  return {Topology::Circle, n, length / n, origin};
}

Grid1D Grid1D::interval(double lo, double hi, int n) {
  if (n < 1 || !(hi > lo)) throw std::invalid_argument("interval needs lo < hi and an edge");
  return {Topology::Interval, n, (hi - lo) / n, lo};
}

bool Region::contains(const std::vector<Grid1D>& axes, const std::vector<double>& x,
                      bool open) const {
  const double eps = 1e-12;
  for (std::size_t a = 0; a < ranges.size() && a < axes.size(); ++a) {
    const auto& r = ranges[a];
    if (r.full) continue;
    double v = x[a];
    if (axes[a].topology == Topology::Circle) {
      double p = axes[a].period();
      double len = r.hi - r.lo;
      if (len >= p) continue;
      double off = std::fmod(v - r.lo, p);
      if (off < 0) off += p;
      if (off > p - eps) off -= p;
      bool in = open ? (off > eps && off < len - eps) : (off >= -eps && off <= len + eps);
      if (!in) return false;
    } else {
      bool in = open ? (v > r.lo + eps && v < r.hi - eps) : (v >= r.lo - eps && v <= r.hi + eps);
      if (!in) return false;
    }
  }
  return true;
}

CubicalGrid::CubicalGrid(std::vector<Grid1D> axes) : axes_(std::move(axes)) {
  for (const auto& a : axes_) {
    if (a.n < 1) throw std::invalid_argument("axis needs at least one edge");
    stride_.push_back(ncells_);
    vstride_.push_back(nverts_);
    ncells_ *= a.positions();
    nverts_ *= a.vertices();
  }
}

std::vector<int> CubicalGrid::position(int cell) const {
  std::vector<int> p(dim());
  for (int a = 0; a < dim(); ++a) {
    p[a] = cell % axes_[a].positions();
    cell /= axes_[a].positions();
  }
  return p;
}

int CubicalGrid::cell_id(const std::vector<int>& pos) const {
  int id = 0;
  for (int a = 0; a < dim(); ++a) id += pos[a] * stride_[a];
  return id;
}

int CubicalGrid::cell_dim(int cell) const {
  int d = 0;
  for (int a = 0; a < dim(); ++a) {
    d += (cell % axes_[a].positions()) % 2;
    cell /= axes_[a].positions();
  }
  return d;
}

std::vector<int> CubicalGrid::vertices(int cell) const {
  auto p = position(cell);
  std::vector<int> out{0};
  for (int a = 0; a < dim(); ++a) {
    std::vector<int> next;
    int lo = axes_[a].vertex_at(p[a], 0), hi = axes_[a].vertex_at(p[a], 1);
    for (int v : out) {
      next.push_back(v + lo * vstride_[a]);
      if (p[a] % 2) next.push_back(v + hi * vstride_[a]);
    }
    out.swap(next);
  }
  return out;
}

std::vector<int> CubicalGrid::vertex_multi(int v) const {
  std::vector<int> idx(dim());
  for (int a = 0; a < dim(); ++a) {
    idx[a] = v % axes_[a].vertices();
    v /= axes_[a].vertices();
  }
  return idx;
}

int CubicalGrid::vertex_flat(const std::vector<int>& idx) const {
  int v = 0;
  for (int a = 0; a < dim(); ++a) v += idx[a] * vstride_[a];
  return v;
}

int CubicalGrid::vertex_cell(int v) const {
  auto idx = vertex_multi(v);
  for (auto& i : idx) i *= 2;
  return cell_id(idx);
}

std::vector<double> CubicalGrid::vertex_coords(int v) const {
  auto idx = vertex_multi(v);
  std::vector<double> x(dim());
  for (int a = 0; a < dim(); ++a) x[a] = axes_[a].coord(idx[a]);
  return x;
}

std::vector<double> CubicalGrid::cell_center(int cell) const {
  auto p = position(cell);
  std::vector<double> x(dim());
  for (int a = 0; a < dim(); ++a) x[a] = axes_[a].origin + 0.5 * p[a] * axes_[a].spacing;
  return x;
}

std::vector<std::pair<int, int>> CubicalGrid::boundary(int cell) const {
  auto p = position(cell);
  std::vector<std::pair<int, int>> out;
  int before = 0;
  for (int a = 0; a < dim(); ++a) {
    if (p[a] % 2 == 0) continue;
    int sgn = before % 2 ? -1 : 1;
    int P = axes_[a].positions();
    int lo = p[a] - 1, hi = (p[a] + 1) % P;
    out.emplace_back(cell + (lo - p[a]) * stride_[a], -sgn);
    out.emplace_back(cell + (hi - p[a]) * stride_[a], sgn);
    ++before;
  }
  return out;
}

std::vector<std::pair<int, int>> CubicalGrid::coboundary(int cell) const {
  auto p = position(cell);
  std::vector<std::pair<int, int>> out;
  for (int a = 0; a < dim(); ++a) {
    if (p[a] % 2 == 1) continue;
    int P = axes_[a].positions();
    int before = 0;
    for (int b = 0; b < a; ++b) before += p[b] % 2;
    int sgn = before % 2 ? -1 : 1;
    // edge above: this vertex is its lower end
    if (axes_[a].topology == Topology::Circle || p[a] + 1 < P)
      out.emplace_back(cell + ((p[a] + 1) % P - p[a]) * stride_[a], -sgn);
    // edge below: this vertex is its upper end
    if (axes_[a].topology == Topology::Circle || p[a] - 1 >= 0)
      out.emplace_back(cell + ((p[a] - 1 + P) % P - p[a]) * stride_[a], sgn);
  }
  return out;
}

std::vector<int> CubicalGrid::closed_cells(const Region& r) const {
  std::vector<bool> vin(nverts_);
  for (int v = 0; v < nverts_; ++v) vin[v] = r.contains(axes_, vertex_coords(v));
  std::vector<int> out;
  for (int c = 0; c < ncells_; ++c) {
    auto vs = vertices(c);
    if (!std::all_of(vs.begin(), vs.end(), [&](int v) { return vin[v]; })) continue;
    if (cell_dim(c) > 0 && !r.contains(axes_, cell_center(c))) continue;
    out.push_back(c);
  }
  return out;
}

std::vector<int> CubicalGrid::open_cells(const Region& r) const {
  std::vector<bool> vin(nverts_);
  for (int v = 0; v < nverts_; ++v) vin[v] = r.contains(axes_, vertex_coords(v), true);
  std::vector<int> out;
  for (int c = 0; c < ncells_; ++c) {
    auto vs = vertices(c);
    if (std::any_of(vs.begin(), vs.end(), [&](int v) { return vin[v]; })) out.push_back(c);
  }
  return out;
}

bool CubicalGrid::is_closed_set(const std::vector<int>& cells) const {
  std::vector<bool> in(ncells_);
  for (int c : cells) in[c] = true;
  for (int c : cells)
    for (auto [f, s] : boundary(c))
      if (!in[f]) return false;
  return true;
}

bool CubicalGrid::is_open_set(const std::vector<int>& cells) const {
  std::vector<bool> in(ncells_);
  for (int c : cells) in[c] = true;
  for (int c : cells)
    for (auto [f, s] : coboundary(c))
      if (!in[f]) return false;
  return true;
}

std::vector<double> CubicalGrid::sample(
    const std::function<double(const std::vector<double>&)>& f) const {
  std::vector<double> out(nverts_);
  for (int v = 0; v < nverts_; ++v) out[v] = f(vertex_coords(v));
  return out;
}

ChainComplex cochain_complex(const CubicalGrid& g, const std::vector<int>& cells, Field f) {
  std::vector<int> pos(g.num_cells(), -1);
  for (std::size_t k = 0; k < cells.size(); ++k) pos[cells[k]] = static_cast<int>(k);
  const int n = static_cast<int>(cells.size());
  SparseMatrix d(f, n, n);
  std::vector<int> deg(n);
  for (int k = 0; k < n; ++k) {
    deg[k] = g.cell_dim(cells[k]);
    std::vector<std::pair<int, Rational>> e;
    for (auto [c, s] : g.coboundary(cells[k]))
      if (pos[c] >= 0) e.emplace_back(pos[c], s);
    d.set_col(k, make_vec(f, std::move(e)));
  }
  return ChainComplex(f, deg, d, false);
}

ChainComplex relative_cochain_complex(const CubicalGrid& g, const std::vector<int>& W,
                                      const std::vector<int>& A, Field f) {
  if (!g.is_closed_set(W) || !g.is_closed_set(A))
    throw ComplexError("relative complex needs closed cell sets");
  std::vector<bool> inA(g.num_cells()), inW(g.num_cells());
  for (int c : W) inW[c] = true;
  for (int c : A) {
    if (!inW[c]) throw ComplexError("relative complex: A is not contained in W");
    inA[c] = true;
  }
  std::vector<int> cells;
  for (int c : W)
    if (!inA[c]) cells.push_back(c);
  return cochain_complex(g, cells, f);
}

std::vector<double> cell_actions(const CubicalGrid& g, const std::vector<double>& vertex_values) {
  std::vector<double> act(g.num_cells());
  for (int c = 0; c < g.num_cells(); ++c) {
    double m = -kInf;
    for (int v : g.vertices(c)) m = std::max(m, vertex_values[v]);
    act[c] = m;
  }
  return act;
}

LowerStar lower_star(const CubicalGrid& g, const std::vector<double>& vertex_values, Field f,
                     double floor, const std::vector<int>* restrict_cells) {
  auto act = cell_actions(g, vertex_values);
  LowerStar ls;
  if (restrict_cells) {
    for (int c : *restrict_cells)
      if (act[c] >= floor) ls.cells.push_back(c);
  } else {
    for (int c = 0; c < g.num_cells(); ++c)
      if (act[c] >= floor) ls.cells.push_back(c);
  }
  auto cc = cochain_complex(g, ls.cells, f);
  std::vector<double> a;
  a.reserve(ls.cells.size());
  for (int c : ls.cells) a.push_back(act[c]);
  ls.complex = FilteredComplex(std::move(cc), std::move(a), false);
  return ls;
}

}  // namespace sq
