#include "sheafq/chain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sq {

Field parse_field(const std::string& s) {
  if (s == "f2" || s == "F2") return Field::F2;
  if (s == "q" || s == "Q") return Field::Q;
  throw std::invalid_argument("unknown field '" + s + "' (expected f2 or q)");
}

std::string field_name(Field f) { return f == Field::F2 ? "f2" : "q"; }

Rational SparseVec::at(Field f, int i) const {
  auto it = std::lower_bound(idx.begin(), idx.end(), i);
  if (it == idx.end() || *it != i) return 0;
  return f == Field::F2 ? Rational(1) : val[it - idx.begin()];
}

void axpy(Field f, SparseVec& v, const Rational& c, const SparseVec& w) {
  if (w.empty()) return;
  if (f == Field::F2) {
    if (c == 0) return;
    std::vector<int> out;
    out.reserve(v.idx.size() + w.idx.size());
    std::set_symmetric_difference(v.idx.begin(), v.idx.end(), w.idx.begin(), w.idx.end(),
                                  std::back_inserter(out));
    v.idx.swap(out);
    return;
  }
  if (c == 0) return;
  SparseVec out;
  out.idx.reserve(v.idx.size() + w.idx.size());
  out.val.reserve(v.idx.size() + w.idx.size());
  std::size_t i = 0, j = 0;
  while (i < v.idx.size() || j < w.idx.size()) {
    if (j == w.idx.size() || (i < v.idx.size() && v.idx[i] < w.idx[j])) {
      out.idx.push_back(v.idx[i]);
      out.val.push_back(v.val[i]);
      ++i;
    } else if (i == v.idx.size() || w.idx[j] < v.idx[i]) {
      out.idx.push_back(w.idx[j]);
      out.val.push_back(c * w.val[j]);
      ++j;
    } else {
      Rational s = v.val[i] + c * w.val[j];
      if (s != 0) {
        out.idx.push_back(v.idx[i]);
        out.val.push_back(std::move(s));
      }
      ++i;
      ++j;
    }
  }
  v = std::move(out);
}

SparseVec make_vec(Field f, std::vector<std::pair<int, Rational>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVec v;
  for (std::size_t k = 0; k < entries.size();) {
    int i = entries[k].first;
    Rational s = 0;
    while (k < entries.size() && entries[k].first == i) s += entries[k++].second;
    if (f == Field::F2) {
      // an integer-valued entry survives mod 2 iff its numerator is odd
      if (denominator(s) != 1) throw ComplexError("non-integer coefficient in F2 mode");
      if (numerator(s) % 2 != 0) v.idx.push_back(i);
    } else if (s != 0) {
      v.idx.push_back(i);
      v.val.push_back(s);
    }
  }
  return v;
}

SparseMatrix::SparseMatrix(Field f, int rows, int cols) : field_(f), rows_(rows), cols_(cols) {}

SparseMatrix SparseMatrix::identity(Field f, int n) {
  SparseMatrix m(f, n, n);
  for (int i = 0; i < n; ++i) m.cols_[i] = make_vec(f, {{i, 1}});
  return m;
}

SparseMatrix SparseMatrix::from_triplets(Field f, int rows, int cols,
                                         const std::vector<std::tuple<int, int, Rational>>& t) {
  std::vector<std::vector<std::pair<int, Rational>>> per(cols);
  for (const auto& [r, c, v] : t) {
    if (r < 0 || r >= rows || c < 0 || c >= cols) throw ComplexError("triplet out of range");
    per[c].emplace_back(r, v);
  }
  SparseMatrix m(f, rows, cols);
  for (int c = 0; c < cols; ++c) m.cols_[c] = make_vec(f, std::move(per[c]));
  return m;
}

void SparseMatrix::set_col(int c, SparseVec v) {
  if (!v.empty() && (v.idx.front() < 0 || v.idx.back() >= rows_))
    throw ComplexError("column entry out of range");
  cols_[c] = std::move(v);
}

std::size_t SparseMatrix::nnz() const {
  std::size_t n = 0;
  for (const auto& c : cols_) n += c.idx.size();
  return n;
}

bool SparseMatrix::is_zero() const {
  return std::all_of(cols_.begin(), cols_.end(), [](const SparseVec& v) { return v.empty(); });
}

SparseMatrix SparseMatrix::transpose() const {
  SparseMatrix t(field_, cols(), rows_);
  for (int c = 0; c < cols(); ++c) {
    const auto& v = cols_[c];
    for (std::size_t k = 0; k < v.idx.size(); ++k) {
      auto& w = t.cols_[v.idx[k]];
      w.idx.push_back(c);
      if (field_ == Field::Q) w.val.push_back(v.val[k]);
    }
  }
  return t;
}

SparseMatrix SparseMatrix::submatrix(const std::vector<int>& rows,
                                     const std::vector<int>& cols) const {
  std::vector<int> pos(rows_, -1);
  for (std::size_t i = 0; i < rows.size(); ++i) pos[rows[i]] = static_cast<int>(i);
  SparseMatrix s(field_, static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto& v = cols_[cols[c]];
    std::vector<std::pair<int, Rational>> e;
    for (std::size_t k = 0; k < v.idx.size(); ++k)
      if (pos[v.idx[k]] >= 0) e.emplace_back(pos[v.idx[k]], v.coef(field_, k));
    s.cols_[c] = make_vec(field_, std::move(e));
  }
  return s;
}

SparseVec SparseMatrix::apply(const SparseVec& x) const {
  SparseVec out;
  for (std::size_t k = 0; k < x.idx.size(); ++k) axpy(field_, out, x.coef(field_, k), cols_[x.idx[k]]);
  return out;
}

SparseMatrix SparseMatrix::scaled(const Rational& c) const {
  SparseMatrix s(field_, rows_, cols());
  for (int j = 0; j < cols(); ++j) axpy(field_, s.cols_[j], c, cols_[j]);
  return s;
}

SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols() != b.rows()) throw ComplexError("matrix product shape mismatch");
  SparseMatrix p(a.field_, a.rows(), b.cols());
  for (int j = 0; j < b.cols(); ++j) p.cols_[j] = a.apply(b.cols_[j]);
  return p;
}

SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ComplexError("matrix sum shape mismatch");
  SparseMatrix s = a;
  for (int j = 0; j < b.cols(); ++j) axpy(a.field_, s.cols_[j], 1, b.cols_[j]);
  return s;
}

SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ComplexError("matrix sum shape mismatch");
  SparseMatrix s = a;
  for (int j = 0; j < b.cols(); ++j) axpy(a.field_, s.cols_[j], -1, b.cols_[j]);
  return s;
}

bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (int j = 0; j < a.cols(); ++j)
    if (a.cols_[j].idx != b.cols_[j].idx || a.cols_[j].val != b.cols_[j].val) return false;
  return true;
}

Reduction reduce_columns(const SparseMatrix& M, bool track) {
  const Field f = M.field();
  Reduction red;
  red.R.resize(M.cols());
  if (track) red.V.resize(M.cols());
  red.pivot_col.assign(M.rows(), -1);
  for (int j = 0; j < M.cols(); ++j) {
    SparseVec r = M.col(j);
    SparseVec v;
    if (track) v = make_vec(f, {{j, 1}});
    while (!r.empty()) {
      int low = r.low();
      int k = red.pivot_col[low];
      if (k < 0) break;
      Rational c = f == Field::F2 ? Rational(1) : -(r.val.back() / red.R[k].val.back());
      axpy(f, r, c, red.R[k]);
      if (track) axpy(f, v, c, red.V[k]);
    }
    if (!r.empty()) red.pivot_col[r.low()] = j;
    red.R[j] = std::move(r);
    if (track) red.V[j] = std::move(v);
  }
  return red;
}

int SparseMatrix::rank() const {
  Reduction red = reduce_columns(*this, false);
  return static_cast<int>(std::count_if(red.R.begin(), red.R.end(),
                                        [](const SparseVec& v) { return !v.empty(); }));
}

std::optional<SparseVec> solve(const SparseMatrix& M, const SparseVec& b) {
  const Field f = M.field();
  Reduction red = reduce_columns(M, true);
  SparseVec r = b, x;
  while (!r.empty()) {
    int k = red.pivot_col[r.low()];
    if (k < 0) return std::nullopt;
    Rational c = f == Field::F2 ? Rational(1) : -(r.val.back() / red.R[k].val.back());
    axpy(f, r, c, red.R[k]);
    axpy(f, x, -c, red.V[k]);
  }
  return x;
}

ChainComplex::ChainComplex(Field f, std::vector<int> degree, SparseMatrix d, bool check)
    : degree_(std::move(degree)), d_(std::move(d)) {
  const int n = size();
  if (d_.field() != f) throw ComplexError("differential field mismatch");
  if (d_.rows() != n || d_.cols() != n) throw ComplexError("differential must be square");
  if (!check) return;
  for (int j = 0; j < n; ++j)
    for (int i : d_.col(j).idx)
      if (degree_[i] != degree_[j] + 1)
        throw ComplexError("differential entry (" + std::to_string(i) + "," + std::to_string(j) +
                           ") does not raise degree by one");
  if (!(d_ * d_).is_zero()) throw ComplexError("d^2 != 0");
}

std::map<int, int> ChainComplex::cohomology_ranks() const {
  Reduction red = reduce_columns(d_, false);
  std::map<int, int> gens, rk;
  for (int j = 0; j < size(); ++j) {
    gens[degree_[j]]++;
    if (!red.R[j].empty()) rk[degree_[j]]++;
  }
  std::map<int, int> h;
  for (auto [p, n] : gens) {
    int v = n - rk[p] - (rk.count(p - 1) ? rk[p - 1] : 0);
    if (v != 0) h[p] = v;
  }
  return h;
}

int ChainComplex::total_rank() const {
  int s = 0;
  for (auto [p, v] : cohomology_ranks()) s += v;
  return s;
}

std::vector<SparseVec> ChainComplex::cohomology_reps(int p) const {
  // Cocycles in degree p come from the kernel of d restricted to degree p;
  // a cocycle is new if it is independent of the coboundaries and earlier reps.
  const Field f = field();
  Reduction red = reduce_columns(d_, true);
  SparseMatrix acc(f, size(), 0);
  std::vector<SparseVec> basis;
  for (int j = 0; j < size(); ++j)
    if (degree_[j] == p - 1 && !red.R[j].empty()) basis.push_back(red.R[j]);
  std::vector<SparseVec> reps;
  auto independent = [&](const SparseVec& z) {
    SparseMatrix m(f, size(), static_cast<int>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) m.set_col(static_cast<int>(k), basis[k]);
    return !solve(m, z).has_value();
  };
  for (int j = 0; j < size(); ++j) {
    if (degree_[j] != p || !red.R[j].empty()) continue;
    if (independent(red.V[j])) {
      basis.push_back(red.V[j]);
      reps.push_back(red.V[j]);
    }
  }
  return reps;
}

std::map<int, int> Barcode::ranks_at(double lambda) const {
  std::map<int, int> r;
  for (const auto& b : bars)
    if (b.birth < lambda && lambda <= b.death) r[b.degree]++;
  return r;
}

void Barcode::sort() {
  std::sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
    return std::tie(a.degree, a.birth, a.death) < std::tie(b.degree, b.birth, b.death);
  });
}

std::string Barcode::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "degree,birth,death\n";
  for (const auto& b : bars) {
    os << b.degree << ',' << b.birth << ',';
    if (std::isinf(b.death)) os << "inf"; else os << b.death;
    os << '\n';
  }
  return os.str();
}

FilteredComplex::FilteredComplex(ChainComplex c, std::vector<double> action, bool check)
    : c_(std::move(c)), action_(std::move(action)) {
  if (static_cast<int>(action_.size()) != c_.size()) throw ComplexError("action size mismatch");
  if (!check) return;
  for (int j = 0; j < size(); ++j)
    for (int i : c_.d().col(j).idx)
      if (action_[i] < action_[j])
        throw ComplexError("differential lowers action from generator " + std::to_string(j) +
                           " to generator " + std::to_string(i));
}

FilteredComplex::FilteredComplex(Field f, std::vector<int> degree, std::vector<double> action,
                                 SparseMatrix d, bool check)
    : FilteredComplex(ChainComplex(f, std::move(degree), std::move(d), check), std::move(action),
                      check) {}

std::vector<int> FilteredComplex::window_indices(double a, double b) const {
  std::vector<int> keep;
  for (int j = 0; j < size(); ++j)
    if (action_[j] >= a && action_[j] < b) keep.push_back(j);
  return keep;
}

FilteredComplex FilteredComplex::window(double a, double b) const {
  auto keep = window_indices(a, b);
  std::vector<int> deg;
  std::vector<double> act;
  for (int j : keep) {
    deg.push_back(c_.degree(j));
    act.push_back(action_[j]);
  }
  return FilteredComplex(ChainComplex(field(), deg, c_.d().submatrix(keep, keep), false), act,
                         false);
}

std::map<int, int> FilteredComplex::window_ranks(double a, double b) const {
  return window(a, b).complex().cohomology_ranks();
}

Barcode FilteredComplex::barcode() const {
  // Homology of the transposed complex, filtered by sublevel sets of the action.
  const int n = size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::tie(action_[a], c_.degrees()[a], a) < std::tie(action_[b], c_.degrees()[b], b);
  });
  SparseMatrix bd = c_.d().transpose().submatrix(order, order);
  Reduction red = reduce_columns(bd, false);
  std::vector<bool> paired(n, false);
  Barcode bc;
  for (int j = 0; j < n; ++j) {
    if (red.R[j].empty()) continue;
    int i = red.R[j].low();
    paired[i] = paired[j] = true;
    double b = action_[order[i]], e = action_[order[j]];
    if (b < e) bc.bars.push_back({c_.degree(order[i]), b, e});
  }
  for (int i = 0; i < n; ++i)
    if (!paired[i]) bc.bars.push_back({c_.degree(order[i]), action_[order[i]], kInf});
  bc.sort();
  return bc;
}

FilteredComplex FilteredComplex::shifted(int k) const {
  std::vector<int> deg = c_.degrees();
  for (auto& p : deg) p -= k;
  return FilteredComplex(ChainComplex(field(), deg, c_.d(), false), action_, false);
}

FilteredComplex FilteredComplex::translated(double c) const {
  std::vector<double> act = action_;
  for (auto& a : act) a += c;
  return FilteredComplex(c_, act, false);
}

void check_chain_map(const ChainComplex& a, const ChainComplex& b, const ChainMap& f) {
  if (f.m.rows() != b.size() || f.m.cols() != a.size()) throw ComplexError("chain map shape mismatch");
  for (int j = 0; j < a.size(); ++j)
    for (int i : f.m.col(j).idx)
      if (b.degree(i) != a.degree(j) + f.shift) throw ComplexError("chain map has wrong degree");
  SparseMatrix lhs = b.d() * f.m;
  SparseMatrix rhs = f.m * a.d();
  if (f.shift % 2 != 0) rhs = rhs.scaled(-1);
  if (!(lhs == rhs)) throw ComplexError("map does not commute with differentials");
}

void check_filtered_map(const FilteredComplex& a, const FilteredComplex& b, const ChainMap& f) {
  check_chain_map(a.complex(), b.complex(), f);
  for (int j = 0; j < a.size(); ++j)
    for (int i : f.m.col(j).idx)
      if (b.action(i) < a.action(j)) throw ComplexError("map lowers action");
}

ChainComplex mapping_cone(const ChainComplex& a, const ChainComplex& b, const ChainMap& f) {
  if (f.shift != 0) throw ComplexError("mapping cone needs a degree-0 map");
  const Field fl = a.field();
  const int na = a.size(), nb = b.size();
  std::vector<int> deg;
  for (int j = 0; j < na; ++j) deg.push_back(a.degree(j) - 1);
  for (int j = 0; j < nb; ++j) deg.push_back(b.degree(j));
  SparseMatrix d(fl, na + nb, na + nb);
  for (int j = 0; j < na; ++j) {
    SparseVec v;
    axpy(fl, v, -1, a.d().col(j));
    SparseVec w = f.m.col(j);
    for (auto& i : w.idx) i += na;
    axpy(fl, v, 1, w);
    d.set_col(j, v);
  }
  for (int j = 0; j < nb; ++j) {
    SparseVec w = b.d().col(j);
    for (auto& i : w.idx) i += na;
    d.set_col(na + j, w);
  }
  return ChainComplex(fl, deg, d, false);
}

FilteredComplex mapping_cone(const FilteredComplex& a, const FilteredComplex& b,
                             const ChainMap& f) {
  std::vector<double> act = a.actions();
  act.insert(act.end(), b.actions().begin(), b.actions().end());
  return FilteredComplex(mapping_cone(a.complex(), b.complex(), f), act, false);
}

bool is_quasi_iso(const ChainComplex& a, const ChainComplex& b, const ChainMap& f) {
  return mapping_cone(a, b, f).total_rank() == 0;
}

std::map<int, int> induced_ranks(const ChainComplex& a, const ChainComplex& b, const ChainMap& f) {
  // rank H^p(f) = rank[d_B^{p-1} | f Z_A^p] - rank d_B^{p-1}
  const Field fl = a.field();
  Reduction ra = reduce_columns(a.d(), true);
  std::map<int, std::vector<SparseVec>> images, bounds;
  for (int j = 0; j < a.size(); ++j)
    if (ra.R[j].empty()) images[a.degree(j)].push_back(f.m.apply(ra.V[j]));
  for (int j = 0; j < b.size(); ++j)
    if (!b.d().col(j).empty()) bounds[b.degree(j) + 1].push_back(b.d().col(j));
  std::map<int, int> out;
  for (auto& [p, imgs] : images) {
    auto& bd = bounds[p];
    SparseMatrix m1(fl, b.size(), static_cast<int>(bd.size()));
    for (std::size_t k = 0; k < bd.size(); ++k) m1.set_col(static_cast<int>(k), bd[k]);
    SparseMatrix m2(fl, b.size(), static_cast<int>(bd.size() + imgs.size()));
    for (std::size_t k = 0; k < bd.size(); ++k) m2.set_col(static_cast<int>(k), bd[k]);
    for (std::size_t k = 0; k < imgs.size(); ++k)
      m2.set_col(static_cast<int>(bd.size() + k), imgs[k]);
    int r = m2.rank() - m1.rank();
    if (r) out[p + f.shift] = r;
  }
  return out;
}

ChainComplex dual_complex(const ChainComplex& c) {
  std::vector<int> deg = c.degrees();
  for (auto& p : deg) p = -p;
  return ChainComplex(c.field(), deg, c.d().transpose(), false);
}

FilteredComplex dual_complex(const FilteredComplex& c) {
  std::vector<double> act = c.actions();
  for (auto& a : act) a = -a;
  return FilteredComplex(dual_complex(c.complex()), act, false);
}

ChainMap window_map(const FilteredComplex& src, const FilteredComplex& dst, const ChainMap& f,
                    double a, double b) {
  auto ks = src.window_indices(a, b);
  auto kd = dst.window_indices(a, b);
  return {f.m.submatrix(kd, ks), f.shift};
}

std::string ranks_string(const std::map<int, int>& r) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (auto [p, v] : r) {
    if (v == 0) continue;
    if (!first) os << ", ";
    os << p << ':' << v;
    first = false;
  }
  os << '}';
  return os.str();
}

std::map<int, int> drop_zero(std::map<int, int> r) {
  for (auto it = r.begin(); it != r.end();) it = it->second == 0 ? r.erase(it) : std::next(it);
  return r;
}

}  // namespace sq
