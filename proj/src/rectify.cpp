#include "sheafq/rectify.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <sstream>

namespace sq {

namespace {

int sgn(int k) { return (k % 2 == 0) ? 1 : -1; }

std::string chain_name(const std::vector<int>& c) {
  std::string s = "(";
  for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "<=" : "") + std::to_string(c[i]);
  return s + ")";
}

SparseMatrix zero(Field f, int r, int c) { return SparseMatrix(f, r, c); }

SparseMatrix add_scaled(const SparseMatrix& a, const SparseMatrix& b, int s) {
  return s > 0 ? a + b : a - b;
}

std::vector<int> without(const std::vector<int>& c, std::size_t l) {
  std::vector<int> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (i != l) out.push_back(c[i]);
  return out;
}

std::vector<int> slice(const std::vector<int>& c, std::size_t lo, std::size_t hi) {
  return std::vector<int>(c.begin() + lo, c.begin() + hi + 1);
}

// D(s (x) x) = sum_l (-1)^l (s minus l) (x) x - sum_j (-1)^j s[0..j] (x) phi(s[j..]) x
//              + (-1)^p s (x) dx
constexpr int kHeadSign = -1;

}  // namespace

FunPoset FunPoset::from_samples(std::vector<std::string> names, std::vector<std::vector<double>> values) {
  FunPoset P;
  if (names.size() != values.size()) throw RectifyError("one name per function");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i].size() != values[0].size()) throw RectifyError("functions sampled on different grids");
  P.names = std::move(names);
  P.values = std::move(values);
  const int n = P.size();
  P.le.assign(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      bool ok = true;
      for (std::size_t v = 0; v < P.values[i].size() && ok; ++v) ok = P.values[i][v] <= P.values[j][v];
      P.le[i][j] = ok;
    }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (P.le[i][j] && P.le[j][i])
        throw RectifyError(fmt::format("functions {} and {} coincide", P.names[i], P.names[j]));
  return P;
}

std::vector<std::vector<int>> FunPoset::strict_chains_from(int start) const {
  std::vector<std::vector<int>> out;
  std::vector<int> cur{start};
  std::function<void()> grow = [&]() {
    for (int j = 0; j < size(); ++j)
      if (less(cur.back(), j)) {
        cur.push_back(j);
        out.push_back(cur);
        grow();
        cur.pop_back();
      }
  };
  grow();
  return out;
}

std::vector<std::vector<int>> FunPoset::strict_chains() const {
  std::vector<std::vector<int>> out;
  for (int i = 0; i < size(); ++i) {
    auto c = strict_chains_from(i);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

const SparseMatrix* CoherentDiagram::map(const std::vector<int>& chain) const {
  auto it = phi.find(chain);
  return it == phi.end() ? nullptr : &it->second;
}

CoherentDiagram strict_diagram(FunPoset poset, std::vector<FilteredComplex> V,
                               const std::map<std::pair<int, int>, SparseMatrix>& pair_maps) {
  if (static_cast<int>(V.size()) != poset.size()) throw RectifyError("one complex per function");
  CoherentDiagram d;
  d.poset = std::move(poset);
  d.V = std::move(V);
  for (int a = 0; a < d.poset.size(); ++a)
    for (int b = 0; b < d.poset.size(); ++b) {
      if (!d.poset.less(a, b)) continue;
      auto it = pair_maps.find({a, b});
      if (it == pair_maps.end()) throw RectifyError(fmt::format("missing map for the pair ({}, {})", a, b));
      const auto& m = it->second;
      if (m.rows() != d.V[a].size() || m.cols() != d.V[b].size())
        throw RectifyError(fmt::format("map for ({}, {}) has the wrong shape", a, b));
      check_filtered_map(d.V[b], d.V[a], ChainMap{m, 0});
      d.phi[{a, b}] = m;
    }
  for (int a = 0; a < d.poset.size(); ++a)
    for (int b = 0; b < d.poset.size(); ++b)
      for (int c = 0; c < d.poset.size(); ++c)
        if (d.poset.less(a, b) && d.poset.less(b, c) && !(d.phi.at({a, b}) * d.phi.at({b, c}) == d.phi.at({a, c})))
          throw RectifyError(fmt::format("maps do not compose strictly along {}", chain_name({a, b, c})));
  return d;
}

CoherentDiagram geometric_diagram(const std::vector<GraphBrane>& functions, const GraphBrane& L, double a,
                                  double b, Field f) {
  if (functions.empty()) throw RectifyError("no functions");
  CubicalGrid g(L.base);
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::vector<LowerStar> ls;
  std::vector<std::vector<int>> keep;
  std::vector<FilteredComplex> V;
  for (const auto& h : functions) {
    if (!same_base(h.base, L.base)) throw RectifyError("functions live on a different base");
    names.push_back(h.name);
    values.push_back(h.f);
    std::vector<double> act(L.f.size());
    for (std::size_t v = 0; v < act.size(); ++v) act[v] = L.f[v] - h.f[v];
    ls.push_back(lower_star(g, act, f));
    keep.push_back(ls.back().complex.window_indices(a, b));
    V.push_back(ls.back().complex.window(a, b));
  }
  auto P = FunPoset::from_samples(names, values);
  std::map<std::pair<int, int>, SparseMatrix> maps;
  for (int i = 0; i < P.size(); ++i)
    for (int j = 0; j < P.size(); ++j) {
      if (!P.less(i, j)) continue;
      // V(j) -> V(i): cochains restricted along the smaller sublevel sets.
      std::map<int, int> col;
      for (std::size_t k = 0; k < keep[j].size(); ++k) col[ls[j].cells[keep[j][k]]] = static_cast<int>(k);
      std::vector<std::tuple<int, int, Rational>> trip;
      for (std::size_t r = 0; r < keep[i].size(); ++r) {
        auto it = col.find(ls[i].cells[keep[i][r]]);
        if (it != col.end()) trip.emplace_back(static_cast<int>(r), it->second, Rational(1));
      }
      maps[{i, j}] = SparseMatrix::from_triplets(f, V[i].size(), V[j].size(), trip);
    }
  return strict_diagram(std::move(P), std::move(V), maps);
}

std::string CoherenceReport::csv() const {
  std::string s = "chain,residual_nnz\n";
  for (const auto& e : entries) s += fmt::format("{},{}\n", chain_name(e.chain), e.residual_nnz);
  return s;
}

namespace {

// phi for a chain, with d for a single vertex.
SparseMatrix phi_or_d(const CoherentDiagram& d, const std::vector<int>& c) {
  if (c.size() == 1) return d.V[c[0]].d();
  if (const auto* m = d.map(c)) return *m;
  return zero(d.field(), d.V[c.front()].size(), d.V[c.back()].size());
}

}  // namespace

CoherenceReport check_coherence(const CoherentDiagram& d) {
  CoherenceReport rep;
  const Field f = d.field();
  for (const auto& [c, m] : d.phi) {
    if (c.size() < 2) throw RectifyError("maps are indexed by chains with at least two entries");
    for (std::size_t i = 0; i + 1 < c.size(); ++i)
      if (!d.poset.less(c[i], c[i + 1])) throw RectifyError(fmt::format("{} is not a strict chain", chain_name(c)));
    if (m.rows() != d.V[c.front()].size() || m.cols() != d.V[c.back()].size())
      throw RectifyError(fmt::format("map on {} has the wrong shape", chain_name(c)));
  }
  for (const auto& c : d.poset.strict_chains()) {
    const int n = static_cast<int>(c.size()) - 1;
    SparseMatrix lhs = zero(f, d.V[c.front()].size(), d.V[c.back()].size());
    for (int j = 0; j <= n; ++j)
      lhs = add_scaled(lhs, phi_or_d(d, slice(c, 0, j)) * phi_or_d(d, slice(c, j, n)), sgn(j));
    for (int l = 1; l < n; ++l) lhs = add_scaled(lhs, phi_or_d(d, without(c, l)), -sgn(l));
    CoherenceReport::Entry e{c, lhs.nnz()};
    if (e.residual_nnz && rep.pass) {
      rep.pass = false;
      rep.first_failure = fmt::format("coherence fails on {} with {} nonzero residual entries", chain_name(c),
                                      e.residual_nnz);
    }
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

CoherentDiagram perturb_coherent(const CoherentDiagram& strict, unsigned seed, double density) {
  for (const auto& [c, m] : strict.phi)
    if (c.size() > 2 && !m.is_zero()) throw RectifyError("perturb_coherent expects a strict diagram");
  const Field f = strict.field();
  const int nf = strict.poset.size();
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto coef = [&]() -> Rational {
    if (f == Field::F2) return 1;
    int v = static_cast<int>(rng() % 5) - 2;
    return v == 0 ? Rational(3) : Rational(v);
  };

  // A shared contractible complex: pairs e -> e' with matching actions.
  std::vector<std::pair<int, double>> dq;
  for (const auto& V : strict.V)
    for (int j = 0; j < V.size(); ++j) dq.emplace_back(V.degree(j), V.action(j));
  std::vector<int> cdeg;
  std::vector<double> cact;
  const int pairs = dq.empty() ? 0 : 3;
  for (int k = 0; k < pairs; ++k) {
    auto [q, a] = dq[rng() % dq.size()];
    // e sits one below a generator so that homotopies into and out of V exist.
    cdeg.push_back(q - 1);
    cdeg.push_back(q);
    cact.push_back(a);
    cact.push_back(a);
  }
  const int nc = static_cast<int>(cdeg.size());
  std::vector<std::tuple<int, int, Rational>> ct, ht;
  for (int k = 0; k < pairs; ++k) {
    ct.emplace_back(2 * k + 1, 2 * k, Rational(1));
    ht.emplace_back(2 * k, 2 * k + 1, Rational(-1));
  }
  const SparseMatrix dC = SparseMatrix::from_triplets(f, nc, nc, ct);
  const SparseMatrix hC = SparseMatrix::from_triplets(f, nc, nc, ht);

  struct Stack {
    int n = 0;
    SparseMatrix dW, G, Ginv, h, inc, proj;
  };
  std::vector<Stack> W(nf);
  for (int i = 0; i < nf; ++i) {
    const auto& V = strict.V[i];
    const int n = V.size(), N = n + nc;
    Stack& s = W[i];
    s.n = n;
    std::vector<std::tuple<int, int, Rational>> dt, st, rt, it, pt, hh;
    for (int c = 0; c < n; ++c) {
      const auto& col = V.d().col(c);
      for (std::size_t k = 0; k < col.idx.size(); ++k) dt.emplace_back(col.idx[k], c, col.coef(f, k));
      it.emplace_back(c, c, Rational(1));
      pt.emplace_back(c, c, Rational(1));
    }
    for (auto [r, c, v] : ct) dt.emplace_back(n + r, n + c, v);
    for (auto [r, c, v] : ht) hh.emplace_back(n + r, n + c, v);
    // s : V -> C and r : C -> V, both of degree -1 and filtered.
    for (int v = 0; v < n; ++v)
      for (int c = 0; c < nc; ++c) {
        if (cdeg[c] == V.degree(v) - 1 && cact[c] >= V.action(v) && unit(rng) < density)
          st.emplace_back(n + c, v, coef());
        if (V.degree(v) == cdeg[c] - 1 && V.action(v) >= cact[c] && unit(rng) < density)
          rt.emplace_back(v, n + c, coef());
      }
    s.dW = SparseMatrix::from_triplets(f, N, N, dt);
    auto S = SparseMatrix::from_triplets(f, N, N, st);
    auto R = SparseMatrix::from_triplets(f, N, N, rt);
    auto I = SparseMatrix::identity(f, N);
    auto Nm = s.dW * S + S * s.dW;
    auto Mm = s.dW * R + R * s.dW;
    s.G = (I + Nm) * (I + Mm);
    s.Ginv = (I - Mm) * (I - Nm);
    s.h = SparseMatrix::from_triplets(f, N, N, hh);
    s.inc = SparseMatrix::from_triplets(f, N, n, it);
    s.proj = SparseMatrix::from_triplets(f, n, N, pt);
  }
  auto Phi = [&](int a, int b) {
    // G_a (phi_ab + id_C) G_b^{-1}
    const int na = W[a].n, nb = W[b].n;
    std::vector<std::tuple<int, int, Rational>> t;
    const auto& m = strict.phi.at({a, b});
    for (int c = 0; c < nb; ++c) {
      const auto& col = m.col(c);
      for (std::size_t k = 0; k < col.idx.size(); ++k) t.emplace_back(col.idx[k], c, col.coef(f, k));
    }
    for (int c = 0; c < nc; ++c) t.emplace_back(na + c, nb + c, Rational(1));
    return W[a].G * SparseMatrix::from_triplets(f, na + nc, nb + nc, t) * W[b].Ginv;
  };
  std::map<std::pair<int, int>, SparseMatrix> big;
  for (int a = 0; a < nf; ++a)
    for (int b = 0; b < nf; ++b)
      if (strict.poset.less(a, b)) big[{a, b}] = Phi(a, b);

  CoherentDiagram out;
  out.poset = strict.poset;
  out.V = strict.V;
  for (const auto& c : strict.poset.strict_chains()) {
    const int n = static_cast<int>(c.size()) - 1;
    SparseMatrix m = W[c.front()].proj;
    for (int j = 0; j < n; ++j) {
      m = m * big.at({c[j], c[j + 1]});
      if (j + 1 < n) m = m * W[c[j + 1]].h;
    }
    m = m * W[c.back()].inc;
    if (c.size() == 2 || !m.is_zero()) out.phi[c] = m;
  }
  return out;
}

namespace {

// The diagram cut to actions below lambda, with maps cut alike.
struct Truncated {
  const CoherentDiagram& d;
  double lambda;
  std::vector<std::vector<int>> keep;
  std::vector<FilteredComplex> V;
  std::map<std::vector<int>, SparseMatrix> cache;

  Truncated(const CoherentDiagram& dd, double lam) : d(dd), lambda(lam) {
    for (const auto& v : d.V) {
      keep.push_back(v.window_indices(-kInf, lambda));
      V.push_back(std::isinf(lambda) ? v : v.window(-kInf, lambda));
    }
  }
  const SparseMatrix* map(const std::vector<int>& c) {
    auto it = cache.find(c);
    if (it != cache.end()) return &it->second;
    const auto* m = d.map(c);
    if (!m) return nullptr;
    auto sub = std::isinf(lambda) ? *m : m->submatrix(keep[c.front()], keep[c.back()]);
    return &cache.emplace(c, std::move(sub)).first->second;
  }
};

using Terms = std::map<std::pair<std::vector<int>, int>, Rational>;

void add_terms(Field f, Terms& out, const std::vector<int>& chain, const SparseVec& v, const Rational& c) {
  for (std::size_t k = 0; k < v.idx.size(); ++k) {
    auto& slot = out[{chain, v.idx[k]}];
    slot += c * v.coef(f, k);
    if (f == Field::F2) slot = (numerator(slot) % 2 == 0) ? Rational(0) : Rational(1);
  }
}

Terms D_terms(Truncated& T, const std::vector<int>& s, const SparseVec& x) {
  const Field f = T.d.field();
  const int p = static_cast<int>(s.size()) - 2;
  if (p < 0) throw RectifyError("a generator needs a chain with at least two entries");
  Terms out;
  for (int l = 1; l <= p; ++l) add_terms(f, out, without(s, l), x, Rational(sgn(l)));
  for (int j = 1; j <= p; ++j) {
    const auto* m = T.map(slice(s, j, p + 1));
    if (!m) continue;
    add_terms(f, out, slice(s, 0, j), m->apply(x), Rational(kHeadSign * sgn(j)));
  }
  add_terms(f, out, s, T.V[s.back()].d().apply(x), Rational(sgn(p)));
  for (auto it = out.begin(); it != out.end();) it = it->second == 0 ? out.erase(it) : std::next(it);
  return out;
}

std::vector<std::vector<int>> normalized_chains(const FunPoset& P, int f) {
  std::vector<std::vector<int>> out{{f, f}};
  for (const auto& c : P.strict_chains_from(f)) {
    out.push_back(c);
    std::vector<int> dup{f};
    dup.insert(dup.end(), c.begin(), c.end());
    out.push_back(std::move(dup));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

bool is_normalized(const FunPoset& P, const std::vector<int>& c) {
  if (c.size() < 2 || !P.leq(c[0], c[1])) return false;
  for (std::size_t i = 1; i + 1 < c.size(); ++i)
    if (!P.less(c[i], c[i + 1])) return false;
  return true;
}

}  // namespace

int Rectified::index_of(const std::vector<int>& chain, int x) const {
  for (std::size_t k = 0; k < basis.size(); ++k)
    if (basis[k].second == x && basis[k].first == chain) return static_cast<int>(k);
  return -1;
}

Rectified rectify_at(const CoherentDiagram& d, int f, double lambda) {
  if (f < 0 || f >= d.poset.size()) throw RectifyError(fmt::format("no function with index {}", f));
  const Field F = d.field();
  Truncated T(d, lambda);
  Rectified R;
  R.start = f;
  R.lambda = lambda;
  std::map<std::vector<int>, int> offset;
  std::vector<int> deg;
  std::vector<double> act;
  for (const auto& c : normalized_chains(d.poset, f)) {
    const auto& V = T.V[c.back()];
    offset[c] = static_cast<int>(R.basis.size());
    const int p = static_cast<int>(c.size()) - 2;
    for (int x = 0; x < V.size(); ++x) {
      R.basis.emplace_back(c, x);
      deg.push_back(V.degree(x) - p);
      act.push_back(V.action(x));
    }
  }
  const int n = static_cast<int>(R.basis.size());
  SparseMatrix D(F, n, n);
  for (int k = 0; k < n; ++k) {
    const auto& [c, x] = R.basis[k];
    std::vector<std::pair<int, Rational>> e;
    for (const auto& [key, v] : D_terms(T, c, make_vec(F, {{x, Rational(1)}}))) {
      auto it = offset.find(key.first);
      if (it == offset.end()) throw RectifyError(fmt::format("D leaves the complex at {}", chain_name(key.first)));
      e.emplace_back(it->second + key.second, v);
    }
    D.set_col(k, make_vec(F, std::move(e)));
  }
  R.complex = FilteredComplex(F, std::move(deg), std::move(act), std::move(D));
  const auto& Vf = T.V[f];
  std::vector<std::tuple<int, int, Rational>> t;
  for (int x = 0; x < Vf.size(); ++x) t.emplace_back(offset.at({f, f}) + x, x, Rational(1));
  R.inclusion = ChainMap{SparseMatrix::from_triplets(F, n, Vf.size(), t), 0};
  check_filtered_map(Vf, R.complex, R.inclusion);
  return R;
}

std::map<std::pair<std::vector<int>, int>, Rational> differential_D(const CoherentDiagram& d,
                                                                    const std::vector<int>& chain,
                                                                    const SparseVec& x, double lambda) {
  if (!is_normalized(d.poset, chain))
    throw RectifyError(fmt::format("{} is not of the form f_0 <= f_1 < ... < f_p+1", chain_name(chain)));
  Truncated T(d, lambda);
  if (x.low() >= T.V[chain.back()].size())
    throw RectifyError(fmt::format("vector does not live in the complex of function {}", chain.back()));
  return D_terms(T, chain, x);
}

ChainMap restriction(const CoherentDiagram& d, const Rectified& from, const Rectified& to) {
  if (!d.poset.leq(to.start, from.start))
    throw RectifyError(fmt::format("restriction needs {} <= {}", to.start, from.start));
  if (from.lambda != to.lambda) throw RectifyError("restriction between different truncations");
  std::map<std::pair<std::vector<int>, int>, int> where;
  for (std::size_t k = 0; k < to.basis.size(); ++k) where[to.basis[k]] = static_cast<int>(k);
  std::vector<std::tuple<int, int, Rational>> t;
  for (std::size_t k = 0; k < from.basis.size(); ++k) {
    auto c = from.basis[k].first;
    c[0] = to.start;
    auto it = where.find({c, from.basis[k].second});
    if (it == where.end()) throw RectifyError(fmt::format("{} has no image", chain_name(c)));
    t.emplace_back(it->second, static_cast<int>(k), Rational(1));
  }
  ChainMap m{SparseMatrix::from_triplets(d.field(), to.complex.size(), from.complex.size(), t), 0};
  check_filtered_map(from.complex, to.complex, m);
  return m;
}

CoherentDiagram dual_diagram(const CoherentDiagram& d) {
  CoherentDiagram out;
  std::vector<std::vector<double>> neg = d.poset.values;
  for (auto& v : neg)
    for (auto& x : v) x = -x;
  out.poset = FunPoset::from_samples(d.poset.names, std::move(neg));
  for (const auto& V : d.V) out.V.push_back(dual_complex(V));
  for (const auto& [c, m] : d.phi) out.phi[std::vector<int>(c.rbegin(), c.rend())] = m.transpose();
  return out;
}

std::string E2Page::csv() const {
  std::string s = "p,q,rank\n";
  for (auto [pq, r] : rank) s += fmt::format("{},{},{}\n", pq.first, pq.second, r);
  return s;
}

namespace {

// Coordinates of cohomology classes in H^q(V): representatives and a solver
// for the class of a cocycle.
struct Classes {
  std::map<int, std::vector<SparseVec>> reps;
  std::map<int, std::vector<int>> gens;  // degree-q generators

  explicit Classes(const ChainComplex& c) {
    for (int j = 0; j < c.size(); ++j) gens[c.degree(j)].push_back(j);
    for (const auto& [q, g] : gens) reps[q] = c.cohomology_reps(q);
  }
  // Coefficients of the class of cocycle z in H^q.
  std::vector<Rational> coords(const ChainComplex& c, int q, const SparseVec& z) const {
    const auto& R = reps.at(q);
    if (R.empty()) return {};
    std::vector<std::tuple<int, int, Rational>> t;
    const Field f = c.field();
    int col = 0;
    for (const auto& r : R) {
      for (std::size_t k = 0; k < r.idx.size(); ++k) t.emplace_back(r.idx[k], col, r.coef(f, k));
      ++col;
    }
    for (int j = 0; j < c.size(); ++j) {
      if (c.degree(j) != q - 1) continue;
      const auto& dc = c.d().col(j);
      for (std::size_t k = 0; k < dc.idx.size(); ++k) t.emplace_back(dc.idx[k], col, dc.coef(f, k));
      ++col;
    }
    auto M = SparseMatrix::from_triplets(f, c.size(), col, t);
    auto sol = solve(M, z);
    if (!sol) throw RectifyError("image of a cocycle is not a cocycle");
    std::vector<Rational> out(R.size(), Rational(0));
    for (std::size_t k = 0; k < sol->idx.size(); ++k)
      if (sol->idx[k] < static_cast<int>(R.size())) out[sol->idx[k]] = sol->coef(f, k);
    return out;
  }
};

std::map<int, int> homology_by(const std::vector<int>& grade, const SparseMatrix& M) {
  // M lowers the grade by one; returns dim ker / im per grade.
  std::map<int, std::vector<int>> at;
  for (std::size_t k = 0; k < grade.size(); ++k) at[grade[k]].push_back(static_cast<int>(k));
  std::map<int, int> out;
  auto rank_from = [&](int g) {
    if (!at.count(g) || !at.count(g - 1)) return 0;
    return M.submatrix(at[g - 1], at[g]).rank();
  };
  for (const auto& [g, idx] : at) {
    int h = static_cast<int>(idx.size()) - rank_from(g) - rank_from(g + 1);
    if (h) out[g] = h;
  }
  return out;
}

}  // namespace

E2Page e2_page(const CoherentDiagram& d, int f) {
  const Field F = d.field();
  Truncated T(d, kInf);
  std::vector<Classes> cls;
  for (const auto& V : d.V) cls.emplace_back(V.complex());
  struct Gen {
    std::vector<int> chain;
    int q, u;
  };
  std::vector<Gen> gens;
  std::map<std::tuple<std::vector<int>, int, int>, int> where;
  for (const auto& c : normalized_chains(d.poset, f))
    for (const auto& [q, R] : cls[c.back()].reps)
      for (std::size_t u = 0; u < R.size(); ++u) {
        where[{c, q, static_cast<int>(u)}] = static_cast<int>(gens.size());
        gens.push_back({c, q, static_cast<int>(u)});
      }
  const int n = static_cast<int>(gens.size());
  SparseMatrix d1(F, n, n);
  for (int k = 0; k < n; ++k) {
    const auto& g = gens[k];
    const int p = static_cast<int>(g.chain.size()) - 2;
    const auto& rep = cls[g.chain.back()].reps.at(g.q)[g.u];
    std::vector<std::pair<int, Rational>> e;
    for (int l = 1; l <= p; ++l) e.emplace_back(where.at({without(g.chain, l), g.q, g.u}), Rational(sgn(l)));
    if (p >= 1) {
      auto tail = slice(g.chain, p, p + 1);
      if (const auto* m = T.map(tail)) {
        const auto& C = d.V[g.chain[p]].complex();
        auto co = cls[g.chain[p]].coords(C, g.q, m->apply(rep));
        auto head = slice(g.chain, 0, p);
        for (std::size_t u = 0; u < co.size(); ++u)
          if (co[u] != 0)
            e.emplace_back(where.at({head, g.q, static_cast<int>(u)}), Rational(kHeadSign * sgn(p)) * co[u]);
      }
    }
    // make_vec merges duplicates
    d1.set_col(k, make_vec(F, std::move(e)));
  }
  std::vector<int> pgrade(n);
  for (int k = 0; k < n; ++k) pgrade[k] = static_cast<int>(gens[k].chain.size()) - 2;
  if (!(d1 * d1).is_zero()) throw RectifyError("d1 does not square to zero");
  E2Page page;
  // Split by q: d1 keeps q.
  std::map<int, std::vector<int>> byq;
  for (int k = 0; k < n; ++k) byq[gens[k].q].push_back(k);
  for (const auto& [q, idx] : byq) {
    std::vector<int> g;
    for (int k : idx) g.push_back(pgrade[k]);
    for (auto [p, r] : homology_by(g, d1.submatrix(idx, idx))) page.rank[{p, q}] = r;
  }
  return page;
}

std::string SublemmaReport::csv() const {
  std::string s = fmt::format("m,{}\nmax_length,{}\ndelta_squared_zero,{}\ndelta_acyclic,{}\n", m, max_length,
                              delta_squared_zero, delta_acyclic);
  s += "d1_homology," + ranks_string(d1_homology) + "\n";
  s += "normalized_homology," + ranks_string(normalized_homology) + "\n";
  s += fmt::format("plus_sign_squares_to_zero,{}\npass,{}\n", plus_sign_squares_to_zero, pass);
  return s;
}

SublemmaReport brute_force_sublemma(int m, int max_length) {
  if (m < 1) throw RectifyError("m must be positive");
  SublemmaReport rep;
  rep.m = m;
  rep.max_length = max_length > 0 ? max_length : m + 3;
  // Weakly increasing tuples from 0, 2 .. max_length entries.
  std::vector<std::vector<int>> tuples;
  std::function<void(std::vector<int>&)> grow = [&](std::vector<int>& cur) {
    if (cur.size() >= 2) tuples.push_back(cur);
    if (static_cast<int>(cur.size()) == rep.max_length) return;
    for (int j = cur.back(); j < m; ++j) {
      cur.push_back(j);
      grow(cur);
      cur.pop_back();
    }
  };
  std::vector<int> start{0};
  grow(start);
  std::map<std::vector<int>, int> where;
  for (std::size_t k = 0; k < tuples.size(); ++k) where[tuples[k]] = static_cast<int>(k);
  const int n = static_cast<int>(tuples.size());
  const Field F = Field::Q;
  std::vector<std::tuple<int, int, Rational>> dt, d1t, plus_t;
  std::vector<int> grade(n);
  for (int c = 0; c < n; ++c) {
    const auto& t = tuples[c];
    const int k = static_cast<int>(t.size()) - 2;
    grade[c] = k;
    for (int l = 1; l <= k; ++l) {
      int r = where.at(without(t, l));
      dt.emplace_back(r, c, Rational(sgn(k - l)));
      d1t.emplace_back(r, c, Rational(sgn(k - l)));
      plus_t.emplace_back(r, c, Rational(sgn(k - l)));
    }
    // (j_0 .. j_k) (x) (j_k <= j_k+1)_* u with identity coefficients; the
    // faces 1 .. k+1 square to zero only with the minus sign here.
    if (k >= 1) {
      d1t.emplace_back(where.at(slice(t, 0, k)), c, Rational(-1));
      plus_t.emplace_back(where.at(slice(t, 0, k)), c, Rational(1));
    }
  }
  auto delta = SparseMatrix::from_triplets(F, n, n, dt);
  auto D1 = SparseMatrix::from_triplets(F, n, n, d1t);
  rep.delta_squared_zero = (delta * delta).is_zero();
  auto P1 = SparseMatrix::from_triplets(F, n, n, plus_t);
  rep.plus_sign_squares_to_zero = (P1 * P1).is_zero();
  const int top = rep.max_length - 2;
  auto trim = [&](std::map<int, int> h) {
    h.erase(top);
    return h;
  };
  rep.delta_acyclic = trim(homology_by(grade, delta)).empty();
  rep.d1_homology = (D1 * D1).is_zero() ? trim(homology_by(grade, D1)) : std::map<int, int>{{-1, -1}};

  // The normalized complex on the chain 0 < 1 < ... < m-1 with V = k.
  std::vector<std::string> names;
  std::vector<std::vector<double>> vals;
  std::vector<FilteredComplex> V;
  std::map<std::pair<int, int>, SparseMatrix> maps;
  for (int j = 0; j < m; ++j) {
    names.push_back(std::to_string(j));
    vals.push_back({double(j)});
    V.emplace_back(F, std::vector<int>{0}, std::vector<double>{0.0}, SparseMatrix(F, 1, 1));
  }
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) maps[{a, b}] = SparseMatrix::identity(F, 1);
  auto dg = strict_diagram(FunPoset::from_samples(names, vals), V, maps);
  rep.normalized_homology = drop_zero(rectify_at(dg, 0).complex.complex().cohomology_ranks());
  rep.pass = rep.delta_squared_zero && rep.delta_acyclic && rep.d1_homology == std::map<int, int>{{0, 1}} &&
             rep.normalized_homology == std::map<int, int>{{0, 1}};
  return rep;
}

std::string SheafifyReport::certificate() const {
  std::string s = "k";
  if (!history.empty())
    for (std::size_t c = 0; c < history.front().second.size(); ++c) s += fmt::format(",cell{}", c);
  s += "\n";
  for (const auto& [k, r] : history) {
    s += fmt::format("{:.6g}", k);
    for (const auto& m : r) s += "," + ranks_string(m);
    s += "\n";
  }
  s += fmt::format("stabilized,{}\n", stabilized);
  return s;
}

namespace {

// Base subdivided once more: refined vertex r is the coarse cell at doubled
// position r, carrying the lower-star value of that cell.
GenFun refine_base(const GenFun& S) {
  GenFun R = S;
  R.base.clear();
  for (const auto& ax : S.base) {
    Grid1D a = ax;
    a.n = 2 * ax.n;
    a.spacing = ax.spacing / 2;
    R.base.push_back(a);
  }
  std::vector<Grid1D> all = R.base;
  all.insert(all.end(), S.fiber.begin(), S.fiber.end());
  R.grid = CubicalGrid(all);
  R.base_grid = CubicalGrid(R.base);
  const auto& bg = S.base_grid;
  const int nb = R.base_grid.num_vertices(), nf = S.n_fiber();
  R.values.assign(static_cast<std::size_t>(nb) * nf, 0.0);
  for (int r = 0; r < nb; ++r) {
    auto pos = R.base_grid.vertex_multi(r);
    auto verts = bg.vertices(bg.cell_id(pos));
    for (int w = 0; w < nf; ++w) {
      double v = -kInf;
      for (int u : verts) v = std::max(v, S.value(u, w));
      R.values[r + nb * w] = v;
    }
  }
  return R;
}

double periodic_gap(const Grid1D& ax, double a, double b) {
  double d = std::fabs(a - b);
  if (ax.topology == Topology::Circle) d = std::min(d, ax.period() - d);
  return d;
}

}  // namespace

TameSheaf sheafify_limit(const GenFun& S, Field f, SheafifyReport* report) {
  const auto& bg = S.base_grid;
  const int nbc = bg.num_cells();
  GenFun R = refine_base(S);
  const auto& rg = R.base_grid;
  const int nrb = rg.num_vertices(), nf = R.n_fiber();
  const double floor = bottom_level(S);
  double hi = -kInf, lo = kInf;
  for (const auto& s : all_strands(S)) {
    hi = std::max(hi, s.value);
    lo = std::min(lo, s.value);
  }
  if (!std::isfinite(hi)) hi = lo = *std::min_element(S.values.begin(), S.values.end());
  const double top = hi + std::max(0.5, 0.25 * (hi - lo));

  // ramp[sigma][r]: distance from refined vertex r to the open star of sigma.
  std::vector<std::vector<double>> ramp(nbc, std::vector<double>(nrb, 0.0));
  double min_ramp = kInf;
  for (int s = 0; s < nbc; ++s) {
    std::set<int> up{s};
    std::vector<int> todo{s};
    while (!todo.empty()) {
      int c = todo.back();
      todo.pop_back();
      for (auto [t, sg] : bg.coboundary(c))
        if (up.insert(t).second) todo.push_back(t);
    }
    std::vector<std::vector<double>> in;
    std::vector<char> inside(nrb, 0);
    for (int c : up) {
      int r = rg.vertex_flat(bg.position(c));
      inside[r] = 1;
      in.push_back(rg.vertex_coords(r));
    }
    for (int r = 0; r < nrb; ++r) {
      if (inside[r]) continue;
      auto x = rg.vertex_coords(r);
      double best = kInf;
      for (const auto& y : in) {
        double d2 = 0;
        for (int a = 0; a < rg.dim(); ++a) d2 += std::pow(periodic_gap(rg.axis(a), x[a], y[a]), 2);
        best = std::min(best, std::sqrt(d2));
      }
      ramp[s][r] = best;
      min_ramp = std::min(min_ramp, best);
    }
  }
  if (!std::isfinite(min_ramp)) min_ramp = 1;

  SheafifyReport local;
  SheafifyReport& rep = report ? *report : local;
  rep = {};
  const double unit_k = (top - floor) / min_ramp;
  std::vector<std::string> last_bars;
  CellSheaf out;
  for (double mult : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double k = mult * unit_k;
    std::vector<std::string> names;
    std::vector<std::vector<double>> vals;
    std::vector<FilteredComplex> V;
    std::vector<LowerStar> ls;
    std::vector<std::vector<int>> keep;
    for (int s = 0; s < nbc; ++s) {
      names.push_back(fmt::format("clamp{}", s));
      std::vector<double> fs(nrb);
      for (int r = 0; r < nrb; ++r) fs[r] = -k * ramp[s][r];
      vals.push_back(fs);
      std::vector<double> act(R.values.size());
      for (int w = 0; w < nf; ++w)
        for (int r = 0; r < nrb; ++r) act[r + nrb * w] = R.values[r + nrb * w] - fs[r];
      ls.push_back(lower_star(R.grid, act, f, floor));
      keep.push_back(ls.back().complex.window_indices(floor, top));
      V.push_back(ls.back().complex.window(floor, top).shifted(S.index));
    }
    auto P = FunPoset::from_samples(names, vals);
    std::map<std::pair<int, int>, SparseMatrix> maps;
    for (int i = 0; i < nbc; ++i)
      for (int j = 0; j < nbc; ++j) {
        if (!P.less(i, j)) continue;
        std::map<int, int> col;
        for (std::size_t c = 0; c < keep[j].size(); ++c) col[ls[j].cells[keep[j][c]]] = static_cast<int>(c);
        std::vector<std::tuple<int, int, Rational>> t;
        for (std::size_t r = 0; r < keep[i].size(); ++r) {
          auto it = col.find(ls[i].cells[keep[i][r]]);
          if (it != col.end()) t.emplace_back(static_cast<int>(r), it->second, Rational(1));
        }
        maps[{i, j}] = SparseMatrix::from_triplets(f, V[i].size(), V[j].size(), t);
      }
    auto dg = strict_diagram(std::move(P), std::move(V), maps);
    std::vector<Rectified> st;
    std::vector<std::map<int, int>> ranks;
    std::vector<std::string> bars;
    for (int s = 0; s < nbc; ++s) {
      st.push_back(rectify_at(dg, s));
      ranks.push_back(drop_zero(st.back().complex.window_ranks(-kInf, kInf)));
      auto b = st.back().complex.barcode();
      b.sort();
      bars.push_back(b.csv());
    }
    rep.history.emplace_back(k, ranks);
    const bool same = bars == last_bars;
    last_bars = bars;
    if (same) {
      rep.stabilized = true;
      out.field = f;
      out.base = bg;
      for (const auto& r : st) out.stalks.push_back(r.complex);
      for (int t = 0; t < nbc; ++t)
        for (auto [s, sg] : bg.boundary(t)) out.maps[{s, t}] = restriction(dg, st[s], st[t]);
      break;
    }
  }
  if (!rep.stabilized)
    throw RectifyError("clamp schedule did not stabilize:\n" + rep.certificate());
  TameSheaf F = from_cells(std::move(out), "sheafified " + S.name);
  F.origin = std::make_shared<const GenFun>(S);
  return F;
}

TameSheaf sheafify_limit(const GraphBrane& L, Field f, SheafifyReport* report) {
  return sheafify_limit(as_genfun(L), f, report);
}

}  // namespace sq
