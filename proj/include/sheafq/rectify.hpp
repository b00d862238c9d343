#pragma once

#include <map>
#include <string>
#include <vector>

#include "sheafq/floer_graph.hpp"

namespace sq {

class RectifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Finitely many sampled functions, ordered pointwise.
struct FunPoset {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<char>> le;  // le[i][j]: f_i <= f_j at every sample

  static FunPoset from_samples(std::vector<std::string> names, std::vector<std::vector<double>> values);
  int size() const { return static_cast<int>(values.size()); }
  bool leq(int i, int j) const { return le[i][j] != 0; }
  bool less(int i, int j) const { return i != j && le[i][j] && !le[j][i]; }
  // Strictly increasing chains starting at `start` with at least two entries.
  std::vector<std::vector<int>> strict_chains_from(int start) const;
  // Every strictly increasing chain with at least two entries.
  std::vector<std::vector<int>> strict_chains() const;
};

// Complexes V(f) and maps phi_rho : V(last) -> V(first) of degree 2 - |rho|
// for strictly increasing chains rho. A single vertex stands for d, a repeated
// pair for the identity, anything longer with a repeat for zero.
struct CoherentDiagram {
  FunPoset poset;
  std::vector<FilteredComplex> V;
  std::map<std::vector<int>, SparseMatrix> phi;

  Field field() const { return V.empty() ? Field::F2 : V.front().field(); }
  // nullptr when the map is zero.
  const SparseMatrix* map(const std::vector<int>& chain) const;
};

// Pairwise maps g -> f for f < g; the composites must agree exactly.
CoherentDiagram strict_diagram(FunPoset poset, std::vector<FilteredComplex> V,
                               const std::map<std::pair<int, int>, SparseMatrix>& pair_maps);

// V(f) is the lower-star window [a, b) of f_L - f on the base grid and the
// maps are restrictions of cochains along the sublevel inclusions.
CoherentDiagram geometric_diagram(const std::vector<GraphBrane>& functions, const GraphBrane& L, double a,
                                  double b, Field f = Field::F2);

struct CoherenceReport {
  struct Entry {
    std::vector<int> chain;
    std::size_t residual_nnz = 0;
  };
  std::vector<Entry> entries;
  bool pass = true;
  std::string first_failure;
  std::string csv() const;
};
// Residual of sum_j (-1)^j phi(0..j) phi(j..n) - sum_l (-1)^l phi(rho minus l)
// for every strict chain rho = (0..n).
CoherenceReport check_coherence(const CoherentDiagram& d);

// Stacks a contractible complex next to each V(f), twists the strict maps by
// two nilpotent chain automorphisms built from random homotopies, and
// transfers back. The pair maps stay, the higher maps become nonzero.
CoherentDiagram perturb_coherent(const CoherentDiagram& strict, unsigned seed, double density = 0.5);

// The rectified complex at f: generators chain (x) x, the chain
// (f = f_0 <= f_1 < ... < f_{p+1}) and x a generator of V(f_{p+1}) with action
// below lambda; total degree deg x - p, action that of x.
struct Rectified {
  int start = 0;
  double lambda = kInf;
  FilteredComplex complex;
  std::vector<std::pair<std::vector<int>, int>> basis;
  ChainMap inclusion;  // x -> (f <= f) (x) x

  int index_of(const std::vector<int>& chain, int x) const;
};
Rectified rectify_at(const CoherentDiagram& d, int f, double lambda = kInf);

// D(chain (x) x) as coefficients on (chain, generator) pairs; x is a vector in
// V(last vertex) of the lambda-truncated complex.
std::map<std::pair<std::vector<int>, int>, Rational> differential_D(const CoherentDiagram& d,
                                                                    const std::vector<int>& chain,
                                                                    const SparseVec& x, double lambda = kInf);

// rho_{f,g} for g <= f: replace the first entry of every chain.
ChainMap restriction(const CoherentDiagram& d, const Rectified& from, const Rectified& to);

// Decreasing chains over the linear duals: the mirrored construction.
CoherentDiagram dual_diagram(const CoherentDiagram& d);

// Ranks of E_2^{p,q} for the filtration by chain length at f.
struct E2Page {
  std::map<std::pair<int, int>, int> rank;  // (p, q) -> rank
  std::string csv() const;
};
E2Page e2_page(const CoherentDiagram& d, int f);

struct SublemmaReport {
  int m = 0;
  int max_length = 0;
  bool delta_squared_zero = false;
  bool delta_acyclic = false;           // below the truncation degree
  std::map<int, int> d1_homology;       // by chain degree k
  bool plus_sign_squares_to_zero = false;  // last-entry term taken with +1
  std::map<int, int> normalized_homology;
  bool pass = false;
  std::string csv() const;
};
// Chains j_0 <= ... <= j_{k+1} in {0, ..., m - 1} starting at 0, up to
// `max_length` entries (default m + 3); the top degree is dropped.
SublemmaReport brute_force_sublemma(int m, int max_length = 0);

// Cellular sheaf whose stalk at a base cell is the rectified complex of the
// clamp function of its open star, computed on the twice refined base.
struct SheafifyReport {
  std::vector<std::pair<double, std::vector<std::map<int, int>>>> history;  // k -> stalk ranks
  bool stabilized = false;
  std::string certificate() const;
};
TameSheaf sheafify_limit(const GenFun& S, Field f = Field::F2, SheafifyReport* report = nullptr);
TameSheaf sheafify_limit(const GraphBrane& L, Field f = Field::F2, SheafifyReport* report = nullptr);

}  // namespace sq
