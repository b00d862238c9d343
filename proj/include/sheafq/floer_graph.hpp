#pragma once

#include <map>
#include <string>
#include <vector>

#include "sheafq/tamarkin.hpp"

namespace sq {

class FloerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The graph of df: primitive f, constant grading `offset`.
struct GraphBrane {
  std::string name;
  std::vector<Grid1D> base;
  std::vector<double> f;  // per base vertex
  int offset = 0;
};

GraphBrane graph_brane(std::string name, std::vector<Grid1D> base,
                       const std::function<double(const std::vector<double>&)>& f, int offset = 0);
GenFun as_genfun(const GraphBrane& L);

// A critical cell of a discrete gradient: its action and Morse degree.
struct FloerDatum {
  int cell = 0;
  std::vector<double> x;  // center of the cell
  double action = 0;
  int degree = 0;
};

// Morse complex of the discrete gradient built lower star by lower star
// (vertex order by value, ties by index). The differential counts gradient
// paths; generators keep the lower-star action of their cell.
struct MorseComplex {
  FilteredComplex complex;
  std::vector<FloerDatum> generators;
};
MorseComplex discrete_morse_complex(const CubicalGrid& g, const std::vector<double>& values, Field f);

// FC(L0, L1): Morse complex of f1 - f0 with degrees shifted by the offsets.
// Throws FloerError on a degenerate critical vertex.
MorseComplex floer_complex_full(const GraphBrane& L0, const GraphBrane& L1, Field f = Field::F2);
// Window [a, b); throws FloerError when an end sits on a critical value.
FilteredComplex floer_complex(const GraphBrane& L0, const GraphBrane& L1, double a, double b,
                              Field f = Field::F2);
std::map<int, int> floer_ranks(const GraphBrane& L0, const GraphBrane& L1, double a, double b,
                               Field f = Field::F2);

// FH(0_N, L_S; a, b) for a generating function: the Morse complex of S on
// N x fiber (cut at the bottom level), degrees shifted by the index of Q.
std::map<int, int> gf_floer_ranks(const GenFun& S, double a, double b, Field f = Field::F2);

// Sublevel-inclusion map FC(L, h0)[a, b) -> FC(L, h1)[a, b) for targets
// h0 <= h1, on the lower-star cochain windows of h_i - f_L.
struct Continuation {
  FilteredComplex source, target;  // windows [a, b)
  ChainMap map;
  std::map<int, int> ranks() const;  // rank of the induced map per degree
};
Continuation continuation_map(const GraphBrane& h0, const GraphBrane& h1, const GraphBrane& L,
                              double a, double b, Field f = Field::F2);
Continuation compose(const Continuation& first, const Continuation& second);

// Stabilized ranks along the clamp schedule f_k = -k ramp, ramp the distance
// to the region, k in {4, 8, 16, 32, 64} times the value range.
struct ClampRun {
  std::vector<std::pair<double, std::map<int, int>>> history;  // (k, ranks)
  std::map<int, int> ranks;
  bool stabilized = false;
  std::string certificate() const;
};
ClampRun vstar_U_floer(const Region& U, const GenFun& S, double a, double b, Field f = Field::F2);
ClampRun vstar_U_floer(const Region& U, const GraphBrane& L, double a, double b, Field f = Field::F2);

// Levels that are regular for S over U and for its Morse complex: one per
// gap between clusters of critical values, one below and one above.
std::vector<double> regular_levels(const GenFun& S, const Region& U = Region::all());

// Distance from x to a region (per-axis distance, Euclidean combination,
// periodic on circle axes).
double region_distance(const std::vector<Grid1D>& axes, const Region& U, const std::vector<double>& x);

// Classes for the pant product on a circle: coefficients on the critical
// points of h = f_target - f_source with h >= lambda.
struct MorseClass {
  GraphBrane source, target;
  double lambda = 0;
  int degree = 0;
  Field field = Field::F2;
  std::map<int, Rational> coef;  // critical base vertex -> coefficient
};

// Strict local minima (degree 0) and maxima (degree 1) of a vertex function
// on a circle; throws FloerError on plateaus.
std::vector<std::pair<int, int>> circle_critical_points(const std::vector<double>& h);

std::vector<MorseClass> morse_class_basis(const GraphBrane& L0, const GraphBrane& L1, double lambda,
                                          int degree, Field f = Field::F2);
// Sum of the minima of f1 - f0: the class 1 for lambda below every value.
MorseClass morse_unit(const GraphBrane& L0, const GraphBrane& L1, double lambda, Field f = Field::F2);
// Cup product by intersecting ascending manifolds (basins) of the two inputs
// with descending manifolds of the output, on a circle base.
MorseClass pant_product(const MorseClass& a, const MorseClass& b);
// Same coordinates as circle_coordinates: one entry per run of {h >= lambda}.
std::vector<Rational> morse_circle_coordinates(const MorseClass& c);

// Moves every brane by eps * cos(2 pi (x + shift_i)) so that all pairwise
// differences become Morse on the circle.
std::vector<GraphBrane> perturb_branes(const std::vector<GraphBrane>& branes, double eps);

// Restriction of sections from N to a closed Z, next to the tubular-limit
// Floer ranks FH(L, nu*Z).
struct ZReduction {
  std::map<int, int> sheaf_ranks;        // H^*(Z x [a, b), F_L)
  std::map<int, int> restriction_rank;   // image of H^*(N x [a, b)) in it
  ClampRun floer;
  bool agree() const { return floer.stabilized && floer.ranks == sheaf_ranks; }
};
ZReduction reduce_to_Z(const GenFun& S, const Region& Z, double a, double b, Field f = Field::F2);

// One rung of the window ladder: the triple (S^{l1}, S^{l0}, S^{-inf}).
struct LadderRung {
  double lo = 0, hi = 0;
  std::map<int, int> below, window, above;  // (-inf, lo), [lo, hi), (-inf, hi)
  std::map<int, int> incl, proj;            // ranks of H[lo,hi) -> H(-inf,hi) -> H(-inf,lo)
  std::map<int, int> predicted;             // dim H(-inf, hi) read off the exact sequence
  int cerf_values = 0;                      // distinct strand values in [lo, hi)
  bool closes = false;
};
struct Ladder {
  std::vector<LadderRung> floer, sheaf;
  bool routes_agree = false;
  bool closes() const;
  std::string csv() const;
};
Ladder window_ladder(const GenFun& S, const std::vector<double>& thresholds, Field f = Field::F2);

}  // namespace sq
