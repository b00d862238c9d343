#pragma once

#include <map>
#include <string>
#include <vector>

#include "sheafq/sheaf_model.hpp"

namespace sq {

// a (x) b with actions added and d(x (x) y) = dx (x) y + (-1)^{|x|} x (x) dy.
// Generator (i, j) has index i + a.size() * j.
FilteredComplex filtered_tensor(const FilteredComplex& a, const FilteredComplex& b);
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

// F * G on N1 x N2 x R: pushforward of the external product along the sum of
// the two R coordinates. Generating functions go through external_sum; other
// presentations through stalkwise tensor products over the product grid.
// `f` is the field used when a generating function has to be made cellular.
TameSheaf convolve(const TameSheaf& F, const TameSheaf& G, Field f = Field::F2);
// Diagonal pullback of F * G; both on the same base grid.
TameSheaf tensor(const TameSheaf& F, const TameSheaf& G, Field f = Field::F2);

// Degree shift of the cellular dual over an n-dimensional base; the
// generating-function route needs none.
constexpr int dual_degree_shift(int n) { return -(n + 1); }

// Generating functions: quantize(-S). Cellular sheaves: F-bar is the fiber of
// the unit map k_{N x R} -> F, and the dual at sigma is the linear dual of the
// compactly supported total complex of F-bar over the star of sigma, with t
// negated. `cross_checks` random regular boxes compare the two routes.
TameSheaf dualize(const TameSheaf& F, Field f = Field::F2, int cross_checks = 0,
                  unsigned seed = 1);
TameSheaf dualize_cellular(const TameSheaf& F, Field f = Field::F2);

// tensor(dualize(F), G): the object of morphisms from F to G.
TameSheaf rhom_tensor(const TameSheaf& F, const TameSheaf& G, Field f = Field::F2);

// k_{N x [0, inf)} as a cellular sheaf.
TameSheaf unit(const std::vector<Grid1D>& base, Field f = Field::F2);

// Per-base-cell chain maps between two cellular sheaves on the same grid.
struct CellMorphism {
  std::vector<ChainMap> at;
};
// Throws SheafError unless every component is filtered and the squares with the
// generization maps commute.
void check_morphism(const CellSheaf& a, const CellSheaf& b, const CellMorphism& m);

struct UnitMorphisms {
  TameSheaf unit;     // cellular
  TameSheaf product;  // dual(F) (x) F, cellular
  CellMorphism u;     // unit -> product
  CellMorphism v;     // product -> unit
};
// Needs a graph-type quantization (no fiber variables) or the unit, where
// dual(F) (x) F is presented by the zero function.
UnitMorphisms unit_morphisms(const TameSheaf& F, Field f = Field::F2);

// Barcode of the pushforward to R, i.e. of the sections over all of N.
Barcode pushforward_barcode(const TameSheaf& F, Field f = Field::F2);

// A class in H^*(N x [lambda, inf), home) for a home with a graph-type
// generating function h. The representative is a cochain on the base cells
// vanishing on the sublevel set {h < lambda}.
struct CohomologyClass {
  TameSheaf home;
  double lambda = 0;
  int degree = 0;
  Field field = Field::F2;
  SparseVec rep;  // indexed by base cell id
};

// One representative per basis class of H^degree(N, {h < lambda}).
std::vector<CohomologyClass> class_basis(const TameSheaf& home, double lambda, int degree,
                                         Field f = Field::F2);
// The class 1 of a home whose function is identically zero, lambda <= 0.
CohomologyClass unit_class(const TameSheaf& home, double lambda, Field f = Field::F2);
// Throws SheafError when the representative is not closed in its window.
void check_closed(const CohomologyClass& c);
bool is_exact(const CohomologyClass& c);

// a in dual(F1) (x) F2 over [lambda, inf), b in dual(F2) (x) F3 over [mu, inf)
// give a class in dual(F1) (x) F3 over [lambda + mu, inf). The external
// product is restricted to the diagonal with the cubical (front face, back
// face) diagonal; the F2 factors already cancel in the generating function.
CohomologyClass cup_product(const CohomologyClass& a, const CohomologyClass& b);

// Coordinates on a circle base in the basis read off the sublevel set: degree
// 0 is the value at a vertex when the sublevel set is empty, degree 1 is one
// sum of edge values per run of edges outside the sublevel set.
std::vector<Rational> circle_coordinates(const CohomologyClass& c);
// Classes with unit coordinates: the constant in degree 0 (empty sublevel
// set only), the first edge of each run in degree 1.
std::vector<CohomologyClass> circle_basis(const TameSheaf& home, double lambda, int degree,
                                          Field f = Field::F2);
// Runs of edges (cell ids) outside {S < lambda} on a circle base, sorted.
std::vector<std::vector<int>> circle_runs(const GenFun& S, double lambda);

// Boxes U x [a, b) whose window ends keep at least `pad` away from every
// breakpoint of the given sheaves over U and one ring of cells around it.
struct Box {
  Region U;
  double a = 0, b = 0;
};
std::vector<Box> regular_boxes(const std::vector<const TameSheaf*>& sheaves, Field f, int count,
                               unsigned seed, double pad);
// 2 * value tolerance of the generating function behind F, or a small
// constant for purely combinatorial sheaves.
double action_pad(const TameSheaf& F);
// Number of boxes where the section ranks of F and G differ.
int count_mismatches(const TameSheaf& F, const TameSheaf& G, const std::vector<Box>& boxes,
                     Field f, std::string* first = nullptr);

}  // namespace sq
