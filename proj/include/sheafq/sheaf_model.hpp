#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "sheafq/gfqi.hpp"

namespace sq {

class SheafError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sheaf on N x R given cell by cell over a cubical grid of N: each base cell
// carries a filtered complex (its stalk, filtered by t) and each codimension-one
// face pair sigma < tau a filtered generization map F(sigma) -> F(tau).
struct CellSheaf {
  Field field = Field::F2;
  CubicalGrid base;
  std::vector<FilteredComplex> stalks;
  std::map<std::pair<int, int>, ChainMap> maps;

  const ChainMap* map(int sigma, int tau) const;
  // Throws SheafError unless every map is a filtered chain map and the two
  // paths around each square of faces agree.
  void validate() const;
  // Total complex over a closed set of base cells: generator (sigma, g) sits in
  // degree deg g + dim sigma and D = (-1)^{dim sigma} d + sum [sigma:tau] rho.
  // An up-closed set gives the compactly supported version.
  FilteredComplex total(const std::vector<int>& cells, bool require_closed = true) const;
  std::vector<int> total_offsets(const std::vector<int>& cells) const;
};

struct TameSheaf {
  std::string name;
  std::shared_ptr<const GenFun> gf;     // set for the generating-function presentation
  std::shared_ptr<const CellSheaf> cell;  // set for the cellular presentation
  int shift = 0;                          // index of Q, already applied by gf_cohomology
  std::map<int, int> at_plus_infinity;
  std::shared_ptr<const GenFun> origin;   // generating function a cellular sheaf came from

  bool is_gf() const { return gf != nullptr; }
  const std::vector<Grid1D>& base_axes() const;
};

TameSheaf quantize(const GenFun& S);
TameSheaf from_cells(CellSheaf c, std::string name);
// k_{N x [0, inf)}: the quantization of the zero function.
TameSheaf unit_sheaf(const std::vector<Grid1D>& base);
// Constant sheaf k on U x [0, inf) for U open, extended by zero.
TameSheaf open_set_sheaf(const std::vector<Grid1D>& base, const Region& U, Field f);
// Constant sheaf k on Z x [0, inf) for Z closed.
TameSheaf closed_set_sheaf(const std::vector<Grid1D>& base, const Region& Z, Field f);

// H^*(U x [a, b[, F) for a closed base region U; a = -inf allowed.
std::map<int, int> sections(const TameSheaf& F, const Region& U, double a, double b,
                            Field f = Field::F2, bool check = true);

// Cohomology of F restricted to {x} x [t - eps, t + eps[, eps below half the
// gap to the nearest other breakpoint over x.
std::map<int, int> microstalk(const TameSheaf& F, const std::vector<double>& x, double t,
                              Field f = Field::F2);
// lim H^*(S_x^{t+eps}, S_x^{t-eps}): nonzero exactly where the front passes.
std::map<int, int> front_jump(const TameSheaf& F, const std::vector<double>& x, double t,
                              Field f = Field::F2);

// Cellular presentation with stalks read off the sublevel sets fiber by fiber.
// Sections are compared with the generating-function presentation on
// `spot_checks` random boxes; any mismatch aborts.
TameSheaf to_cellular(const TameSheaf& F, Field f = Field::F2, int spot_checks = 20,
                      unsigned seed = 1);

struct Stratification {
  std::vector<double> breakpoints;
  double tolerance = 0;
  std::string csv() const;
};
Stratification stratification(const TameSheaf& F);

struct ConePoint {
  std::vector<double> x;
  double t = 0;
  std::vector<double> p;  // tau * p
  double tau = 1;
};

struct ConeSet {
  std::vector<ConePoint> points;
  // cell sizes used when measuring distances
  double hx = 1, ht = 1, hp = 1;
  std::vector<double> periods;  // per base axis, 0 when not periodic
  std::string csv() const;
  // (x, t) projection of a one-dimensional base as an SVG scatter plot.
  std::string svg() const;
};

ConeSet conify(const Brane& B);
ConeSet singular_support(const TameSheaf& F, double tau_res);
// Brane of the conormal of an open region: the zero section over U together
// with outward conormal rays over the boundary, up to |p| <= pmax.
Brane conormal_brane(const std::vector<Grid1D>& base, const Region& U, double pmax, int rays);

// Hausdorff distance in units of the cells (hx, ht, hp); tau = 0 and tau = 1
// samples are matched separately.
double hausdorff_cells(const ConeSet& a, const ConeSet& b, double hx, double ht, double hp);

// The cell whose relative interior contains x.
int base_cell_at(const CubicalGrid& base, const std::vector<double>& x);

}  // namespace sq
