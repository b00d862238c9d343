#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sheafq/cubical.hpp"

namespace sq {

class GfError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BaseFiberFn = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

// A sampled function S on N x [-R, R]^k together with its quadratic form at
// infinity Q. Vertex (b, f) of the product grid has flat index b + nb * f.
struct GenFun {
  std::string name;
  std::vector<Grid1D> base;
  std::vector<Grid1D> fiber;
  CubicalGrid grid;
  CubicalGrid base_grid;
  CubicalGrid fiber_grid;
  std::vector<double> values;
  Eigen::MatrixXd Q;
  int index = 0;
  // Local models (the cusp) are not quadratic at infinity; they skip the
  // collar checks and are reported as such.
  bool quadratic_at_infinity = true;

  int k() const { return static_cast<int>(fiber.size()); }
  int n_base() const { return base_grid.num_vertices(); }
  int n_fiber() const { return fiber_grid.num_vertices(); }
  double value(int b, int f) const { return values[b + n_base() * f]; }
  double quad(const std::vector<double>& xi) const;
};

// Builds the grids and samples S; the fiber is [-R, R]^k with n edges per axis.
GenFun make_genfun(std::string name, std::vector<Grid1D> base, double R, int n_fiber,
                   const BaseFiberFn& s, Eigen::MatrixXd Q, bool quadratic_at_infinity = true);
GenFun graph_genfun(std::string name, std::vector<Grid1D> base,
                    const std::function<double(const std::vector<double>&)>& f);
GenFun graph_from_values(std::string name, std::vector<Grid1D> base, std::vector<double> values);
GenFun quadratic_genfun(std::vector<Grid1D> base, Eigen::MatrixXd Q, double R, int n_fiber);
// -xi^3/3 + x xi over the given base, a local model with no form at infinity.
GenFun cusp_genfun(std::vector<Grid1D> base, double R, int n_fiber);

int negative_eigenvalues(const Eigen::MatrixXd& Q);

// Neighbouring vertex along an axis, or -1 past the end of an interval.
int grid_step(const CubicalGrid& g, int v, int axis, int dir);
// Ranks of H(lower star of v, lower link of v) for a vertex function, ties
// broken by vertex id unless strict_ties, where equal values count as above.
// Empty exactly when v is regular.
std::map<int, int> lower_star_change(const CubicalGrid& g, const std::function<double(int)>& f,
                                     int v, bool strict_ties = false);

// Largest |S - Q(xi) - c(x)| over fiber-boundary vertices, c(x) the mean of
// S - Q over the boundary vertices above x.
double collar_defect(const GenFun& S);

struct FiberCriticalPoint {
  int base_vertex = 0;
  int fiber_vertex = 0;
  std::vector<double> x;
  std::vector<double> xi;
  double value = 0;
  int index = 0;
  std::vector<double> p;
  bool degenerate = false;
};

std::vector<FiberCriticalPoint> fiber_critical_data(const GenFun& S, int base_vertex);
std::vector<FiberCriticalPoint> all_strands(const GenFun& S);

struct CerfDiagram {
  std::vector<FiberCriticalPoint> strands;
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> cusp_locations;
  std::string csv() const;
};

CerfDiagram cerf_diagram(const GenFun& S, const Region& U);

// Resolution of strand values: how far a sampled critical value can sit from
// the true one.
double value_tolerance(const GenFun& S);
// Proxy for -infinity: below every strand value with a margin.
double bottom_level(const GenFun& S);

// Cells of the product grid lying over the closed base region U.
std::vector<int> product_cells(const GenFun& S, const Region& U);

// Lower-star filtration of S over U x fiber, truncated below at bottom_level.
LowerStar gf_filtered(const GenFun& S, const Region& U, Field f);

// Throws GfError naming the strand if a or b sits within tolerance of a strand
// value over U or of the boundary collar of U.
void check_window(const GenFun& S, const Region& U, double a, double b);

// Ranks of H^{*}(S_U^b, S_U^a), shifted down by the index of Q.
std::map<int, int> gf_cohomology(const GenFun& S, const Region& U, double a, double b,
                                 Field f = Field::F2, bool check = true);

bool same_base(const std::vector<Grid1D>& a, const std::vector<Grid1D>& b);

GenFun ominus(const GenFun& s0, const GenFun& s1);
// s1(x, xi) + s2(y, eta) over the product base N1 x N2.
GenFun external_sum(const GenFun& s1, const GenFun& s2);
GenFun box_sum(const GenFun& s0, const GenFun& s1);
GenFun negate(const GenFun& s);
GenFun add_base_function(const GenFun& s, const std::function<double(const std::vector<double>&)>& f);

struct BranePoint {
  std::vector<double> x;
  std::vector<double> p;
  double f = 0;
  int m = 0;
};

struct Brane {
  std::string source;
  std::vector<BranePoint> points;
};

Brane brane_of(const GenFun& S);

}  // namespace sq
