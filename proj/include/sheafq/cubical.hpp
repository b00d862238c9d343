#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sheafq/chain.hpp"

namespace sq {

enum class Topology { Circle, Interval };

// n edges of length `spacing` starting at origin. A circle has n vertices and
// closes up with the edge [v_{n-1}, v_0]; an interval has n + 1 vertices.
struct Grid1D {
  Topology topology = Topology::Interval;
  int n = 2;
  double spacing = 1.0;
  double origin = 0.0;

  int positions() const { return topology == Topology::Circle ? 2 * n : 2 * n + 1; }
  int vertices() const { return topology == Topology::Circle ? n : n + 1; }
  int edges() const { return n; }
  double period() const { return n * spacing; }
  double coord(int vertex) const { return origin + vertex * spacing; }
  // Vertex index at doubled position pos + offset (offset 0 lower, 1 upper end).
  int vertex_at(int pos, int offset) const;

  static Grid1D circle(int n, double length = 1.0, double origin = 0.0);
  static Grid1D interval(double lo, double hi, int n);
};

// Per-axis closed interval; on a circle axis it is an arc read modulo the period.
// An unset bound means the whole axis.
struct AxisRange {
  bool full = true;
  double lo = 0, hi = 0;

  static AxisRange all() { return {}; }
  static AxisRange between(double a, double b) { return {false, a, b}; }
};

struct Region {
  std::vector<AxisRange> ranges;  // one per axis; missing trailing axes are full

  static Region all() { return {}; }
  bool contains(const std::vector<Grid1D>& axes, const std::vector<double>& x,
                bool open = false) const;
};

// Cells are indexed by doubled positions per axis (even = vertex, odd = edge),
// flattened in mixed radix with the first axis fastest.
class CubicalGrid {
 public:
  CubicalGrid() = default;
  explicit CubicalGrid(std::vector<Grid1D> axes);

  int dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<Grid1D>& axes() const { return axes_; }
  const Grid1D& axis(int a) const { return axes_[a]; }
  int num_cells() const { return ncells_; }
  int num_vertices() const { return nverts_; }

  std::vector<int> position(int cell) const;
  int cell_id(const std::vector<int>& pos) const;
  int cell_dim(int cell) const;
  std::vector<int> vertices(int cell) const;  // flat vertex indices
  std::vector<int> vertex_multi(int v) const;
  int vertex_flat(const std::vector<int>& idx) const;
  int vertex_cell(int v) const;
  std::vector<double> vertex_coords(int v) const;
  std::vector<double> cell_center(int cell) const;

  // Faces of codimension one with incidence signs.
  std::vector<std::pair<int, int>> boundary(int cell) const;
  std::vector<std::pair<int, int>> coboundary(int cell) const;

  // Cells whose vertices and center all lie in the closed region.
  std::vector<int> closed_cells(const Region& r) const;
  // Cells having a vertex strictly inside the region (an up-closed set).
  std::vector<int> open_cells(const Region& r) const;
  bool is_closed_set(const std::vector<int>& cells) const;
  bool is_open_set(const std::vector<int>& cells) const;

  std::vector<double> sample(const std::function<double(const std::vector<double>&)>& f) const;

 private:
  std::vector<Grid1D> axes_;
  std::vector<int> stride_, vstride_;
  int ncells_ = 1, nverts_ = 1;
};

// Cochains on the given cells with the coboundary restricted to them; the
// cells must form a locally closed set. Generator k is cells[k].
ChainComplex cochain_complex(const CubicalGrid& g, const std::vector<int>& cells, Field f);

// Cells of W minus A. W and A must be closed and A inside W.
ChainComplex relative_cochain_complex(const CubicalGrid& g, const std::vector<int>& W,
                                      const std::vector<int>& A, Field f);

// Lower-star filtration: each cell gets the max of its vertex values. Cells
// with action below `floor` are dropped, which keeps a subcomplex.
struct LowerStar {
  FilteredComplex complex;
  std::vector<int> cells;  // generator -> cell id
};
LowerStar lower_star(const CubicalGrid& g, const std::vector<double>& vertex_values, Field f,
                     double floor = -kInf, const std::vector<int>* restrict_cells = nullptr);

std::vector<double> cell_actions(const CubicalGrid& g, const std::vector<double>& vertex_values);

}  // namespace sq
