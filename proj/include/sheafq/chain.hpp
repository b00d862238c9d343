#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sq {

enum class Field { F2, Q };

using Rational = boost::multiprecision::cpp_rational;

Field parse_field(const std::string& s);
std::string field_name(Field f);

constexpr double kInf = std::numeric_limits<double>::infinity();

class ComplexError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sparse vector with sorted indices. In F2 mode `val` stays empty and every
// stored index carries coefficient 1.
struct SparseVec {
  std::vector<int> idx;
  std::vector<Rational> val;

  bool empty() const { return idx.empty(); }
  int low() const { return idx.empty() ? -1 : idx.back(); }
  Rational coef(Field f, std::size_t k) const { return f == Field::F2 ? Rational(1) : val[k]; }
  Rational at(Field f, int i) const;
};

// v += c * w
void axpy(Field f, SparseVec& v, const Rational& c, const SparseVec& w);
SparseVec make_vec(Field f, std::vector<std::pair<int, Rational>> entries);

class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(Field f, int rows, int cols);

  static SparseMatrix identity(Field f, int n);
  static SparseMatrix from_triplets(Field f, int rows, int cols,
                                    const std::vector<std::tuple<int, int, Rational>>& t);

  Field field() const { return field_; }
  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(cols_.size()); }

  const SparseVec& col(int c) const { return cols_[c]; }
  void set_col(int c, SparseVec v);
  Rational at(int r, int c) const { return cols_[c].at(field_, r); }
  std::size_t nnz() const;
  bool is_zero() const;

  SparseMatrix transpose() const;
  SparseMatrix submatrix(const std::vector<int>& rows, const std::vector<int>& cols) const;
  SparseVec apply(const SparseVec& x) const;
  SparseMatrix scaled(const Rational& c) const;

  friend SparseMatrix operator*(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator+(const SparseMatrix& a, const SparseMatrix& b);
  friend SparseMatrix operator-(const SparseMatrix& a, const SparseMatrix& b);
  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b);

  int rank() const;

 private:
  Field field_ = Field::F2;
  int rows_ = 0;
  std::vector<SparseVec> cols_;
};

// Column reduction with pivot = largest row index. Columns are processed left
// to right; when `track` is set, V records R = M V.
struct Reduction {
  std::vector<SparseVec> R;
  std::vector<SparseVec> V;
  std::vector<int> pivot_col;  // row -> column whose pivot it is, or -1
};
Reduction reduce_columns(const SparseMatrix& M, bool track);

// Returns x with M x = b, or nullopt.
std::optional<SparseVec> solve(const SparseMatrix& M, const SparseVec& b);

// Cochain complex: generator j has degree deg[j] and d(j) = column j of d,
// landing in degree deg[j] + 1.
class ChainComplex {
 public:
  ChainComplex() = default;
  ChainComplex(Field f, std::vector<int> degree, SparseMatrix d, bool check = true);

  Field field() const { return d_.field(); }
  int size() const { return static_cast<int>(degree_.size()); }
  const std::vector<int>& degrees() const { return degree_; }
  int degree(int j) const { return degree_[j]; }
  const SparseMatrix& d() const { return d_; }

  std::map<int, int> cohomology_ranks() const;
  int total_rank() const;
  // Cocycles spanning H^p, one per class.
  std::vector<SparseVec> cohomology_reps(int p) const;

 private:
  std::vector<int> degree_;
  SparseMatrix d_;
};

struct Bar {
  int degree;
  double birth;
  double death;
};

struct Barcode {
  std::vector<Bar> bars;

  // Bars alive at lambda for the window (-inf, lambda): birth < lambda <= death.
  std::map<int, int> ranks_at(double lambda) const;
  std::string csv() const;
  void sort();
};

// Cochain complex with an action per generator; d never lowers the action,
// so {action >= t} is a subcomplex.
class FilteredComplex {
 public:
  FilteredComplex() = default;
  FilteredComplex(ChainComplex c, std::vector<double> action, bool check = true);
  FilteredComplex(Field f, std::vector<int> degree, std::vector<double> action, SparseMatrix d,
                  bool check = true);

  const ChainComplex& complex() const { return c_; }
  Field field() const { return c_.field(); }
  int size() const { return c_.size(); }
  const std::vector<double>& actions() const { return action_; }
  double action(int j) const { return action_[j]; }
  int degree(int j) const { return c_.degree(j); }
  const SparseMatrix& d() const { return c_.d(); }

  // Generators with action in [a, b), as a subquotient complex.
  FilteredComplex window(double a, double b) const;
  std::vector<int> window_indices(double a, double b) const;
  std::map<int, int> window_ranks(double a, double b) const;
  Barcode barcode() const;
  FilteredComplex shifted(int k) const;  // degree p -> p - k
  FilteredComplex translated(double c) const;  // action + c

 private:
  ChainComplex c_;
  std::vector<double> action_;
};

struct ChainMap {
  SparseMatrix m;  // target.size() x source.size()
  int shift = 0;   // degree p -> p + shift
};

// Checks degrees and d_B m = (-1)^shift m d_A.
void check_chain_map(const ChainComplex& a, const ChainComplex& b, const ChainMap& f);
void check_filtered_map(const FilteredComplex& a, const FilteredComplex& b, const ChainMap& f);

// cone^k = A^{k+1} + B^k, d(a, b) = (-da, f a + db). Generators of A come first.
ChainComplex mapping_cone(const ChainComplex& a, const ChainComplex& b, const ChainMap& f);
FilteredComplex mapping_cone(const FilteredComplex& a, const FilteredComplex& b,
                             const ChainMap& f);
bool is_quasi_iso(const ChainComplex& a, const ChainComplex& b, const ChainMap& f);

// Rank of the induced map on H^p, for every p.
std::map<int, int> induced_ranks(const ChainComplex& a, const ChainComplex& b, const ChainMap& f);

// Transpose with degree p -> -p and action a -> -a.
ChainComplex dual_complex(const ChainComplex& c);
FilteredComplex dual_complex(const FilteredComplex& c);

// Map induced by a filtered map on the windows [a, b) of source and target.
ChainMap window_map(const FilteredComplex& src, const FilteredComplex& dst, const ChainMap& f,
                    double a, double b);

std::string ranks_string(const std::map<int, int>& r);
std::map<int, int> drop_zero(std::map<int, int> r);

}  // namespace sq
