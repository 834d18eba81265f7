#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "corrugate/fields.hpp"

namespace corrugate {

using Vec = std::array<double, kMaxDim>;

inline int packed_size(int n) { return n * (n + 1) / 2; }
/// Position of entry (k, l), k <= l, 0-based, row-major over the upper triangle.
inline int packed_index(int n, int k, int l) {
  if (k > l) std::swap(k, l);
  return k * n - k * (k - 1) / 2 + (l - k);
}

/// Dense symmetric matrix, n <= 4; symmetric by construction.
class SymMat {
 public:
  SymMat() = default;
  explicit SymMat(int n) : n_(n) {}

  static SymMat identity(int n);
  /// a (x) a
  static SymMat outer(int n, const Vec& a);
  /// a (.) b = a (x) b + b (x) a
  static SymMat sym_product(int n, const Vec& a, const Vec& b);
  /// Reads the upper triangle of a row-major n x n block.
  static SymMat from_full(int n, const double* m);

  int n() const { return n_; }
  double operator()(int k, int l) const { return e_[k * kMaxDim + l]; }
  void set(int k, int l, double v) {
    e_[k * kMaxDim + l] = v;
    e_[l * kMaxDim + k] = v;
  }
  void to_full(double* out) const;
  double norm() const;  // Frobenius

  SymMat& operator+=(const SymMat& o);
  SymMat& operator-=(const SymMat& o);
  SymMat& operator*=(double s);
  friend SymMat operator+(SymMat a, const SymMat& b) { return a += b; }
  friend SymMat operator-(SymMat a, const SymMat& b) { return a -= b; }
  friend SymMat operator*(double s, SymMat a) { return a *= s; }

 private:
  int n_ = 0;
  std::array<double, kMaxDim * kMaxDim> e_{};
};

/// eta_ij = (e_i + e_j) / |e_i + e_j| with 1 <= i <= j <= n.
Vec eta(int n, int i, int j);
SymMat h0(int n);

/// The n_* directions eta_ij and the inverse of their Gram map.
class PrimitiveBasis {
 public:
  explicit PrimitiveBasis(int n);

  int n() const { return n_; }
  int count() const { return packed_size(n_); }
  /// 0-based (i, j) of the packed slot.
  std::pair<int, int> pair(int slot) const { return pairs_[slot]; }
  const Vec& direction(int slot) const { return dirs_[slot]; }
  /// Coefficients L_ij of a row-major n x n symmetric block, packed order.
  void decompose_full(const double* m, double* coeffs) const;
  double op_norm(int slot) const { return op_norm_[slot]; }
  double r_D() const { return r_D_; }
  double r_K() const { return r_D_ / 4.0; }

 private:
  int n_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<Vec> dirs_;
  Eigen::MatrixXd inv_;
  std::vector<double> op_norm_;
  double r_D_ = 0.0;
};

/// Shared immutable basis per dimension.
const PrimitiveBasis& primitive_basis(int n);

std::vector<double> basic_decompose(const SymMat& m, const PrimitiveBasis& basis);
double find_rD(const PrimitiveBasis& basis);

struct AlgebraicSplit {
  int i = 1;
  Vec xi{};
  Vec alpha{};
  SymMat pi_m;
  SymMat pi_l;
};

/// Unique split M = alpha (.) xi + pi_m + pi_l for family i (1-based), with
/// alpha_k = 0 for k < i, pi_m zero on the block k, l >= i, pi_l in V_{i+1}.
class AlgebraicSplitter {
 public:
  AlgebraicSplitter(int n, int i, const Vec& xi);

  AlgebraicSplit split(const SymMat& m) const;
  /// Hot path on row-major n x n blocks; any output pointer may be null.
  void split_full(const double* m, double* alpha, double* pi_m, double* pi_l) const;
  int n() const { return n_; }
  int family() const { return i_ + 1; }

 private:
  int n_;
  int i_;  // 0-based
  Vec xi_;
  Eigen::MatrixXd inv_;
  std::vector<int> alpha_slots_;                 // component k
  std::vector<std::pair<int, int>> mixed_slots_; // (k, l)
  std::vector<std::pair<int, int>> lower_slots_; // (k, l)
};

/// Cached splitter per (n, i, xi).
const AlgebraicSplitter& algebraic_splitter(int n, int i, const Vec& xi);
AlgebraicSplit algebraic_decompose(int i, const Vec& xi, const SymMat& m);

/// Keeps entries (k, l) with min(k, l) >= i (1-based), zeroes the rest.
SymMat project_Vi(int i, const SymMat& m);
bool in_Vi(int i, const SymMat& m, double tol = 1e-12);
/// Largest |entry| of a matrix field outside the V_i block.
double off_block_sup(const Field& m, int i);
/// Largest |entry| of a matrix field inside the block k, l >= i.
double in_block_sup(const Field& m, int i);

struct KallenOptions {
  /// Multiplier of the gradient terms; the mean of the normal profile squared.
  double weight = 1.0;
  int N_K = 1;
  /// Enforce |H - H_0| + lambda_0 / lambda_1 < r_K; otherwise only the
  /// square-root floor r_K^2 is enforced.
  bool strict = true;
};

struct KallenResult {
  std::vector<Field> a;  // packed (i, j) order
  Field residual;
  std::vector<double> lambda;
  int J = 0;
  double weight = 1.0;
  double min_sqrt_arg = 0.0;
  std::vector<std::string> warnings;

  const Field& coeff(int i, int j) const;  // 1-based
};

KallenResult kallen_decompose(const Field& H, const std::vector<double>& lambda, int J,
                              const KallenOptions& opts = {});

/// Frobenius sup of H - H_0 over the field.
double distance_to_h0(const Field& H);

}  // namespace corrugate
