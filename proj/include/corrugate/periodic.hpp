#pragma once

#include <complex>
#include <vector>

namespace corrugate {

/// Finite Fourier series sum_k c_k e^{ikt} on the circle, |k| <= kMaxFreq.
class TrigPoly {
 public:
  static constexpr int kMaxFreq = 64;

  TrigPoly() : c_(1, 0.0) {}

  static TrigPoly constant(double v);
  static TrigPoly sine(int k, double amp = 1.0);
  static TrigPoly cosine(int k, double amp = 1.0);

  int degree() const { return static_cast<int>(c_.size() / 2); }
  std::complex<double> coeff(int k) const;
  void set_coeff(int k, std::complex<double> v);
  bool is_real(double tol = 1e-15) const;
  double mean() const { return coeff(0).real(); }

  /// Real part of the series at t.
  double operator()(double t) const;
  /// Value and first derivative at t in one pass.
  void eval2(double t, double* value, double* deriv) const;
  double sup_norm(int samples = 4096) const;

  TrigPoly derivative() const;

  TrigPoly& operator+=(const TrigPoly& o);
  TrigPoly& operator-=(const TrigPoly& o);
  TrigPoly& operator*=(double s);
  friend TrigPoly operator+(TrigPoly a, const TrigPoly& b) { return a += b; }
  friend TrigPoly operator-(TrigPoly a, const TrigPoly& b) { return a -= b; }
  friend TrigPoly operator*(double s, TrigPoly a) { return a *= s; }
  friend TrigPoly operator*(const TrigPoly& a, const TrigPoly& b);
  bool operator==(const TrigPoly& o) const;

 private:
  void grow(int deg);
  void trim();
  std::vector<std::complex<double>> c_;  // index k + degree
};

/// Term-wise c_k / (ik); input must have c_0 == 0.
TrigPoly zero_mean_primitive(const TrigPoly& p);

struct Gammas {
  TrigPoly g1;  // -sin(2t) / 4
  TrigPoly g2;  // sqrt(2) sin t
};

Gammas gammas();

/// Mean of g2^2 over the circle; multiplies the gradient terms.
double gamma2_square_mean();

}  // namespace corrugate
