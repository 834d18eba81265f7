#include "corrugate/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "corrugate/error.hpp"

namespace corrugate {

TrigPoly TrigPoly::constant(double v) {
  TrigPoly p;
  p.c_[0] = v;
  return p;
}

TrigPoly TrigPoly::sine(int k, double amp) {
  // sin(kt) = (e^{ikt} - e^{-ikt}) / (2i)
  TrigPoly p;
  p.set_coeff(k, std::complex<double>(0.0, -amp / 2.0));
  p.set_coeff(-k, std::complex<double>(0.0, amp / 2.0));
  return p;
}

TrigPoly TrigPoly::cosine(int k, double amp) {
  TrigPoly p;
  if (k == 0) return constant(amp);
  p.set_coeff(k, amp / 2.0);
  p.set_coeff(-k, amp / 2.0);
  return p;
}

std::complex<double> TrigPoly::coeff(int k) const {
  const int d = degree();
  if (k < -d || k > d) return 0.0;
  return c_[k + d];
}

void TrigPoly::grow(int deg) {
  if (deg > kMaxFreq) fail(ErrorKind::term_count_overflow, "trigonometric degree above 64");
  const int d = degree();
  if (deg <= d) return;
  std::vector<std::complex<double>> c(2 * deg + 1, 0.0);
  for (int k = -d; k <= d; ++k) c[k + deg] = c_[k + d];
  c_.swap(c);
}

void TrigPoly::trim() {
  int d = degree();
  while (d > 0 && c_[0] == 0.0 && c_[2 * d] == 0.0) {
    c_.erase(c_.begin());
    c_.pop_back();
    --d;
  }
}

void TrigPoly::set_coeff(int k, std::complex<double> v) {
  grow(std::abs(k));
  c_[k + degree()] = v;
  trim();
}

bool TrigPoly::is_real(double tol) const {
  const int d = degree();
  for (int k = 0; k <= d; ++k) {
    if (std::abs(coeff(-k) - std::conj(coeff(k))) > tol) return false;
  }
  return true;
}

double TrigPoly::operator()(double t) const {
  double v = 0.0, dv = 0.0;
  eval2(t, &v, &dv);
  return v;
}

void TrigPoly::eval2(double t, double* value, double* deriv) const {
  const int d = degree();
  const std::complex<double> z(std::cos(t), std::sin(t));
  std::complex<double> zk = 1.0, zmk = 1.0;
  std::complex<double> acc = c_[d], dacc = 0.0;
  for (int k = 1; k <= d; ++k) {
    zk *= z;
    zmk = std::conj(zk);
    const std::complex<double> a = c_[d + k] * zk;
    const std::complex<double> b = c_[d - k] * zmk;
    acc += a + b;
    dacc += std::complex<double>(0.0, static_cast<double>(k)) * (a - b);
  }
  *value = acc.real();
  if (deriv) *deriv = dacc.real();
}

double TrigPoly::sup_norm(int samples) const {
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double t = 2.0 * std::numbers::pi * s / samples;
    best = std::max(best, std::abs((*this)(t)));
  }
  return best;
}

TrigPoly TrigPoly::derivative() const {
  TrigPoly out = *this;
  const int d = degree();
  for (int k = -d; k <= d; ++k) out.c_[k + d] = std::complex<double>(0.0, static_cast<double>(k)) * c_[k + d];
  out.trim();
  return out;
}

TrigPoly& TrigPoly::operator+=(const TrigPoly& o) {
  grow(o.degree());
  const int d = degree();
  for (int k = -o.degree(); k <= o.degree(); ++k) c_[k + d] += o.coeff(k);
  trim();
  return *this;
}

TrigPoly& TrigPoly::operator-=(const TrigPoly& o) {
  grow(o.degree());
  const int d = degree();
  for (int k = -o.degree(); k <= o.degree(); ++k) c_[k + d] -= o.coeff(k);
  trim();
  return *this;
}

TrigPoly& TrigPoly::operator*=(double s) {
  for (auto& v : c_) v *= s;
  trim();
  return *this;
}

TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly out;
  const int da = a.degree(), db = b.degree();
  out.grow(da + db);
  const int d = out.degree();
  for (int k = -da; k <= da; ++k) {
    for (int l = -db; l <= db; ++l) out.c_[k + l + d] += a.coeff(k) * b.coeff(l);
  }
  out.trim();
  return out;
}

bool TrigPoly::operator==(const TrigPoly& o) const { return c_ == o.c_; }

TrigPoly zero_mean_primitive(const TrigPoly& p) {
  if (p.coeff(0) != 0.0) fail(ErrorKind::nonzero_mean_input, "zero_mean_primitive needs c_0 = 0");
  TrigPoly out;
  const int d = p.degree();
  for (int k = -d; k <= d; ++k) {
    if (k == 0) continue;
    out.set_coeff(k, p.coeff(k) / std::complex<double>(0.0, static_cast<double>(k)));
  }
  return out;
}

Gammas gammas() {
  return Gammas{TrigPoly::sine(2, -0.25), TrigPoly::sine(1, std::sqrt(2.0))};
}

double gamma2_square_mean() {
  const Gammas g = gammas();
  return (g.g2 * g.g2).mean();
}

}  // namespace corrugate
