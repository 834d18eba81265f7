#pragma once

#include <string>
#include <vector>

#include "corrugate/fields.hpp"
#include "corrugate/periodic.hpp"
#include "corrugate/primitives.hpp"

namespace corrugate {

inline constexpr int kMaxIbpSteps = 12;
inline constexpr std::size_t kMaxAmplitudeTerms = std::size_t{1} << kMaxIbpSteps;

struct AmplitudeTerm {
  TrigPoly P;
  Field B;  // n components
};

/// A(t, x) = sum_m P_m(t) B_m(x), with B_k = 0 for k < i.
struct SeparableAmplitude {
  int i = 1;
  std::vector<AmplitudeTerm> terms;

  GridDomain domain() const;
  /// Adds a term, merging into an existing one with an identical profile.
  void add(TrigPoly P, Field B);
  void validate(double tol = 1e-14) const;
  /// A(mu x . eta, x) sampled on dom.
  Field evaluate(const Vec& eta, double mu, const GridDomain& dom) const;
};

struct IbpParams {
  int i = 1;
  Vec xi{};
  Vec eta{};
  TrigPoly gamma;
  double nu = 1.0;
  double mu = 1.0;
  double lambda = 1.0;
  int J = 1;
};

struct IbpStepNorm {
  int j = 0;
  double residual = 0.0;
  double f_m = 0.0;
  double f_l = 0.0;
};

/// gamma(nu x.xi) A(mu x.eta, x) (.) eta
///   = 2 sym(Dw) + (mu/nu)^J gamma_J(nu x.xi) A_J(mu x.eta, x) (.) eta + F_m + F_l
/// on the output domain (the input domain shrunk by J cells).
struct IbpResult {
  IbpParams params;
  Field w;
  Field dw;   // d_l w_c at c * n + l, analytic in the oscillation
  Field f_m;  // zero on the block k, l >= i
  Field f_l;  // in V_{i+1}
  TrigPoly gamma_J;
  SeparableAmplitude A_J;
  std::vector<IbpStepNorm> trace;
};

IbpResult ibp_correct(const IbpParams& p, const SeparableAmplitude& A);

/// gamma(nu x.xi) A(mu x.eta, x) (.) eta on dom.
Field ibp_lhs(const IbpParams& p, const SeparableAmplitude& A, const GridDomain& dom);
/// (mu/nu)^J gamma_J A_J (.) eta on the result's domain.
Field ibp_residual(const IbpResult& r);

struct IbpIdentityReport {
  double analytic = 0.0;  // with the analytic Dw
  double fd = 0.0;        // with central differences of w
  double scale = 0.0;     // sup of the left-hand side
  double nu_h = 0.0;
};

IbpIdentityReport verify_ibp_identity(const IbpResult& r, const SeparableAmplitude& A);

void write_ibp_trace_csv(const IbpResult& r, const std::string& path);

}  // namespace corrugate
