#pragma once

#include <optional>
#include <variant>

#include "corrugate/fields.hpp"

namespace corrugate {

struct StageMeta {
  int q = 0;
  double delta = 0.0;
  double lambda = 0.0;
};

struct RhoCertificate {
  double rho = 1.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
};

struct RhoViolation {
  double rho = 1.0;
  std::int64_t index = 0;  // lattice index in the Jacobian domain
  Point x{};
  double eigenvalue = 0.0;
};

/// A map u into R^{n+1} with its Jacobian.  The Jacobian stores d_l u_c at
/// c * n + l; the working domain is the Jacobian's.
struct Immersion {
  Field u;
  Field du;
  StageMeta meta;
  std::optional<RhoCertificate> cert;

  int n() const { return du.domain().n; }
  const GridDomain& domain() const { return du.domain(); }

  /// Jacobian by central differences; the working domain shrinks by one cell.
  static Immersion from_map(Field u);
  /// x -> A x + b with A row-major (n+1) x n; exact Jacobian on all of dom.
  static Immersion affine(const GridDomain& dom, const double* A, const double* b);
  /// Pairs a map with a Jacobian computed elsewhere; u is cut to du's domain.
  static Immersion from_parts(const Field& u, Field du);
};

/// Smallest and largest eigenvalue of a row-major n x n symmetric block.
void sym_eig_range(int n, const double* m, double* lo, double* hi);

Field induced_metric(const Immersion& u);
Field induced_metric(const Field& du);

std::variant<RhoCertificate, RhoViolation> check_P_rho(const Immersion& u, double rho);
/// Attaches a fresh certificate or throws `kind` with the violation.
void certify(Immersion& u, double rho, ErrorKind kind = ErrorKind::certificate_degraded);

/// Unit normal by the signed n x n minors of the Jacobian.
Field normal_field(const Immersion& u);
Field normal_from_jacobian(const Field& du, double rho);
/// T = Du (Du^T Du)^{-1}, stored like the Jacobian.
Field tangential_map(const Immersion& u);
Field tangential_from_jacobian(const Field& du);

/// Normal and tangential frames with first derivatives.
struct Frames {
  Field zeta;   // n+1 comps
  Field T;      // (n+1) n comps
  Field dzeta;  // d_l zeta_c at c * n + l, one cell smaller
  Field dT;     // d_m T_{cl} at (c * n + l) * n + m, one cell smaller
};

Frames frames(const Immersion& u);

/// max_l sup_x |d_l f| for a Jacobian field.
double first_seminorm(const Field& du);
/// max_{l,m} sup_x |d_l d_m u|, by central differences of the Jacobian.
double second_seminorm(const Field& du);

struct NormalCloseness {
  double distance = 0.0;
  double seminorm1 = 0.0;
  double ratio = 0.0;
};

NormalCloseness normal_closeness(const Immersion& u, const Immersion& v);

}  // namespace corrugate
