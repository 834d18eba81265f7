#include "corrugate/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace corrugate {

namespace {

using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim + 1, kMaxDim + 1>;

void gram(int n, const double* du, double* g) {
  for (int k = 0; k < n; ++k) {
    for (int l = k; l < n; ++l) {
      double s = 0.0;
      for (int c = 0; c <= n; ++c) s += du[c * n + k] * du[c * n + l];
      g[k * n + l] = s;
      g[l * n + k] = s;
    }
  }
}

// Unnormalized normal: component a is (-1)^(a+n) det(Du without row a).
void raw_normal(int n, const double* du, double* out) {
  SmallMat m(n, n);
  for (int a = 0; a <= n; ++a) {
    int r = 0;
    for (int c = 0; c <= n; ++c) {
      if (c == a) continue;
      for (int l = 0; l < n; ++l) m(r, l) = du[c * n + l];
      ++r;
    }
    const double sign = ((a + n) % 2 == 0) ? 1.0 : -1.0;
    out[a] = sign * m.determinant();
  }
}

}  // namespace

Immersion Immersion::from_map(Field u) {
  if (u.comps() != u.domain().n + 1) fail(ErrorKind::wrong_dimension, "map field needs n+1 components");
  Immersion imm;
  imm.du = gradient(u);
  imm.u = std::move(u);
  return imm;
}

Immersion Immersion::affine(const GridDomain& dom, const double* A, const double* b) {
  const int n = dom.n;
  Immersion imm;
  imm.u = sample(dom, Rank::map, n + 1, [&](const Point& x, double* out) {
    for (int c = 0; c <= n; ++c) {
      double s = b[c];
      for (int l = 0; l < n; ++l) s += A[c * n + l] * x[l];
      out[c] = s;
    }
  });
  imm.du = sample(dom, Rank::matrix, (n + 1) * n, [&](const Point&, double* out) {
    std::copy(A, A + (n + 1) * n, out);
  });
  return imm;
}

Immersion Immersion::from_parts(const Field& u, Field du) {
  const int n = du.domain().n;
  if (u.comps() != n + 1 || du.comps() != (n + 1) * n) {
    fail(ErrorKind::wrong_dimension, "map/Jacobian component counts disagree");
  }
  Immersion imm;
  imm.u = restrict(u, du.domain());
  imm.du = std::move(du);
  return imm;
}

void sym_eig_range(int n, const double* m, double* lo, double* hi) {
  if (n == 2) {
    const double a = m[0], b = m[1], d = m[3];
    const double mid = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    *lo = mid - rad;
    *hi = mid + rad;
  } else if (n == 3) {
    Eigen::Matrix3d g;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l) g(k, l) = m[k * 3 + l];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(g, Eigen::EigenvaluesOnly);
    *lo = es.eigenvalues()(0);
    *hi = es.eigenvalues()(2);
  } else {
    Eigen::Matrix4d g;
    for (int k = 0; k < 4; ++k)
      for (int l = 0; l < 4; ++l) g(k, l) = m[k * 4 + l];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(g, Eigen::EigenvaluesOnly);
    *lo = es.eigenvalues()(0);
    *hi = es.eigenvalues()(3);
  }
}

Field induced_metric(const Field& du) {
  const int n = du.domain().n;
  return map_fields(du.domain(), Rank::matrix, n * n, {&du},
                    [n](const Site&, const double* const* in, double* out) { gram(n, in[0], out); });
}

Field induced_metric(const Immersion& u) { return induced_metric(u.du); }

std::variant<RhoCertificate, RhoViolation> check_P_rho(const Immersion& u, double rho) {
  if (rho < 1.0) fail(ErrorKind::precondition_violated, "rho must be at least 1");
  const int n = u.n();
  Field range = map_fields(u.domain(), Rank::vector, 2, {&u.du},
                           [n](const Site&, const double* const* in, double* out) {
                             double g[kMaxDim * kMaxDim];
                             gram(n, in[0], g);
                             sym_eig_range(n, g, &out[0], &out[1]);
                           });
  RhoCertificate cert{rho, 1e300, -1e300};
  std::int64_t worst = -1;
  double worst_eig = 0.0, worst_excess = 0.0;
  for (std::int64_t p = 0; p < range.points(); ++p) {
    const double lo = range.at(p)[0], hi = range.at(p)[1];
    cert.min_eig = std::min(cert.min_eig, lo);
    cert.max_eig = std::max(cert.max_eig, hi);
    const double ex_lo = 1.0 / rho - lo, ex_hi = hi - rho;
    if (ex_lo > worst_excess) {
      worst_excess = ex_lo;
      worst = p;
      worst_eig = lo;
    }
    if (ex_hi > worst_excess) {
      worst_excess = ex_hi;
      worst = p;
      worst_eig = hi;
    }
  }
  if (worst >= 0) {
    RhoViolation v{rho, worst, {}, worst_eig};
    const GridDomain& d = u.domain();
    std::int64_t r = worst;
    for (int a = n - 1; a >= 0; --a) {
      v.x[a] = d.coord(a, r % d.extent[a]);
      r /= d.extent[a];
    }
    return v;
  }
  // |Du|^2 = tr(Du^T Du) <= n rho follows from the upper bound.
  if (sup_norm(u.du) > std::sqrt(n * rho) * (1.0 + 1e-12)) {
    fail(ErrorKind::certificate_degraded, "C1 bound inconsistent with eigenvalue scan");
  }
  return cert;
}

void certify(Immersion& u, double rho, ErrorKind kind) {
  auto res = check_P_rho(u, rho);
  if (auto* v = std::get_if<RhoViolation>(&res)) {
    std::ostringstream os;
    os << "(P_rho) fails for rho=" << rho << ": eigenvalue " << v->eigenvalue << " at x=(";
    for (int a = 0; a < u.n(); ++a) os << (a ? "," : "") << v->x[a];
    os << ")";
    u.cert.reset();
    fail(kind, os.str());
  }
  u.cert = std::get<RhoCertificate>(res);
}

Field normal_from_jacobian(const Field& du, double rho) {
  const int n = du.domain().n;
  const double floor = 0.5 * std::pow(rho, -0.5 * n);
  bool degenerate = false;
  Field z = map_fields(du.domain(), Rank::vector, n + 1, {&du},
                       [&](const Site&, const double* const* in, double* out) {
                         raw_normal(n, in[0], out);
                         double s = 0.0;
                         for (int c = 0; c <= n; ++c) s += out[c] * out[c];
                         s = std::sqrt(s);
                         if (!(s >= floor)) {
#pragma omp atomic write
                           degenerate = true;
                           s = 1.0;
                         }
                         for (int c = 0; c <= n; ++c) out[c] /= s;
                       });
  if (degenerate) fail(ErrorKind::degenerate_jacobian, "normal length below the certified floor");
  return z;
}

Field normal_field(const Immersion& u) {
  if (!u.cert) fail(ErrorKind::certificate_missing, "normal_field needs a (P_rho) certificate");
  return normal_from_jacobian(u.du, u.cert->rho);
}

Field tangential_from_jacobian(const Field& du) {
  const int n = du.domain().n;
  bool degenerate = false;
  Field t = map_fields(du.domain(), Rank::matrix, (n + 1) * n, {&du},
                       [&](const Site&, const double* const* in, double* out) {
                         SmallMat g(n, n);
                         for (int k = 0; k < n; ++k)
                           for (int l = 0; l < n; ++l) {
                             double s = 0.0;
                             for (int c = 0; c <= n; ++c) s += in[0][c * n + k] * in[0][c * n + l];
                             g(k, l) = s;
                           }
                         Eigen::LLT<SmallMat> llt(g);
                         if (llt.info() != Eigen::Success) {
#pragma omp atomic write
                           degenerate = true;
                           std::fill(out, out + (n + 1) * n, 0.0);
                           return;
                         }
                         const SmallMat gi = llt.solve(SmallMat::Identity(n, n));
                         for (int c = 0; c <= n; ++c)
                           for (int l = 0; l < n; ++l) {
                             double s = 0.0;
                             for (int k = 0; k < n; ++k) s += in[0][c * n + k] * gi(k, l);
                             out[c * n + l] = s;
                           }
                       });
  if (degenerate) fail(ErrorKind::degenerate_jacobian, "induced metric not positive definite");
  return t;
}

Field tangential_map(const Immersion& u) {
  if (!u.cert) fail(ErrorKind::certificate_missing, "tangential_map needs a (P_rho) certificate");
  return tangential_from_jacobian(u.du);
}

Frames frames(const Immersion& u) {
  Frames f;
  f.zeta = normal_field(u);
  f.T = tangential_map(u);
  f.dzeta = gradient(f.zeta);
  f.dT = gradient(f.T);
  return f;
}

double first_seminorm(const Field& du) {
  const int n = du.domain().n;
  const int rows = du.comps() / n;
  double best = 0.0;
  for (std::int64_t p = 0; p < du.points(); ++p) {
    const double* d = du.at(p);
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int c = 0; c < rows; ++c) s += d[c * n + l] * d[c * n + l];
      best = std::max(best, std::sqrt(s));
    }
  }
  return best;
}

double second_seminorm(const Field& du) {
  const int n = du.domain().n;
  const Field d2 = gradient(du);
  const int rows = du.comps() / n;
  double best = 0.0;
  for (std::int64_t p = 0; p < d2.points(); ++p) {
    const double* d = d2.at(p);
    for (int l = 0; l < n; ++l)
      for (int m = 0; m < n; ++m) {
        double s = 0.0;
        for (int c = 0; c < rows; ++c) {
          const double v = d[(c * n + l) * n + m];
          s += v * v;
        }
        best = std::max(best, std::sqrt(s));
      }
  }
  return best;
}

NormalCloseness normal_closeness(const Immersion& u, const Immersion& v) {
  const GridDomain common = intersect(u.domain(), v.domain());
  const Field zu = restrict(normal_field(u), common);
  const Field zv = restrict(normal_field(v), common);
  NormalCloseness r;
  r.distance = sup_norm(combine(zv, 1.0, zu, -1.0));
  r.seminorm1 = first_seminorm(combine(restrict(v.du, common), 1.0, restrict(u.du, common), -1.0));
  r.ratio = r.seminorm1 > 0.0 ? r.distance / r.seminorm1 : 0.0;
  return r;
}

}  // namespace corrugate
