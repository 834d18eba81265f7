#include "corrugate/ibp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace corrugate {

namespace {

double dot(int n, const Vec& a, const Point& x) {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += a[k] * x[k];
  return s;
}

// out += s * (a (.) b)
void add_sym_product(int n, double s, const double* a, const Vec& b, double* out) {
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) out[k * n + l] += s * (a[k] * b[l] + b[k] * a[l]);
}

void check_params(const IbpParams& p, int n) {
  const int i0 = p.i - 1;
  if (p.i < 1 || p.i > n) fail(ErrorKind::index_out_of_range, "IBP family index out of range");
  for (int k = 0; k < i0; ++k) {
    if (p.xi[k] != 0.0 || p.eta[k] != 0.0) {
      fail(ErrorKind::ill_posed_direction, "directions must vanish below the family index");
    }
  }
  if (std::abs(p.xi[i0]) < 1e-10) fail(ErrorKind::ill_posed_direction, "xi_i vanishes");
  if (std::abs(p.eta[i0]) < 1e-10) fail(ErrorKind::ill_posed_direction, "eta_i vanishes");
  if (p.gamma.coeff(0) != 0.0) fail(ErrorKind::nonzero_mean_input, "IBP profile must have zero mean");
  if (!(p.nu >= p.mu && p.mu >= p.lambda && p.lambda >= 1.0)) {
    fail(ErrorKind::precondition_violated, "IBP needs nu >= mu >= lambda >= 1");
  }
  if (p.J < 0 || p.J > kMaxIbpSteps) fail(ErrorKind::precondition_violated, "IBP step count out of range");
}

}  // namespace

GridDomain SeparableAmplitude::domain() const {
  if (terms.empty()) fail(ErrorKind::precondition_violated, "amplitude has no terms");
  GridDomain d = terms.front().B.domain();
  for (const auto& t : terms) d = intersect(d, t.B.domain());
  return d;
}

void SeparableAmplitude::add(TrigPoly P, Field B) {
  for (auto& t : terms) {
    if (t.P == P) {
      t.B = combine(t.B, 1.0, B, 1.0);
      return;
    }
  }
  if (terms.size() >= kMaxAmplitudeTerms) fail(ErrorKind::term_count_overflow, "separable amplitude term cap reached");
  terms.push_back({std::move(P), std::move(B)});
}

void SeparableAmplitude::validate(double tol) const {
  for (const auto& t : terms) {
    for (int k = 0; k < i - 1; ++k) {
      if (sup_abs_component(t.B, k) > tol) {
        fail(ErrorKind::precondition_violated, "amplitude component below the family index is nonzero");
      }
    }
  }
}

Field SeparableAmplitude::evaluate(const Vec& eta, double mu, const GridDomain& dom) const {
  const int n = dom.n;
  Field out = Field::vector(dom, n);
  for (const auto& t : terms) {
    double* o = out.data().data();
    for_each_site(dom, {&t.B}, [&](const Site& s, const double* const* in) {
      const double P = t.P(mu * dot(n, eta, s.x));
      for (int k = 0; k < n; ++k) o[s.index * n + k] += P * in[0][k];
    });
  }
  return out;
}

IbpResult ibp_correct(const IbpParams& p, const SeparableAmplitude& A) {
  const GridDomain d0 = A.domain();
  const int n = d0.n;
  check_params(p, n);
  A.validate();
  const int i0 = p.i - 1;
  const double ratio = p.mu / p.nu;

  Vec eta_perp{};
  const double c_eta = p.eta[i0] / p.xi[i0];
  for (int k = 0; k < n; ++k) eta_perp[k] = p.eta[k] - c_eta * p.xi[k];
  eta_perp[i0] = 0.0;  // exact, so B_perp (.) eta_perp stays in V_{i+1}

  const GridDomain dout = d0.shrink(p.J);
  IbpResult r;
  r.params = p;
  r.w = Field::vector(dout, n);
  r.dw = Field(dout, Rank::matrix, n * n);
  r.f_m = Field::matrix(dout);
  r.f_l = Field::matrix(dout);
  const AlgebraicSplitter& split = algebraic_splitter(n, p.i, p.eta);

  SeparableAmplitude cur;
  cur.i = A.i;
  for (const auto& t : A.terms) cur.add(t.P, restrict(t.B, d0));
  TrigPoly g_prev = p.gamma;
  double s = 1.0;

  for (int j = 1; j <= p.J; ++j) {
    const TrigPoly g_j = zero_mean_primitive(g_prev);
    const GridDomain dn = cur.domain().shrink(1);
    SeparableAmplitude next;
    next.i = A.i;
    for (const auto& t : cur.terms) {
      // B~ = (eta_i/xi_i) B + (B_i/xi_i) eta_perp
      Field bt = map_fields(t.B.domain(), Rank::vector, n, {&t.B},
                            [&](const Site&, const double* const* in, double* out) {
                              const double bi = in[0][i0] / p.xi[i0];
                              for (int k = 0; k < n; ++k) out[k] = c_eta * in[0][k] + bi * eta_perp[k];
                            });
      const Field dbt = gradient(bt);
      const TrigPoly dP = t.P.derivative();

      double* w = r.w.data().data();
      double* dw = r.dw.data().data();
      double* fm = r.f_m.data().data();
      double* fl = r.f_l.data().data();
      for_each_site(dout, {&t.B, &bt, &dbt}, [&](const Site& st, const double* const* in) {
        const double th = p.nu * dot(n, p.xi, st.x);
        const double tt = p.mu * dot(n, p.eta, st.x);
        const double gp = g_prev(th);
        const double gj = g_j(th);
        double P = 0.0, Pd = 0.0;
        t.P.eval2(tt, &P, &Pd);
        const double* B = in[0];
        const double* Bt = in[1];
        const double* D = in[2];
        const std::int64_t q = st.index;
        for (int c = 0; c < n; ++c) {
          w[q * n + c] += s * gj / p.nu * P * Bt[c];
          for (int l = 0; l < n; ++l) {
            dw[(q * n + c) * n + l] +=
                s * (gp * P * Bt[c] * p.xi[l] + gj / p.nu * (p.mu * Pd * Bt[c] * p.eta[l] + P * D[c * n + l]));
          }
        }
        double sym[kMaxDim * kMaxDim], pm[kMaxDim * kMaxDim], pl[kMaxDim * kMaxDim];
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) sym[k * n + l] = 0.5 * (D[k * n + l] + D[l * n + k]);
        split.split_full(sym, nullptr, pm, pl);
        const double cp = -2.0 * s * gj / p.nu * P;
        for (int e = 0; e < n * n; ++e) {
          fm[q * n * n + e] += cp * pm[e];
          fl[q * n * n + e] += cp * pl[e];
        }
        double bp[kMaxDim];
        const double bi = B[i0] / p.xi[i0];
        for (int k = 0; k < n; ++k) bp[k] = B[k] - bi * p.xi[k];
        bp[i0] = 0.0;
        add_sym_product(n, s * gp * P, bp, eta_perp, fl + q * n * n);
      });

      // A^j = -d_t A~ - (2/mu) alpha(sym D_x A~)
      Field alpha = map_fields(dn, Rank::vector, n, {&dbt},
                               [&](const Site&, const double* const* in, double* out) {
                                 double sym[kMaxDim * kMaxDim];
                                 for (int k = 0; k < n; ++k)
                                   for (int l = 0; l < n; ++l) sym[k * n + l] = 0.5 * (in[0][k * n + l] + in[0][l * n + k]);
                                 split.split_full(sym, out, nullptr, nullptr);
                                 for (int k = 0; k < n; ++k) out[k] *= -2.0 / p.mu;
                               });
      if (!(dP == TrigPoly())) next.add(-1.0 * dP, restrict(bt, dn));
      next.add(t.P, std::move(alpha));
    }
    cur = std::move(next);
    g_prev = g_j;
    s *= ratio;

    IbpStepNorm norm;
    norm.j = j;
    norm.f_m = sup_norm(r.f_m);
    norm.f_l = sup_norm(r.f_l);
    IbpResult probe;
    probe.params = p;
    probe.params.J = j;
    probe.gamma_J = g_prev;
    probe.A_J = cur;
    probe.w = Field::vector(dout, n);
    norm.residual = sup_norm(ibp_residual(probe));
    r.trace.push_back(norm);
  }
  r.gamma_J = g_prev;
  r.A_J = std::move(cur);
  check_finite(r.dw, "ibp_correct");
  check_finite(r.f_l, "ibp_correct");
  return r;
}

Field ibp_lhs(const IbpParams& p, const SeparableAmplitude& A, const GridDomain& dom) {
  const int n = dom.n;
  const Field a = A.evaluate(p.eta, p.mu, dom);
  return map_fields(dom, Rank::matrix, n * n, {&a}, [&](const Site& s, const double* const* in, double* out) {
    std::fill(out, out + n * n, 0.0);
    add_sym_product(n, p.gamma(p.nu * dot(n, p.xi, s.x)), in[0], p.eta, out);
  });
}

Field ibp_residual(const IbpResult& r) {
  const IbpParams& p = r.params;
  const GridDomain& dom = r.w.domain();
  const int n = dom.n;
  if (r.A_J.terms.empty()) return Field::matrix(dom);
  const double s = std::pow(p.mu / p.nu, p.J);
  const Field a = r.A_J.evaluate(p.eta, p.mu, dom);
  return map_fields(dom, Rank::matrix, n * n, {&a}, [&](const Site& st, const double* const* in, double* out) {
    std::fill(out, out + n * n, 0.0);
    add_sym_product(n, s * r.gamma_J(p.nu * dot(n, p.xi, st.x)), in[0], p.eta, out);
  });
}

IbpIdentityReport verify_ibp_identity(const IbpResult& r, const SeparableAmplitude& A) {
  const IbpParams& p = r.params;
  const GridDomain& dom = r.w.domain();
  const int n = dom.n;
  IbpIdentityReport rep;
  rep.nu_h = p.nu * dom.h;
  if (rep.nu_h > 2.0 * std::numbers::pi / 16.0) {
    fail(ErrorKind::under_resolved_grid, "grid resolves nu with fewer than 16 points per period");
  }
  const Field lhs = ibp_lhs(p, A, dom);
  const Field res = ibp_residual(r);
  rep.scale = sup_norm(lhs);
  auto defect = [&](const Field& dw, const GridDomain& d) {
    const Field out = map_fields(d, Rank::matrix, n * n, {&lhs, &res, &r.f_m, &r.f_l, &dw},
                                 [&](const Site&, const double* const* in, double* o) {
                                   for (int k = 0; k < n; ++k)
                                     for (int l = 0; l < n; ++l) {
                                       const int e = k * n + l;
                                       const double sym2 = in[4][k * n + l] + in[4][l * n + k];
                                       o[e] = in[0][e] - (sym2 + in[1][e] + in[2][e] + in[3][e]);
                                     }
                                 });
    return sup_norm(out);
  };
  rep.analytic = defect(r.dw, dom);
  const Field fd = gradient(r.w);
  rep.fd = defect(fd, fd.domain());
  return rep;
}

void write_ibp_trace_csv(const IbpResult& r, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) fail(ErrorKind::io_error, "cannot open " + path);
  std::fprintf(f, "j,residual,f_m,f_l\n");
  for (const auto& s : r.trace) std::fprintf(f, "%d,%.9g,%.9g,%.9g\n", s.j, s.residual, s.f_m, s.f_l);
  std::fclose(f);
}

}  // namespace corrugate
