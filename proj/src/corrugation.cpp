#include "corrugate/corrugation.hpp"

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

double frob(int m, const double* v) {
  double s = 0.0;
  for (int e = 0; e < m; ++e) s += v[e] * v[e];
  return std::sqrt(s);
}

double column_max(const Field& f) {
  double best = 0.0;
  for (std::int64_t p = 0; p < f.points(); ++p) best = std::max(best, f.at(p)[0]);
  return best;
}

void require_resolved(double nu, double h) {
  if (nu * h > 2.0 * std::numbers::pi / 16.0) {
    fail(ErrorKind::under_resolved_grid, "grid resolves the frequency with fewer than 16 points per period");
  }
}

// Du^T Du for a row-major (n+1) x n block.
void gram(int n, const double* d, double* g) {
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int c = 0; c <= n; ++c) s += d[c * n + k] * d[c * n + l];
      g[k * n + l] = s;
    }
}

Field sum_on(const std::vector<Field>& parts, const GridDomain& dom, Rank rank, int comps) {
  Field out(dom, rank, comps);
  for (const Field& f : parts) {
    double* o = out.data().data();
    for_each_site(dom, {&f}, [&](const Site& s, const double* const* in) {
      for (int c = 0; c < comps; ++c) o[s.index * comps + c] += in[0][c];
    });
  }
  return out;
}

}  // namespace

StepOutcome step_perturb(const Immersion& u, const StepParams& p, const Frames* fr) {
  if (!u.cert) fail(ErrorKind::certificate_missing, "step_perturb needs a (P_rho) certificate");
  const int n = u.n();
  require_resolved(p.nu, u.domain().h);
  Frames local;
  if (!fr) {
    local = frames(u);
    fr = &local;
  }
  const Field ga = gradient(p.a);
  Field w = p.w, dw = p.dw;
  if (w.empty()) {
    w = Field::vector(ga.domain(), n);
    dw = Field(ga.domain(), Rank::matrix, n * n);
  }
  GridDomain dv = intersect(fr->dzeta.domain(), fr->dT.domain());
  dv = intersect(dv, ga.domain());
  dv = intersect(dv, w.domain());
  dv = intersect(dv, dw.domain());
  dv = intersect(dv, u.u.domain());

  const Gammas g = gammas();
  const double cbar = gamma2_square_mean();
  const double d = p.delta, sd = std::sqrt(p.delta);
  const int m1 = n + 1;
  Field vu = Field::map(dv);
  Field vdu(dv, Rank::matrix, m1 * n);
  Field buckets = Field::vector(dv, 4);
  double* ov = vu.data().data();
  double* od = vdu.data().data();
  double* ob = buckets.data().data();

  for_each_site(dv, {&u.u, &u.du, &fr->zeta, &fr->T, &fr->dzeta, &fr->dT, &p.a, &ga, &w, &dw},
                [&](const Site& s, const double* const* in) {
                  const double* U = in[0];
                  const double* Du = in[1];
                  const double* z = in[2];
                  const double* T = in[3];
                  const double* dz = in[4];
                  const double* dT = in[5];
                  const double a = in[6][0];
                  const double* ga_ = in[7];
                  const double* W = in[8];
                  const double* dW = in[9];
                  const double th = p.nu * dot(n, p.eta, s.x);
                  double g1, g1p, g2, g2p;
                  g.g1.eval2(th, &g1, &g1p);
                  g.g2.eval2(th, &g2, &g2p);

                  double Teta[kMaxDim + 1], psi[kMaxDim];
                  for (int k = 0; k < n; ++k) psi[k] = a * a * g1 / p.nu * p.eta[k] + W[k];
                  double* V = ov + s.index * m1;
                  double* Dv = od + s.index * m1 * n;
                  for (int c = 0; c < m1; ++c) {
                    double te = 0.0, tp = 0.0;
                    for (int k = 0; k < n; ++k) {
                      te += T[c * n + k] * p.eta[k];
                      tp += T[c * n + k] * psi[k];
                    }
                    Teta[c] = te;
                    V[c] = U[c] + d * tp + sd * a * g2 / p.nu * z[c];
                  }
                  for (int c = 0; c < m1; ++c) {
                    for (int l = 0; l < n; ++l) {
                      double tdw = 0.0, dtw = 0.0, dteta = 0.0;
                      for (int k = 0; k < n; ++k) {
                        tdw += T[c * n + k] * dW[k * n + l];
                        dtw += dT[(c * n + k) * n + l] * W[k];
                        dteta += dT[(c * n + k) * n + l] * p.eta[k];
                      }
                      const double A1 = d * a * a * g1p * Teta[c] * p.eta[l];
                      const double A2 = sd * a * g2p * z[c] * p.eta[l];
                      const double B1 = d * tdw;
                      const double B2 = d * dtw;
                      const double C1 = d * g1 / p.nu * Teta[c] * 2.0 * a * ga_[l];
                      const double C2 = d * g1 / p.nu * a * a * dteta;
                      const double D1 = sd * g2 / p.nu * z[c] * ga_[l];
                      const double D2 = sd * g2 / p.nu * a * dz[c * n + l];
                      Dv[c * n + l] = Du[c * n + l] + A1 + A2 + B1 + B2 + C1 + C2 + D1 + D2;
                    }
                  }
                  double Gv[kMaxDim * kMaxDim], Gu[kMaxDim * kMaxDim];
                  double En[kMaxDim * kMaxDim], Eg[kMaxDim * kMaxDim], Eo[kMaxDim * kMaxDim], R[kMaxDim * kMaxDim];
                  gram(n, Dv, Gv);
                  gram(n, Du, Gu);
                  const double lead_coef = d * a * a * (2.0 * g1p + g2p * g2p);
                  for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                      double dudz_kl = 0.0, dudz_lk = 0.0;
                      for (int c = 0; c < m1; ++c) {
                        dudz_kl += Du[c * n + k] * dz[c * n + l];
                        dudz_lk += Du[c * n + l] * dz[c * n + k];
                      }
                      const int e = k * n + l;
                      En[e] = sd * a * g2 / p.nu * (dudz_kl + dudz_lk);
                      Eg[e] = d * (2.0 * g1 + g2 * g2p) / p.nu * a * (ga_[k] * p.eta[l] + p.eta[k] * ga_[l]);
                      Eo[e] = d * (g2 * g2 - cbar) / (p.nu * p.nu) * ga_[k] * ga_[l];
                      const double lead = lead_coef * p.eta[k] * p.eta[l] + d * (dW[k * n + l] + dW[l * n + k]) +
                                          d * cbar / (p.nu * p.nu) * ga_[k] * ga_[l] + En[e] + Eg[e] + Eo[e];
                      R[e] = d > 0.0 ? (Gv[e] - Gu[e] - lead) / (d * sd) : 0.0;
                    }
                  double* B = ob + s.index * 4;
                  B[0] = frob(n * n, R);
                  B[1] = frob(n * n, En);
                  B[2] = frob(n * n, Eg);
                  B[3] = frob(n * n, Eo);
                });
  check_finite(vdu, "step_perturb");

  StepOutcome out;
  out.v.u = std::move(vu);
  out.v.du = std::move(vdu);
  out.v.meta = u.meta;
  StepReport& r = out.report;
  r.nu_h = p.nu * dv.h;
  for (std::int64_t q = 0; q < buckets.points(); ++q) {
    const double* b = buckets.at(q);
    r.remainder = std::max(r.remainder, b[0]);
    r.normal = std::max(r.normal, b[1]);
    r.grad = std::max(r.grad, b[2]);
    r.osc = std::max(r.osc, b[3]);
  }
  r.scales_ordered = p.nu >= p.mu && p.mu >= p.lambda && (d <= 0.0 || p.lambda >= 1.0 / sd);

  // Independent route: central differences of the assembled map.
  const Field fdv = gradient(out.v.u);
  const Field fdu = gradient(u.u);
  const Field ident = map_fields(fdv.domain(), Rank::scalar, 1, {&fdv, &fdu, &out.v.du, &u.du},
                                 [n](const Site&, const double* const* in, double* o) {
                                   double a[kMaxDim * kMaxDim], b[kMaxDim * kMaxDim];
                                   double c[kMaxDim * kMaxDim], e[kMaxDim * kMaxDim];
                                   gram(n, in[0], a);
                                   gram(n, in[1], b);
                                   gram(n, in[2], c);
                                   gram(n, in[3], e);
                                   double s = 0.0;
                                   for (int k = 0; k < n * n; ++k) {
                                     const double x = (a[k] - b[k]) - (c[k] - e[k]);
                                     s += x * x;
                                   }
                                   o[0] = std::sqrt(s);
                                 });
  r.identity = column_max(ident);
  const double a0 = sup_norm(p.a);
  r.identity_scale = d * a0 * a0;
  r.c0_increment = sup_norm(combine(out.v.u, 1.0, u.u, -1.0));
  r.c1_increment = first_seminorm(combine(out.v.du, 1.0, u.du, -1.0));
  return out;
}

SharpD2 sharp_d2_check(const Immersion& u, const Immersion& v, const StepParams& p) {
  const int n = u.n();
  const Field zeta = normal_field(u);
  const Field d2v = gradient(v.du);
  const Field d2u = gradient(u.du);
  const TrigPoly g2pp = gammas().g2.derivative().derivative();
  const double sd = std::sqrt(p.delta);
  const Field dev = map_fields(d2v.domain(), Rank::scalar, 1, {&d2v, &d2u, &p.a, &zeta},
                               [&](const Site& s, const double* const* in, double* o) {
                                 const double a = in[2][0];
                                 const double amp = sd * p.nu * a * g2pp(p.nu * dot(n, p.eta, s.x));
                                 double best = 0.0;
                                 for (int k = 0; k < n; ++k)
                                   for (int l = k; l < n; ++l) {
                                     double acc = 0.0;
                                     for (int c = 0; c <= n; ++c) {
                                       const int e = (c * n + l) * n + k;
                                       const double x =
                                           in[0][e] - in[1][e] - amp * in[3][c] * p.eta[k] * p.eta[l];
                                       acc += x * x;
                                     }
                                     best = std::max(best, std::sqrt(acc));
                                   }
                                 o[0] = best;
                               });
  SharpD2 r;
  r.deviation = column_max(dev);
  r.bound = sd * (p.lambda + sd * p.nu);
  r.ratio = r.bound > 0.0 ? r.deviation / r.bound : 0.0;
  return r;
}

namespace {

struct Corrector {
  Field w;
  Field dw;
  std::vector<Field> f_l;
  std::vector<Field> f_m;
  double identity = 0.0;
};

void add_ibp(Corrector& c, const IbpResult& r, double sign) {
  if (c.w.empty()) {
    c.w = scaled(r.w, sign);
    c.dw = scaled(r.dw, sign);
  } else {
    c.w = combine(c.w, 1.0, r.w, sign);
    c.dw = combine(c.dw, 1.0, r.dw, sign);
  }
}

// (Dv^T Dv - Du^T Du - delta * known) / delta on v's domain.
Field measured_remainder(const Immersion& u, const Immersion& v, const Field& known, double delta) {
  const int n = v.n();
  return map_fields(v.domain(), Rank::matrix, n * n, {&v.du, &u.du, &known},
                    [&](const Site&, const double* const* in, double* o) {
                      double gv[kMaxDim * kMaxDim], gu[kMaxDim * kMaxDim];
                      gram(n, in[0], gv);
                      gram(n, in[1], gu);
                      for (int e = 0; e < n * n; ++e) o[e] = (gv[e] - gu[e]) / delta - in[2][e];
                    });
}

SubstageTraceRow trace_row(int j, double nu, const StepReport& r, const Field* F, const Immersion& v) {
  SubstageTraceRow t;
  t.j = j;
  t.nu = nu;
  t.normal = r.normal;
  t.grad = r.grad;
  t.osc = r.osc;
  t.remainder = r.remainder;
  t.f = F ? sup_norm(*F) : 0.0;
  t.identity = r.identity;
  t.u2 = second_seminorm(v.du);
  return t;
}

}  // namespace

SubstageResult substage1(const Immersion& u, const std::vector<Field>& a, double lambda, double K, double delta,
                         const SubstageOptions& opts) {
  const int n = u.n();
  if (static_cast<int>(a.size()) != n) fail(ErrorKind::index_out_of_range, "substage1 needs n amplitudes");
  if (!u.cert) fail(ErrorKind::certificate_missing, "substage1 needs a (P_rho) certificate");
  if (!(K > 1.0) || !(lambda >= 1.0) || !(delta > 0.0 && delta < 1.0)) {
    fail(ErrorKind::precondition_violated, "substage1 needs K > 1, lambda >= 1, 0 < delta < 1");
  }
  const Gammas g = gammas();
  const double cbar = gamma2_square_mean();
  const TrigPoly gam_grad = 2.0 * g.g1 + g.g2 * g.g2.derivative();
  const TrigPoly gam_osc = g.g2 * g.g2 - TrigPoly::constant(cbar);
  const double sd = std::sqrt(delta);

  SubstageResult res;
  Immersion cur = u;
  std::vector<Field> f_parts;
  double mu_prev = lambda;
  for (int j = 1; j <= n; ++j) {
    const double nu = lambda * std::pow(K, j);
    const Vec eta_j = eta(n, 1, j);
    res.nu.push_back(nu);
    require_resolved(nu, u.domain().h);
    const Frames fr = frames(cur);
    const Field& aj = a[j - 1];
    const Field ga = gradient(aj);
    const AlgebraicSplitter& split = algebraic_splitter(n, 1, eta_j);

    // The three oscillatory second-line terms, divided by delta.
    const GridDomain dm = intersect(intersect(fr.dzeta.domain(), ga.domain()), aj.domain());
    const Field m_normal = map_fields(dm, Rank::matrix, n * n, {&cur.du, &fr.dzeta, &aj},
                                      [&](const Site&, const double* const* in, double* o) {
                                        const double c = 2.0 / sd * in[2][0] / nu;
                                        for (int k = 0; k < n; ++k)
                                          for (int l = 0; l < n; ++l) {
                                            double s = 0.0;
                                            for (int q = 0; q <= n; ++q)
                                              s += in[0][q * n + k] * in[1][q * n + l] + in[0][q * n + l] * in[1][q * n + k];
                                            o[k * n + l] = 0.5 * c * s;
                                          }
                                      });
    const Field m_grad = map_fields(dm, Rank::matrix, n * n, {&aj, &ga},
                                    [&](const Site&, const double* const* in, double* o) {
                                      const double a0 = in[0][0];
                                      for (int k = 0; k < n; ++k)
                                        for (int l = 0; l < n; ++l)
                                          o[k * n + l] = a0 / nu * (in[1][k] * eta_j[l] + eta_j[k] * in[1][l]);
                                    });
    const Field m_osc = map_fields(dm, Rank::matrix, n * n, {&ga}, [&](const Site&, const double* const* in, double* o) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) o[k * n + l] = in[0][k] * in[0][l] / (nu * nu);
    });

    Corrector corr;
    const std::pair<const Field*, const TrigPoly*> terms[3] = {{&m_normal, &g.g2}, {&m_grad, &gam_grad}, {&m_osc, &gam_osc}};
    for (const auto& [M, gam] : terms) {
      Field alpha = Field::vector(dm, n);
      Field pil = Field::matrix(dm);
      double* oa = alpha.data().data();
      double* op = pil.data().data();
      for_each_site(dm, {M}, [&](const Site& s, const double* const* in) {
        split.split_full(in[0], oa + s.index * n, nullptr, op + s.index * n * n);
      });
      IbpParams ip;
      ip.i = 1;
      ip.xi = eta_j;
      ip.eta = eta_j;
      ip.gamma = *gam;
      ip.nu = nu;
      ip.mu = mu_prev;
      ip.lambda = lambda;
      ip.J = opts.J;
      SeparableAmplitude A;
      A.i = 1;
      A.add(TrigPoly::constant(1.0), std::move(alpha));
      const IbpResult ir = ibp_correct(ip, A);
      if (opts.verify_ibp) res.ibp_identity = std::max(res.ibp_identity, verify_ibp_identity(ir, A).analytic);
      add_ibp(corr, ir, -1.0);
      const TrigPoly gcopy = *gam;
      f_parts.push_back(map_fields(ir.f_l.domain(), Rank::matrix, n * n, {&ir.f_l, &pil},
                                   [&](const Site& s, const double* const* in, double* o) {
                                     const double gv = gcopy(nu * dot(n, eta_j, s.x));
                                     for (int e = 0; e < n * n; ++e) o[e] = in[0][e] + gv * in[1][e];
                                   }));
    }

    StepParams sp;
    sp.delta = delta;
    sp.nu = nu;
    sp.eta = eta_j;
    sp.a = aj;
    sp.w = std::move(corr.w);
    sp.dw = std::move(corr.dw);
    sp.lambda = lambda;
    sp.mu = mu_prev;
    StepOutcome st = step_perturb(cur, sp, &fr);
    certify(st.v, 2.0 * opts.rho);
    cur = std::move(st.v);
    const Field Fj = sum_on(f_parts, cur.domain(), Rank::matrix, n * n);
    res.trace.push_back(trace_row(j, nu, st.report, &Fj, cur));
    mu_prev = nu;
  }

  const GridDomain dfin = cur.domain();
  res.F = sum_on(f_parts, dfin, Rank::matrix, n * n);
  // delta sum a^2 eta eta + delta sum cbar / nu^2 grad a grad a + delta F, over delta
  Field known = res.F;
  for (int j = 1; j <= n; ++j) {
    const Vec eta_j = eta(n, 1, j);
    const double nu = res.nu[j - 1];
    const Field ga = gradient(a[j - 1]);
    double* o = known.data().data();
    for_each_site(dfin, {&a[j - 1], &ga}, [&](const Site& s, const double* const* in) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          o[s.index * n * n + k * n + l] += in[0][0] * in[0][0] * eta_j[k] * eta_j[l] +
                                            cbar / (nu * nu) * in[1][k] * in[1][l];
    });
  }
  res.R = measured_remainder(u, cur, known, delta);
  res.v = std::move(cur);
  return res;
}

SubstageResult substage2(int i, const Immersion& u, const std::vector<Field>& a, double lambda, double K,
                         double delta, const SubstageOptions& opts) {
  const int n = u.n();
  if (i < 2 || i > n) fail(ErrorKind::index_out_of_range, "substage2 family index out of range");
  if (static_cast<int>(a.size()) != n - i + 1) fail(ErrorKind::index_out_of_range, "substage2 needs n-i+1 amplitudes");
  if (!u.cert) fail(ErrorKind::certificate_missing, "substage2 needs a (P_rho) certificate");
  if (!(K > 1.0) || !(lambda >= 1.0) || !(delta > 0.0 && delta < 1.0)) {
    fail(ErrorKind::precondition_violated, "substage2 needs K > 1, lambda >= 1, 0 < delta < 1");
  }
  const Gammas g = gammas();
  const TrigPoly g2pp = g.g2.derivative().derivative();

  SubstageResult res;
  Immersion cur = u;
  std::vector<Field> f_parts;
  double nu = std::pow(K, opts.J) * lambda;
  for (int j = i; j <= n; ++j) {
    if (j > i) nu *= K;
    res.nu.push_back(nu);
    require_resolved(nu, u.domain().h);
    const Vec eta_ij = eta(n, i, j);
    const Field& aj = a[j - i];
    Corrector corr;
    for (int k = i; k < j; ++k) {
      const Vec eta_ik = eta(n, i, k);
      const double nu_k = res.nu[k - i];
      const Field& ak = a[k - i];
      const GridDomain dk = intersect(aj.domain(), ak.domain());
      Field B = map_fields(dk, Rank::vector, n, {&aj, &ak}, [&](const Site&, const double* const* in, double* o) {
        for (int c = 0; c < n; ++c) o[c] = -(nu_k / nu) * in[0][0] * in[1][0] * eta_ik[c];
      });
      IbpParams ip;
      ip.i = i;
      ip.xi = eta_ij;
      ip.eta = eta_ik;
      ip.gamma = g.g2;
      ip.nu = nu;
      ip.mu = nu_k;
      ip.lambda = lambda;
      ip.J = opts.J;
      SeparableAmplitude A;
      A.i = i;
      A.add(g2pp, std::move(B));
      const IbpResult ir = ibp_correct(ip, A);
      if (opts.verify_ibp) res.ibp_identity = std::max(res.ibp_identity, verify_ibp_identity(ir, A).analytic);
      add_ibp(corr, ir, -1.0);
      f_parts.push_back(ir.f_l);
    }
    const Frames fr = frames(cur);
    StepParams sp;
    sp.delta = delta;
    sp.nu = nu;
    sp.eta = eta_ij;
    sp.a = aj;
    sp.w = std::move(corr.w);
    sp.dw = std::move(corr.dw);
    sp.lambda = lambda;
    sp.mu = j > i ? res.nu[j - i - 1] : lambda;
    StepOutcome st = step_perturb(cur, sp, &fr);
    certify(st.v, 2.0 * opts.rho);
    cur = std::move(st.v);
    const Field Fj = sum_on(f_parts, cur.domain(), Rank::matrix, n * n);
    res.trace.push_back(trace_row(j, nu, st.report, &Fj, cur));
  }

  const GridDomain dfin = cur.domain();
  res.F = sum_on(f_parts, dfin, Rank::matrix, n * n);
  Field known = res.F;
  for (int j = i; j <= n; ++j) {
    const Vec e = eta(n, i, j);
    double* o = known.data().data();
    for_each_site(dfin, {&a[j - i]}, [&](const Site& s, const double* const* in) {
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) o[s.index * n * n + k * n + l] += in[0][0] * in[0][0] * e[k] * e[l];
    });
  }
  res.R = measured_remainder(u, cur, known, delta);
  res.v = std::move(cur);
  return res;
}

void write_substage_csv(const SubstageResult& r, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) fail(ErrorKind::io_error, "cannot open " + path);
  std::fprintf(f, "# remainder is the total residual after the closed-form terms, not a fixed regrouping\n");
  std::fprintf(f, "j,nu,normal,grad,osc,remainder,f,identity,u2\n");
  for (const auto& t : r.trace) {
    std::fprintf(f, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", t.j, t.nu, t.normal, t.grad, t.osc, t.remainder,
                 t.f, t.identity, t.u2);
  }
  std::fclose(f);
}

}  // namespace corrugate
