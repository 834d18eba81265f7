#include "corrugate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace corrugate {

namespace {

using Json = nlohmann::ordered_json;

void gram(int n, const double* d, double* g) {
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int c = 0; c <= n; ++c) s += d[c * n + k] * d[c * n + l];
      g[k * n + l] = s;
    }
}

// g - Du^T Du - delta H_0 on dom.
Field defect_field(const Field& g, const Field& du, double delta, const GridDomain& dom) {
  const int n = dom.n;
  SymMat H0 = h0(n);
  return map_fields(dom, Rank::matrix, n * n, {&g, &du}, [&](const Site&, const double* const* in, double* o) {
    double G[kMaxDim * kMaxDim];
    gram(n, in[1], G);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) o[k * n + l] = in[0][k * n + l] - G[k * n + l] - delta * H0(k, l);
  });
}

double defect_norm(const Field& g, const Immersion& u, double delta, const GridDomain& dom) {
  return sup_norm(defect_field(g, u.du, delta, dom));
}

double frob_h0(int n) { return h0(n).norm(); }

std::int64_t collar_cells(double collar, double h) {
  return static_cast<std::int64_t>(std::floor(collar / h + 1e-9));
}

// Pointwise basic decomposition of a matrix field; one scalar field per packed slot.
std::vector<Field> basic_coefficients(const Field& M) {
  const int n = M.domain().n;
  const PrimitiveBasis& basis = primitive_basis(n);
  const int ns = basis.count();
  Field all = map_fields(M.domain(), Rank::vector, ns, {&M}, [&](const Site&, const double* const* in, double* o) {
    basis.decompose_full(in[0], o);
  });
  std::vector<Field> out;
  for (int s = 0; s < ns; ++s) {
    out.push_back(map_fields(M.domain(), Rank::scalar, 1, {&all},
                             [s](const Site&, const double* const* in, double* o) { o[0] = in[0][s]; }));
  }
  return out;
}

Immersion restrict_immersion(const Immersion& u, const GridDomain& dom) {
  Immersion v = Immersion::from_parts(restrict(u.u, dom), restrict(u.du, dom));
  v.meta = u.meta;
  v.cert = u.cert;
  return v;
}

}  // namespace

double Schedule::collar(int q) const { return params.dist0 * std::pow(2.0, -q); }
double Schedule::d(int q) const { return params.dist0 * std::pow(2.0, -q); }

Schedule make_schedule(const ScheduleParams& p) {
  if (p.n < 2 || p.n > kMaxDim) fail(ErrorKind::index_out_of_range, "dimension must be in [2, 4]");
  if (p.J < 1 || p.J > kMaxIbpSteps) fail(ErrorKind::precondition_violated, "J must be in [1, 12]");
  if (p.Q < 0) fail(ErrorKind::precondition_violated, "stage count must be nonnegative");
  Schedule s;
  s.params = p;
  const int n = p.n;
  s.beta = 1.0 / (1.0 + 2.0 * (n - 1) + 4.0 * n * n / p.J);
  const double theta_max = 1.0 / (1.0 + 2.0 * (n - 1));
  if (!(p.theta > 0.0) || p.theta >= theta_max) {
    std::ostringstream os;
    os << "theta = " << p.theta << " must lie in (0, 1/(1+2(n-1))) = (0, " << theta_max << ")";
    fail(ErrorKind::invalid_exponent, os.str());
  }
  if (p.theta >= s.beta) {
    std::ostringstream os;
    os << "theta = " << p.theta << " must be below beta = 1/(1+2(n-1)+4n^2/J) = " << s.beta;
    fail(ErrorKind::invalid_exponent, os.str());
  }
  if (!(p.a > 1.0)) fail(ErrorKind::invalid_rate, "base a must exceed 1");
  if (!(p.tau > 0.0 && p.tau < 1.0)) fail(ErrorKind::invalid_rate, "tau must lie in (0, 1)");
  s.b_max = 1.0 + std::min(p.tau / 2.0, (s.beta - p.theta) / (p.theta - p.theta * s.beta));
  if (!(p.b > 1.0 && p.b < s.b_max)) {
    std::ostringstream os;
    os << "b = " << p.b << " must lie in (1, " << s.b_max << ")";
    fail(ErrorKind::invalid_rate, os.str());
  }
  if (!(p.Lambda > 0.0)) fail(ErrorKind::invalid_rate, "Lambda must be positive");
  if (!(p.delta0 > 0.0 && p.delta0 < 1.0)) fail(ErrorKind::precondition_violated, "delta0 must lie in (0, 1)");
  const double lam0 = p.lambda0 > 0.0 ? p.lambda0 : 1.0 / std::sqrt(p.delta0);
  if (lam0 * std::sqrt(p.delta0) < 1.0 - 1e-12) {
    fail(ErrorKind::precondition_violated, "lambda0 must be at least delta0^{-1/2}");
  }
  if (!(p.dist0 > 0.0)) fail(ErrorKind::precondition_violated, "dist0 must be positive");
  s.params.lambda0 = lam0;
  for (int q = 0; q <= p.Q + 1; ++q) {
    const double bq = std::pow(p.b, q);
    s.delta.push_back(p.delta0 * std::pow(p.a, 1.0 - bq));
    s.lambda.push_back(lam0 * std::pow(p.a, (bq - 1.0) / (2.0 * s.beta)));
  }
  for (int q = 0; q < p.Q; ++q) {
    StageParams st;
    st.q = q;
    st.delta = s.delta[q];
    st.delta_next = s.delta[q + 1];
    st.lambda = s.lambda[q];
    st.K = p.Lambda * std::pow(st.delta / st.delta_next, 1.0 / p.J);
    st.d = s.d(q + 1);
    s.stages.push_back(st);
  }
  for (int q = 0; q + 1 < static_cast<int>(s.delta.size()); ++q) {
    if (std::sqrt(s.delta[q + 1]) * s.lambda[q + 1] < std::sqrt(s.delta[q]) * s.lambda[q] * (1.0 - 1e-12)) {
      fail(ErrorKind::invalid_rate, "delta_q^{1/2} lambda_q must be nondecreasing");
    }
  }
  s.delta.pop_back();
  s.lambda.pop_back();
  return s;
}

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::conformal: return "conformal";
    case MetricKind::diagonal: return "diagonal";
    case MetricKind::bump: return "bump";
  }
  return "conformal";
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "conformal") return MetricKind::conformal;
  if (s == "diagonal") return MetricKind::diagonal;
  if (s == "bump") return MetricKind::bump;
  fail(ErrorKind::config_invalid, "unknown metric '" + s + "' (conformal, diagonal, bump)");
}

Field sample_metric(const MetricSpec& m, const GridDomain& dom) {
  const int n = dom.n;
  return sample(dom, Rank::matrix, n * n, [&](const Point& x, double* o) {
    std::fill(o, o + n * n, 0.0);
    for (int k = 0; k < n; ++k) {
      switch (m.kind) {
        case MetricKind::conformal: o[k * n + k] = m.c; break;
        case MetricKind::diagonal: o[k * n + k] = 1.0 + m.alpha * x[k] * x[k]; break;
        case MetricKind::bump: o[k * n + k] = 1.0; break;
      }
    }
    if (m.kind == MetricKind::bump) {
      const double v = 0.5 * m.eps * std::sin(x[0]) * std::sin(x[1]);
      o[1] = v;
      o[n] = v;
    }
  });
}

Immersion bootstrap_short_map(const Field& g, const Immersion& u, double delta0, double r,
                              const PipelineOptions& opts, BootstrapReport* report) {
  const int n = u.n();
  const GridDomain dom = intersect(g.domain(), u.domain());
  BootstrapReport rep;
  const Field D = defect_field(g, u.du, delta0, dom);
  rep.defect = sup_norm(D);
  if (rep.defect <= r * delta0) {
    rep.method = "unchanged";
    rep.u2 = second_seminorm(u.du);
    if (report) *report = rep;
    return u;
  }
  double worst = std::numeric_limits<double>::infinity();
  for (std::int64_t p = 0; p < D.points(); ++p) {
    double lo, hi;
    sym_eig_range(n, D.at(p), &lo, &hi);
    worst = std::min(worst, lo);
  }
  if (!(worst > 1e-12)) {
    std::ostringstream os;
    os << "g - Du^T Du - delta0 H0 has eigenvalue " << worst << " <= 0";
    fail(ErrorKind::not_short, os.str());
  }

  // Constant Jacobian and constant defect: absorb the defect exactly.
  auto spread = [](const Field& f) {
    double s = 0.0;
    const double* f0 = f.at(0);
    for (std::int64_t p = 0; p < f.points(); ++p)
      for (int c = 0; c < f.comps(); ++c) s = std::max(s, std::abs(f.at(p)[c] - f0[c]));
    return s;
  };
  const Field du = restrict(u.du, dom);
  if (spread(du) <= 1e-14 * (1.0 + sup_norm(du)) && spread(D) <= 1e-12) {
    Eigen::MatrixXd A(n + 1, n), G(n, n);
    for (int c = 0; c <= n; ++c)
      for (int l = 0; l < n; ++l) A(c, l) = du.at(0)[c * n + l];
    const Field gr = restrict(g, dom);
    const double* g0 = gr.at(0);
    const SymMat H0 = h0(n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) G(k, l) = g0[k * n + l] - delta0 * H0(k, l);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n + 1, n);
    const Eigen::MatrixXd R = Q.transpose() * A;
    for (int l = 0; l < n; ++l)
      if (R(l, l) < 0.0) Q.col(l) *= -1.0;
    const Eigen::MatrixXd L = G.llt().matrixL();
    const Eigen::MatrixXd B = Q * L.transpose();
    std::vector<double> Bm((n + 1) * n), b(n + 1);
    const GridDomain& ud = u.u.domain();
    const double* u0 = u.u.at(0);
    for (int c = 0; c <= n; ++c) {
      double s = u0[c];
      for (int l = 0; l < n; ++l) {
        Bm[c * n + l] = B(c, l);
        s -= B(c, l) * ud.lo(l);
      }
      b[c] = s;
    }
    Immersion v = Immersion::affine(ud, Bm.data(), b.data());
    v.meta = u.meta;
    rep.method = "affine";
    rep.defect = defect_norm(g, v, delta0, intersect(g.domain(), v.domain()));
    rep.u2 = 0.0;
    rep.c0_shift = sup_norm(combine(v.u, 1.0, u.u, -1.0));
    if (report) *report = rep;
    if (rep.defect > r * delta0) fail(ErrorKind::budget_exceeded, "affine absorption missed the tolerance");
    return v;
  }

  // Generic route: primitive corrugations on sub-increments with w = 0.
  const std::vector<Field> L = basic_coefficients(D);
  double lmax = 0.0;
  for (const Field& f : L) {
    for (double v : f.data()) {
      if (v < 0.0) fail(ErrorKind::budget_exceeded, "defect needs directions beyond the primitive set");
      lmax = std::max(lmax, v);
    }
  }
  const int m = std::max(1, static_cast<int>(std::ceil(lmax / opts.delta_star)));
  const double dstep = std::min(opts.delta_star, 0.99);
  const PrimitiveBasis& basis = primitive_basis(n);
  Immersion cur = u;
  if (!cur.cert) certify(cur, opts.rho, ErrorKind::not_short);
  double nu = 2.0 * std::numbers::pi;
  int steps = 0;
  for (int inc = 0; inc < m; ++inc) {
    for (int s = 0; s < basis.count(); ++s) {
      if (steps >= opts.bootstrap_budget || nu * dom.h > 2.0 * std::numbers::pi / 16.0) {
        fail(ErrorKind::budget_exceeded, "bootstrap frequency budget exhausted");
      }
      StepParams sp;
      sp.delta = dstep;
      sp.nu = nu;
      sp.eta = basis.direction(s);
      sp.a = map_fields(L[s].domain(), Rank::scalar, 1, {&L[s]}, [&](const Site&, const double* const* in, double* o) {
        o[0] = std::sqrt(in[0][0] / (m * dstep));
      });
      sp.lambda = 1.0;
      sp.mu = nu;
      StepOutcome st = step_perturb(cur, sp);
      certify(st.v, 2.0 * opts.rho, ErrorKind::budget_exceeded);
      cur = std::move(st.v);
      nu *= 2.0;
      ++steps;
    }
  }
  rep.method = "corrugated";
  rep.steps = steps;
  rep.defect = defect_norm(g, cur, delta0, intersect(g.domain(), cur.domain()));
  rep.u2 = second_seminorm(cur.du);
  rep.c0_shift = sup_norm(combine(cur.u, 1.0, u.u, -1.0));
  if (report) *report = rep;
  if (rep.defect > r * delta0) {
    std::ostringstream os;
    os << "bootstrap defect " << rep.defect << " above r delta0 = " << r * delta0;
    fail(ErrorKind::budget_exceeded, os.str());
  }
  return cur;
}

StageOutcome stage(const Immersion& u, const Field& g, const Schedule& sched, int q, const PipelineOptions& opts) {
  if (q < 0 || q >= static_cast<int>(sched.stages.size())) fail(ErrorKind::index_out_of_range, "stage index");
  const StageParams& sp = sched.stages[q];
  const int n = u.n();
  const int J = sched.params.J;
  const double delta = sp.delta, dhat = sp.delta_next, lambda = sp.lambda, K = sp.K, d = sp.d;
  const double cbar = gamma2_square_mean();
  const PrimitiveBasis& basis = primitive_basis(n);
  const double rK = basis.r_K();
  const double h = u.domain().h;

  StageOutcome out;
  out.q = q;
  out.params = sp;
  if (opts.r > opts.r_star) fail(ErrorKind::precondition_violated, "r exceeds r_*");
  const double pre = defect_norm(g, u, delta, intersect(g.domain(), u.domain()));
  if (pre > opts.r * delta) {
    std::ostringstream os;
    os << "stage " << q << " precondition broken: |g - Du^T Du - delta H0|_0 = " << pre << " > r delta = "
       << opts.r * delta;
    fail(ErrorKind::precondition_violated, os.str());
  }
  const double u2 = second_seminorm(u.du);
  auto warn = [&](const std::string& s) { out.warnings.push_back(s); };
  if (u2 > std::sqrt(delta) * lambda) {
    std::ostringstream os;
    os << "[u]_2 = " << u2 << " exceeds delta^{1/2} lambda = " << std::sqrt(delta) * lambda;
    warn(os.str());
  }
  if (!(dhat < opts.r * delta / frob_h0(n))) warn("delta_{q+1} >= r delta_q / |H_0|");
  if (K < opts.K_star) warn("K_q below K_*");
  if (delta > opts.delta_star) warn("delta_q above delta_*");

  // Step 0 and 1: mollify, normalize the defect, check the decomposition range.
  double C_hat = opts.C_hat;
  Immersion ul;
  Field H;
  double min_L = 0.0;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    const double ell = d / (C_hat * lambda);
    bool sub = false;
    Field mu_u = mollify(u.u, ell, &sub);
    Field mu_du = mollify(u.du, ell);
    Field gl = mollify(restrict(g, u.u.domain()), ell);
    ul = Immersion::from_parts(mu_u, std::move(mu_du));
    ul.meta = u.meta;
    H = defect_field(gl, ul.du, dhat, ul.domain());
    H = scaled(H, 1.0 / delta);
    const std::vector<Field> L = basic_coefficients(H);
    min_L = std::numeric_limits<double>::infinity();
    for (const Field& f : L)
      for (double v : f.data()) min_L = std::min(min_L, v);
    out.ell = ell;
    out.C_hat = C_hat;
    out.subgrid_mollification = sub;
    if (min_L >= rK * rK) break;
    C_hat *= 2.0;
  }
  out.min_L = min_L;
  out.H_distance = distance_to_h0(H);
  if (out.subgrid_mollification) warn("mollification scale below the grid spacing");
  if (min_L < rK * rK) {
    std::ostringstream os;
    os << "min L_ij(H) = " << min_L << " below r_K^2 = " << rK * rK;
    fail(ErrorKind::precondition_violated, os.str());
  }

  const SeminormReport hs = holder_seminorm(H, std::min(opts.N_K + 1, 2));
  double lamK = std::max(1.0, lambda);
  for (int k = 1; k <= std::min(opts.N_K + 1, 2); ++k) lamK = std::max(lamK, std::pow(hs.order(k), 1.0 / k));
  out.lambda_K = lamK;
  const double lt0 = opts.C_tilde * lamK;
  std::vector<double> lams{lamK};
  for (int l = 1; l <= n; ++l) lams.push_back(lt0 * std::pow(K, l));
  KallenOptions ko;
  ko.weight = cbar;
  ko.N_K = opts.N_K;
  ko.strict = false;
  const KallenResult kal = kallen_decompose(H, lams, J, ko);
  for (const auto& w : kal.warnings) warn("decomposition: " + w);
  out.kallen_residual = sup_norm(kal.residual);

  // Step 2.
  certify(ul, opts.rho, ErrorKind::certificate_degraded);

  // Step 3: families.
  SubstageOptions so;
  so.rho = opts.rho;
  so.J = J;
  so.verify_ibp = opts.verify_ibp;
  std::vector<Field> a1;
  for (int j = 1; j <= n; ++j) a1.push_back(kal.coeff(1, j));
  SubstageResult s1 = substage1(ul, a1, lt0, K, delta, so);
  Field F = std::move(s1.F);
  double top = s1.nu.back();
  Immersion cur = std::move(s1.v);
  out.trace = s1.trace;

  auto family_ledger = [&](int i, const Field& Fi, double ibp_id) {
    const GridDomain dom = cur.domain();
    Field known = restrict(Fi, dom);
    double* o = known.data().data();
    for (int k = 1; k <= i; ++k)
      for (int l = k; l <= n; ++l) {
        const Vec e = eta(n, k, l);
        const Field& akl = kal.coeff(k, l);
        for_each_site(dom, {&akl}, [&](const Site& s, const double* const* in) {
          for (int p = 0; p < n; ++p)
            for (int r = 0; r < n; ++r) o[s.index * n * n + p * n + r] += in[0][0] * in[0][0] * e[p] * e[r];
        });
      }
    for (int k = 1; k <= n; ++k) {
      const Field ga = gradient(kal.coeff(1, k));
      const double wgt = cbar / (lams[k] * lams[k]);
      for_each_site(dom, {&ga}, [&](const Site& s, const double* const* in) {
        for (int p = 0; p < n; ++p)
          for (int r = 0; r < n; ++r) o[s.index * n * n + p * n + r] += wgt * in[0][p] * in[0][r];
      });
    }
    const Field R = map_fields(dom, Rank::matrix, n * n, {&cur.du, &ul.du, &known},
                               [&](const Site&, const double* const* in, double* res) {
                                 double gv[kMaxDim * kMaxDim], gu[kMaxDim * kMaxDim];
                                 gram(n, in[0], gv);
                                 gram(n, in[1], gu);
                                 for (int e = 0; e < n * n; ++e) res[e] = (gv[e] - gu[e]) / delta - in[2][e];
                               });
    FamilyLedger fl;
    fl.i = i;
    fl.remainder = sup_norm(R);
    fl.f = sup_norm(Fi);
    fl.f_off_block = off_block_sup(Fi, i + 1);
    fl.top_frequency = top;
    fl.ibp_identity = ibp_id;
    out.families.push_back(fl);
  };
  family_ledger(1, F, s1.ibp_identity);

  for (int i = 2; i <= n; ++i) {
    const GridDomain dom = cur.domain();
    const std::vector<Field> LF = basic_coefficients(restrict(F, dom));
    std::vector<Field> b;
    for (int j = i; j <= n; ++j) {
      const Field& aij = kal.coeff(i, j);
      const Field& lij = LF[packed_index(n, i - 1, j - 1)];
      bool under = false;
      double worst = std::numeric_limits<double>::infinity();
      Field bij = map_fields(dom, Rank::scalar, 1, {&aij, &lij}, [&](const Site&, const double* const* in, double* o) {
        const double arg = in[0][0] * in[0][0] - in[1][0];
        if (arg < 0.5 * rK * rK) under = true;
        o[0] = std::sqrt(std::max(arg, 0.0));
      });
      if (under) {
        for_each_site(dom, {&aij, &lij}, [&](const Site&, const double* const* in) {
          const double arg = in[0][0] * in[0][0] - in[1][0];
#pragma omp critical
          worst = std::min(worst, arg);
        });
        std::ostringstream os;
        os << "a_" << i << j << "^2 - L(F) = " << worst << " below r_K^2/2 = " << 0.5 * rK * rK;
        fail(ErrorKind::amplitude_underflow, os.str());
      }
      b.push_back(std::move(bij));
    }
    const double lt = opts.C_tilde * top;
    SubstageResult s2 = substage2(i, cur, b, lt, K, delta, so);
    Field Fi = std::move(s2.F);
    // F^i = F_i + sum_{i+1 <= k <= l} L_kl(F^{i-1}) eta_kl eta_kl
    {
      double* o = Fi.data().data();
      for (int k = i + 1; k <= n; ++k)
        for (int l = k; l <= n; ++l) {
          const Vec e = eta(n, k, l);
          const Field& lkl = LF[packed_index(n, k - 1, l - 1)];
          for_each_site(Fi.domain(), {&lkl}, [&](const Site& s, const double* const* in) {
            for (int p = 0; p < n; ++p)
              for (int r = 0; r < n; ++r) o[s.index * n * n + p * n + r] += in[0][0] * e[p] * e[r];
          });
        }
    }
    F = std::move(Fi);
    top = s2.nu.back();
    cur = std::move(s2.v);
    out.trace.insert(out.trace.end(), s2.trace.begin(), s2.trace.end());
    family_ledger(i, F, s2.ibp_identity);
  }

  // Restrict to V_{q+1}.
  const std::int64_t cq = collar_cells(sched.collar(q), h);
  const std::int64_t cq1 = collar_cells(sched.collar(q + 1), h);
  const GridDomain vq1 = u.domain().shrink(cq - cq1);
  if (!cur.domain().contains(vq1)) {
    fail(ErrorKind::domain_too_small, "stage consumed more collar than d_{q+1}");
  }
  out.v = restrict_immersion(cur, vq1);
  out.v.cert.reset();
  out.v.meta = StageMeta{q + 1, dhat, q + 1 < static_cast<int>(sched.lambda.size()) ? sched.lambda[q + 1] : 0.0};
  out.defect = defect_norm(g, out.v, dhat, vq1);
  out.defect_bound = opts.r * dhat;
  out.gate = out.defect <= out.defect_bound;
  out.v2 = second_seminorm(cur.du);
  out.c2_envelope = std::sqrt(delta) * lambda / std::min(1.0, d) * std::pow(K, J * (n - 1) + n * n);
  const Immersion ur = restrict_immersion(u, vq1);
  const Field diff_u = combine(out.v.u, 1.0, ur.u, -1.0);
  const Field diff_du = combine(out.v.du, 1.0, ur.du, -1.0);
  out.inc0 = sup_norm(diff_u);
  out.inc1 = first_seminorm(diff_du);
  out.inc2 = second_seminorm(diff_du);
  const double theta = 0.25;
  const double n1 = out.inc0 + out.inc1, n2 = n1 + out.inc2;
  out.inc_1theta = std::pow(n1, 1.0 - theta) * std::pow(n2, theta);
  return out;
}

double planned_top_frequency(const Schedule& sched, int q, const PipelineOptions& opts) {
  const StageParams& sp = sched.stages[q];
  const int n = sched.params.n;
  double top = opts.C_tilde * std::max(1.0, sp.lambda) * std::pow(sp.K, n);
  for (int i = 2; i <= n; ++i) top = opts.C_tilde * top * std::pow(sp.K, sched.params.J + n - i);
  return top;
}

RunReport run_pipeline(const RunInputs& in, const Schedule& sched, const PipelineOptions& opts,
                       const std::string& snapshot_dir) {
  const int n = sched.params.n;
  RunReport rep;
  rep.schedule = sched;
  rep.options = opts;
  rep.metric = in.metric;
  rep.h = in.h;
  rep.stages_requested = sched.params.Q;

  const std::int64_t c0 = collar_cells(sched.collar(0), in.h);
  Point lo{}, hi{};
  for (int k = 0; k < n; ++k) {
    lo[k] = in.omega_lo[k] - c0 * in.h;
    hi[k] = in.omega_hi[k] + c0 * in.h;
  }
  const GridDomain v0 = GridDomain::box(n, lo, hi, in.h, c0 * in.h);
  const Field g = sample_metric(in.metric, v0);

  int planned = sched.params.Q;
  while (planned > 0 && planned_top_frequency(sched, planned - 1, opts) * in.h > 2.0 * std::numbers::pi / 16.0) {
    --planned;
  }
  if (planned < sched.params.Q) {
    std::ostringstream os;
    os << "grid resolves only " << planned << " of " << sched.params.Q << " stages at 16 points per period";
    rep.warnings.push_back(os.str());
  }
  rep.stages_planned = planned;

  auto snapshot = [&](const Immersion& u, int q) {
    if (snapshot_dir.empty()) return;
    write_field(u.u, (std::filesystem::path(snapshot_dir) / ("u_" + std::to_string(q) + ".cgf")).string());
  };
  auto row = [&](const Immersion& u, int q) {
    RunStageRow r;
    r.q = q;
    r.delta = sched.delta[q];
    const GridDomain dom = intersect(g.domain(), u.domain());
    r.defect = defect_norm(g, u, r.delta, dom);
    r.bound = opts.r * r.delta;
    r.raw_defect = defect_norm(g, u, 0.0, dom);
    r.u2 = second_seminorm(u.du);
    return r;
  };

  std::vector<double> A(static_cast<std::size_t>((n + 1) * n), 0.0), b(n + 1, 0.0);
  for (int k = 0; k < n; ++k) A[k * n + k] = 1.0;
  Immersion u = Immersion::affine(v0, A.data(), b.data());
  bool ok = true;
  try {
    u = bootstrap_short_map(g, u, sched.params.delta0, opts.r, opts, &rep.bootstrap);
    u.meta = StageMeta{0, sched.delta[0], sched.lambda[0]};
    rep.rows.push_back(row(u, 0));
    snapshot(u, 0);
    for (int q = 0; q < planned; ++q) {
      StageOutcome st = stage(u, g, sched, q, opts);
      u = std::move(st.v);
      st.v = Immersion();
      const bool gate = st.gate;
      rep.stages.push_back(std::move(st));
      rep.rows.push_back(row(u, q + 1));
      snapshot(u, q + 1);
      if (!gate) {
        ok = false;
        break;
      }
    }
  } catch (const Error& e) {
    ok = false;
    rep.error = e.what();
  }
  rep.final_defect = rep.rows.empty() ? 0.0 : defect_norm(g, u, 0.0, intersect(g.domain(), u.domain()));
  const bool all_stages = planned == sched.params.Q && static_cast<int>(rep.stages.size()) == planned;
  rep.passed = ok && all_stages && !rep.rows.empty() && rep.rows.back().defect <= rep.rows.back().bound;
  return rep;
}

std::string report_json(const RunReport& r) {
  const Schedule& s = r.schedule;
  const ScheduleParams& p = s.params;
  Json j;
  Json head;
  head["seed"] = r.options.seed;
  head["n"] = p.n;
  head["grid_spacing"] = r.h;
  head["metric"] = {{"kind", to_string(r.metric.kind)}, {"c", r.metric.c}, {"alpha", r.metric.alpha}, {"eps", r.metric.eps}};
  head["configured_constants"] = {{"delta_star", r.options.delta_star}, {"r_star", r.options.r_star},
                                  {"K_star", r.options.K_star},         {"C_hat", r.options.C_hat},
                                  {"C_tilde", r.options.C_tilde},       {"rho", r.options.rho},
                                  {"N_K", r.options.N_K},               {"r_K", primitive_basis(p.n).r_K()},
                                  {"r_D", primitive_basis(p.n).r_D()},  {"gamma2_square_mean", gamma2_square_mean()},
                                  {"bootstrap_budget", r.options.bootstrap_budget}};
  j["header"] = head;
  Json sch;
  sch["theta"] = p.theta;
  sch["J"] = p.J;
  sch["beta"] = s.beta;
  sch["a"] = p.a;
  sch["b"] = p.b;
  sch["b_max"] = s.b_max;
  sch["tau"] = p.tau;
  sch["Lambda"] = p.Lambda;
  sch["delta0"] = p.delta0;
  sch["lambda0"] = p.lambda0;
  sch["dist0"] = p.dist0;
  sch["Q"] = p.Q;
  sch["r"] = r.options.r;
  Json table = Json::array();
  for (const auto& st : s.stages) {
    table.push_back({{"q", st.q}, {"delta", st.delta}, {"delta_next", st.delta_next}, {"lambda", st.lambda},
                     {"K", st.K}, {"d", st.d}, {"planned_top_frequency", planned_top_frequency(s, st.q, r.options)}});
  }
  sch["stages"] = table;
  j["schedule"] = sch;
  j["bootstrap"] = {{"method", r.bootstrap.method}, {"defect", r.bootstrap.defect}, {"u2", r.bootstrap.u2},
                    {"c0_shift", r.bootstrap.c0_shift}, {"steps", r.bootstrap.steps}};
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"q", row.q}, {"delta", row.delta}, {"defect", row.defect}, {"bound", row.bound},
                    {"gate", row.defect <= row.bound}, {"raw_defect", row.raw_defect}, {"u2", row.u2}});
  }
  j["defect_ledger"] = rows;
  Json stages = Json::array();
  for (const auto& st : r.stages) {
    Json fam = Json::array();
    for (const auto& f : st.families) {
      fam.push_back({{"i", f.i}, {"remainder", f.remainder}, {"F", f.f}, {"F_off_block", f.f_off_block},
                     {"top_frequency", f.top_frequency}, {"ibp_identity", f.ibp_identity}});
    }
    Json tr = Json::array();
    for (const auto& t : st.trace) {
      tr.push_back({{"j", t.j}, {"nu", t.nu}, {"normal", t.normal}, {"grad", t.grad}, {"osc", t.osc},
                    {"remainder", t.remainder}, {"F", t.f}, {"identity", t.identity}, {"u2", t.u2}});
    }
    stages.push_back({{"q", st.q},
                      {"ell", st.ell},
                      {"C_hat", st.C_hat},
                      {"subgrid_mollification", st.subgrid_mollification},
                      {"H_distance", st.H_distance},
                      {"min_L", st.min_L},
                      {"lambda_K", st.lambda_K},
                      {"kallen_residual", st.kallen_residual},
                      {"families", fam},
                      {"steps", tr},
                      {"defect", st.defect},
                      {"defect_bound", st.defect_bound},
                      {"gate", st.gate},
                      {"v2", st.v2},
                      {"c2_envelope", st.c2_envelope},
                      {"c2_ratio", st.c2_envelope > 0.0 ? st.v2 / st.c2_envelope : 0.0},
                      {"increment0", st.inc0},
                      {"increment1", st.inc1},
                      {"increment2", st.inc2},
                      {"increment_1theta", st.inc_1theta},
                      {"warnings", st.warnings}});
  }
  j["stages"] = stages;
  j["final_defect"] = r.final_defect;
  j["stages_requested"] = r.stages_requested;
  j["stages_planned"] = r.stages_planned;
  j["warnings"] = r.warnings;
  j["error"] = r.error;
  j["status"] = r.passed ? "PASSED" : "FAILED";
  return j.dump(2) + "\n";
}

std::string report_csv(const RunReport& r) {
  std::ostringstream os;
  os << "# seed=" << r.options.seed << "\n";
  os << "q,delta,defect,bound,raw_defect,u2,increment0,increment1,increment_1theta,c2_ratio\n";
  char buf[512];
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const RunStageRow& row = r.rows[k];
    double i0 = 0, i1 = 0, it = 0, c2 = 0;
    if (k >= 1 && k - 1 < r.stages.size()) {
      const StageOutcome& st = r.stages[k - 1];
      i0 = st.inc0;
      i1 = st.inc1;
      it = st.inc_1theta;
      c2 = st.c2_envelope > 0 ? st.v2 / st.c2_envelope : 0.0;
    }
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", row.q, row.delta, row.defect,
                  row.bound, row.raw_defect, row.u2, i0, i1, it, c2);
    os << buf;
  }
  return os.str();
}

}  // namespace corrugate
