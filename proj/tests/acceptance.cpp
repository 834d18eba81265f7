// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "corrugate/corrugation.hpp"
#include "corrugate/ibp.hpp"
#include "corrugate/periodic.hpp"
#include "corrugate/pipeline.hpp"

using namespace corrugate;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void criterion(int id, const char* name, double limit_s, const std::function<Verdict()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = fn();
  } catch (const Error& e) {
    v = {false, std::string("aborted: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0.0 || secs <= limit_s;
  const bool ok = v.pass && in_time;
  if (!ok) ++failures;
  std::printf("criterion %2d %s: %s; %s; time %.2fs%s\n", id, ok ? "PASS" : "FAIL", name, v.detail.c_str(), secs,
              in_time ? "" : fmt(" over the %.0fs limit", limit_s).c_str());
  std::fflush(stdout);
}

// ---- 1
Verdict corrugation_identity() {
  const Gammas g = gammas();
  const TrigPoly d1 = g.g1.derivative(), d2 = g.g2.derivative();
  double e = 0.0;
  for (int k = 0; k < 1024; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 1024.0;
    e = std::max(e, std::abs(2.0 * d1(t) + d2(t) * d2(t) - 1.0));
  }
  return {e <= 1e-13, fmt("max |2 g1' + g2'^2 - 1| = %.3e (bound 1e-13)", e)};
}

// ---- 2
Verdict decomposition_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double rec = 0.0, split = 0.0, support = 0.0;
  for (int n = 2; n <= 3; ++n) {
    const PrimitiveBasis& b = primitive_basis(n);
    for (int trial = 0; trial < 1000; ++trial) {
      SymMat m(n);
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) m.set(k, l, u(rng));
      const std::vector<double> L = basic_decompose(m, b);
      SymMat back(n);
      for (int s = 0; s < b.count(); ++s) back += L[s] * SymMat::outer(n, b.direction(s));
      rec = std::max(rec, (back - m).norm());
      for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
          const Vec xi = eta(n, i, j);
          const AlgebraicSplit sp = algebraic_decompose(i, xi, m);
          split = std::max(split, (SymMat::sym_product(n, sp.alpha, xi) + sp.pi_m + sp.pi_l - m).norm());
          for (int k = 0; k < i - 1; ++k) support = std::max(support, std::abs(sp.alpha[k]));
          for (int k = i - 1; k < n; ++k)
            for (int l = i - 1; l < n; ++l) support = std::max(support, std::abs(sp.pi_m(k, l)));
          support = std::max(support, (sp.pi_l - project_Vi(i + 1, sp.pi_l)).norm());
        }
    }
  }
  return {rec <= 1e-12 && split <= 1e-10 && support == 0.0,
          fmt("reconstruction %.2e (<= 1e-12), recomposition %.2e (<= 1e-10), off-support %.1e (== 0)", rec, split,
              support)};
}

// ---- 3
Verdict ibp_scaling() {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 512);
  const Gammas g = gammas();
  const double mu = 10.0;
  bool ok = true;
  std::string s;
  for (int J = 1; J <= 3; ++J) {
    double res[2];
    for (int r = 0; r < 2; ++r) {
      IbpParams p;
      p.i = 1;
      p.J = J;
      p.mu = mu;
      p.lambda = 2.0;
      p.nu = (r == 0 ? 8.0 : 16.0) * mu;
      p.gamma = g.g2;
      p.xi = eta(2, 1, 2);
      p.eta = eta(2, 1, 1);
      SeparableAmplitude A;
      A.i = 1;
      A.add(g.g2.derivative().derivative(), sample(d, Rank::vector, 2, [&](const Point& x, double* o) {
              const double a = 1.0 + 0.3 * std::sin(2.0 * x[0] + x[1]);
              o[0] = a * p.eta[0];
              o[1] = a * p.eta[1];
            }));
      res[r] = sup_norm(ibp_residual(ibp_correct(p, A)));
    }
    const double q = res[1] / res[0], t = std::pow(2.0, -J);
    ok = ok && q >= t / 2 && q <= 2 * t;
    s += fmt("J=%d ratio %.4f in [%.4f, %.4f]; ", J, q, t / 2, 2 * t);
  }
  return {ok, s};
}

// ---- 4
Verdict mixed_block() {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 256);
  const Gammas g = gammas();
  const double lam0 = 4.0, nu = 64.0;
  double v[2];
  int k = 0;
  for (double lam : {lam0, lam0 / 2}) {
    IbpParams p;
    p.i = 2;
    p.J = 2;
    p.mu = 8.0;
    p.lambda = lam;
    p.nu = nu;
    p.gamma = g.g2;
    p.xi = eta(2, 2, 2);
    p.eta = eta(2, 2, 2);
    SeparableAmplitude A;
    A.i = 2;
    A.add(g.g2.derivative().derivative(), sample(d, Rank::vector, 2, [&](const Point& x, double* o) {
            o[0] = 0.0;
            o[1] = 1.0 + 0.3 * std::sin(lam * (2.0 * x[0] + x[1]));
          }));
    v[k++] = sup_norm(ibp_correct(p, A).f_m) * nu / lam;
  }
  const double q = std::max(v[0], v[1]) / std::min(v[0], v[1]);
  return {q <= 3.0, fmt("|F_m| nu/lambda = %.4f, %.4f; spread %.3f (<= 3)", v[0], v[1], q)};
}

// ---- 5
double identity_ratio(const Immersion& u, const StepParams& p) {
  const StepOutcome st = step_perturb(u, p);
  return st.report.identity / (st.report.nu_h * st.report.nu_h * st.report.identity_scale);
}

Verdict step_identity() {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 512);
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  Immersion flat = Immersion::affine(d, A, b);
  certify(flat, 1.0);
  StepParams p;
  p.delta = 0.01;
  p.nu = 40.0;
  p.eta = eta(2, 1, 1);
  p.a = Field::scalar(d, 1.0);
  const double C0 = identity_ratio(flat, p);

  struct Generic {
    double bend, wave, amp;
    int i, j;
    double nu;
  };
  const Generic cases[5] = {{0.2, 0.1, 0.3, 1, 2, 20}, {0.1, 0.0, 0.2, 1, 1, 40}, {0.3, 0.05, 0.1, 2, 2, 30},
                            {0.15, 0.1, 0.4, 1, 2, 50}, {0.25, 0.2, 0.25, 2, 2, 25}};
  bool ok = true;
  std::string s = fmt("C0 = %.4f from the flat case; generic ratios", C0);
  for (const Generic& c : cases) {
    Immersion u = Immersion::from_map(sample(d, Rank::map, 3, [&](const Point& x, double* o) {
      o[0] = x[0];
      o[1] = x[1] + c.wave * std::sin(3.0 * x[0]);
      o[2] = c.bend * std::sin(2.0 * x[0] + x[1]);
    }));
    certify(u, 4.0);
    StepParams q;
    q.delta = 0.01;
    q.nu = c.nu;
    q.eta = eta(2, c.i, c.j);
    q.a = sample(u.u.domain(), Rank::scalar, 1,
                 [&](const Point& x, double* o) { o[0] = 1.0 + c.amp * std::cos(2.0 * x[0] - x[1]); });
    const double r = identity_ratio(u, q);
    ok = ok && r <= C0;
    s += fmt(" %.4f", r);
  }
  return {ok, s + " (each <= C0)"};
}

// ---- 6
Verdict flat_closed_form() {
  const double h = 1.0 / 512, delta = 0.01, a = 1.0, nu = 40.0;
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, h);
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  Immersion u = Immersion::affine(d, A, b);
  certify(u, 1.0);
  StepParams p;
  p.delta = delta;
  p.nu = nu;
  p.eta = eta(2, 1, 1);
  p.a = Field::scalar(d, a);
  const StepOutcome st = step_perturb(u, p);
  // Metric of the sampled map by central differences.
  const Field G = induced_metric(gradient(st.v.u));
  double err = 0.0;
  for (std::int64_t q = 0; q < G.points(); ++q) {
    const double* g = G.at(q);
    const double e0 = g[0] - 1.0 - delta * a * a;
    err = std::max(err, std::sqrt(e0 * e0 + 2.0 * g[1] * g[1] + (g[3] - 1.0) * (g[3] - 1.0)));
  }
  // FD tolerance: |Dv_h - Dv| <= h^2/6 sup|v'''|, with v''' = delta^{1/2} a nu^2 (g1''', g2''') along eta.
  const double third = std::sqrt(delta) * a * nu * nu * std::sqrt(2.0 * 2.0 + 2.0);
  const double eps = h * h / 6.0 * third;
  const double dmax = sup_norm(st.v.du);
  const double tol = 2.0 * dmax * eps + eps * eps;
  const double bound = delta * delta * std::pow(a, 4) / 4.0 + 2.0 * tol;
  return {err <= bound, fmt("defect error %.4e <= delta^2 a^4/4 + 2 FD tol = %.4e + 2 x %.3e", err,
                            delta * delta * std::pow(a, 4) / 4.0, tol)};
}

// ---- 7
Verdict kallen_decay() {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 256);
  const SymMat H0 = h0(2);
  const double l0 = 2.0;
  const Field H = sample(d, Rank::matrix, 4, [&](const Point& x, double* o) {
    // H_0 + 0.05 sin(lambda_0 x_1) (e_1 (.) e_2) / 2
    H0.to_full(o);
    o[1] += 0.05 * std::sin(l0 * x[0]);
    o[2] += 0.05 * std::sin(l0 * x[0]);
  });
  KallenOptions ko;
  ko.strict = false;
  bool ok = true;
  std::string s;
  for (int J = 0; J <= 2; ++J) {
    const double e1 = sup_norm(kallen_decompose(H, {l0, 8 * l0, 16 * l0}, J, ko).residual);
    const double e2 = sup_norm(kallen_decompose(H, {l0, 16 * l0, 32 * l0}, J, ko).residual);
    const double q = e2 / e1, t = std::pow(2.0, -2 * (J + 1));
    ok = ok && q >= t / 3 && q <= 3 * t;
    s += fmt("J=%d ratio %.5f vs %.5f; ", J, q, t);
  }
  return {ok, s};
}

// ---- 8, 9, 10, 12
struct StageRun {
  RunReport report;
  std::string json;
  bool done = false;
};

StageRun& stage_gate_run() {
  static StageRun run;
  if (!run.done) {
    ScheduleParams sp;
    sp.n = 2;
    sp.J = 2;
    sp.Lambda = 2.0;
    sp.a = 4.0;
    sp.b = 1.1;
    sp.tau = 0.5;
    sp.delta0 = 0.05;
    sp.Q = 2;
    sp.theta = 0.05;
    PipelineOptions o;
    o.r = 0.02;
    RunInputs in;
    in.metric.kind = MetricKind::conformal;
    in.metric.c = 1.5;
    in.omega_lo = {0, 0};
    in.omega_hi = {1, 1};
    in.h = 1.0 / 1024;
    run.report = run_pipeline(in, make_schedule(sp), o);
    run.json = report_json(run.report);
    run.done = true;
  }
  return run;
}

Verdict stage_gate() {
  const RunReport& r = stage_gate_run().report;
  std::string s;
  bool ok = r.error.empty() && static_cast<int>(r.stages.size()) == r.stages_requested;
  for (const auto& row : r.rows) {
    s += fmt("q=%d defect %.4e vs r delta_q %.4e; ", row.q, row.defect, row.bound);
    ok = ok && row.defect <= row.bound;
  }
  const double final_bound = r.options.r * r.schedule.delta.back();
  ok = ok && r.final_defect <= final_bound;
  s += fmt("|g - Du_Q^T Du_Q| = %.4e vs r delta_Q %.4e", r.final_defect, final_bound);
  if (!r.error.empty()) s += "; run stopped: " + r.error;
  return {ok, s};
}

Verdict c2_envelope() {
  const RunReport& r = stage_gate_run().report;
  int accepted = 0;
  bool ok = true;
  std::string s;
  for (const auto& st : r.stages) {
    if (!st.gate) continue;
    ++accepted;
    ok = ok && st.v2 <= 10.0 * st.c2_envelope;
    s += fmt("q=%d [v]_2 %.4e vs 10 x envelope %.4e; ", st.q, st.v2, 10.0 * st.c2_envelope);
  }
  if (accepted == 0) return {false, "no stage was accepted, nothing to check"};
  return {ok, s};
}

Verdict cauchy_decay() {
  const RunReport& r = stage_gate_run().report;
  if (r.stages.size() < 2) {
    return {false, fmt("needs two completed stages, run produced %zu", r.stages.size())};
  }
  bool ok = true;
  std::string s;
  for (std::size_t q = 1; q < r.stages.size(); ++q) {
    const double ratio = r.stages[q].inc_1theta / r.stages[q - 1].inc_1theta;
    ok = ok && ratio <= 0.75;
    s += fmt("increment ratio q=%zu: %.4f (<= 0.75); ", q, ratio);
  }
  return {ok, s};
}

Verdict determinism() {
  const std::string first = stage_gate_run().json;
  StageRun& again = stage_gate_run();
  again.done = false;
  const std::string second = stage_gate_run().json;
  return {first == second, fmt("report sizes %zu and %zu bytes, %s", first.size(), second.size(),
                               first == second ? "identical" : "different")};
}

// ---- 11
Verdict n3_smoke() {
  const GridDomain d = GridDomain::box(3, {0, 0, 0}, {1, 1, 1}, 1.0 / 96);
  double A[12] = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0}, b[4] = {0, 0, 0, 0};
  Immersion u = Immersion::affine(d, A, b);
  certify(u, 1.0);
  const double delta = 0.01;
  SubstageOptions o;
  o.J = 1;
  o.rho = 1.0;
  auto amp = [&](double c, double ph) {
    return sample(d, Rank::scalar, 1, [=](const Point& x, double* out) {
      out[0] = c + 0.1 * std::sin(x[0] + 2.0 * x[1] - x[2] + ph);
    });
  };
  std::vector<Field> a1 = {amp(1.0, 0.0), amp(0.8, 1.0), amp(0.9, 2.0)};
  const SubstageResult s1 = substage1(u, a1, 1.0, 2.0, delta, o);
  const double off1 = off_block_sup(s1.F, 2);
  Immersion v = s1.v;
  certify(v, 2.0);
  SubstageOptions o2 = o;
  o2.rho = 2.0;
  std::vector<Field> a2 = {amp(1.0, 0.5), amp(0.9, 1.5)};
  const SubstageResult s2 = substage2(2, v, a2, s1.nu.back(), 2.0, delta, o2);
  const double off2 = off_block_sup(s2.F, 3);
  const double id = std::max(s1.ibp_identity, s2.ibp_identity);
  const double r1 = sup_norm(s1.R), r2 = sup_norm(s2.R);
  const bool ok = off1 == 0.0 && off2 == 0.0 && id <= 1e-10 && std::isfinite(r1) && std::isfinite(r2);
  return {ok, fmt("F^1 outside V_2 %.1e, F^2 outside V_3 %.1e, IBP identity %.2e (<= 1e-10), |R| %.3e and %.3e, "
                  "top frequency %.1f",
                  off1, off2, id, r1, r2, s2.nu.back())};
}

}  // namespace

int main() {
  configure_threads_from_env();
  criterion(1, "corrugation identity", 1.0, corrugation_identity);
  criterion(2, "decomposition exactness", 10.0, decomposition_exactness);
  criterion(3, "IBP residual scaling", 120.0, ibp_scaling);
  criterion(4, "mixed-block bound", 60.0, mixed_block);
  criterion(5, "step identity", 300.0, step_identity);
  criterion(6, "flat-case closed form", 10.0, flat_closed_form);
  criterion(7, "decomposition residual decay", 60.0, kallen_decay);
  criterion(8, "stage gate", 600.0, stage_gate);
  criterion(9, "C2 growth envelope", 0.0, c2_envelope);
  criterion(10, "C1,theta Cauchy decay", 0.0, cauchy_decay);
  criterion(11, "n=3 smoke", 900.0, n3_smoke);
  criterion(12, "determinism", 600.0, determinism);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
