#include "corrugate/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>

#include "corrugate/corrugation.hpp"
#include "corrugate/ibp.hpp"
#include "corrugate/periodic.hpp"
#include "corrugate/pipeline.hpp"

namespace corrugate {

namespace {

using Rng = std::mt19937_64;

struct Suite {
  std::string name;
  std::uint64_t seed;
  std::ostream& out;
  std::vector<PropertyResult> results;

  // measured <= bound passes
  void check(const std::string& prop, double measured, double bound, const std::string& detail = "") {
    record(prop, measured, bound, measured <= bound, detail);
  }
  void record(const std::string& prop, double measured, double bound, bool pass, const std::string& detail = "") {
    PropertyResult r{name, prop, measured, bound, pass, detail};
    char buf[256];
    std::snprintf(buf, sizeof buf, "[%s] %s/%s: measured=%.6g bound=%.6g", pass ? "PASS" : "FAIL", name.c_str(),
                  prop.c_str(), measured, bound);
    out << buf;
    if (!detail.empty()) out << " (" << detail << ")";
    out << "\n";
    results.push_back(std::move(r));
  }
};

SymMat random_sym(int n, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SymMat m(n);
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) m.set(k, l, u(rng));
  return m;
}

void fields_suite(Suite& s) {
  auto f = [](const Point& x, double* o) { o[0] = std::sin(x[0]) * std::cos(2.0 * x[1]); };
  double err[2];
  for (int r = 0; r < 2; ++r) {
    const double h = r == 0 ? 1.0 / 32 : 1.0 / 64;
    const Field v = sample(GridDomain::box(2, {0, 0}, {1, 1}, h), Rank::scalar, 1, f);
    const Field g = gradient(v);
    double e = 0.0;
    for_each_site(g.domain(), {&g}, [&](const Site& site, const double* const* in) {
      const double ex = std::cos(site.x[0]) * std::cos(2.0 * site.x[1]);
#pragma omp critical
      e = std::max(e, std::abs(in[0][0] - ex));
    });
    err[r] = e;
  }
  s.record("fd_second_order", err[0] / err[1], 3.0, err[0] / err[1] >= 3.0, "error ratio under halving h, expect 4");

  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 64, 0.25);
  const Field c = Field::scalar(d, 2.5);
  const Field m = mollify(c, 0.1);
  s.check("mollify_preserves_constants", sup_norm(combine(m, 1.0, c, -1.0)), 1e-13);

  const Field lin = sample(d, Rank::scalar, 1, [](const Point& x, double* o) { o[0] = 3.0 * x[0] + 4.0 * x[1]; });
  s.check("holder_linear_slope", std::abs(holder_seminorm(lin, 1).order(1) - 5.0), 1e-10);

  const GridDomain inner = d.shrink(3);
  const Field rs = restrict(lin, inner);
  double e = 0.0;
  for_each_site(inner, {&rs}, [&](const Site& site, const double* const* in) {
#pragma omp critical
    e = std::max(e, std::abs(in[0][0] - 3.0 * site.x[0] - 4.0 * site.x[1]));
  });
  s.check("restrict_keeps_coordinates", e, 0.0);
}

void primitives_suite(Suite& s) {
  Rng rng(s.seed);
  double rec = 0.0, split = 0.0, support = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + trial % 2;
    const SymMat m = random_sym(n, rng);
    const PrimitiveBasis& b = primitive_basis(n);
    const std::vector<double> L = basic_decompose(m, b);
    SymMat back(n);
    for (int slot = 0; slot < b.count(); ++slot) back += L[slot] * SymMat::outer(n, b.direction(slot));
    rec = std::max(rec, (back - m).norm());
    for (int i = 1; i <= n; ++i) {
      for (int j = i; j <= n; ++j) {
        const Vec xi = eta(n, i, j);
        const AlgebraicSplit sp = algebraic_decompose(i, xi, m);
        const SymMat again = SymMat::sym_product(n, sp.alpha, xi) + sp.pi_m + sp.pi_l;
        split = std::max(split, (again - m).norm());
        for (int k = 0; k < i - 1; ++k) support = std::max(support, std::abs(sp.alpha[k]));
        for (int k = i - 1; k < n; ++k)
          for (int l = i - 1; l < n; ++l) support = std::max(support, std::abs(sp.pi_m(k, l)));
        support = std::max(support, (sp.pi_l - project_Vi(i + 1, sp.pi_l)).norm());
      }
    }
  }
  s.check("basis_reconstruction", rec, 1e-12, "1000 random matrices, n = 2, 3");
  s.check("algebraic_recomposition", split, 1e-10);
  s.check("block_supports", support, 0.0);
  for (int n = 2; n <= kMaxDim; ++n) {
    const double rD = primitive_basis(n).r_D();
    s.record("r_D_positive_n" + std::to_string(n), rD, 0.0, rD > 0.0);
  }
}

void periodic_suite(Suite& s) {
  const Gammas g = gammas();
  const TrigPoly lhs = 2.0 * g.g1.derivative() + g.g2.derivative() * g.g2.derivative();
  double e = 0.0;
  for (int k = 0; k < 1024; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 1024.0;
    e = std::max(e, std::abs(lhs(t) - 1.0));
  }
  s.check("inclusion_identity", e, 1e-13, "1024 samples of 2 g1' + g2'^2 - 1");
  s.check("gamma2_square_mean", std::abs(gamma2_square_mean() - 1.0), 1e-15);
  Rng rng(s.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double prim = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    TrigPoly p;
    for (int k = 1; k <= 5; ++k) p = p + TrigPoly::sine(k, u(rng)) + TrigPoly::cosine(k, u(rng));
    const TrigPoly back = zero_mean_primitive(p).derivative();
    for (int k = 0; k < 64; ++k) prim = std::max(prim, std::abs(back(0.1 * k) - p(0.1 * k)));
  }
  s.check("primitive_round_trip", prim, 1e-13);
  bool threw = false;
  try {
    zero_mean_primitive(TrigPoly::constant(1.0));
  } catch (const Error& err) {
    threw = err.kind() == ErrorKind::nonzero_mean_input;
  }
  s.record("primitive_rejects_mean", threw ? 0.0 : 1.0, 0.0, threw);
}

void geometry_suite(Suite& s) {
  Rng rng(s.seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 16);
  double orth = 0.0, unit = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    double A[6] = {1 + u(rng), u(rng), u(rng), 1 + u(rng), u(rng), u(rng)}, b[3] = {0, 0, 0};
    Immersion im = Immersion::affine(d, A, b);
    certify(im, 4.0);
    const Field z = normal_field(im);
    for (std::int64_t p = 0; p < z.points(); ++p) {
      const double* zz = z.at(p);
      unit = std::max(unit, std::abs(zz[0] * zz[0] + zz[1] * zz[1] + zz[2] * zz[2] - 1.0));
      for (int l = 0; l < 2; ++l)
        orth = std::max(orth, std::abs(zz[0] * A[l] + zz[1] * A[2 + l] + zz[2] * A[4 + l]));
    }
  }
  s.check("normal_unit", unit, 1e-12);
  s.check("normal_orthogonal", orth, 1e-12);
  const Immersion flat = Immersion::from_map(
      sample(d, Rank::map, 3, [](const Point& x, double* o) { o[0] = x[0]; o[1] = x[1]; o[2] = 0.0; }));
  const auto c = check_P_rho(flat, 1.0 + 1e-12);
  s.record("flat_inclusion_certified", 0.0, 0.0, std::holds_alternative<RhoCertificate>(c));
}

void ibp_suite(Suite& s) {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 256);
  const Gammas g = gammas();
  const double mu = 4.0;
  for (int J = 1; J <= 3; ++J) {
    double res[2], ident = 0.0;
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
      const IbpResult ir = ibp_correct(p, A);
      res[r] = sup_norm(ibp_residual(ir));
      const IbpIdentityReport rep = verify_ibp_identity(ir, A);
      ident = std::max(ident, rep.analytic / std::max(rep.scale, 1.0));
    }
    const double ratio = res[1] / res[0], target = std::pow(2.0, -J);
    char det[160];
    std::snprintf(det, sizeof det, "residual %.3e -> %.3e, slope %.3f, expected %d", res[0], res[1], std::log2(ratio),
                  -J);
    s.record("residual_scaling_J" + std::to_string(J), ratio, 2.0 * target,
             ratio >= 0.5 * target && ratio <= 2.0 * target, det);
    s.check("identity_J" + std::to_string(J), ident, 1e-12);
  }
}

void corrugation_suite(Suite& s) {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 256);
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  Immersion u = Immersion::affine(d, A, b);
  certify(u, 1.0);
  const double delta = 0.01, a = 1.0;
  StepParams p;
  p.delta = delta;
  p.nu = 20.0;
  p.eta = eta(2, 1, 1);
  p.a = Field::scalar(d, a);
  p.lambda = 1.0;
  p.mu = 1.0;
  const StepOutcome st = step_perturb(u, p);
  const Field G = induced_metric(st.v);
  double err = 0.0;
  for (std::int64_t q = 0; q < G.points(); ++q) {
    const double* gg = G.at(q);
    const double e0 = gg[0] - 1.0 - delta * a * a, e1 = gg[1], e3 = gg[3] - 1.0;
    err = std::max(err, std::sqrt(e0 * e0 + 2.0 * e1 * e1 + e3 * e3));
  }
  s.check("flat_closed_form", err, delta * delta * a * a * a * a / 4.0 * (1.0 + 1e-9), "analytic Jacobian");
  s.check("step_identity_flat", st.report.identity / (st.report.nu_h * st.report.nu_h * st.report.identity_scale), 1.0,
          "identity / ((nu h)^2 scale)");
}

void pipeline_suite(Suite& s) {
  ScheduleParams p;
  p.n = 2;
  p.J = 8;
  p.theta = 0.05;
  const Schedule a = make_schedule(p);
  s.check("beta_n2_J8", std::abs(a.beta - 0.2), 1e-15);
  p = ScheduleParams{};
  p.delta0 = 0.1;
  p.a = 2.0;
  p.b = 1.2;
  p.theta = 0.02;
  const Schedule b = make_schedule(p);
  s.check("delta1_example", std::abs(b.delta[1] - 0.1 * std::pow(2.0, -0.2)), 1e-15);
  bool ordered = true;
  for (std::size_t q = 0; q + 1 < b.delta.size(); ++q)
    ordered = ordered && b.delta[q + 1] < b.delta[q] && b.stages[q].K > b.params.Lambda;
  s.record("delta_decreasing_K_above_Lambda", 0.0, 0.0, ordered);
  p = ScheduleParams{};
  p.theta = 0.4;
  bool threw = false;
  try {
    make_schedule(p);
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::invalid_exponent;
  }
  s.record("theta_bound_enforced", 0.0, 0.0, threw);

  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 32, 0.125);
  const Field g = sample_metric(MetricSpec{}, d);
  double A[6] = {1, 0, 0, 1, 0, 0}, bb[3] = {0, 0, 0};
  const Immersion id = Immersion::affine(d, A, bb);
  BootstrapReport rep;
  bootstrap_short_map(g, id, 0.05, 0.02, PipelineOptions{}, &rep);
  s.check("bootstrap_conformal", rep.defect, 0.02 * 0.05, rep.method);
  MetricSpec small;
  small.c = 0.5;
  threw = false;
  try {
    bootstrap_short_map(sample_metric(small, d), id, 0.05, 0.02, PipelineOptions{});
  } catch (const Error& e) {
    threw = e.kind() == ErrorKind::not_short;
  }
  s.record("bootstrap_not_short", 0.0, 0.0, threw);
}

const std::vector<std::pair<std::string, std::function<void(Suite&)>>>& registry() {
  static const std::vector<std::pair<std::string, std::function<void(Suite&)>>> r = {
      {"fields", fields_suite},         {"primitives", primitives_suite}, {"periodic", periodic_suite},
      {"geometry", geometry_suite},     {"ibp", ibp_suite},               {"corrugation", corrugation_suite},
      {"pipeline", pipeline_suite},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, f] : registry()) v.push_back(n);
    v.push_back("all");
    return v;
  }();
  return names;
}

std::vector<PropertyResult> run_suite(const std::string& suite, std::uint64_t seed, std::ostream& out) {
  std::vector<PropertyResult> all;
  bool found = false;
  for (const auto& [name, fn] : registry()) {
    if (suite != "all" && suite != name) continue;
    found = true;
    Suite s{name, seed, out, {}};
    fn(s);
    all.insert(all.end(), s.results.begin(), s.results.end());
  }
  if (!found) fail(ErrorKind::suite_unknown, "unknown suite '" + suite + "'");
  return all;
}

}  // namespace corrugate
