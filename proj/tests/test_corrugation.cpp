#include <doctest.h>

#include <cmath>

#include "corrugate/corrugation.hpp"

using namespace corrugate;

namespace {

Immersion flat(double h) {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, h);
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  Immersion u = Immersion::affine(d, A, b);
  certify(u, 1.0);
  return u;
}

Immersion curved(double h) {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, h);
  Immersion u = Immersion::from_map(sample(d, Rank::map, 3, [](const Point& x, double* o) {
    o[0] = x[0];
    o[1] = x[1] + 0.1 * std::sin(3.0 * x[0]);
    o[2] = 0.2 * std::sin(2.0 * x[0] + x[1]);
  }));
  certify(u, 2.0);
  return u;
}

}  // namespace

TEST_CASE("flat case: metric error is delta^2 a^4 / 4 at most") {
  const Immersion u = flat(1.0 / 128);
  for (double a : {0.5, 1.0}) {
    StepParams p;
    p.delta = 0.01;
    p.nu = 20.0;
    p.eta = eta(2, 1, 1);
    p.a = Field::scalar(u.domain(), a);
    const StepOutcome st = step_perturb(u, p);
    const Field G = induced_metric(st.v);
    double err = 0.0;
    for (std::int64_t q = 0; q < G.points(); ++q) {
      const double* g = G.at(q);
      const double e0 = g[0] - 1.0 - p.delta * a * a;
      err = std::max(err, std::sqrt(e0 * e0 + 2.0 * g[1] * g[1] + (g[3] - 1.0) * (g[3] - 1.0)));
    }
    const double bound = p.delta * p.delta * std::pow(a, 4) / 4.0;
    CHECK(err <= bound * (1.0 + 1e-9));
    CHECK(err >= 0.9 * bound);  // attained where g1' = -1/2
    CHECK_FALSE(st.v.cert.has_value());
  }
}

TEST_CASE("step identity is at FD accuracy on curved immersions") {
  const Immersion u = curved(1.0 / 256);
  double prev = 0.0;
  for (double nu : {20.0, 40.0}) {
    StepParams p;
    p.delta = 0.01;
    p.nu = nu;
    p.eta = eta(2, 1, 2);
    p.a = sample(u.u.domain(), Rank::scalar, 1, [](const Point& x, double* o) { o[0] = 1 + 0.3 * std::cos(2 * x[0] - x[1]); });
    const StepOutcome st = step_perturb(u, p);
    const double ratio = st.report.identity / (st.report.nu_h * st.report.nu_h * st.report.identity_scale);
    CHECK(ratio < 1.0);
    if (prev > 0.0) CHECK(st.report.identity / prev == doctest::Approx(4.0).epsilon(0.25));
    prev = st.report.identity;
  }
}

TEST_CASE("sharp second-derivative bound on the flat case") {
  const Immersion u = flat(1.0 / 256);
  StepParams p;
  p.delta = 0.01;
  p.nu = 30.0;
  p.eta = eta(2, 1, 2);
  p.a = Field::scalar(u.domain(), 1.0);
  const StepOutcome st = step_perturb(u, p);
  const SharpD2 s = sharp_d2_check(u, st.v, p);
  CHECK(s.ratio <= 1.0);
  CHECK(s.ratio > 0.3);
}

TEST_CASE("step preconditions") {
  const Immersion u = flat(1.0 / 32);
  StepParams p;
  p.delta = 0.01;
  p.nu = 200.0;
  p.eta = eta(2, 1, 1);
  p.a = Field::scalar(u.domain(), 1.0);
  try {
    step_perturb(u, p);
    FAIL("expected under-resolved-grid");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::under_resolved_grid);
  }
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  const Immersion bare = Immersion::affine(u.domain(), A, b);
  p.nu = 10.0;
  try {
    step_perturb(bare, p);
    FAIL("expected certificate-missing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::certificate_missing);
  }
}

TEST_CASE("substage I: F lies in V_2 and shrinks with K") {
  const Immersion u = flat(1.0 / 512);
  SubstageOptions o;
  o.J = 2;
  o.rho = 1.0;
  double f[2];
  int k = 0;
  for (double K : {4.0, 8.0}) {
    const std::vector<Field> a = {Field::scalar(u.domain(), 1.0), Field::scalar(u.domain(), 1.0)};
    const SubstageResult r = substage1(u, a, 1.0, K, 0.01, o);
    CHECK(off_block_sup(r.F, 2) == 0.0);
    CHECK(r.ibp_identity <= 1e-10);
    CHECK(r.trace.size() == 2);
    CHECK(r.nu[1] == doctest::Approx(K * K));
    f[k++] = sup_norm(r.F);
  }
  CHECK(f[1] < f[0]);
}

TEST_CASE("substage II at n = 2 has no leftover block") {
  const Immersion u = flat(1.0 / 256);
  SubstageOptions o;
  o.J = 1;
  o.rho = 1.0;
  const std::vector<Field> a = {Field::scalar(u.domain(), 1.0)};
  const SubstageResult r = substage2(2, u, a, 4.0, 2.0, 0.01, o);
  CHECK(sup_norm(r.F) == 0.0);
  CHECK(r.nu.size() == 1);
  CHECK_THROWS_AS(substage2(3, u, a, 4.0, 2.0, 0.01, o), Error);
}
