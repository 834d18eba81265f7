#include <doctest.h>

#include <cmath>

#include "corrugate/ibp.hpp"

using namespace corrugate;

namespace {

const GridDomain kDom = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 256);

struct Case {
  IbpParams p;
  SeparableAmplitude A;
};

Case family1(int J, double nu, double phase = 0.0) {
  Case c;
  const Gammas g = gammas();
  c.p.i = 1;
  c.p.J = J;
  c.p.mu = 4.0;
  c.p.lambda = 2.0;
  c.p.nu = nu;
  c.p.gamma = g.g2;
  c.p.xi = eta(2, 1, 2);
  c.p.eta = eta(2, 1, 1);
  c.A.i = 1;
  c.A.add(g.g2.derivative().derivative(), sample(kDom, Rank::vector, 2, [&](const Point& x, double* o) {
            const double a = 1.0 + 0.3 * std::sin(2.0 * x[0] + x[1] + phase);
            o[0] = a;
            o[1] = 0.5 * a;
          }));
  return c;
}

}  // namespace

TEST_CASE("IBP identity holds with the analytic corrector Jacobian") {
  for (int J : {0, 1, 2, 3}) {
    Case c = family1(J, 64.0);
    const IbpResult r = ibp_correct(c.p, c.A);
    const IbpIdentityReport rep = verify_ibp_identity(r, c.A);
    CHECK(rep.analytic <= 1e-12 * std::max(1.0, rep.scale));
    CHECK(r.w.domain() == kDom.shrink(J));
    CHECK(in_block_sup(r.f_m, 1) == 0.0);
    CHECK(off_block_sup(r.f_l, 2) == 0.0);
  }
}

TEST_CASE("IBP residual decays like (mu/nu)^J") {
  for (int J : {1, 2}) {
    const double r1 = sup_norm(ibp_residual(ibp_correct(family1(J, 32.0).p, family1(J, 32.0).A)));
    const double r2 = sup_norm(ibp_residual(ibp_correct(family1(J, 64.0).p, family1(J, 64.0).A)));
    const double q = r2 / r1, t = std::pow(2.0, -J);
    CHECK(q >= t / 2);
    CHECK(q <= 2 * t);
  }
}

TEST_CASE("property: IBP is additive in the amplitude") {
  for (int k = 0; k < 3; ++k) {
    Case a = family1(2, 64.0, 0.3 * k), b = family1(2, 64.0, 1.0 + k);
    SeparableAmplitude sum;
    sum.i = 1;
    sum.add(a.A.terms[0].P, a.A.terms[0].B);
    sum.add(b.A.terms[0].P, b.A.terms[0].B);
    CHECK(sum.terms.size() == 1);
    const IbpResult ra = ibp_correct(a.p, a.A), rb = ibp_correct(b.p, b.A), rs = ibp_correct(a.p, sum);
    CHECK(sup_norm(combine(combine(ra.w, 1.0, rb.w, 1.0), 1.0, rs.w, -1.0)) <= 1e-10);
    CHECK(sup_norm(combine(combine(ra.f_m, 1.0, rb.f_m, 1.0), 1.0, rs.f_m, -1.0)) <= 1e-10);
  }
}

TEST_CASE("IBP parameter checks") {
  auto kind_of = [](const Case& c) {
    try {
      ibp_correct(c.p, c.A);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io_error;  // sentinel: nothing thrown
  };
  Case c = family1(1, 2.0);  // nu < mu
  CHECK(kind_of(c) == ErrorKind::precondition_violated);
  c = family1(1, 64.0);
  c.p.gamma = gammas().g2 + TrigPoly::constant(0.1);
  CHECK(kind_of(c) == ErrorKind::nonzero_mean_input);
  c = family1(1, 64.0);
  c.p.i = 2;
  CHECK(kind_of(c) == ErrorKind::ill_posed_direction);
  c = family1(13, 64.0);
  CHECK(kind_of(c) == ErrorKind::precondition_violated);
}

TEST_CASE("identity check refuses unresolved frequencies") {
  Case c = family1(1, 400.0);
  const IbpResult r = ibp_correct(c.p, c.A);
  try {
    verify_ibp_identity(r, c.A);
    FAIL("expected under-resolved-grid");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::under_resolved_grid);
  }
}

TEST_CASE("mixed-block term scales like lambda / nu") {
  const Gammas g = gammas();
  double v[2][2];
  int a = 0;
  for (double lam : {4.0, 2.0}) {
    int b = 0;
    for (double nu : {64.0, 128.0}) {
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
      A.add(g.g2.derivative().derivative(), sample(kDom, Rank::vector, 2, [&](const Point& x, double* o) {
              o[0] = 0.0;
              o[1] = 1.0 + 0.3 * std::sin(lam * (2.0 * x[0] + x[1]));
            }));
      const IbpResult r = ibp_correct(p, A);
      CHECK(sup_norm(r.f_l) == 0.0);  // V_3 = {0} at n = 2
      v[a][b++] = sup_norm(r.f_m) * nu / lam;
    }
    ++a;
  }
  for (int a2 = 0; a2 < 2; ++a2)
    for (int b2 = 0; b2 < 2; ++b2) CHECK(v[a2][b2] == doctest::Approx(v[0][0]).epsilon(0.1));
}
