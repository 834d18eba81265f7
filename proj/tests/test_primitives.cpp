#include <doctest.h>

#include <cmath>

#include "corrugate/primitives.hpp"
#include "gen.hpp"

using namespace corrugate;

TEST_CASE("primitive directions and H0") {
  const Vec e = eta(3, 1, 3);
  CHECK(e[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(e[1] == 0.0);
  // Independent oracle: sum of eta eta over 1 <= i <= j <= 2.
  const SymMat H = h0(2);
  CHECK(H(0, 0) == doctest::Approx(1.5));
  CHECK(H(0, 1) == doctest::Approx(0.5));
  CHECK(H(1, 1) == doctest::Approx(1.5));
  for (int n = 2; n <= 4; ++n) {
    const PrimitiveBasis& b = primitive_basis(n);
    CHECK(b.count() == n * (n + 1) / 2);
    CHECK(b.r_D() > 0.0);
    CHECK(b.r_K() == doctest::Approx(b.r_D() / 4.0));
    const std::vector<double> L = basic_decompose(h0(n), b);
    for (double v : L) CHECK(v == doctest::Approx(1.0));
  }
}

TEST_CASE("property: basic decomposition reconstructs") {
  testgen::Gen gen(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = gen.integer(2, 4);
    const SymMat m = gen.sym(n, 3.0);
    const PrimitiveBasis& b = primitive_basis(n);
    const std::vector<double> L = basic_decompose(m, b);
    SymMat back(n);
    for (int s = 0; s < b.count(); ++s) back += L[s] * SymMat::outer(n, b.direction(s));
    CHECK((back - m).norm() <= 1e-12);
  }
}

TEST_CASE("property: algebraic split recomposes with exact block supports") {
  testgen::Gen gen(8);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = gen.integer(2, 4);
    const int i = gen.integer(1, n);
    const int j = gen.integer(i, n);
    const Vec xi = eta(n, i, j);
    const SymMat m = gen.sym(n);
    const AlgebraicSplit sp = algebraic_decompose(i, xi, m);
    CHECK((SymMat::sym_product(n, sp.alpha, xi) + sp.pi_m + sp.pi_l - m).norm() <= 1e-10);
    for (int k = 0; k < i - 1; ++k) CHECK(sp.alpha[k] == 0.0);
    for (int k = i - 1; k < n; ++k)
      for (int l = i - 1; l < n; ++l) CHECK(sp.pi_m(k, l) == 0.0);
    CHECK(in_Vi(i + 1, sp.pi_l, 0.0));
  }
}

TEST_CASE("split is linear") {
  testgen::Gen gen(9);
  const Vec xi = eta(3, 2, 3);
  const SymMat a = gen.sym(3), b = gen.sym(3);
  const AlgebraicSplit sa = algebraic_decompose(2, xi, a), sb = algebraic_decompose(2, xi, b),
                       sab = algebraic_decompose(2, xi, a + 2.0 * b);
  CHECK((sab.pi_l - sa.pi_l - 2.0 * sb.pi_l).norm() < 1e-12);
  CHECK((sab.pi_m - sa.pi_m - 2.0 * sb.pi_m).norm() < 1e-12);
}

TEST_CASE("ill-posed direction is rejected") {
  Vec xi{};
  xi[0] = 1.0;
  CHECK_THROWS_AS(algebraic_decompose(2, xi, h0(2)), Error);
}

TEST_CASE("V_i projection") {
  SymMat m = SymMat::identity(3);
  m.set(0, 2, 5.0);
  const SymMat p = project_Vi(2, m);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 2) == 0.0);
  CHECK(p(1, 1) == 1.0);
  CHECK(in_Vi(2, p));
  CHECK_FALSE(in_Vi(2, m));
}

TEST_CASE("Kallen decomposition of a constant H0 gives unit amplitudes") {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 16);
  const SymMat H0 = h0(2);
  const Field H = sample(d, Rank::matrix, 4, [&](const Point&, double* o) { H0.to_full(o); });
  const KallenResult r = kallen_decompose(H, {1.0, 100.0, 200.0}, 2);
  CHECK(sup_norm(r.residual) < 1e-13);
  for (int s = 0; s < 3; ++s)
    for (double v : r.a[s].data()) CHECK(v == doctest::Approx(1.0));
  CHECK(r.coeff(1, 2).points() == r.a[1].points());
}

TEST_CASE("Kallen residual decays with the frequency ratio") {
  const GridDomain d = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 128);
  const SymMat H0 = h0(2);
  const double l0 = 2.0;
  const Field H = sample(d, Rank::matrix, 4, [&](const Point& x, double* o) {
    H0.to_full(o);
    const double e = 0.02 * std::sin(l0 * (x[0] + 2.0 * x[1])), f = 0.02 * std::cos(l0 * (2.0 * x[0] - x[1]));
    o[0] += e;
    o[1] += f;
    o[2] += f;
    o[3] -= e;
  });
  KallenOptions ko;
  ko.strict = false;
  for (int J = 0; J <= 1; ++J) {
    const double e1 = sup_norm(kallen_decompose(H, {l0, 8 * l0, 16 * l0}, J, ko).residual);
    const double e2 = sup_norm(kallen_decompose(H, {l0, 16 * l0, 32 * l0}, J, ko).residual);
    CHECK(e2 / e1 == doctest::Approx(std::pow(2.0, -2 * (J + 1))).epsilon(0.1));
  }
  CHECK_THROWS_AS(kallen_decompose(H, {l0, 8 * l0, 16 * l0}, 0), Error);  // strict: far from H0 + l0/l1
}
