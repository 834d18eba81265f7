#include <doctest.h>

#include <cmath>
#include <numbers>

#include "corrugate/periodic.hpp"
#include "gen.hpp"

using namespace corrugate;

TEST_CASE("profiles match their closed forms") {
  const Gammas g = gammas();
  for (int k = 0; k < 64; ++k) {
    const double t = 0.1 * k;
    CHECK(g.g1(t) == doctest::Approx(-std::sin(2.0 * t) / 4.0).epsilon(1e-15));
    CHECK(g.g2(t) == doctest::Approx(std::sqrt(2.0) * std::sin(t)).epsilon(1e-15));
  }
  CHECK(g.g1.mean() == 0.0);
  CHECK(g.g2.mean() == 0.0);
}

TEST_CASE("inclusion identity 2 g1' + g2'^2 = 1") {
  const Gammas g = gammas();
  const TrigPoly lhs = 2.0 * g.g1.derivative() + g.g2.derivative() * g.g2.derivative();
  double e = 0.0;
  for (int k = 0; k < 1024; ++k) e = std::max(e, std::abs(lhs(2.0 * std::numbers::pi * k / 1024.0) - 1.0));
  CHECK(e <= 1e-13);
  for (int k = -lhs.degree(); k <= lhs.degree(); ++k)
    CHECK(std::abs(lhs.coeff(k) - (k == 0 ? 1.0 : 0.0)) <= 1e-15);
}

TEST_CASE("mean of g2 squared") {
  // Oracle: trapezoidal mean of 2 sin^2 over one period.
  double s = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double v = std::sqrt(2.0) * std::sin(2.0 * std::numbers::pi * k / 1000.0);
    s += v * v;
  }
  CHECK(gamma2_square_mean() == doctest::Approx(s / 1000.0).epsilon(1e-12));
}

TEST_CASE("products and derivatives") {
  const TrigPoly s = TrigPoly::sine(1);
  const TrigPoly sq = s * s;  // (1 - cos 2t) / 2
  CHECK(sq.mean() == doctest::Approx(0.5));
  CHECK(sq(0.7) == doctest::Approx(std::sin(0.7) * std::sin(0.7)));
  CHECK(TrigPoly::sine(3).derivative() == TrigPoly::cosine(3, 3.0));
  CHECK(sq.degree() == 2);
  double v, dv;
  sq.eval2(1.1, &v, &dv);
  CHECK(dv == doctest::Approx(std::sin(2.2)));
}

TEST_CASE("property: zero-mean primitive inverts the derivative") {
  testgen::Gen gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    TrigPoly p;
    const int deg = gen.integer(1, 8);
    for (int k = 1; k <= deg; ++k) p = p + TrigPoly::sine(k, gen.uniform(-1, 1)) + TrigPoly::cosine(k, gen.uniform(-1, 1));
    const TrigPoly P = zero_mean_primitive(p);
    CHECK(P.mean() == 0.0);
    const double t = gen.uniform(0, 7);
    CHECK(P.derivative()(t) == doctest::Approx(p(t)).epsilon(1e-13));
    CHECK(P.is_real());
  }
}

TEST_CASE("primitive needs zero mean") {
  try {
    zero_mean_primitive(TrigPoly::constant(0.5) + TrigPoly::sine(1));
    FAIL("expected nonzero-mean-input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::nonzero_mean_input);
  }
}

TEST_CASE("degree cap") {
  try {
    TrigPoly::sine(40) * TrigPoly::sine(40);
    FAIL("expected term-count-overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::term_count_overflow);
  }
}
