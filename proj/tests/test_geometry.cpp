#include <doctest.h>

#include <cmath>

#include "corrugate/geometry.hpp"
#include "gen.hpp"

using namespace corrugate;

namespace {

const GridDomain kDom = GridDomain::box(2, {0, 0}, {1, 1}, 1.0 / 16);

Immersion graph(double amp) {
  return Immersion::from_map(sample(kDom, Rank::map, 3, [&](const Point& x, double* o) {
    o[0] = x[0];
    o[1] = x[1];
    o[2] = amp * std::sin(2.0 * x[0] + x[1]);
  }));
}

}  // namespace

TEST_CASE("affine immersions: metric, normal, tangential map") {
  testgen::Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    double A[6], b[3] = {0.1, 0.2, 0.3};
    for (double& v : A) v = gen.uniform(-0.3, 0.3);
    A[0] += 1.0;
    A[3] += 1.0;
    Immersion u = Immersion::affine(kDom, A, b);
    certify(u, 10.0);
    const Field G = induced_metric(u);
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        const double ex = A[k] * A[l] + A[2 + k] * A[2 + l] + A[4 + k] * A[4 + l];
        CHECK(G.at(5)[k * 2 + l] == doctest::Approx(ex));
      }
    const Field z = normal_field(u);
    const double* zz = z.at(7);
    CHECK(zz[0] * zz[0] + zz[1] * zz[1] + zz[2] * zz[2] == doctest::Approx(1.0));
    for (int l = 0; l < 2; ++l) CHECK(std::abs(zz[0] * A[l] + zz[1] * A[2 + l] + zz[2] * A[4 + l]) < 1e-13);
    // Orientation: det[Du | zeta] > 0.
    const double det = A[0] * (A[3] * zz[2] - zz[1] * A[5]) - A[1] * (A[2] * zz[2] - zz[1] * A[4]) +
                       zz[0] * (A[2] * A[5] - A[3] * A[4]);
    CHECK(det > 0.0);
    const Field T = tangential_map(u);
    const double* t = T.at(3);
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        double s = 0.0;
        for (int c = 0; c < 3; ++c) s += A[c * 2 + k] * t[c * 2 + l];
        CHECK(s == doctest::Approx(k == l ? 1.0 : 0.0));
      }
  }
}

TEST_CASE("(P_rho) certificate and violation") {
  double A[6] = {3, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  Immersion u = Immersion::affine(kDom, A, b);
  const auto bad = check_P_rho(u, 2.0);
  REQUIRE(std::holds_alternative<RhoViolation>(bad));
  CHECK(std::get<RhoViolation>(bad).eigenvalue == doctest::Approx(9.0));
  const auto good = check_P_rho(u, 9.5);
  REQUIRE(std::holds_alternative<RhoCertificate>(good));
  CHECK(std::get<RhoCertificate>(good).min_eig == doctest::Approx(1.0));
  try {
    certify(u, 2.0);
    FAIL("expected certificate-degraded");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::certificate_degraded);
  }
  Immersion v = Immersion::affine(kDom, A, b);
  try {
    normal_field(v);
    FAIL("expected certificate-missing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::certificate_missing);
  }
}

TEST_CASE("graph normal matches the closed form") {
  Immersion u = graph(0.2);
  certify(u, 2.0);
  const Field z = normal_field(u);
  double e = 0.0;
  for_each_site(z.domain(), {&z}, [&](const Site& s, const double* const* in) {
    const double c = 0.2 * std::cos(2.0 * s.x[0] + s.x[1]);
    const double fx = 2.0 * c, fy = c, nrm = std::sqrt(1 + fx * fx + fy * fy);
    const double ex[3] = {-fx / nrm, -fy / nrm, 1.0 / nrm};
    for (int k = 0; k < 3; ++k) e = std::max(e, std::abs(in[0][k] - ex[k]));
  });
  CHECK(e < 5e-3);  // second-order FD Jacobian on a 1/16 grid
}

TEST_CASE("seminorms of the Jacobian") {
  double A[6] = {1, 0, 0, 1, 0, 0}, b[3] = {0, 0, 0};
  const Immersion flat = Immersion::affine(kDom, A, b);
  CHECK(first_seminorm(flat.du) == doctest::Approx(1.0));  // |d_l u| = 1 for each l
  CHECK(second_seminorm(flat.du) < 1e-12);
  const Immersion g = graph(0.2);
  CHECK(second_seminorm(g.du) > 0.1);
}

TEST_CASE("normal closeness of nearby immersions") {
  Immersion u = graph(0.1), v = graph(0.1001);
  certify(u, 2.0);
  certify(v, 2.0);
  const NormalCloseness c = normal_closeness(u, v);
  CHECK(c.distance < 1e-3);
  CHECK(c.distance > 0.0);
}
