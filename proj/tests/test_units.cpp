#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "topoarray/units.hpp"

using namespace topo;

TEST_CASE("derived scales for the stripe parameter set") {
  auto p = fx::params(18.73, 0.5);
  CHECK(p.a == doctest::Approx(246e-9).epsilon(1e-12));
  // independent scalar arithmetic
  const double xi_over_a = (0.25 * 299792458.0) / (2 * 3.141592653589793 * 18.73e12) / 246e-9;
  CHECK(p.xi_a == doctest::Approx(xi_over_a).epsilon(1e-12));
  CHECK(p.xi_a == doctest::Approx(2.59).epsilon(0.005));
  CHECK(p.omega_A == doctest::Approx(2 * kPi * kC / 738e-9).epsilon(1e-15));
  CHECK(p.E0_sq_a3 == 0.1855);
  CHECK(p.xi * p.delta_A == doctest::Approx(p.v_s).epsilon(1e-15));
  CHECK(std::isfinite(p.coupling));
  CHECK(p.coupling > 0);
}

TEST_CASE("derived fields recompute bit for bit") {
  auto p = fx::params(3.78, 2.5);
  auto q = derive_from_primaries(p);
  CHECK(q.g_pref == p.g_pref);
  CHECK(q.K_amp == p.K_amp);
  CHECK(q.xi == p.xi);
  CHECK(q.coupling == p.coupling);
  CHECK(q.J == p.J);
}

TEST_CASE("config errors") {
  auto c = fx::base_config(18.73, 0.5);
  Config bad = c;
  bad.set("v_s_over_c", 1.0);
  CHECK_THROWS_AS(derive_params(bad), ConfigError);
  bad = c;
  bad.set("lambda_nm", -5.0);
  CHECK_THROWS_AS(derive_params(bad), ConfigError);
  CHECK_THROWS_AS(derive_params(Config::parse("n_d = 2.4\n")), ConfigError);
  CHECK_THROWS_AS(Config::parse("bogus_key = 1\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("n_d = 1\nn_d = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("n_d 2.4\n"), ConfigError);
  Config nan = Config::parse("n_d = abc\n");
  CHECK_THROWS_AS(nan.get_double("n_d"), ConfigError);
}

TEST_CASE("a override") {
  auto c = fx::base_config(18.73, 0.5);
  c.set("a_nm_override", 240.0);
  auto p = derive_params(c);
  CHECK(p.a == doctest::Approx(240e-9));
}

TEST_CASE("config round trip") {
  auto c = fx::base_config(0.321, 25);
  c.set("orientation", "x");
  c.set("times", "1, 2.5, 3");
  c.set("ramp_sigma", 1.0 / 3.0);
  Config back = Config::parse(c.emit());
  CHECK(back == c);
  CHECK(back.get_double("ramp_sigma") == 1.0 / 3.0);
  CHECK(back.get_list("times").size() == 3);
}

TEST_CASE("lattice duality and valley geometry") {
  auto p = fx::params(18.73, 0.5);
  auto g = lattice_vectors(p);
  const Vec2 R[2] = {g.R1, g.R2}, G[2] = {g.G1, g.G2};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double expect = i == j ? 2 * kPi : 0.0;
      CHECK(std::abs(R[i].dot(G[j]) - expect) <= 1e-12 * 2 * kPi);
    }
  CHECK(g.pK.norm() == doctest::Approx(4 * kPi / 3).epsilon(1e-14));
  CHECK(g.pKprime.norm() == doctest::Approx(4 * kPi / 3).epsilon(1e-14));
  CHECK(g.light_cone_radius / g.pK.norm() == doctest::Approx(0.5).epsilon(1e-14));
  // K and K' inequivalent: difference is not a reciprocal vector
  Vec2 d = g.pK - g.pKprime;
  double a1 = d.dot(g.R1) / (2 * kPi), a2 = d.dot(g.R2) / (2 * kPi);
  CHECK(std::abs(a1 - std::round(a1)) + std::abs(a2 - std::round(a2)) > 0.1);
}

TEST_CASE("basis transform") {
  GreensMatrix id;
  id.m.setIdentity();
  id.basis = Basis::Circular;
  auto c = basis_transform(id, Basis::Cartesian);
  CHECK((c.m - Eigen::Matrix2cd::Identity()).norm() < 1e-15);

  GreensMatrix z;
  z.basis = Basis::Circular;
  z.m << 1, 0, 0, -1;
  auto zc = basis_transform(z, Basis::Cartesian);
  // hand result: [[0, -i], [i, 0]]
  CHECK(std::abs(zc.m(0, 0)) < 1e-15);
  CHECK(std::abs(zc.m(1, 1)) < 1e-15);
  CHECK(std::abs(zc.m(0, 1) - cplx(0, -1)) < 1e-15);
  CHECK(std::abs(zc.m(1, 0) - cplx(0, 1)) < 1e-15);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int t = 0; t < 100; ++t) {
    GreensMatrix r;
    r.basis = t % 2 ? Basis::Cartesian : Basis::Circular;
    for (int i = 0; i < 4; ++i) r.m(i / 2, i % 2) = cplx(n(rng), n(rng));
    Basis other = r.basis == Basis::Cartesian ? Basis::Circular : Basis::Cartesian;
    auto back = basis_transform(basis_transform(r, other), r.basis);
    CHECK((back.m - r.m).norm() <= 1e-14 * r.m.norm());
  }
  CHECK_THROWS_AS(parse_basis("helical"), ConfigError);
}
