#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "topoarray/greens.hpp"

using namespace topo;

namespace {

double rel_diff(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

Eigen::Matrix2cd cart(const GreensMatrix& g) { return basis_transform(g, Basis::Cartesian).m; }

}  // namespace

TEST_CASE("hankel2 against 50-digit series") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(std::log(1e-3), std::log(50.0));
  std::vector<double> xs = {1e-3, 0.5, 1, 2.404825557695773, 5, 20, 50};
  for (int i = 0; i < 60; ++i) xs.push_back(std::exp(u(rng)));
  for (double x : xs) {
    for (int n : {0, 1}) {
      double J, Y;
      oracle::bessel_series(n, x, J, Y);
      const cplx h = hankel2(n, x);
      const double scale = std::max(1.0, std::abs(cplx(J, Y)));
      CHECK(std::abs(h.real() - J) < 1e-10 * scale);
      CHECK(std::abs(-h.imag() - Y) < 1e-10 * scale);
    }
  }
  CHECK_THROWS_AS(hankel2(0, 0.0), NumericalError);
  CHECK_THROWS_AS(hankel2(2, 1.0), NumericalError);
}

TEST_CASE("Bessel Wronskian") {
  for (double x : {0.5, 1.0, 5.0, 20.0}) {
    // J0' = -J1, Y0' = -Y1; J1' = J0 - J1/x, Y1' = Y0 - Y1/x
    const cplx h0 = hankel2(0, x), h1 = hankel2(1, x);
    const double J0 = h0.real(), Y0 = -h0.imag(), J1 = h1.real(), Y1 = -h1.imag();
    const double w0 = J0 * (-Y1) - (-J1) * Y0;
    const double w1 = J1 * (Y0 - Y1 / x) - (J0 - J1 / x) * Y1;
    CHECK(std::abs(w0 - 2 / (kPi * x)) < 1e-10);
    CHECK(std::abs(w1 - 2 / (kPi * x)) < 1e-10);
  }
}

TEST_CASE("greens_real term by term at one lattice vector") {
  const auto p = fx::params(18.73, 0);
  const auto g = lattice_vectors(p);
  for (Vec2 r : {g.R1, g.R2, Vec2(g.R1 + g.R2), Vec2(-g.R1)}) {
    const double rho = r.norm(), phi = std::atan2(r.y(), r.x()), x = rho * p.q0;
    const cplx H0(std::cyl_bessel_j(0.0, x), -std::cyl_neumann(0.0, x));
    const cplx H1(std::cyl_bessel_j(1.0, x), -std::cyl_neumann(1.0, x));
    const double aK = g.pK.dot(r);
    const cplx I(0, 1);
    const cplx plus = I * p.K_amp_a * 2.0 * std::cos(aK);
    const cplx minus = I * p.K_amp_a * 2.0 * I * std::sin(aK);
    Eigen::Matrix2cd hand;
    hand << -plus * H0, std::exp(I * phi) * minus * H1, -std::exp(-I * phi) * minus * H1, -plus * H0;
    const auto G = greens_real(r, p);
    CHECK(G.basis == Basis::Circular);
    CHECK(rel_diff(G.m, hand) < 1e-12);
  }
  CHECK_THROWS_AS(greens_real(Vec2(0, 0), p), NumericalError);
}

TEST_CASE("greens_real equals the inverse transform of the linear cone") {
  const auto p = fx::params(18.73, 0);
  const auto g = lattice_vectors(p);
  for (Vec2 r : {g.R1, Vec2(2 * g.R1 - g.R2), Vec2(0.0, 3.0), Vec2(-2.5, 0.7)}) {
    const Eigen::Matrix2cd ref = oracle::linear_cone_transform(r, p);
    const Eigen::Matrix2cd got = cart(greens_real(r, p));
    INFO("r = " << r.transpose() << " rel " << rel_diff(got, ref));
    CHECK(rel_diff(got, ref) < 1e-4);
  }
}

TEST_CASE("greens_real symmetries") {
  const auto p = fx::params(18.73, 0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int i = 0; i < 200; ++i) {
    Vec2 r(u(rng), u(rng));
    if (r.norm() < 0.1) continue;
    // reciprocity in the Cartesian basis
    const Eigen::Matrix2cd a = cart(greens_real(r, p)), b = cart(greens_real(-r, p));
    CHECK(rel_diff(a.transpose(), b) < 1e-12);
    CHECK(std::abs(a(0, 1) - a(1, 0)) < 1e-12 * a.norm());
  }
}

TEST_CASE("decay rate against the golden rule") {
  for (double d : {18.73, 10.0, 30.0}) {
    const auto p = fx::params(d, 0);
    const double ref = oracle::golden_rule_rate(p);
    CHECK(std::abs(gamma_pc(p) - ref) < 1e-6 * ref);
    CHECK(onsite_term(p).real() == 0.0);
    CHECK(onsite_term(p).imag() == doctest::Approx(-ref / 2).epsilon(1e-6));
  }
  // linear in detuning at fixed everything else
  const auto p1 = fx::params(10.0, 0), p2 = fx::params(20.0, 0);
  CHECK(gamma_pc(p2) / gamma_pc(p1) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("far-field decay exponent") {
  const auto p = fx::params(18.73, 0);
  std::vector<double> lx, ly;
  for (double rho = 200; rho <= 2000; rho *= 1.05) {
    // average over a few directions to suppress lattice phases
    double acc = 0;
    for (int k = 0; k < 6; ++k) {
      double th = 0.3 + k * kPi / 3;
      acc += greens_real(Vec2(rho * std::cos(th), rho * std::sin(th)), p).m.squaredNorm();
    }
    lx.push_back(std::log(rho));
    ly.push_back(0.5 * std::log(acc));
  }
  double mx = 0, my = 0;
  for (size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
  CHECK(sxy / sxx == doctest::Approx(-0.5).epsilon(2e-3));
}

TEST_CASE("stripe frames") {
  for (auto o : {Orientation::X, Orientation::Y}) {
    const auto f = stripe_frame(o);
    CHECK(std::abs(f.l_hat.dot(f.t_hat)) < 1e-15);
    CHECK(f.width * f.row_spacing == doctest::Approx(2 * kPi));
    CHECK(f.period * f.row_spacing == doctest::Approx(std::sqrt(3.0) / 2));
    CHECK(parse_orientation(orientation_name(o)) == o);
  }
  CHECK_THROWS_AS(parse_orientation("z"), ConfigError);
}

TEST_CASE("mixed_greens off resonance is regulator independent") {
  const auto p = fx::params(18.73, 0);
  for (auto o : {Orientation::X}) {
    for (double k : {0.0, 0.9, -1.2, 2.9}) {
      const auto m1 = make_cone_model(p, 1.0), m2 = make_cone_model(p, 0.25);
      REQUIRE(!in_resonance_window(k, m1, o));
      ContourSpec s;
      s.orientation = o;
      const std::vector<double> xs = {0, std::sqrt(3.0) / 2, -std::sqrt(3.0)};
      const auto a = mixed_greens(k, xs, m1, s), b = mixed_greens(k, xs, m2, s);
      CHECK(!a.resonant);
      for (size_t j = 0; j < xs.size(); ++j) {
        INFO("k " << k << " x " << xs[j]);
        CHECK((a.g[j].m - b.g[j].m).norm() < 1e-8 * std::max(1e-3, a.g[j].m.norm()));
      }
    }
  }
}

TEST_CASE("mixed_greens real axis against deformed contour") {
  const auto p = fx::params(18.73, 0);
  const auto m = make_cone_model(p, 1.0);
  for (auto o : {Orientation::X, Orientation::Y}) {
    const auto f = stripe_frame(o);
    std::vector<double> xs;
    for (int j = -4; j <= 4; ++j) xs.push_back(j * f.row_spacing);
    std::vector<double> ks;
    for (int i = 0; i < 9; ++i) ks.push_back(-kPi / f.period + (i + 0.37) * 2 * kPi / f.period / 9);
    if (o == Orientation::X) ks.push_back(2 * kPi / 3 + 0.2);
    for (double k : ks) {
      ContourSpec a, b;
      a.orientation = b.orientation = o;
      b.method = ContourMethod::Deformed;
      const auto ra = mixed_greens(k, xs, m, a), rb = mixed_greens(k, xs, m, b);
      double scale = 0;
      for (auto& g : ra.g) scale = std::max(scale, g.m.norm());
      for (size_t j = 0; j < xs.size(); ++j) {
        INFO(orientation_name(o) << " k " << k << " x " << xs[j]);
        CHECK((ra.g[j].m - rb.g[j].m).norm() < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("mixed_greens Fourier consistency on lattice points") {
  const auto p = fx::params(18.73, 0);
  const auto m = make_cone_model(p, 1.0);
  for (auto o : {Orientation::X, Orientation::Y}) {
    const auto f = stripe_frame(o);
    const double kmax = kPi / f.period;
    // breakpoints at the edges of the resonance windows
    // and where the line passes a cell corner (valley or zone centre)
    std::vector<double> br = {-kmax, kmax};
    for (Vec2 V : {m.pK, m.pKprime, Vec2(0, 0)}) {
      double c = V.dot(f.l_hat);
      c -= 2 * kmax * std::round(c / (2 * kmax));
      for (double e : {c - m.q0(), c, c + m.q0()})
        if (e > -kmax + 1e-12 && e < kmax - 1e-12) br.push_back(e);
    }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             br.end());
    std::vector<double> tx, tw;
    gauss_legendre(80, tx, tw);
    const std::vector<double> xs = {0.0, f.row_spacing};
    // targets: (row, n) lattice points
    struct Target {
      int row;
      int n;
    };
    const std::vector<Target> targets = {{0, 1}, {0, 2}, {1, 0}, {1, -1}, {1, 1}};
    std::vector<Eigen::Matrix2cd> acc(targets.size(), Eigen::Matrix2cd::Zero());
    ContourSpec s;
    s.orientation = o;
    for (size_t iv = 0; iv + 1 < br.size(); ++iv) {
      const double a = br[iv], b = br[iv + 1];
      for (size_t i = 0; i < tx.size(); ++i) {
        // k = a + (b - a)(1 - cos th)/2 smooths square-root endpoints
        const double th = 0.5 * kPi * (tx[i] + 1);
        const double k = a + (b - a) * 0.5 * (1 - std::cos(th));
        const double wk = 0.5 * kPi * tw[i] * (b - a) * 0.5 * std::sin(th);
        const auto r = mixed_greens(k, xs, m, s);
        for (size_t t = 0; t < targets.size(); ++t) {
          const double l = targets[t].row * f.row_shift + targets[t].n * f.period;
          acc[t] += wk / (2 * kPi) * std::polar(1.0, k * l) * r.g[targets[t].row].m;
        }
      }
    }
    for (size_t t = 0; t < targets.size(); ++t) {
      const double l = targets[t].row * f.row_shift + targets[t].n * f.period;
      const Vec2 R = l * f.l_hat + targets[t].row * f.row_spacing * f.t_hat;
      const Eigen::Matrix2cd ref = oracle::cell_model_transform(R, m);
      INFO(orientation_name(o) << " R " << R.transpose() << " rel " << rel_diff(acc[t], ref));
      CHECK(rel_diff(acc[t], ref) < 1e-4);
    }
  }
}

TEST_CASE("image sum against the damped lattice sum of the closed form") {
  const auto p = fx::params(18.73, 0);
  const auto m = make_cone_model(p, 1e-6);
  const double q0 = m.q0();
  // off the ring: inside one ring, outside another, far from both valleys
  const std::vector<Vec2> ks = {m.pK + 0.5 * q0 * Vec2(std::cos(0.4), std::sin(0.4)),
                                m.pK + 2.0 * q0 * Vec2(std::cos(2.0), std::sin(2.0)),
                                m.pKprime + 0.3 * q0 * Vec2(std::cos(-1.1), std::sin(-1.1)), Vec2(0.7, 0.3)};
  const std::vector<double> etas = {0.02, 0.01, 0.005};
  const auto S = oracle::lattice_sums(ks, etas, 2000.0, p);
  MomentumOptions o;
  o.denominator = Denominator::Linearized;
  o.image_cutoff = 200;
  o.gaussian_taper = true;
  const double area = std::sqrt(3.0) / 2;
  const Eigen::Matrix2cd m0 = momentum_greens(ks[0], m, o).m / area;
  const Eigen::Matrix2cd l0 = oracle::extrapolate_eta(etas, S[0]);
  for (size_t i = 1; i < ks.size(); ++i) {
    const Eigen::Matrix2cd mom = momentum_greens(ks[i], m, o).m / area - m0;
    const Eigen::Matrix2cd lat = oracle::extrapolate_eta(etas, S[i]) - l0;
    INFO("k " << i << " rel " << (lat - mom).norm() / mom.norm());
    CHECK((lat - mom).norm() < 1e-3 * mom.norm());
  }
}
