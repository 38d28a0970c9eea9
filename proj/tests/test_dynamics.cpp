#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "fixtures.hpp"
#include "topoarray/dynamics.hpp"

using namespace topo;

namespace {

PhysicalParams fig5_params() { return fx::params(18.73, 0.5); }

// c(t) from a stiff-free dense integration of i dc/dt = (H - wL) c + Omega(t)/2 s
Eigen::VectorXcd integrate_reference(const Eigen::MatrixXcd& H, const DriveConfig& d, int js, double t) {
  const int n = int(H.rows());
  Eigen::VectorXcd src = Eigen::VectorXcd::Zero(n);
  src(2 * js) = src(2 * js + 1) = 1 / std::sqrt(2.0);
  const Eigen::MatrixXcd A = H - d.omega_L * Eigen::MatrixXcd::Identity(n, n);
  using State = std::vector<double>;
  State x(2 * n, 0.0);
  auto rhs = [&](const State& y, State& dy, double tt) {
    Eigen::VectorXcd c(n);
    for (int i = 0; i < n; ++i) c(i) = cplx(y[2 * i], y[2 * i + 1]);
    const Eigen::VectorXcd dc = cplx(0, -1) * (A * c + 0.5 * d.envelope(tt) * src);
    for (int i = 0; i < n; ++i) dy[2 * i] = dc(i).real(), dy[2 * i + 1] = dc(i).imag();
  };
  namespace ode = boost::numeric::odeint;
  ode::integrate_adaptive(ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<State>()), rhs, x, 0.0, t,
                          0.01);
  Eigen::VectorXcd c(n);
  for (int i = 0; i < n; ++i) c(i) = cplx(x[2 * i], x[2 * i + 1]);
  return c;
}

int compact_index(const FiniteLattice& l, int site) {
  const auto s = l.sites();
  return int(std::find(s.begin(), s.end(), site) - s.begin());
}

}  // namespace

TEST_CASE("centred hexagon counts and symmetry") {
  const auto p = fig5_params();
  CHECK(hexagon_lattice(0, p).size() == 1);
  CHECK(hexagon_lattice(1, p).size() == 7);
  CHECK(hexagon_lattice(22, p).size() == 1519);
  for (int k = 0; k <= 9; ++k) {
    const auto l = hexagon_lattice(k, p);
    CHECK(l.size() == 3 * k * (k + 1) + 1);
    // closed under rotation by 60 degrees about the centre
    const double c = 0.5, s = std::sqrt(3.0) / 2;
    for (const Vec2& r : l.pos) {
      const Vec2 q(c * r.x() - s * r.y(), s * r.x() + c * r.y());
      bool hit = false;
      for (const Vec2& o : l.pos) hit = hit || (o - q).norm() < 1e-9;
      CHECK(hit);
    }
  }
  CHECK_THROWS_AS(hexagon_lattice(-1, p), ConfigError);
}

TEST_CASE("boundary rings") {
  const auto l = hexagon_lattice(4, fig5_params());
  auto count = [](const std::vector<char>& m) { return int(std::count(m.begin(), m.end(), 1)); };
  CHECK(count(boundary_mask(l, 1)) == 24);
  CHECK(count(boundary_mask(l, 2)) == 24 + 18);
  CHECK(count(boundary_mask(hexagon_lattice(0, fig5_params()), 1)) == 1);
  // a vacancy exposes its six neighbours
  auto v = l;
  const int centre = int(std::min_element(l.pos.begin(), l.pos.end(),
                                          [](const Vec2& a, const Vec2& b) { return a.norm() < b.norm(); }) -
                         l.pos.begin());
  v.present[centre] = 0;
  CHECK(count(boundary_mask(v, 1)) == 24 + 6);
}

TEST_CASE("disorder: identity, determinism, binomial filling, broadening") {
  const auto l = hexagon_lattice(22, fig5_params());
  DisorderSpec none;
  const auto same = apply_disorder(l, none);
  CHECK(same.present == l.present);
  CHECK(same.omega == l.omega);

  DisorderSpec d;
  d.filling = 0.9;
  d.sigma_inh = 0.1;
  d.seed = 12345;
  const auto a = apply_disorder(l, d), b = apply_disorder(l, d);
  CHECK(a.present == b.present);
  CHECK(a.omega == b.omega);
  const double mean = 0.9 * 1519, sd = std::sqrt(1519 * 0.9 * 0.1);
  CHECK(std::abs(a.count() - mean) < 3 * sd);
  d.seed = 12346;
  CHECK(apply_disorder(l, d).present != a.present);

  d.exact_count = true;
  CHECK(apply_disorder(l, d).count() == 1367);

  // frequencies: sample mean and spread of a N(0, 0.1^2) draw
  double s1 = 0, s2 = 0;
  for (double w : a.omega) s1 += w, s2 += w * w;
  const double m = s1 / 1519, var = s2 / 1519 - m * m;
  CHECK(std::abs(m) < 4 * 0.1 / std::sqrt(1519.0));
  CHECK(std::abs(std::sqrt(var) - 0.1) < 0.1 * 4 / std::sqrt(2.0 * 1519));

  CHECK_THROWS_AS(apply_disorder(l, DisorderSpec{0, 0, 1, false}), ConfigError);
  CHECK_THROWS_AS(apply_disorder(l, DisorderSpec{1.1, 0, 1, false}), ConfigError);
  CHECK_THROWS_AS(apply_disorder(l, DisorderSpec{1, -0.1, 1, false}), ConfigError);
}

TEST_CASE("Hamiltonian: single emitter and a pair") {
  const auto p = fig5_params();
  const auto one = hexagon_lattice(0, p);
  const auto H1 = assemble_hamiltonian(one, 0.5, p);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(H1, false);
  std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + 2);
  std::sort(ev.begin(), ev.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  const double g = gamma_pc(p);
  CHECK(std::abs(ev[0] - cplx(-0.5, -g / 2)) < 1e-13);
  CHECK(std::abs(ev[1] - cplx(0.5, -g / 2)) < 1e-13);
  // sigma+/- are the Zeeman eigenstates: the single-site block is diagonal
  CHECK(std::abs(H1(0, 1)) < 1e-15);
  CHECK(std::abs(H1(1, 0)) < 1e-15);

  FiniteLattice two;
  two.pos = {Vec2(0, 0), Vec2(1, 0)};
  two.omega = {0.0, 0.0};
  two.present = {1, 1};
  const auto H2 = assemble_hamiltonian(two, 0.5, p);
  const Eigen::Matrix2cd G = greens_real(Vec2(-1, 0), p).m;
  // term-by-term: circular components of the pair coupling
  const double x = 1 / p.xi_a;
  const cplx h0 = std::cyl_bessel_j(0, x) - cplx(0, 1) * std::cyl_neumann(0, x);
  const cplx h1 = std::cyl_bessel_j(1, x) - cplx(0, 1) * std::cyl_neumann(1, x);
  const LatticeGeometry lg = lattice_vectors(p);
  const cplx eK = std::polar(1.0, -lg.pK.x()), eKp = std::polar(1.0, -lg.pKprime.x());
  const cplx pp = cplx(0, p.K_amp_a) * (eK + eKp), pm = cplx(0, p.K_amp_a) * (eK - eKp);
  const cplx ph = std::polar(1.0, kPi);  // direction of r1 - r2
  CHECK(std::abs(H2(0, 2) - p.g_pref_red * (-pp * h0)) < 1e-12 * std::abs(H2(0, 2)));
  CHECK(std::abs(H2(0, 3) - p.g_pref_red * (ph * pm * h1)) < 1e-12 * std::max(1.0, std::abs(H2(0, 3))));
  CHECK(std::abs(H2(1, 2) - p.g_pref_red * (-std::conj(ph) * pm * h1)) < 1e-12 * std::max(1.0, std::abs(H2(1, 2))));
  CHECK((H2.block<2, 2>(0, 2) - p.g_pref_red * G).norm() < 1e-14 * G.norm() * p.g_pref_red);

  two.pos[1] = Vec2(0, 0);
  CHECK_THROWS_AS(assemble_hamiltonian(two, 0.5, p), ConfigError);
  FiniteLattice empty = one;
  empty.present[0] = 0;
  CHECK_THROWS_AS(assemble_hamiltonian(empty, 0.5, p), ConfigError);
}

TEST_CASE("passivity of finite spectra, clean and disordered") {
  const auto p = fig5_params();
  auto l = hexagon_lattice(6, p);
  for (int pass = 0; pass < 2; ++pass) {
    const auto H = assemble_hamiltonian(l, 0.5, p);
    // dissipative part is negative semidefinite
    const Eigen::MatrixXcd D = (H - H.adjoint()) / cplx(0, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> sa(D);
    CHECK(sa.eigenvalues().maxCoeff() <= 1e-9);
    const auto es = eigensystem(H);
    CHECK(es.values.imag().maxCoeff() <= 1e-9);
    for (int i = 1; i < es.values.size(); ++i) CHECK(es.values(i - 1).real() <= es.values(i).real());
    // eigenpairs
    CHECK((H * es.vectors - es.vectors * es.values.asDiagonal()).norm() < 1e-10 * H.norm());
    l = apply_disorder(l, DisorderSpec{0.9, 0.1, 7, false});
  }
}

TEST_CASE("spectrum report: trivial cases and a census") {
  const auto p = fig5_params();
  const auto one = hexagon_lattice(0, p);
  const auto r1 = spectrum_report(eigensystem(assemble_hamiltonian(one, 0.5, p)), one, SpectrumOptions{});
  CHECK(r1.in_gap == 0);
  CHECK(r1.in_gap_edge == 0);

  const auto l = hexagon_lattice(8, p);
  const auto es = eigensystem(assemble_hamiltonian(l, 0.5, p));
  const auto r = spectrum_report(es, l, SpectrumOptions{});
  REQUIRE(r.has_gap);
  for (double w : r.boundary_weight) CHECK((w >= 0 && w <= 1 + 1e-12));
  int inside = 0;
  for (auto w : r.omega)
    if (w.real() > r.gap_lo && w.real() < r.gap_hi) ++inside;
  CHECK(inside == r.in_gap);
  CHECK(r.in_gap_edge <= r.in_gap);
  SpectrumOptions bad;
  bad.edge_weight_threshold = 1.5;
  CHECK_THROWS_AS(spectrum_report(es, l, bad), ConfigError);
}

TEST_CASE("free evolution against the matrix exponential; norm never grows") {
  const auto p = fig5_params();
  const auto l = hexagon_lattice(2, p);
  const auto H = assemble_hamiltonian(l, 0.5, p);
  const auto es = eigensystem(H);
  const int n = int(H.rows());
  EvolveOptions o;
  o.c0 = Eigen::VectorXcd::Zero(n);
  o.c0(2 * 7) = 1;  // sigma+ on an edge site
  std::vector<double> ts;
  for (int i = 0; i <= 200; ++i) ts.push_back(0.25 * i);
  const auto s = evolve(es, l, DriveConfig{}, ts, o);
  for (size_t k = 1; k < ts.size(); ++k) CHECK(s.norm[k] <= s.norm[k - 1] * (1 + 1e-12));
  CHECK(std::abs(s.norm[0] - 1) < 1e-12);
  for (double t : {3.0, 17.5, 50.0}) {
    const Eigen::VectorXcd ref = (cplx(0, -t) * H).exp() * o.c0;
    const size_t k = size_t(std::lround(t / 0.25));
    for (int j = 0; j < l.count(); ++j) {
      const double pr = std::norm(ref(2 * j)) + std::norm(ref(2 * j + 1));
      CHECK(std::abs(s.prob[k][j] - pr) < 1e-10);
    }
  }
}

TEST_CASE("driven evolution against a dense ODE integration") {
  const auto p = fig5_params();
  const auto l = hexagon_lattice(2, p);
  const auto H = assemble_hamiltonian(l, 0.5, p);
  const auto es = eigensystem(H);
  DriveConfig d;
  d.site = default_drive_site(l);
  d.rabi = 0.01;
  d.omega_L = -0.3;
  d.t0 = 12;
  d.ramp_sigma = 3;
  const std::vector<double> ts = {5, 12, 20, 31.5};
  const auto s = evolve(es, l, d, ts);
  const int js = compact_index(l, d.site);
  double scale = 0;
  for (double x : s.norm) scale = std::max(scale, x);
  for (size_t k = 0; k < ts.size(); ++k) {
    const Eigen::VectorXcd ref = integrate_reference(H, d, js, ts[k]);
    double err = 0;
    for (int j = 0; j < l.count(); ++j)
      err = std::max(err, std::abs(s.prob[k][j] - std::norm(ref(2 * j)) - std::norm(ref(2 * j + 1))));
    INFO("t " << ts[k] << " err " << err << " scale " << scale);
    CHECK(err < 1e-6 * scale);
  }
  CHECK(s.halvings >= 1);
  DriveConfig missing = d;
  missing.site = 999;
  CHECK_THROWS_AS(evolve(es, l, missing, ts), ConfigError);
  CHECK_THROWS_AS(evolve(es, l, d, {3, 2}), ConfigError);
}

TEST_CASE("evolution is independent of the worker count") {
  const auto p = fig5_params();
  const auto l = apply_disorder(hexagon_lattice(4, p), DisorderSpec{0.9, 0.1, 3, false});
  const auto es = eigensystem(assemble_hamiltonian(l, 0.5, p, false, 1));
  CHECK(assemble_hamiltonian(l, 0.5, p, false, 1) == assemble_hamiltonian(l, 0.5, p, false, 3));
  DriveConfig d{default_drive_site(l), 0.01, -0.37, 20, 5};
  EvolveOptions o1, o3;
  o3.workers = 3;
  const std::vector<double> ts = {10, 20, 40};
  const auto a = evolve(es, l, d, ts, o1), b = evolve(es, l, d, ts, o3);
  CHECK(a.prob == b.prob);
  CHECK(a.norm == b.norm);
}

TEST_CASE("transport metrics on synthetic distributions") {
  const auto l = hexagon_lattice(6, fig5_params());
  const int drive = default_drive_site(l);
  const auto sites = l.sites();
  SnapshotSeries u;
  u.t = {0};
  u.prob = {std::vector<double>(sites.size(), 1.0)};
  u.norm = {double(sites.size())};
  const auto mu = transport_metrics(u, l, drive);
  CHECK(mu.chirality[0] == 0);
  const auto mask = boundary_mask(l, 2);
  int nb = 0;
  for (int i : sites) nb += mask[i];
  CHECK(std::abs(mu.boundary_fraction[0] - double(nb) / sites.size()) < 1e-12);
  CHECK(std::abs(mu.boundary_fraction[0] + mu.bulk_fraction[0] - 1) < 1e-12);

  const auto outer = boundary_mask(l, 1);
  const double th0 = std::atan2(l.pos[drive].y(), l.pos[drive].x());
  auto cw_angle = [&](int site) {
    double a = -std::remainder(std::atan2(l.pos[site].y(), l.pos[site].x()) - th0, 2 * kPi);
    return a < 0 ? a + 2 * kPi : a;
  };
  // a point excitation carried clockwise around the outer ring in 45 degree steps
  SnapshotSeries s;
  for (int k = 0; k <= 10; ++k) {
    const double target = std::fmod(k * kPi / 4, 2 * kPi);
    size_t best = 0;
    double bd = 1e9;
    for (size_t j = 0; j < sites.size(); ++j) {
      if (!outer[sites[j]]) continue;
      const double d = std::abs(std::remainder(cw_angle(sites[j]) - target, 2 * kPi));
      if (d < bd) bd = d, best = j;
    }
    std::vector<double> pr(sites.size(), 0.0);
    pr[best] = 1;
    s.t.push_back(k);
    s.prob.push_back(pr);
    s.norm.push_back(1);
  }
  const auto m = transport_metrics(s, l, drive);
  for (int k = 1; k <= 10; ++k) {
    CHECK(m.chirality[k] == -1);
    CHECK(m.centroid[k] < m.centroid[k - 1]);
    CHECK(std::abs(m.centroid[k] + k * kPi / 4) < 0.2);  // unwrapped past -pi and -2 pi
    CHECK(m.angular_velocity[k] < 0);
    CHECK(m.boundary_fraction[k] == 1);
  }
  // a lit arc growing clockwise from the drive
  SnapshotSeries g;
  for (int k = 0; k <= 7; ++k) {
    std::vector<double> pr(sites.size(), 0.0);
    for (size_t j = 0; j < sites.size(); ++j)
      if (outer[sites[j]] && cw_angle(sites[j]) <= k * kPi / 4 + 1e-9) pr[j] = 1;
    g.t.push_back(k);
    g.prob.push_back(pr);
    g.norm.push_back(1);
  }
  const auto ga = transport_metrics(g, l, drive);
  for (int k = 1; k <= 7; ++k) {
    INFO("k " << k << " arc " << ga.arc_progress[k]);
    CHECK(ga.arc_progress[k] >= k * kPi / 4 - 2 * kPi / 36 - 1e-9);  // one bin of resolution
    CHECK(ga.arc_progress[k] <= k * kPi / 4 + 2 * kPi / 36 + 1e-9);
    CHECK(ga.chirality[k] == -1);
  }
  CHECK_THROWS_AS(transport_metrics(s, l, -1), ConfigError);
}

TEST_CASE("small driven patch: clockwise, boundary dominated, with and without defects") {
  const auto p = fig5_params();
  const auto clean = hexagon_lattice(10, p);
  const auto dirty = apply_disorder(clean, DisorderSpec{0.9, 0.087, 1, false});
  for (const auto* l : {&clean, &dirty}) {
    const auto es = eigensystem(assemble_hamiltonian(*l, 0.5, p));
    DriveConfig d{default_drive_site(*l), 0.0059, -0.37, 127.5, 23.3};
    std::vector<double> ts;
    for (double t = 127.5; t <= 161.5; t += 4.25) ts.push_back(t);
    const auto m = transport_metrics(evolve(es, *l, d, ts), *l, d.site);
    for (size_t k = 0; k < ts.size(); ++k) {
      INFO("t " << ts[k] << " centroid " << m.centroid[k] << " boundary " << m.boundary_fraction[k]);
      CHECK(m.chirality[k] == -1);
      CHECK(m.boundary_fraction[k] > m.bulk_fraction[k]);
    }
  }
}

TEST_CASE("Markov bound") {
  const auto p = fig5_params();
  const auto r = markov_check(p, 1519, 1.0);
  CHECK(std::abs(r.n_max - 250) < 0.05 * 250);
  // direct evaluation from the SI inputs
  const double a = 738e-9 / 3, vs = 0.25 * kC, g = 2 * kPi * 300e6;
  CHECK(std::abs(r.n_max - std::pow(vs / (a * g * 40), 2.0 / 3.0)) < 1e-9 * r.n_max);
  CHECK(std::abs(r.L - std::sqrt(1519.0)) < 1e-12);
  CHECK(std::abs(r.tau_c - std::sqrt(1519.0) * a / vs) < 1e-12 * r.tau_c);
  CHECK(std::abs(r.tau_A - 1 / g) < 1e-12 * r.tau_A);
  CHECK(std::abs(markov_check(p, 1519, 1.0, 6400).n_max / r.n_max - std::pow(0.5, 2.0 / 3.0)) < 1e-12);
  CHECK(std::abs(markov_check(p, 4 * 1519, 1.0).tau_c / r.tau_c - 2) < 1e-12);
  CHECK(r.pass == (1.0 * g < 0.1 * vs / (r.L * a)));
  CHECK_THROWS_AS(markov_check(p, 0, 1), ConfigError);
}
