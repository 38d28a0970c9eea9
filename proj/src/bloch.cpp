#include "topoarray/bloch.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "topoarray/parallel.hpp"

namespace topo {

Eigen::Matrix2cd Environment::g(const Vec2& k) const {
  if (table) return momentum_greens(k, *table, params, eps_scale).m;
  return momentum_greens(k, cone, options).m;
}

Environment make_environment(const PhysicalParams& p, double eps_scale, Denominator d) {
  Environment e;
  e.params = p;
  e.cone = make_cone_model(p, eps_scale);
  e.options.denominator = d;
  e.eps_scale = eps_scale;
  return e;
}

BlochMatrix bloch_matrix(const Vec2& k, double muB, const Environment& env) {
  BlochMatrix b;
  b.k = k;
  b.omega_A = env.params.wA_red;
  b.zeeman << 0, cplx(0, -muB), cplx(0, muB), 0;
  const double area = std::sqrt(3.0) / 2;
  b.interaction = env.params.g_pref_red / area * env.g(k);
  b.m = b.zeeman + b.interaction;
  return b;
}

const char* band_label_name(BandLabel b) {
  switch (b) {
    case BandLabel::Lower: return "lower";
    case BandLabel::Middle: return "middle";
    default: return "upper";
  }
}

double ring_coordinate(const Vec2& k, const DiracConeModel& m) {
  const double dK = (k - nearest_image(k, m.pK, m.geom)).norm();
  const double dKp = (k - nearest_image(k, m.pKprime, m.geom)).norm();
  return std::min(dK, dKp) / m.q0();
}

namespace {

// Resonant polarization of the lower cone branch at the nearest valley.
Eigen::Vector2cd ring_polarization(const Vec2& k, const DiracConeModel& m) {
  const Vec2 vK = nearest_image(k, m.pK, m.geom), vKp = nearest_image(k, m.pKprime, m.geom);
  const bool useK = (k - vK).norm() <= (k - vKp).norm();
  const Vec2 q = k - (useK ? vK : vKp);
  const Vec2 e = cone_field_offset(q, 1.0, useK ? Valley::K : Valley::Kp, Branch::Minus);
  return Eigen::Vector2cd(e.x(), e.y()).normalized();
}

// width of the regulated ring in units of q0
double ring_width(const Environment& env) {
  const DiracConeModel& m = env.cone;
  return m.eps / (2 * m.omega_A * (m.omega_Dirac - m.omega_A));
}

}  // namespace

BandSample band_sample(const Vec2& k, double muB, const Environment& env) {
  BandSample s;
  s.k = k;
  const BlochMatrix b = bloch_matrix(k, muB, env);
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(b.m);
  if (es.info() != Eigen::Success) throw NumericalError("band_sample: eigensolver failed");
  for (int i = 0; i < 2; ++i) {
    s.omega[i] = es.eigenvalues()(i);
    s.vec[i] = es.eigenvectors().col(i).normalized();
  }
  const double scale = 1 + std::abs(s.omega[0]) + std::abs(s.omega[1]);
  s.ambiguous = std::abs(s.omega[0] - s.omega[1]) < 1e-9 * scale;

  const double x = ring_coordinate(k, env.cone);
  const double w = ring_width(env);
  s.resonant = std::abs(x - 1) < 100 * w;
  int composite;
  if (std::abs(x - 1) < 0.05) {
    const Eigen::Vector2cd n = ring_polarization(k, env.cone);
    const double o0 = std::norm(n.dot(s.vec[0])), o1 = std::norm(n.dot(s.vec[1]));
    composite = o0 >= o1 ? 0 : 1;
  } else {
    const double sgn = x < 1 ? -1.0 : 1.0;
    composite = sgn * s.omega[0].real() >= sgn * s.omega[1].real() ? 0 : 1;
  }
  s.middle = 1 - composite;
  s.label[s.middle] = BandLabel::Middle;
  s.label[composite] = x < 1 ? BandLabel::Lower : BandLabel::Upper;
  return s;
}

BandResult band_structure(const std::vector<Vec2>& ks, double muB, const Environment& env) {
  BandResult r;
  r.samples.resize(ks.size());
  parallel_for(int(ks.size()), env.workers,
               [&](int i) { r.samples[i] = band_sample(ks[i], muB, env); });
  const double inf = std::numeric_limits<double>::infinity();
  GapInfo& g = r.gaps;
  g.lower_max = -inf;
  g.middle_min = inf;
  g.middle_max = -inf;
  g.upper_min = inf;
  // circular state of the lower Zeeman level
  const double rt = 1 / std::sqrt(2.0);
  const Eigen::Vector2cd sig = muB >= 0 ? Eigen::Vector2cd(rt, cplx(0, -rt)) : Eigen::Vector2cd(-rt, cplx(0, -rt));
  double circ = 0;
  int nmid = 0;
  for (const auto& s : r.samples) {
    if (s.ambiguous) ++r.ambiguous;
    if (s.resonant) continue;
    for (int i = 0; i < 2; ++i) {
      const double re = s.omega[i].real();
      switch (s.label[i]) {
        case BandLabel::Lower:
          g.lower_max = std::max(g.lower_max, re);
          r.has_lower = true;
          break;
        case BandLabel::Middle:
          g.middle_min = std::min(g.middle_min, re);
          g.middle_max = std::max(g.middle_max, re);
          break;
        case BandLabel::Upper:
          g.upper_min = std::min(g.upper_min, re);
          r.has_upper = true;
          break;
      }
    }
    circ += std::norm(sig.dot(s.vec[s.middle]));
    ++nmid;
  }
  r.middle_variation = g.middle_max - g.middle_min;
  r.middle_circular = nmid ? circ / nmid : 0;
  return r;
}

Sampling parse_sampling(const std::string& s) {
  if (s == "path") return Sampling::Path;
  if (s == "grid") return Sampling::Grid;
  if (s == "valley") return Sampling::Valley;
  throw ConfigError("band_sampling must be path, grid or valley, got '" + s + "'");
}

std::vector<Vec2> sample_points(const SamplingSpec& s, const DiracConeModel& m) {
  if (s.n < 2) throw ConfigError("sampling needs at least 2 points per axis");
  std::vector<Vec2> ks;
  const LatticeGeometry& g = m.geom;
  if (s.kind == Sampling::Path) {
    const Vec2 G(0, 0), K = g.pK, M = 0.5 * (g.G1 + g.G2);
    const Vec2 Kp2 = g.pKprime + g.G1 + g.G2;  // image of K' adjacent to M
    const std::vector<Vec2> legs = {G, K, M, Kp2, G};
    for (size_t l = 0; l + 1 < legs.size(); ++l)
      for (int i = 0; i < s.n; ++i) ks.push_back(legs[l] + (legs[l + 1] - legs[l]) * (double(i) / s.n));
    ks.push_back(G);
    return ks;
  }
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) ks.push_back((i + 0.5) / s.n * g.G1 + (j + 0.5) / s.n * g.G2);
  if (s.kind == Sampling::Valley) {
    const double h = s.window * m.q0();
    for (Vec2 V : {m.pK, m.pKprime}) {
      ks.push_back(V);
      for (int i = 0; i < s.n; ++i)
        for (int j = 0; j < s.n; ++j)
          ks.push_back(V + Vec2(-h + 2 * h * (i + 0.5) / s.n, -h + 2 * h * (j + 0.5) / s.n));
    }
  }
  return ks;
}

GapPoint converged_gap(double muB, const Environment& env, SamplingSpec s, int max_refine) {
  GapPoint gp;
  gp.muB = muB;
  double prev = 0;
  for (int r = 0; r <= max_refine; ++r) {
    const BandResult b = band_structure(sample_points(s, env.cone), muB, env);
    gp.info = b.gaps;
    gp.gap = b.gaps.gap();
    gp.refinements = r;
    if (r > 0 && std::abs(gp.gap - prev) < 0.01 * std::abs(gp.gap)) break;
    if (r > 0 && std::abs(gp.gap) < 1e-9) break;
    prev = gp.gap;
    s.n *= 2;
  }
  return gp;
}

GapScan gap_vs_field(const std::vector<double>& muBs, const Environment& env, const SamplingSpec& s) {
  GapScan scan;
  for (size_t i = 0; i < muBs.size(); ++i) {
    if (i > 0 && !(muBs[i] > muBs[i - 1])) throw ConfigError("mu_b_list must be ascending");
    if (muBs[i] < 0) throw ConfigError("mu_b_list must be non-negative");
    scan.points.push_back(converged_gap(muBs[i], env, s));
  }
  for (auto& p : scan.points) scan.plateau = std::max(scan.plateau, p.gap);
  // slope through the origin over points below half the plateau
  double sxy = 0, sxx = 0;
  for (auto& p : scan.points)
    if (p.muB > 0 && p.gap < 0.5 * scan.plateau) sxy += p.muB * p.gap, sxx += p.muB * p.muB;
  if (sxx == 0)
    for (auto& p : scan.points)
      if (p.muB > 0) {
        sxy = p.muB * p.gap, sxx = p.muB * p.muB;
        break;
      }
  scan.slope = sxx > 0 ? sxy / sxx : 0;
  return scan;
}

DetuningScan max_gap_vs_detuning(const std::vector<double>& delta_thz, const Config& base,
                                 const SamplingSpec& s) {
  DetuningScan out;
  for (double d : delta_thz) {
    if (!(d > 0)) throw ConfigError("delta_list entries must be positive");
    Config c = base;
    c.set("delta_a_over_2pi_thz", d);
    const PhysicalParams p = derive_params(c);
    const Environment env = make_environment(p, c.get_double("eps_scale", 1.0));
    DetuningPoint dp;
    dp.delta_thz = d;
    dp.J = p.J;
    // the plateau starts near mu_B = J / 2
    std::vector<double> mus;
    for (double f : {0.125, 0.25, 0.6, 0.8, 1.0, 1.5}) mus.push_back(f * p.J);
    dp.scan = gap_vs_field(mus, env, s);
    dp.max_gap = dp.scan.plateau;
    out.points.push_back(dp);
  }
  double mx = 0, my = 0;
  const int n = int(out.points.size());
  for (auto& p : out.points) mx += std::log(p.delta_thz), my += std::log(p.max_gap);
  if (n >= 2) {
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (auto& p : out.points) {
      const double dx = std::log(p.delta_thz) - mx;
      sxy += dx * (std::log(p.max_gap) - my);
      sxx += dx * dx;
    }
    out.exponent = sxy / sxx;
  }
  return out;
}

}  // namespace topo
