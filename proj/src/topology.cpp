#include "topoarray/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "topoarray/parallel.hpp"

namespace topo {

GridKind parse_grid_kind(const std::string& s) {
  if (s == "uniform") return GridKind::Uniform;
  if (s == "valley") return GridKind::Valley;
  throw ConfigError("chern_grid_kind must be uniform or valley, got '" + s + "'");
}

std::vector<double> grid_lines(const ChernGridSpec& s, double q0) {
  if (s.n < 4) throw ConfigError("chern grid needs at least 4 points per axis");
  std::vector<double> u(s.n);
  if (s.kind == GridKind::Uniform) {
    for (int i = 0; i < s.n; ++i) u[i] = (i + s.shift) / s.n;
    return u;
  }
  // density: flat part plus wrapped Cauchy peaks at the valley coordinates 1/3, 2/3
  const double w = s.valley_width * q0 / (2 * kPi);
  const double r = std::exp(-2 * kPi * w), f = 0.7;
  auto rho = [&](double x) {
    double acc = 1 - f;
    for (double c : {1.0 / 3, 2.0 / 3})
      acc += 0.5 * f * (1 - r * r) / (1 + r * r - 2 * r * std::cos(2 * kPi * (x - c)));
    return acc;
  };
  const int M = 200000;
  std::vector<double> cdf(M + 1, 0.0);
  double prev = rho(0);
  for (int i = 1; i <= M; ++i) {
    const double cur = rho(double(i) / M);
    cdf[i] = cdf[i - 1] + 0.5 * (prev + cur) / M;
    prev = cur;
  }
  const double total = cdf[M];
  for (int i = 0; i < s.n; ++i) {
    const double t = (i + s.shift) / s.n * total;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), t);
    const int hi = std::max(1, int(it - cdf.begin()));
    const double a = cdf[hi - 1], b = cdf[hi];
    u[i] = (hi - 1 + (b > a ? (t - a) / (b - a) : 0.0)) / M;
  }
  return u;
}

namespace {

struct Node {
  Eigen::Vector2cd mid, comp;
};

double loop_flux(const std::array<const Eigen::Vector2cd*, 4>& v, double& min_link) {
  cplx prod = 1;
  for (int i = 0; i < 4; ++i) {
    const cplx l = v[i]->dot(*v[(i + 1) % 4]);
    min_link = std::min(min_link, std::abs(l));
    prod *= l;
  }
  return std::arg(prod);
}

// Berry connection i<u|grad u>: the loop product carries minus the enclosed flux.
constexpr double kOrientation = -1.0;

Node node_at(const Vec2& k, double muB, const Environment& env) {
  const BandSample s = band_sample(k, muB, env);
  return {s.vec[s.middle], s.vec[1 - s.middle]};
}

// Corners in counterclockwise order; splits into four while a link is nearly
// orthogonal.
void plaquette_flux(const std::array<Vec2, 4>& k, const std::array<Node, 4>& nd, double muB,
                    const Environment& env, int depth, double& fm, double& fc, double& min_link,
                    int& refined) {
  double ml = 1;
  const double a = loop_flux({&nd[0].mid, &nd[1].mid, &nd[2].mid, &nd[3].mid}, ml);
  const double b = loop_flux({&nd[0].comp, &nd[1].comp, &nd[2].comp, &nd[3].comp}, ml);
  if (ml >= 1e-8 || depth <= 0) {
    fm += kOrientation * a;
    fc += kOrientation * b;
    min_link = std::min(min_link, ml);
    return;
  }
  ++refined;
  std::array<Vec2, 4> e;
  std::array<Node, 4> en;
  for (int i = 0; i < 4; ++i) {
    e[i] = 0.5 * (k[i] + k[(i + 1) % 4]);
    en[i] = node_at(e[i], muB, env);
  }
  const Vec2 c = 0.25 * (k[0] + k[1] + k[2] + k[3]);
  const Node cn = node_at(c, muB, env);
  for (int i = 0; i < 4; ++i) {
    const int p = (i + 3) % 4;
    plaquette_flux({k[i], e[i], c, e[p]}, {nd[i], en[i], cn, en[p]}, muB, env, depth - 1, fm, fc,
                   min_link, refined);
  }
}

}  // namespace

ChernResult chern_numbers(const ChernGridSpec& s, double muB, const Environment& env_in, bool keep_map,
                          unsigned long phase_seed) {
  if (muB == 0) throw NumericalError("chern_numbers: mu_B = 0 leaves the gaps closed");
  Environment env = env_in;
  env.cone.eps = 0;
  env.eps_scale = 0;
  const LatticeGeometry& g = env.cone.geom;
  const std::vector<double> u = grid_lines(s, env.cone.q0());
  const int n = s.n;

  std::vector<Node> nodes(n * n);
  std::vector<BandSample> samples(n * n);
  parallel_for(n * n, env.workers, [&](int idx) {
    const int i = idx / n, j = idx % n;
    samples[idx] = band_sample(u[i] * g.G1 + u[j] * g.G2, muB, env);
    nodes[idx] = {samples[idx].vec[samples[idx].middle], samples[idx].vec[1 - samples[idx].middle]};
  });
  if (phase_seed) {
    std::mt19937_64 rng(phase_seed);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (auto& nd : nodes) {
      nd.mid *= std::polar(1.0, ph(rng));
      nd.comp *= std::polar(1.0, ph(rng));
    }
  }

  ChernResult res;
  // gaps on the nodes
  const double inf = std::numeric_limits<double>::infinity();
  GapInfo& gi = res.gaps;
  gi.lower_max = -inf;
  gi.middle_min = inf;
  gi.middle_max = -inf;
  gi.upper_min = inf;
  for (const auto& sm : samples)
    for (int b = 0; b < 2; ++b) {
      const double re = sm.omega[b].real();
      if (sm.label[b] == BandLabel::Lower) gi.lower_max = std::max(gi.lower_max, re);
      if (sm.label[b] == BandLabel::Middle) {
        gi.middle_min = std::min(gi.middle_min, re);
        gi.middle_max = std::max(gi.middle_max, re);
      }
      if (sm.label[b] == BandLabel::Upper) gi.upper_min = std::min(gi.upper_min, re);
    }
  if (!(gi.gap() > 0))
    throw NumericalError("chern_numbers: band windows overlap (gap " + std::to_string(gi.gap()) +
                         "), Chern numbers undefined");

  const double det = g.G1.x() * g.G2.y() - g.G1.y() * g.G2.x();
  std::vector<Plaquette> plaq(n * n);
  std::vector<double> minl(n * n, 1.0);
  std::vector<int> refined(n * n, 0);
  parallel_for(n * n, env.workers, [&](int idx) {
    const int i = idx / n, j = idx % n;
    const int i1 = (i + 1) % n, j1 = (j + 1) % n;
    const double ui = u[i], uj = u[j];
    const double ui1 = i1 == 0 ? u[0] + 1 : u[i1], uj1 = j1 == 0 ? u[0] + 1 : u[j1];
    std::array<Vec2, 4> k = {ui * g.G1 + uj * g.G2, ui1 * g.G1 + uj * g.G2, ui1 * g.G1 + uj1 * g.G2,
                             ui * g.G1 + uj1 * g.G2};
    std::array<Node, 4> nd = {nodes[i * n + j], nodes[i1 * n + j], nodes[i1 * n + j1], nodes[i * n + j1]};
    if (det < 0) {
      std::swap(k[1], k[3]);
      std::swap(nd[1], nd[3]);
    }
    Plaquette& p = plaq[idx];
    p.center = 0.25 * (k[0] + k[1] + k[2] + k[3]);
    p.area = std::abs(det) * (ui1 - ui) * (uj1 - uj);
    p.ring = ring_coordinate(p.center, env.cone);
    p.inside = p.ring < 1;
    plaquette_flux(k, nd, muB, env, s.max_depth, p.middle, p.composite, minl[idx], refined[idx]);
  });

  // fixed-order sums
  double fm = 0, fl = 0, fu = 0;
  for (const auto& p : plaq) {
    fm += p.middle;
    (p.inside ? fl : fu) += p.composite;
  }
  for (int idx = 0; idx < n * n; ++idx) {
    res.min_link = std::min(res.min_link, minl[idx]);
    res.refined += refined[idx];
  }
  const double tp = 2 * kPi;
  res.flux = {fl / tp, fm / tp, fu / tp};
  res.composite_total = (fl + fu) / tp;
  for (int b = 0; b < 3; ++b) res.chern[b] = int(std::lround(res.flux[b]));
  res.integer_defect = std::max(std::abs(res.flux[0] - res.chern[0]), std::abs(res.flux[2] - res.chern[2]));
  if (keep_map) res.plaquettes = std::move(plaq);
  return res;
}

BerryMap berry_map(const ChernGridSpec& s, double muB, const Environment& env, double radius_q0) {
  BerryMap m;
  m.radius = radius_q0;
  m.result = chern_numbers(s, muB, env, true);
  double in = 0, all = 0;
  for (const auto& p : m.result.plaquettes) {
    all += std::abs(p.middle);
    if (p.ring < radius_q0) in += std::abs(p.middle);
  }
  m.concentration = all > 0 ? in / all : 0;
  return m;
}

}  // namespace topo
