#include "topoarray/edge.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "topoarray/parallel.hpp"

namespace topo {

StripeModel parse_stripe_model(const std::string& s) {
  if (s == "cone") return StripeModel::Cone;
  if (s == "closed") return StripeModel::ClosedForm;
  throw ConfigError("stripe_model must be cone or closed, got '" + s + "'");
}

const char* stripe_model_name(StripeModel m) { return m == StripeModel::Cone ? "cone" : "closed"; }

const char* edge_class_name(EdgeClass c) {
  switch (c) {
    case EdgeClass::Left: return "left";
    case EdgeClass::Right: return "right";
    default: return "bulk";
  }
}

void validate(const StripeConfig& c) {
  if (c.m < 7) throw ConfigError("stripe needs m >= 7 rows, got " + std::to_string(c.m));
  if (c.edge_columns < 1 || c.edge_columns > c.m) throw ConfigError("edge_columns must lie in [1, m]");
  if (!(c.edge_ratio > 1)) throw ConfigError("edge_ratio must exceed 1");
  if (c.nk < 1) throw ConfigError("nk must be positive");
  const double kmax = kPi / stripe_frame(c.orientation).period;
  for (double k : {c.k_min, c.k_max})
    if (std::abs(k) > kmax * (1 + 1e-12))
      throw ConfigError("k = " + std::to_string(k) + " outside the 1-D zone of the " +
                        orientation_name(c.orientation) + " stripe");
  if (c.k_max < c.k_min) throw ConfigError("k_max < k_min");
}

std::vector<double> stripe_k_samples(const StripeConfig& c) {
  validate(c);
  std::vector<double> k(c.nk);
  if (c.k_min == c.k_max) {
    const double P = stripe_frame(c.orientation).period;
    for (int i = 0; i < c.nk; ++i) k[i] = -kPi / P + (i + 0.5) * 2 * kPi / (P * c.nk);
  } else if (c.nk == 1) {
    k[0] = 0.5 * (c.k_min + c.k_max);
  } else {
    for (int i = 0; i < c.nk; ++i) k[i] = c.k_min + i * (c.k_max - c.k_min) / (c.nk - 1);
  }
  return k;
}

Eigen::MatrixXcd stripe_matrix(double k, const StripeConfig& c, const Environment& env) {
  validate(c);
  const int m = c.m;
  const StripeFrame f = stripe_frame(c.orientation);
  const PhysicalParams& p = env.params;
  // one block per row offset d = -(m-1) .. m-1
  std::vector<Eigen::Matrix2cd> blk(2 * m - 1);
  if (c.model == StripeModel::Cone) {
    std::vector<double> xs(2 * m - 1);
    for (int d = -(m - 1); d <= m - 1; ++d) xs[d + m - 1] = d * f.row_spacing;
    ContourSpec spec = c.contour;
    spec.orientation = c.orientation;
    const MixedResult r = mixed_greens(k, xs, env.cone, spec);
    for (size_t i = 0; i < blk.size(); ++i) blk[i] = p.g_pref_red / f.period * r.g[i].m;
  } else {
    std::vector<int> rows(2 * m - 1);
    std::iota(rows.begin(), rows.end(), -(m - 1));
    const auto r = mixed_greens_closed(k, rows, p, c.orientation);
    for (size_t i = 0; i < blk.size(); ++i) blk[i] = p.g_pref_red / f.period * r[i].m;
    blk[m - 1] += onsite_term(p) * Eigen::Matrix2cd::Identity();
  }
  Eigen::Matrix2cd zee;
  zee << 0, cplx(0, -c.muB), cplx(0, c.muB), 0;
  Eigen::MatrixXcd M(2 * m, 2 * m);
  for (int b = 0; b < m; ++b)
    for (int bp = 0; bp < m; ++bp) {
      Eigen::Matrix2cd e = blk[b - bp + m - 1];
      if (b == bp) e += zee;
      M.block<2, 2>(2 * b, 2 * bp) = e;
    }
  return M;
}

EdgeClass classify_profile(const Eigen::VectorXcd& v, int columns, double ratio) {
  const int m = int(v.size() / 2);
  const int n = 2 * std::min(columns, m);
  const double left = v.head(n).squaredNorm(), right = v.tail(n).squaredNorm();
  if (left > ratio * right) return EdgeClass::Left;
  if (right > ratio * left) return EdgeClass::Right;
  return EdgeClass::Bulk;
}

namespace {

GapSide gap_side(double re, const GapInfo& g) {
  if (re > g.lower_max && re < g.middle_min) return GapSide::Lower;
  if (re > g.middle_max && re < g.upper_min) return GapSide::Upper;
  return GapSide::None;
}

// index of the state at a neighbouring k with the largest overlap
int partner(const Eigen::VectorXcd& v, const std::vector<EdgeState>& other) {
  int best = 0;
  double bo = -1;
  for (size_t j = 0; j < other.size(); ++j) {
    const double o = std::abs(v.dot(other[j].profile));
    if (o > bo) bo = o, best = int(j);
  }
  return best;
}

}  // namespace

EdgeSpectrum edge_spectrum(const StripeConfig& c, const Environment& env) {
  EdgeSpectrum out;
  out.k = stripe_k_samples(c);
  const int nk = int(out.k.size());
  if (c.model == StripeModel::Cone) {
    // bulk windows from the valley squares and a full-zone grid together
    SamplingSpec s;
    std::vector<Vec2> ks = sample_points(s, env.cone);
    s.kind = Sampling::Grid;
    s.n = 48;
    const std::vector<Vec2> grid = sample_points(s, env.cone);
    ks.insert(ks.end(), grid.begin(), grid.end());
    out.gaps = band_structure(ks, c.muB, env).gaps;
    out.has_gaps = out.gaps.gap() > 0;
  }
  out.states.resize(nk);
  parallel_for(nk, c.workers, [&](int i) {
    const double k = out.k[i];
    const Eigen::MatrixXcd M = stripe_matrix(k, c, env);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, true);
    if (es.info() != Eigen::Success) throw NumericalError("edge_spectrum: eigensolver failed");
    const bool window = in_resonance_window(k, env.cone, c.orientation);
    std::vector<EdgeState> st(M.rows());
    for (int j = 0; j < M.rows(); ++j) {
      EdgeState& e = st[j];
      e.k = k;
      e.omega = es.eigenvalues()(j);
      e.profile = es.eigenvectors().col(j).normalized();
      e.cls = classify_profile(e.profile, c.edge_columns, c.edge_ratio);
      e.gap = out.has_gaps ? gap_side(e.omega.real(), out.gaps) : GapSide::None;
      e.in_resonance_window = window;
      e.linewidth = -2 * e.omega.imag();
    }
    std::stable_sort(st.begin(), st.end(),
                     [](const EdgeState& a, const EdgeState& b) { return a.omega.real() < b.omega.real(); });
    out.states[i] = std::move(st);
  });
  // group velocity: centred differences along overlap-tracked branches
  for (int i = 0; i < nk; ++i) {
    for (auto& e : out.states[i]) {
      if (nk < 2) break;
      const int lo = std::max(0, i - 1), hi = std::min(nk - 1, i + 1);
      const double wl = lo == i ? e.omega.real()
                                : out.states[lo][partner(e.profile, out.states[lo])].omega.real();
      const double wh = hi == i ? e.omega.real()
                                : out.states[hi][partner(e.profile, out.states[hi])].omega.real();
      e.group_velocity = (wh - wl) / (out.k[hi] - out.k[lo]);
    }
  }
  lifetime_report(out, env.params);
  return out;
}

void lifetime_report(EdgeSpectrum& s, const PhysicalParams& p) {
  const double kc = lattice_vectors(p).light_cone_radius;
  for (auto& row : s.states)
    for (auto& e : row) {
      e.in_light_cone = std::abs(e.k) < kc;
      e.effective_decay = std::max(e.linewidth, 0.0) + (e.in_light_cone ? p.Gamma_0 : 0.0);
      e.hops = e.effective_decay > 0 ? std::abs(e.group_velocity) / e.effective_decay
                                     : std::numeric_limits<double>::infinity();
    }
}

Traversal edge_traversal(const EdgeSpectrum& s, EdgeClass side, GapSide gap, double valley_k, double q0,
                         double direction, double threshold) {
  Traversal t;
  if (!s.has_gaps || gap == GapSide::None) return t;
  const double bottom = gap == GapSide::Lower ? s.gaps.lower_max : s.gaps.middle_max;
  const double top = gap == GapSide::Lower ? s.gaps.middle_min : s.gaps.upper_min;
  const double half = 0.5 * (top - bottom);
  const double target = bottom + threshold * half;
  // branch samples ordered by distance from the valley, outside the window
  std::vector<std::pair<double, const EdgeState*>> br;
  for (size_t i = 0; i < s.k.size(); ++i) {
    const double u = (s.k[i] - valley_k) * direction;
    if (u <= q0) continue;
    const EdgeState* best = nullptr;
    for (const auto& e : s.states[i])
      if (e.cls == side && e.gap == gap && e.omega.real() < bottom + half && !e.in_resonance_window)
        if (!best || e.omega.real() > best->omega.real()) best = &e;
    if (best) br.emplace_back(u, best);
  }
  std::sort(br.begin(), br.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 1; i < br.size(); ++i) {
    const double w0 = br[i - 1].second->omega.real(), w1 = br[i].second->omega.real();
    if (w0 >= target && w1 < target) {
      const double u = br[i - 1].first + (w0 - target) / (w0 - w1) * (br[i].first - br[i - 1].first);
      t.found = true;
      t.d_omega = half;
      t.d_k = u - q0;
      t.velocity = half / t.d_k;
      t.decay = br[i].second->effective_decay;
      t.in_light_cone = br[i].second->in_light_cone;
      t.hops = t.decay > 0 ? t.velocity / t.decay : std::numeric_limits<double>::infinity();
      break;
    }
  }
  return t;
}

EdgeChirality edge_chirality(const EdgeSpectrum& s) {
  EdgeChirality out;
  for (const auto& row : s.states)
    for (const auto& e : row) {
      if (e.in_resonance_window) continue;
      out.max_linewidth_outside = std::max(out.max_linewidth_outside, e.linewidth);
      if (e.gap == GapSide::None || e.cls == EdgeClass::Bulk) continue;
      const double mid = e.gap == GapSide::Lower ? 0.5 * (s.gaps.lower_max + s.gaps.middle_min)
                                                 : 0.5 * (s.gaps.middle_max + s.gaps.upper_min);
      if (e.omega.real() > mid) continue;
      const int sg = e.group_velocity > 0 ? 1 : -1;
      const bool left = e.cls == EdgeClass::Left;
      int& ref = left ? out.left_sign : out.right_sign;
      (left ? out.left : out.right)++;
      if (ref == 0) ref = sg;
      out.consistent = out.consistent && ref == sg;
    }
  return out;
}

}  // namespace topo
