#include "topoarray/dynamics.hpp"

#include <lapacke.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <cmath>
#include <numeric>
#include <random>

#include "topoarray/parallel.hpp"

namespace topo {

int FiniteLattice::count() const { return int(std::count(present.begin(), present.end(), 1)); }

std::vector<int> FiniteLattice::sites() const {
  std::vector<int> s;
  for (int i = 0; i < size(); ++i)
    if (present[i]) s.push_back(i);
  return s;
}

FiniteLattice hexagon_lattice(int shells, const PhysicalParams& p) {
  if (shells < 0) throw ConfigError("shells must be >= 0");
  const LatticeGeometry g = lattice_vectors(p);
  // hexagonal ring index from the normals of the three bond directions
  const Vec2 b1 = g.R1, b2 = g.R2, b3 = g.R1 - g.R2;
  auto ring = [&](const Vec2& r) {
    double m = 0;
    for (const Vec2& b : {b1, b2, b3}) {
      const Vec2 n(b.y(), -b.x());
      m = std::max(m, std::abs(r.dot(n)));
    }
    return m / (std::sqrt(3.0) / 2);
  };
  FiniteLattice l;
  l.shells = shells;
  const int n = 2 * shells;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const Vec2 r = double(i) * g.R1 + double(j) * g.R2;
      if (ring(r) <= shells + 1e-9) l.pos.push_back(r);
    }
  // deterministic order: rows top to bottom, then left to right
  std::sort(l.pos.begin(), l.pos.end(), [](const Vec2& a, const Vec2& b) {
    if (std::abs(a.y() - b.y()) > 1e-9) return a.y() > b.y();
    return a.x() < b.x();
  });
  l.omega.assign(l.pos.size(), 0.0);
  l.present.assign(l.pos.size(), 1);
  return l;
}

FiniteLattice apply_disorder(const FiniteLattice& l, const DisorderSpec& d) {
  if (!(d.filling > 0 && d.filling <= 1)) throw ConfigError("filling must lie in (0, 1]");
  if (!(d.sigma_inh >= 0)) throw ConfigError("sigma_inh must be >= 0");
  FiniteLattice out = l;
  out.seed = d.seed;
  out.filling = d.filling;
  out.sigma_inh = d.sigma_inh;
  out.exact_count = d.exact_count;
  const int n = l.size();
  std::vector<double> u(n), z(n);
  // one generator per site, seeded from (seed, site): independent of order
  for (int i = 0; i < n; ++i) {
    std::seed_seq seq{std::uint32_t(d.seed), std::uint32_t(d.seed >> 32), std::uint32_t(i)};
    boost::random::mt19937_64 gen(seq);
    u[i] = boost::random::uniform_01<double>()(gen);
    z[i] = boost::random::normal_distribution<double>(0.0, 1.0)(gen);
  }
  if (d.exact_count) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (l.present[i]) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return u[a] < u[b]; });
    const size_t keep = size_t(std::llround(d.filling * double(idx.size())));
    for (size_t k = keep; k < idx.size(); ++k) out.present[idx[k]] = 0;
  } else if (d.filling < 1) {
    for (int i = 0; i < n; ++i)
      if (u[i] >= d.filling) out.present[i] = 0;
  }
  for (int i = 0; i < n; ++i) out.omega[i] = l.omega[i] + d.sigma_inh * z[i];
  return out;
}

namespace {

std::vector<std::vector<int>> neighbours(const FiniteLattice& l) {
  const int n = l.size();
  std::vector<std::vector<int>> nb(n);
  for (int i = 0; i < n; ++i) {
    if (!l.present[i]) continue;
    for (int j = 0; j < n; ++j)
      if (j != i && l.present[j] && std::abs((l.pos[i] - l.pos[j]).norm() - 1) < 1e-6) nb[i].push_back(j);
  }
  return nb;
}

}  // namespace

std::vector<char> boundary_mask(const FiniteLattice& l, int depth) {
  if (depth < 1) throw ConfigError("boundary_depth must be >= 1");
  const auto nb = neighbours(l);
  std::vector<char> mask(l.size(), 0);
  for (int i = 0; i < l.size(); ++i)
    if (l.present[i] && nb[i].size() < 6) mask[i] = 1;
  for (int step = 1; step < depth; ++step) {
    std::vector<char> next = mask;
    for (int i = 0; i < l.size(); ++i)
      if (mask[i])
        for (int j : nb[i]) next[j] = 1;
    mask = next;
  }
  return mask;
}

int default_drive_site(const FiniteLattice& l) {
  const double xr = l.shells * std::sqrt(3.0) / 2;
  int best = -1;
  double bd = 1e300;
  for (int i = 0; i < l.size(); ++i) {
    if (!l.present[i]) continue;
    const double d = (l.pos[i] - Vec2(xr, 0)).norm();
    if (d < bd - 1e-12) bd = d, best = i;
  }
  if (best < 0) throw ConfigError("lattice has no sites");
  return best;
}

Eigen::MatrixXcd assemble_hamiltonian(const FiniteLattice& l, double muB, const PhysicalParams& p,
                                      bool include_gamma0, int workers) {
  const std::vector<int> s = l.sites();
  const int n = int(s.size());
  if (n == 0) throw ConfigError("lattice has no sites");
  const Eigen::Matrix2cd U = circular_unitary();
  Eigen::Matrix2cd zc;
  zc << 0, cplx(0, -muB), cplx(0, muB), 0;
  const Eigen::Matrix2cd zee = U.adjoint() * zc * U;
  cplx onsite = onsite_term(p);
  if (include_gamma0) onsite += cplx(0, -p.Gamma_0 / 2);
  Eigen::MatrixXcd H(2 * n, 2 * n);
  parallel_for(n, workers, [&](int a) {
    for (int b = 0; b < n; ++b) {
      Eigen::Matrix2cd e;
      if (a == b) {
        e = zee + (l.omega[s[a]] + onsite) * Eigen::Matrix2cd::Identity();
      } else {
        const Vec2 r = l.pos[s[a]] - l.pos[s[b]];
        if (r.norm() < 1e-9) throw ConfigError("coincident sites in the lattice");
        e = p.g_pref_red * greens_real(r, p).m;
      }
      H.block<2, 2>(2 * a, 2 * b) = e;
    }
  });
  return H;
}

Eigensystem eigensystem(const Eigen::MatrixXcd& H) {
  const lapack_int n = lapack_int(H.rows());
  Eigen::MatrixXcd A = H;
  Eigen::VectorXcd w(n);
  Eigen::MatrixXcd vr(n, n);
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n, reinterpret_cast<lapack_complex_double*>(A.data()), n,
                    reinterpret_cast<lapack_complex_double*>(w.data()), nullptr, n,
                    reinterpret_cast<lapack_complex_double*>(vr.data()), n);
  if (info != 0) throw NumericalError("zgeev failed, info " + std::to_string(info));
  std::vector<int> ord(n);
  std::iota(ord.begin(), ord.end(), 0);
  std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) {
    if (w(a).real() != w(b).real()) return w(a).real() < w(b).real();
    return w(a).imag() < w(b).imag();
  });
  Eigensystem es;
  es.values.resize(n);
  es.vectors.resize(n, n);
  for (lapack_int i = 0; i < n; ++i) {
    es.values(i) = w(ord[i]);
    es.vectors.col(i) = vr.col(ord[i]).normalized();
  }
  return es;
}

SpectrumReport spectrum_report(const Eigensystem& es, const FiniteLattice& l, const SpectrumOptions& o) {
  if (!(o.edge_weight_threshold > 0 && o.edge_weight_threshold < 1))
    throw ConfigError("edge_weight_threshold must lie in (0, 1)");
  const std::vector<int> s = l.sites();
  const std::vector<char> mask = boundary_mask(l, o.boundary_depth);
  SpectrumReport r;
  const int n = int(es.values.size());
  r.omega.assign(es.values.data(), es.values.data() + n);
  r.boundary_weight.resize(n);
  r.edge.resize(n);
  for (int k = 0; k < n; ++k) {
    double w = 0, tot = 0;
    for (size_t j = 0; j < s.size(); ++j) {
      const double pj = std::norm(es.vectors(2 * j, k)) + std::norm(es.vectors(2 * j + 1, k));
      tot += pj;
      if (mask[s[j]]) w += pj;
    }
    r.boundary_weight[k] = tot > 0 ? w / tot : 0;
    r.edge[k] = r.boundary_weight[k] > o.edge_weight_threshold;
  }
  const bool windowed = o.search_hi > o.search_lo;
  double prev = 0, best = 0;
  bool have_prev = false;
  for (int k = 0; k < n; ++k) {
    if (r.edge[k] || -2 * r.omega[k].imag() > o.gap_max_linewidth) continue;
    const double x = r.omega[k].real();
    if (windowed && (x < o.search_lo || x > o.search_hi)) continue;
    if (have_prev && x - prev > best) {
      best = x - prev;
      r.gap_lo = prev;
      r.gap_hi = x;
      r.has_gap = true;
    }
    prev = x;
    have_prev = true;
  }
  if (r.has_gap)
    for (int k = 0; k < n; ++k) {
      const double x = r.omega[k].real();
      if (x > r.gap_lo && x < r.gap_hi) {
        ++r.in_gap;
        if (r.edge[k]) ++r.in_gap_edge;
      }
    }
  return r;
}

double DriveConfig::envelope(double t) const {
  const double u = (t - t0) / ramp_sigma;
  return rabi * std::exp(-0.5 * u * u);
}

SnapshotSeries evolve(const Eigensystem& es, const FiniteLattice& l, const DriveConfig& d,
                      const std::vector<double>& times, const EvolveOptions& o) {
  const std::vector<int> s = l.sites();
  const int n = int(es.values.size());
  if (n != 2 * int(s.size())) throw ConfigError("eigensystem does not match the lattice");
  for (size_t k = 0; k < times.size(); ++k)
    if (times[k] < 0 || (k > 0 && times[k] <= times[k - 1]))
      throw ConfigError("times must be non-negative and strictly ascending");
  const bool driven = d.rabi != 0;
  int js = -1;
  if (driven) {
    if (!(d.ramp_sigma > 0)) throw ConfigError("ramp_sigma must be positive");
    for (size_t j = 0; j < s.size(); ++j)
      if (s[j] == d.site) js = int(j);
    if (js < 0) throw ConfigError("drive site " + std::to_string(d.site) + " is not a present site");
  }

  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(es.vectors);
  Eigen::VectorXcd mu = es.values.array() - d.omega_L;
  Eigen::VectorXcd a0 = Eigen::VectorXcd::Zero(n), b = Eigen::VectorXcd::Zero(n);
  if (o.c0.size() > 0) {
    if (o.c0.size() != n) throw ConfigError("initial state has the wrong size");
    a0 = lu.solve(o.c0);
  }
  if (driven) {
    Eigen::VectorXcd src = Eigen::VectorXcd::Zero(n);
    src(2 * js) = src(2 * js + 1) = 1 / std::sqrt(2.0);
    b = lu.solve(src);
  }
  const cplx ci(0, 1);

  // mode amplitudes at each time for panel width h
  using GL = boost::math::quadrature::gauss<double, 8>;
  std::vector<double> gx, gw;
  for (size_t i = 0; i < GL::abscissa().size(); ++i) {
    const double x = GL::abscissa()[i], w = GL::weights()[i];
    gx.push_back(x);
    gw.push_back(w);
    if (x != 0) {
      gx.push_back(-x);
      gw.push_back(w);
    }
  }
  auto amplitudes = [&](double h) {
    std::vector<Eigen::VectorXcd> out(times.size(), Eigen::VectorXcd(n));
    parallel_for(n, o.workers, [&](int m) {
      cplx I = 0;
      double tp = 0;
      for (size_t k = 0; k < times.size(); ++k) {
        const double tk = times[k];
        if (driven && tk > tp) {
          // I(tk) = e^{-i mu (tk - tp)} I(tp) + int_tp^tk e^{-i mu (tk - s)} Omega(s) ds
          const int panels = std::max(1, int(std::ceil((tk - tp) / h)));
          const double w = (tk - tp) / panels;
          cplx acc = 0;
          for (int q = 0; q < panels; ++q) {
            const double mid = tp + (q + 0.5) * w;
            for (size_t g = 0; g < gx.size(); ++g) {
              const double sv = mid + 0.5 * w * gx[g];
              acc += gw[g] * d.envelope(sv) * std::exp(-ci * mu(m) * (tk - sv));
            }
          }
          I = std::exp(-ci * mu(m) * (tk - tp)) * I + 0.5 * w * acc;
        }
        tp = tk;
        out[k](m) = std::exp(-ci * mu(m) * tk) * a0(m) - ci * 0.5 * b(m) * I;
      }
    });
    return out;
  };

  double wmax = 1;
  for (int m = 0; m < n; ++m) wmax = std::max(wmax, std::abs(mu(m)));
  double h = 4 / wmax;
  std::vector<Eigen::VectorXcd> cur = amplitudes(h);
  SnapshotSeries out;
  if (driven) {
    for (int halving = 1;; ++halving) {
      std::vector<Eigen::VectorXcd> fine = amplitudes(h / 2);
      double diff = 0, scale = 0;
      for (size_t k = 0; k < times.size(); ++k) {
        diff = std::max(diff, (es.vectors * (fine[k] - cur[k])).norm());
        scale = std::max(scale, (es.vectors * fine[k]).norm());
      }
      cur = std::move(fine);
      h /= 2;
      out.halvings = halving;
      if (diff <= o.tol * std::max(scale, 1e-300)) break;
      if (halving >= o.max_halvings)
        throw NumericalError("evolve: step halving did not converge (change " + std::to_string(diff / scale) + ")");
    }
  }
  out.step = h;
  out.t = times;
  for (size_t k = 0; k < times.size(); ++k) {
    const Eigen::VectorXcd c = es.vectors * cur[k];
    std::vector<double> pr(s.size());
    double tot = 0;
    for (size_t j = 0; j < s.size(); ++j) {
      pr[j] = std::norm(c(2 * j)) + std::norm(c(2 * j + 1));
      tot += pr[j];
    }
    out.prob.push_back(std::move(pr));
    out.norm.push_back(tot);
  }
  return out;
}

TransportMetrics transport_metrics(const SnapshotSeries& s, const FiniteLattice& l, int drive_site,
                                   int boundary_depth, double arc_threshold) {
  if (drive_site < 0 || drive_site >= l.size() || !l.present[drive_site])
    throw ConfigError("drive site is not a present site");
  if (!(arc_threshold > 0)) throw ConfigError("arc_threshold must be positive");
  const std::vector<int> sites = l.sites();
  const std::vector<char> mask = boundary_mask(l, boundary_depth);
  const double th0 = std::atan2(l.pos[drive_site].y(), l.pos[drive_site].x());
  std::vector<double> rel(sites.size());
  for (size_t j = 0; j < sites.size(); ++j)
    rel[j] = std::remainder(std::atan2(l.pos[sites[j]].y(), l.pos[sites[j]].x()) - th0, 2 * kPi);
  constexpr int nbins = 36;
  TransportMetrics m;
  double prev = 0;
  for (size_t k = 0; k < s.t.size(); ++k) {
    const auto& p = s.prob[k];
    double tot = 0, bnd = 0, mom = 0;
    std::vector<double> bins(nbins, 0.0);
    for (size_t j = 0; j < sites.size(); ++j) {
      tot += p[j];
      if (!mask[sites[j]]) continue;
      bnd += p[j];
      double a = std::remainder(rel[j] - prev, 2 * kPi);
      if (std::abs(std::abs(a) - kPi) < 1e-9) a = 0;  // diametrically opposite: no side
      mom += p[j] * a;
      // clockwise angle from the drive in [0, 2 pi)
      double cw = -rel[j];
      if (cw < 0) cw += 2 * kPi;
      bins[std::min(nbins - 1, int(cw / (2 * kPi) * nbins))] += p[j];
    }
    const double c = bnd > 0 ? prev + mom / bnd : prev;
    m.angular_velocity.push_back(k == 0 ? 0.0 : (c - prev) / (s.t[k] - s.t[k - 1]));
    m.centroid.push_back(c);
    prev = c;
    m.chirality.push_back(std::abs(c) < 1e-6 ? 0 : (c > 0 ? 1 : -1));
    m.boundary_fraction.push_back(tot > 0 ? bnd / tot : 0);
    m.bulk_fraction.push_back(tot > 0 ? 1 - bnd / tot : 0);
    m.survival.push_back(tot);
    double arc = 0;
    int dark = 0;
    for (int b = 0; b < nbins && bnd > 0; ++b) {
      if (bins[b] >= arc_threshold * bnd / nbins) {
        arc = (b + 1) * 2 * kPi / nbins;
        dark = 0;
      } else if (++dark > 2) {
        break;
      }
    }
    // furthest reached so far
    m.arc_progress.push_back(k == 0 ? arc : std::max(arc, m.arc_progress.back()));
  }
  return m;
}

ValidityReport markov_check(const PhysicalParams& p, double n_sites, double gap_over_gamma, double lambda_edge,
                            double threshold) {
  if (!(n_sites > 0 && gap_over_gamma > 0 && lambda_edge > 0 && threshold > 0))
    throw ConfigError("markov_check needs positive inputs");
  ValidityReport r;
  r.L = std::sqrt(n_sites);
  r.tau_c = r.L * p.a / p.v_s;
  r.tau_A = 1 / (gap_over_gamma * p.gamma);
  r.margin = r.tau_A / r.tau_c;
  r.lambda_edge = lambda_edge;
  r.n_max = std::pow(p.v_s / (p.a * p.gamma * std::sqrt(lambda_edge)), 2.0 / 3.0);
  r.threshold = threshold;
  r.pass = gap_over_gamma * p.gamma < threshold * p.v_s / (r.L * p.a);
  return r;
}

}  // namespace topo
