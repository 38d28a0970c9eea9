#include "topoarray/greens.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>

namespace topo {

cplx hankel2(int order, double x) {
  if (!(x > 0)) throw NumericalError("hankel2: argument must be positive");
  if (order == 0) return {boost::math::cyl_bessel_j(0, x), -boost::math::cyl_neumann(0, x)};
  if (order == 1) return {boost::math::cyl_bessel_j(1, x), -boost::math::cyl_neumann(1, x)};
  throw NumericalError("hankel2: order must be 0 or 1");
}

GreensMatrix greens_real(const Vec2& r, const PhysicalParams& p) {
  const double rho = r.norm();
  if (rho == 0) throw NumericalError("greens_real: r = 0, use onsite_term");
  const LatticeGeometry g = lattice_vectors(p);
  const double phi = std::atan2(r.y(), r.x());
  const cplx eK = std::polar(1.0, g.pK.dot(r));
  const cplx eKp = std::polar(1.0, g.pKprime.dot(r));
  const cplx Pp = cplx(0, p.K_amp_a) * (eK + eKp);
  const cplx Pm = cplx(0, p.K_amp_a) * (eK - eKp);
  const double x = rho / p.xi_a;
  const cplx h0 = hankel2(0, x), h1 = hankel2(1, x);
  GreensMatrix G;
  G.basis = Basis::Circular;
  G.m(0, 0) = -Pp * h0;
  G.m(1, 1) = G.m(0, 0);
  G.m(0, 1) = std::polar(1.0, phi) * Pm * h1;
  G.m(1, 0) = -std::polar(1.0, -phi) * Pm * h1;
  return G;
}

// Im G(0) = -2 K_amp from J0(0) = 1 and the two valleys.
double gamma_pc(const PhysicalParams& p) { return 4 * p.coupling; }

cplx onsite_term(const PhysicalParams& p) { return {0, -gamma_pc(p) / 2}; }

Orientation parse_orientation(const std::string& s) {
  if (s == "x") return Orientation::X;
  if (s == "y") return Orientation::Y;
  throw ConfigError("orientation must be x or y, got '" + s + "'");
}

const char* orientation_name(Orientation o) { return o == Orientation::X ? "x" : "y"; }

StripeFrame stripe_frame(Orientation o) {
  const double s3 = std::sqrt(3.0);
  StripeFrame f;
  if (o == Orientation::X) {
    f.l_hat = Vec2(0, 1);
    f.t_hat = Vec2(1, 0);
    f.period = 1;
    f.row_spacing = s3 / 2;
    f.row_shift = 0.5;
    f.width = 4 * kPi / s3;
  } else {
    f.l_hat = Vec2(1, 0);
    f.t_hat = Vec2(0, 1);
    f.period = s3;
    f.row_spacing = 0.5;
    f.row_shift = s3 / 2;
    f.width = 4 * kPi;
  }
  return f;
}

namespace {

struct Image {
  Valley valley;
  double vl, vt;  // projections on l and t
  double d;       // p_long - vl
};

std::vector<Image> line_images(double k, const DiracConeModel& m, const StripeFrame& f) {
  std::vector<Image> out;
  const double reach = m.geom.G1.norm() * 1.01;
  for (Valley v : {Valley::K, Valley::Kp}) {
    const Vec2 V = v == Valley::K ? m.pK : m.pKprime;
    for (int i = -6; i <= 6; ++i)
      for (int j = -6; j <= 6; ++j) {
        Vec2 c = V + double(i) * m.geom.G1 + double(j) * m.geom.G2;
        double vl = c.dot(f.l_hat);
        if (std::abs(k - vl) > reach) continue;
        out.push_back({v, vl, c.dot(f.t_hat), k - vl});
      }
  }
  return out;
}

struct Piece {
  const Image* img;
  double a, b;
};

// Lower envelope of |p - image|^2 along p_t in [lo, hi] for one valley.
std::vector<Piece> nearest_pieces(const std::vector<Image>& imgs, Valley v, double lo, double hi) {
  std::vector<const Image*> cand;
  for (auto& im : imgs)
    if (im.valley == v) cand.push_back(&im);
  auto dist2 = [](const Image* im, double t) { return im->d * im->d + (t - im->vt) * (t - im->vt); };
  auto nearest_at = [&](double t) {
    const Image* best = nullptr;
    double bd = INFINITY;
    for (auto* c : cand) {
      double d2 = dist2(c, t);
      if (d2 < bd - 1e-13) {
        bd = d2;
        best = c;
      }
    }
    return best;
  };
  std::vector<Piece> out;
  double s = lo;
  const Image* cur = nearest_at(lo + 1e-12 * (hi - lo));
  while (s < hi) {
    double next = hi;
    const Image* nxt = nullptr;
    for (auto* c : cand) {
      if (c == cur) continue;
      // dist2(c,t) - dist2(cur,t) = alpha + beta t
      double beta = -2 * (c->vt - cur->vt);
      double alpha = c->d * c->d - cur->d * cur->d + c->vt * c->vt - cur->vt * cur->vt;
      if (beta >= 0) continue;
      double t = -alpha / beta;
      if (t > s + 1e-14 && t < next) {
        next = t;
        nxt = c;
      }
    }
    out.push_back({cur, s, next});
    if (!nxt) break;
    s = next;
    cur = nearest_at(std::min(hi, next + 1e-10));
  }
  return out;
}

// Start of the transverse period, chosen far from every valley foot point.
double window_start(const std::vector<Image>& imgs, double W, double q0) {
  std::vector<double> feet;
  for (auto& im : imgs)
    if (std::abs(im.d) < std::max(2 * q0, 1e-3)) {
      double t = std::fmod(im.vt, W);
      if (t < 0) t += W;
      feet.push_back(t);
    }
  if (feet.empty()) return -W / 2;
  std::sort(feet.begin(), feet.end());
  double best_gap = -1, start = 0;
  for (size_t i = 0; i < feet.size(); ++i) {
    double a = feet[i];
    double b = i + 1 < feet.size() ? feet[i + 1] : feet[0] + W;
    if (b - a > best_gap) {
      best_gap = b - a;
      start = 0.5 * (a + b);
    }
  }
  return start - W;  // any representative works; the integrand is W-periodic
}

struct SegMeta {
  const Image* img;
};

}  // namespace

std::vector<double> mixed_poles(double p_long, const DiracConeModel& m, Orientation o) {
  const StripeFrame f = stripe_frame(o);
  const double q0 = m.q0();
  std::vector<double> poles;
  for (auto& im : line_images(p_long, m, f)) {
    if (std::abs(im.d) >= q0) continue;
    double s0 = std::sqrt(q0 * q0 - im.d * im.d);
    poles.push_back(im.vt - s0);
    poles.push_back(im.vt + s0);
  }
  std::sort(poles.begin(), poles.end());
  return poles;
}

bool in_resonance_window(double p_long, const DiracConeModel& m, Orientation o) {
  const StripeFrame f = stripe_frame(o);
  for (auto& im : line_images(p_long, m, f))
    if (std::abs(im.d) < m.q0()) return true;
  return false;
}

namespace {

MixedResult mixed_once(double k, const std::vector<double>& xs, const DiracConeModel& m,
                       const ContourSpec& spec, double eps) {
  const StripeFrame f = stripe_frame(spec.orientation);
  const double q0 = m.q0();
  const auto imgs = line_images(k, m, f);
  const double W = f.width;
  const double lo = window_start(imgs, W, q0), hi = lo + W;
  double xmax = 0;
  for (double x : xs) xmax = std::max(xmax, std::abs(x));

  std::vector<Segment> segs;
  std::vector<SegMeta> meta;
  bool resonant = false;
  // segments live in coordinates relative to the image foot, so pole offsets
  // of order q0 keep full precision
  auto add_real = [&](const Image* im, std::vector<double> cuts) {
    std::sort(cuts.begin(), cuts.end());
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0) continue;
      segs.push_back({cplx(cuts[i], 0), cplx(cuts[i + 1], 0)});
      meta.push_back({im});
    }
  };
  for (Valley v : {Valley::K, Valley::Kp}) {
    for (const Piece& pc : nearest_pieces(imgs, v, lo, hi)) {
      const Image* im = pc.img;
      const bool ring = std::abs(im->d) < q0;
      const double s0 = ring ? std::sqrt(q0 * q0 - im->d * im->d) : 0;
      const bool foot_inside = im->vt > pc.a && im->vt < pc.b;
      if (ring) {
        resonant = true;
        if (im->vt - s0 <= pc.a || im->vt + s0 >= pc.b)
          throw NumericalError("mixed_greens: pole coincides with an integration endpoint");
      }
      if (spec.method == ContourMethod::Deformed && ring) {
        double R = std::min(s0 + 0.5 * q0, 0.9 * std::min(im->vt - pc.a, pc.b - im->vt));
        if (!(R > s0 * 1.05)) throw NumericalError("mixed_greens: no room to deform around the poles");
        double H = 0.5 * q0;
        if (xmax > 0) H = std::min(H, 8.0 / xmax);
        const cplx c0(0, 0);
        add_real(im, {pc.a - im->vt, -R});
        std::vector<cplx> path = {c0 - R, c0 - R - cplx(0, H), c0 - 0.5 * s0 - cplx(0, H), c0,
                                  c0 + 0.5 * s0 + cplx(0, H), c0 + R + cplx(0, H), c0 + R};
        for (size_t i = 0; i + 1 < path.size(); ++i) {
          segs.push_back({path[i], path[i + 1]});
          meta.push_back({im});
        }
        add_real(im, {R, pc.b - im->vt});
        continue;
      }
      std::vector<double> cuts = {pc.a - im->vt, pc.b - im->vt};
      if (foot_inside) cuts.push_back(0);
      if (ring) {
        // Lorentzian width of the pole along p_t
        const double w = eps / (2 * m.omega_A * m.v_s) * q0 / std::max(s0, 1e-300);
        for (double pole : {-s0, s0}) {
          cuts.push_back(pole);
          for (double mult : {3.0, 30.0, 300.0})
            for (double sg : {-1.0, 1.0}) {
              double c = pole + sg * mult * w;
              if (c > cuts[0] && c < cuts[1]) cuts.push_back(c);
            }
        }
      }
      add_real(im, cuts);
    }
  }

  const int nx = int(xs.size());
  const StripeFrame fr = f;
  auto integrand = [&](int seg, cplx z, Eigen::VectorXcd& out) {
    const Image* im = meta[seg].img;
    const cplx zt = z;
    const cplx qx = im->d * fr.l_hat.x() + zt * fr.t_hat.x();
    const cplx qy = im->d * fr.l_hat.y() + zt * fr.t_hat.y();
    Eigen::Matrix2cd T;
    if (z.imag() == 0) {
      const double r = std::hypot(qx.real(), qy.real());
      T = cone_term_complex(m, r, qy.real() / r, qx.real() / r, im->valley, spec.denominator, eps);
    } else {
      const cplx q = std::sqrt(qx * qx + qy * qy);
      T = cone_term_complex(m, q, qy / q, qx / q, im->valley, spec.denominator, eps);
    }
    T /= (2 * kPi);
    for (int j = 0; j < nx; ++j) {
      const cplx ph = std::exp(cplx(0, 1) * (zt * xs[j] + im->vt * xs[j]));
      out(4 * j + 0) = T(0, 0) * ph;
      out(4 * j + 1) = T(0, 1) * ph;
      out(4 * j + 2) = T(1, 0) * ph;
      out(4 * j + 3) = T(1, 1) * ph;
    }
  };
  QuadResult q = integrate_segments(integrand, 4 * nx, segs, spec.quad);
  MixedResult res;
  res.resonant = resonant;
  res.error = q.error;
  res.evaluations = q.evaluations;
  res.g.resize(nx);
  for (int j = 0; j < nx; ++j) {
    res.g[j].basis = Basis::Cartesian;
    res.g[j].m << q.value(4 * j), q.value(4 * j + 1), q.value(4 * j + 2), q.value(4 * j + 3);
  }
  return res;
}

}  // namespace

MixedResult mixed_greens(double p_long, const std::vector<double>& x_perp, const DiracConeModel& m,
                         const ContourSpec& spec) {
  if (spec.method == ContourMethod::Deformed) return mixed_once(p_long, x_perp, m, spec, 0.0);
  const double eps = m.eps * spec.eps_scale;
  if (!(eps > 0)) throw NumericalError("mixed_greens: the real-axis method needs eps > 0");
  MixedResult a = mixed_once(p_long, x_perp, m, spec, eps);
  if (!spec.extrapolate) return a;
  MixedResult b = mixed_once(p_long, x_perp, m, spec, eps / 2);
  for (size_t j = 0; j < a.g.size(); ++j) a.g[j].m = 2.0 * b.g[j].m - a.g[j].m;
  a.error = 2 * b.error + a.error;
  a.evaluations += b.evaluations;
  return a;
}

namespace {

// [[e_y, e_x], [e_x, -e_y]]: twice the winding matrix along e
Eigen::Matrix2cd winding(const Vec2& e) {
  Eigen::Matrix2cd q;
  q << e.y(), e.x(), e.x(), -e.y();
  return q;
}

}  // namespace

std::vector<GreensMatrix> mixed_greens_closed(double p_long, const std::vector<int>& rows,
                                              const PhysicalParams& p, Orientation o) {
  const StripeFrame f = stripe_frame(o);
  const LatticeGeometry g = lattice_vectors(p);
  const double q0 = p.q0, b = 2 * kPi / f.period;
  const double C = std::sqrt(3.0) / 2 * p.c_red * p.c_red * p.E0_sq_a3 / (2 * p.wA_red * p.vs_red);
  const Eigen::Matrix2cd I = Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd Ql = winding(f.l_hat), Qt = winding(f.t_hat);
  const cplx ci(0, 1);
  // kappa^2 = q0^2 - ql^2 - i0
  auto kappa = [&](double ql) {
    const double d = q0 * q0 - ql * ql;
    if (std::abs(d) < 1e-14 * q0 * q0) throw NumericalError("mixed_greens_closed: on the edge of the resonance window");
    return d > 0 ? cplx(std::sqrt(d), 0) : cplx(0, -std::sqrt(-d));
  };

  std::vector<GreensMatrix> out(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    const int d = rows[r];
    const double x = d * f.row_spacing;
    const bool odd = d % 2 != 0;
    Eigen::Matrix2cd acc = Eigen::Matrix2cd::Zero();
    for (Valley v : {Valley::K, Valley::Kp}) {
      const Vec2 V = v == Valley::K ? g.pK : g.pKprime;
      const double sgn = v == Valley::K ? 1.0 : -1.0;
      const double u = (p_long - V.dot(f.l_hat)) / b;
      const long j0 = std::lround(u);
      const double alpha = u - double(j0);  // ql = (alpha + i) b
      Eigen::Matrix2cd val = Eigen::Matrix2cd::Zero();
      if (d != 0) {
        const long J = long(std::ceil(42.0 / (b * std::abs(x)))) + 4;
        for (long i = -J; i <= J; ++i) {
          const double ql = (alpha + double(i)) * b;
          const cplx k = kappa(ql);
          const cplx e = std::exp(-ci * k * std::abs(x));
          const cplx S0 = -ci * e / (2.0 * k);
          const cplx S1 = 0.5 * ci * (x > 0 ? 1.0 : -1.0) * e;
          const double ph = odd && ((i + j0) % 2 != 0) ? -1.0 : 1.0;
          val += ph * (q0 * S0 * I + sgn * (ql * S0 * Ql + S1 * Qt));
        }
        acc += std::polar(1.0, V.dot(f.t_hat) * x) * C * val;
      } else {
        // x -> 0 limit of the image sum minus G(x t): the logarithm and the
        // 1/x terms cancel, the tails are summed with digamma.
        const long J = 4000;
        cplx s0 = 0, s1 = 0;
        for (long i = -J; i <= J; ++i) {
          const double ql = (alpha + double(i)) * b;
          const cplx S0 = -ci / (2.0 * kappa(ql));
          s0 += S0;
          s1 += ql * S0;
        }
        using boost::math::digamma;
        const double euler = 0.57721566490153286061;
        s0 += (-2 * std::log(b) - 2 * euler - digamma(J + 1 + alpha) - digamma(J + 1 - alpha)) / (2 * b);
        s1 += -alpha;
        const cplx local = f.period / (2 * kPi) * (std::log(q0 / 2) + euler + ci * (kPi / 2));
        val = q0 * (s0 + local) * I + sgn * s1 * Ql;
        acc += C * val;
      }
    }
    out[r].basis = Basis::Cartesian;
    out[r].m = acc;
  }
  return out;
}

}  // namespace topo
