#include "topoarray/photonic.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace topo {

DiracConeModel make_cone_model(const PhysicalParams& p, double eps_scale) {
  if (!(eps_scale > 0)) throw ConfigError("eps_scale must be positive");
  DiracConeModel m;
  m.omega_A = p.wA_red;
  m.omega_Dirac = p.wA_red + p.delta_red;
  m.v_s = p.vs_red;
  m.c = p.c_red;
  m.E0_sq = p.E0_sq_a3;
  m.eps = 2 * p.wA_red * 1e-4 * p.delta_red * eps_scale;
  m.geom = lattice_vectors(p);
  m.pK = m.geom.pK;
  m.pKprime = m.geom.pKprime;
  return m;
}

Vec2 nearest_image(const Vec2& k, const Vec2& v, const LatticeGeometry& g) {
  Vec2 d = k - v;
  long n1 = std::lround(d.dot(g.R1) / (2 * kPi));
  long n2 = std::lround(d.dot(g.R2) / (2 * kPi));
  Vec2 best = v;
  double bestd = INFINITY;
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j) {
      Vec2 img = v + double(n1 + i) * g.G1 + double(n2 + j) * g.G2;
      double dist = (k - img).squaredNorm();
      if (dist < bestd - 1e-14) {
        bestd = dist;
        best = img;
      }
    }
  return best;
}

Vec2 reduce_to_bz(const Vec2& k, const LatticeGeometry& g) {
  return k - nearest_image(k, Vec2::Zero(), g);
}

double cone_dispersion(const DiracConeModel& m, const Vec2& p, Valley v, Branch b) {
  Vec2 center = nearest_image(p, v == Valley::K ? m.pK : m.pKprime, m.geom);
  double q = (p - center).norm();
  return b == Branch::Plus ? m.omega_Dirac + m.v_s * q : m.omega_Dirac - m.v_s * q;
}

Vec2 cone_field_offset(const Vec2& q, double E0, Valley v, Branch b) {
  if (q.x() == 0 && q.y() == 0) throw NumericalError("cone_field: angle undefined at the valley point");
  const double phi = std::atan2(q.y(), q.x());
  const double h = phi / 2, r = kPi / 4;
  const bool plus = b == Branch::Plus;
  if (v == Valley::K) {
    if (plus) return E0 * Vec2(std::sin(h - r), std::sin(h + r));
    return E0 * Vec2(std::sin(h + r), -std::sin(h - r));
  }
  if (plus) return E0 * Vec2(std::sin(h + r), -std::sin(h - r));
  return E0 * Vec2(std::sin(h - r), std::sin(h + r));
}

Vec2 cone_field(const DiracConeModel& m, const Vec2& p, Valley v, Branch b) {
  Vec2 center = nearest_image(p, v == Valley::K ? m.pK : m.pKprime, m.geom);
  return cone_field_offset(p - center, std::sqrt(m.E0_sq), v, b);
}

namespace {

// Sum over both branches of one valley image. sin/cos of the offset angle
// enter through the bilinear field products only.
template <class T>
Eigen::Matrix<cplx, 2, 2> cone_pair(const DiracConeModel& m, T q, T s, T c, Valley v,
                                    Denominator d, double eps) {
  const cplx half(0.5, 0);
  Eigen::Matrix<cplx, 2, 2> A;
  A << half * cplx(s), half * cplx(c), half * cplx(c), -half * cplx(s);
  Eigen::Matrix<cplx, 2, 2> I = Eigen::Matrix<cplx, 2, 2>::Identity() * half;
  Eigen::Matrix<cplx, 2, 2> Pp = v == Valley::K ? Eigen::Matrix<cplx, 2, 2>(I - A)
                                                : Eigen::Matrix<cplx, 2, 2>(I + A);
  Eigen::Matrix<cplx, 2, 2> Pm = v == Valley::K ? Eigen::Matrix<cplx, 2, 2>(I + A)
                                                : Eigen::Matrix<cplx, 2, 2>(I - A);
  const cplx wq = m.v_s * cplx(q);
  // detuning first: omega_Dirac + wq would round wq to ulp(omega_Dirac)
  const double det = m.omega_A - m.omega_Dirac;
  const cplx dp = det - wq;
  const cplx dm = det + wq;
  cplx Dp, Dm;
  if (d == Denominator::Quadratic) {
    Dp = dp * (m.omega_A + m.omega_Dirac + wq);
    Dm = dm * (m.omega_A + m.omega_Dirac - wq);
  } else {
    Dp = 2 * m.omega_A * dp;
    Dm = 2 * m.omega_A * dm;
  }
  Dp += cplx(0, eps);
  Dm += cplx(0, eps);
  const double tie = 1e-12 * (std::abs(det) + std::abs(wq));
  if (eps == 0 && (std::abs(dm) <= tie || std::abs(dp) <= tie))
    throw NumericalError("momentum_greens: on the resonance ring with eps = 0");
  const double pref = std::sqrt(3.0) / 2 * m.c * m.c * m.E0_sq;
  return pref * (Pp / Dp + Pm / Dm);
}

}  // namespace

Eigen::Matrix2cd cone_term(const DiracConeModel& m, double q, double sinphi, double cosphi,
                           Valley v, Denominator d) {
  return cone_pair<double>(m, q, sinphi, cosphi, v, d, m.eps);
}

Eigen::Matrix2cd cone_term_complex(const DiracConeModel& m, cplx q, cplx s, cplx c, Valley v,
                                   Denominator d, double eps) {
  return cone_pair<cplx>(m, q, s, c, v, d, eps);
}

GreensMatrix momentum_greens(const Vec2& k, const DiracConeModel& m, const MomentumOptions& opt) {
  GreensMatrix out;
  out.basis = Basis::Cartesian;
  for (Valley v : {Valley::K, Valley::Kp}) {
    const Vec2 V = v == Valley::K ? m.pK : m.pKprime;
    auto add = [&](const Vec2& center, double w) {
      Vec2 q = k - center;
      double r = q.norm();
      double s = r > 0 ? q.y() / r : 0.0, c = r > 0 ? q.x() / r : 0.0;
      out.m += w * cone_pair<double>(m, r, s, c, v, opt.denominator, m.eps);
    };
    if (opt.image_cutoff <= 0) {
      add(nearest_image(k, V, m.geom), 1.0);
      continue;
    }
    Vec2 c0 = nearest_image(k, V, m.geom);
    const double gmin = m.geom.G1.norm() * std::sqrt(3.0) / 2;
    const double reach = opt.gaussian_taper ? 6 * opt.image_cutoff : opt.image_cutoff;
    const long n = long(std::ceil(reach / gmin)) + 2;
    for (long i = -n; i <= n; ++i)
      for (long j = -n; j <= n; ++j) {
        Vec2 center = c0 + double(i) * m.geom.G1 + double(j) * m.geom.G2;
        const double r = (k - center).norm();
        if (r >= reach) continue;
        const double x = r / opt.image_cutoff;
        add(center, opt.gaussian_taper ? std::exp(-x * x) : 1.0);
      }
  }
  return out;
}

// ---- tabulated bands ----

namespace {

std::string trim_ws(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TabulatedBands parse_tabulated(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::map<std::string, std::string> header;
  struct Row {
    Vec2 k;
    long band;
    double w;
    Eigen::Vector2cd u;
    int line;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim_ws(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      auto eq = t.find('=');
      if (eq != std::string::npos)
        header[trim_ws(t.substr(1, eq - 1))] = trim_ws(t.substr(eq + 1));
      continue;
    }
    std::istringstream ls(t);
    double v[8];
    int n = 0;
    std::string tok;
    while (ls >> tok) {
      if (n == 8) throw IoError("tabulated line " + std::to_string(lineno) + ": too many columns");
      try {
        size_t pos;
        v[n] = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw IoError("tabulated line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
      ++n;
    }
    if (n != 8) throw IoError("tabulated line " + std::to_string(lineno) + ": expected 8 columns");
    if (v[2] < 0 || v[2] != std::floor(v[2]))
      throw IoError("tabulated line " + std::to_string(lineno) + ": bad band index");
    if (!(v[3] > 0)) throw IoError("tabulated line " + std::to_string(lineno) + ": frequency must be positive");
    Row r;
    r.k = 2 * kPi * Vec2(v[0], v[1]);
    r.band = long(v[2]);
    r.w = v[3];
    r.u = Eigen::Vector2cd(cplx(v[4], v[5]), cplx(v[6], v[7]));
    r.line = lineno;
    rows.push_back(r);
  }
  for (const char* key : {"frequency_unit", "momentum_unit", "normalization"})
    if (!header.count(key)) throw IoError(std::string("tabulated header missing '") + key + "'");
  if (header["frequency_unit"] != "omega_a_over_2pi_c")
    throw IoError("tabulated frequency_unit must be omega_a_over_2pi_c");
  if (header["momentum_unit"] != "2pi_over_a")
    throw IoError("tabulated momentum_unit must be 2pi_over_a");
  if (rows.empty()) throw IoError("tabulated file has an empty band list");

  TabulatedBands t;
  t.normalization = header["normalization"];
  long maxband = 0;
  for (auto& r : rows) maxband = std::max(maxband, r.band);
  t.nbands = int(maxband + 1);
  std::vector<int> kindex(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    int found = -1;
    for (size_t j = 0; j < t.k.size(); ++j)
      if ((t.k[j] - rows[i].k).norm() < 1e-12) {
        found = int(j);
        break;
      }
    if (found < 0) {
      found = int(t.k.size());
      t.k.push_back(rows[i].k);
    }
    kindex[i] = found;
  }
  t.omega.assign(t.k.size() * t.nbands, -1.0);
  t.u.assign(t.k.size() * t.nbands, Eigen::Vector2cd::Zero());
  for (size_t i = 0; i < rows.size(); ++i) {
    size_t idx = size_t(kindex[i]) * t.nbands + rows[i].band;
    if (t.omega[idx] > 0)
      throw IoError("tabulated line " + std::to_string(rows[i].line) + ": duplicate k row");
    t.omega[idx] = rows[i].w;
    t.u[idx] = rows[i].u;
  }
  for (double w : t.omega)
    if (w < 0) throw IoError("tabulated grid inconsistent: a band is missing at some k");
  return t;
}

TabulatedBands load_tabulated(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open tabulated bands " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_tabulated(ss.str());
}

std::string emit_tabulated(const TabulatedBands& t) {
  std::ostringstream o;
  o.precision(17);
  o << "# frequency_unit = omega_a_over_2pi_c\n# momentum_unit = 2pi_over_a\n# normalization = "
    << (t.normalization.empty() ? "bloch_u_dimensionless_E_eq_u_over_sqrt_a3" : t.normalization)
    << "\n# columns: kx ky band omega Re_ux Im_ux Re_uy Im_uy\n";
  for (size_t i = 0; i < t.k.size(); ++i)
    for (int n = 0; n < t.nbands; ++n) {
      const auto& u = t.u[i * t.nbands + n];
      o << t.k[i].x() / (2 * kPi) << ' ' << t.k[i].y() / (2 * kPi) << ' ' << n << ' '
        << t.omega[i * t.nbands + n] << ' ' << u(0).real() << ' ' << u(0).imag() << ' '
        << u(1).real() << ' ' << u(1).imag() << '\n';
    }
  return o.str();
}

GreensMatrix momentum_greens(const Vec2& k, const TabulatedBands& t, const PhysicalParams& p,
                             double eps_scale) {
  const LatticeGeometry g = lattice_vectors(p);
  const Vec2 kr = reduce_to_bz(k, g);
  int hit = -1;
  bool reversed = false;
  for (size_t i = 0; i < t.k.size() && hit < 0; ++i) {
    Vec2 ti = reduce_to_bz(t.k[i], g);
    if ((ti - kr).norm() < 1e-8) hit = int(i);
    else if ((ti + kr).norm() < 1e-8 || (reduce_to_bz(-kr, g) - ti).norm() < 1e-8) {
      hit = int(i);
      reversed = true;
    }
  }
  if (hit < 0) throw NumericalError("momentum_greens: k is not on the tabulated grid");
  const double eps = 2 * p.wA_red * 1e-4 * p.delta_red * eps_scale;
  const double pref = std::sqrt(3.0) / 2 * p.c_red * p.c_red;
  GreensMatrix out;
  out.basis = Basis::Cartesian;
  for (int n = 0; n < t.nbands; ++n) {
    const double w = 2 * kPi * p.c_red * t.omega[size_t(hit) * t.nbands + n];
    Eigen::Vector2cd u = t.u[size_t(hit) * t.nbands + n];
    if (reversed) u = u.conjugate().eval();
    cplx D = cplx((p.wA_red - w) * (p.wA_red + w), eps);
    out.m += pref * (u.conjugate() * u.transpose()) / D;
  }
  return out;
}

DiracFit dirac_fit(const TabulatedBands& t, const PhysicalParams& p, double radius,
                   double min_radius) {
  const LatticeGeometry g = lattice_vectors(p);
  if (t.nbands < 2) throw NumericalError("dirac_fit: need at least two bands");
  // pair of adjacent bands closest together at the sample nearest K
  size_t inear = 0;
  double dnear = INFINITY;
  for (size_t i = 0; i < t.k.size(); ++i) {
    double d = (t.k[i] - nearest_image(t.k[i], g.pK, g)).norm();
    if (d < dnear) {
      dnear = d;
      inear = i;
    }
  }
  int lower = 0;
  double sep = INFINITY;
  for (int n = 0; n + 1 < t.nbands; ++n) {
    double s = std::abs(t.omega[inear * t.nbands + n + 1] - t.omega[inear * t.nbands + n]);
    if (s < sep) {
      sep = s;
      lower = n;
    }
  }
  Eigen::Matrix2d AtA = Eigen::Matrix2d::Zero();
  Eigen::Vector2d Atb = Eigen::Vector2d::Zero();
  double e0 = 0;
  int npts = 0;
  std::vector<std::pair<double, double>> samples;  // (signed q, nu)
  for (size_t i = 0; i < t.k.size(); ++i) {
    double q = (t.k[i] - nearest_image(t.k[i], g.pK, g)).norm();
    if (q <= min_radius || q > radius) continue;
    for (int side = 0; side < 2; ++side) {
      double sq = side == 0 ? -q : q;
      double nu = t.omega[i * t.nbands + lower + side];
      samples.push_back({sq, nu});
      Eigen::Vector2d row(1.0, sq);
      AtA += row * row.transpose();
      Atb += row * nu;
      e0 += t.u[i * t.nbands + lower + side].squaredNorm();
    }
    ++npts;
  }
  if (npts < 3) throw NumericalError("dirac_fit: insufficient points inside the fit radius");
  Eigen::Vector2d x = AtA.ldlt().solve(Atb);
  double ss = 0;
  for (auto& [sq, nu] : samples) ss += std::pow(nu - x(0) - x(1) * sq, 2);
  double rms = std::sqrt(ss / samples.size());
  const double slope = x(1);
  if (!(slope > 0) || slope * radius < 10 * rms)
    throw NumericalError("dirac_fit: data are not conical (slope too small against residual)");

  DiracFit f;
  f.points = npts;
  f.lower_band = lower;
  f.omega_Dirac_dimless = x(0);
  f.v_s_over_c = 2 * kPi * slope;
  f.E0_sq_a3 = e0 / (2.0 * npts);
  f.residual_rms = 2 * kPi * p.c_red * rms;
  DiracConeModel m = make_cone_model(p);
  m.omega_Dirac = 2 * kPi * p.c_red * x(0);
  m.v_s = f.v_s_over_c * p.c_red;
  m.E0_sq = f.E0_sq_a3;
  f.model = m;
  return f;
}

}  // namespace topo
