#include "topoarray/units.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace topo {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      // physics
      "lambda_nm", "gamma_over_2pi_hz", "n_d", "mu_b_over_gamma",
      "delta_a_over_2pi_thz", "v_s_over_c", "e0_sq_a3", "gamma0_over_gamma",
      "a_nm_override",
      // numerics
      "eps_scale", "seed", "workers",
      // bands
      "band_sampling", "band_grid", "band_window", "band_path_points",
      "mu_b_list", "mu_b_list_unit", "delta_list", "denominator",
      // chern
      "chern_grids", "chern_grid_kind", "chern_valley_width",
      // edge
      "orientation", "m", "k_points", "k_min", "k_max", "edge_columns",
      "edge_ratio", "quad_tol", "contour", "edge_model",
      // evolve / spectrum
      "shells", "filling", "exact_count", "sigma_inh_over_gap",
      "sigma_inh_over_gamma", "omega_l_over_gamma", "rabi_over_gamma",
      "ramp_t0", "ramp_sigma", "times", "drive_site", "include_gamma0",
      "boundary_depth", "edge_weight_threshold", "spectrum_only", "arc_threshold",
      "gap_max_linewidth", "evolve_tol",
      // validate
      "lambda_edge", "markov_threshold", "n_sites", "gap_over_gamma"};
  return keys;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  const auto& keys = known_keys();
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (c.kv_.count(key))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    c.kv_[key] = val;
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string Config::emit() const {
  std::string out;
  for (const auto& [k, v] : kv_) out += k + " = " + v + "\n";
  return out;
}

double Config::get_double(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
  double v;
  if (!parse_number(it->second, v) || !std::isfinite(v))
    throw ConfigError("key '" + key + "': not a number: " + it->second);
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  double v = get_double(key);
  if (v != std::floor(v)) throw ConfigError("key '" + key + "': not an integer");
  return static_cast<long>(v);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

std::vector<double> Config::get_list(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) throw ConfigError("missing key '" + key + "'");
  std::vector<double> out;
  std::string s = it->second;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) {
    double v;
    if (!parse_number(tok, v)) throw ConfigError("key '" + key + "': bad list entry " + tok);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }
void Config::set(const std::string& key, double value) { kv_[key] = format_double(value); }

PhysicalParams derive_params(const Config& cfg) {
  PhysicalParams p;
  double lambda_nm = cfg.get_double("lambda_nm");
  if (!(lambda_nm > 0)) throw ConfigError("lambda_nm must be positive");
  p.lambda_A = lambda_nm * 1e-9;
  p.gamma = 2 * kPi * cfg.get_double("gamma_over_2pi_hz", 300e6);
  p.n_d = cfg.get_double("n_d");
  p.muB = cfg.get_double("mu_b_over_gamma", 0.0);
  p.delta_A = 2 * kPi * 1e12 * cfg.get_double("delta_a_over_2pi_thz");
  p.v_s = kC * cfg.get_double("v_s_over_c");
  p.E0_sq_a3 = cfg.get_double("e0_sq_a3");
  p.Gamma_0 = cfg.get_double("gamma0_over_gamma", 0.0);
  p.a = cfg.has("a_nm_override") ? cfg.get_double("a_nm_override") * 1e-9 : p.lambda_A / 3;
  return derive_from_primaries(p);
}

PhysicalParams derive_from_primaries(PhysicalParams p) {
  if (!(p.lambda_A > 0)) throw ConfigError("wavelength must be positive");
  if (!(p.gamma > 0)) throw ConfigError("gamma must be positive");
  if (!(p.n_d > 0)) throw ConfigError("n_d must be positive");
  if (!(p.delta_A > 0)) throw ConfigError("delta_A must be positive");
  if (!(p.v_s > 0)) throw ConfigError("v_s must be positive");
  if (!(p.v_s < kC)) throw ConfigError("v_s >= c is non-physical");
  if (!(p.E0_sq_a3 > 0)) throw ConfigError("E0^2 must be positive");
  if (!(p.a > 0)) throw ConfigError("lattice constant must be positive");
  if (!(p.Gamma_0 >= 0)) throw ConfigError("Gamma_0 must be non-negative");
  if (!std::isfinite(p.muB)) throw ConfigError("muB must be finite");

  p.omega_A = 2 * kPi * kC / p.lambda_A;
  p.omega_Dirac = p.omega_A + p.delta_A;
  p.cell_area = std::sqrt(3.0) / 2 * p.a * p.a;
  p.E0_sq = p.E0_sq_a3 / (p.a * p.a * p.a);
  p.xi = p.v_s / p.delta_A;
  p.g_pref = 3 * kPi * p.gamma * kC / (p.omega_A * p.n_d);
  p.K_amp = p.cell_area * kC * kC * p.E0_sq * p.delta_A / (8 * p.omega_A * p.v_s * p.v_s);

  p.c_red = kC / (p.a * p.gamma);
  p.vs_red = p.v_s / (p.a * p.gamma);
  p.wA_red = p.omega_A / p.gamma;
  p.delta_red = p.delta_A / p.gamma;
  p.xi_a = p.xi / p.a;
  p.q0 = 1.0 / p.xi_a;
  p.K_amp_a = p.K_amp * p.a;
  p.g_pref_red = p.g_pref / (p.a * p.gamma);
  p.coupling = p.g_pref_red * p.K_amp_a;
  p.J = 3 * kPi * kC * kC * kC * p.E0_sq / (2 * p.n_d * p.omega_A * p.omega_A * p.delta_A);
  return p;
}

LatticeGeometry lattice_vectors(const PhysicalParams& p) {
  LatticeGeometry g;
  const double s3 = std::sqrt(3.0);
  g.R1 = Vec2(s3 / 2, 0.5);
  g.R2 = Vec2(s3 / 2, -0.5);
  g.G1 = 2 * kPi * Vec2(1 / s3, 1.0);
  g.G2 = 2 * kPi * Vec2(1 / s3, -1.0);
  g.pK = (2.0 / 3) * g.G1 + (1.0 / 3) * g.G2;
  g.pKprime = -g.pK;
  g.light_cone_radius = 2 * kPi * p.a / p.lambda_A;
  return g;
}

Basis parse_basis(const std::string& tag) {
  if (tag == "circular") return Basis::Circular;
  if (tag == "cartesian") return Basis::Cartesian;
  throw ConfigError("unknown basis tag '" + tag + "'");
}

const char* basis_name(Basis b) { return b == Basis::Circular ? "circular" : "cartesian"; }

Eigen::Matrix2cd circular_unitary() {
  const double r = 1 / std::sqrt(2.0);
  Eigen::Matrix2cd U;
  U << cplx(-r, 0), cplx(r, 0),
       cplx(0, -r), cplx(0, -r);
  return U;
}

GreensMatrix basis_transform(const GreensMatrix& g, Basis target) {
  if (g.basis == target) return g;
  static const Eigen::Matrix2cd U = circular_unitary();
  GreensMatrix out;
  out.basis = target;
  if (target == Basis::Circular)
    out.m = U.adjoint() * g.m * U;
  else
    out.m = U * g.m * U.adjoint();
  return out;
}

}  // namespace topo
