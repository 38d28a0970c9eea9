#include "topoarray/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "topoarray/bloch.hpp"
#include "topoarray/dynamics.hpp"
#include "topoarray/edge.hpp"
#include "topoarray/topology.hpp"

namespace topo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- resolver

double Resolver::num(const std::string& k) { return in_.get_double(k); }

double Resolver::num(const std::string& k, double def) {
  if (in_.has(k)) return in_.get_double(k);
  out_.set(k, def);
  return def;
}

long Resolver::integer(const std::string& k, long def) {
  if (in_.has(k)) return in_.get_int(k, def);
  out_.set(k, Table::integer(def));
  return def;
}

bool Resolver::flag(const std::string& k, bool def) {
  if (!in_.has(k)) {
    out_.set(k, def ? "1" : "0");
    return def;
  }
  const std::string v = in_.get_string(k, "");
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("key '" + k + "': expected 0 or 1, got " + v);
}

std::string Resolver::str(const std::string& k, const std::string& def) {
  if (in_.has(k)) return in_.get_string(k, def);
  out_.set(k, def);
  return def;
}

std::vector<double> Resolver::list(const std::string& k) { return in_.get_list(k); }

std::vector<double> Resolver::list(const std::string& k, const std::string& def) {
  if (!in_.has(k)) out_.set(k, def);
  return out_.get_list(k);
}

namespace {

double parse_num(const std::string& key, std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("key '" + key + "': bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<double> Resolver::times(const std::string& k, const std::string& def) {
  const std::string s = str(k, def);
  if (s.find(':') == std::string::npos) return out_.get_list(k);
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.size() != 3) throw ConfigError("key '" + k + "': expected start:stop:step");
  const double a = parse_num(k, parts[0]), b = parse_num(k, parts[1]), h = parse_num(k, parts[2]);
  if (!(h > 0) || b < a) throw ConfigError("key '" + k + "': need step > 0 and stop >= start");
  const double n = std::floor((b - a) / h + 1e-9);
  if (n > 1e6) throw ConfigError("key '" + k + "': too many samples");
  std::vector<double> t;
  for (long i = 0; i <= long(n); ++i) t.push_back(a + double(i) * h);
  return t;
}

PhysicalParams resolve_physics(Resolver& r) {
  r.num("lambda_nm");
  r.num("n_d");
  r.num("delta_a_over_2pi_thz");
  r.num("v_s_over_c");
  r.num("e0_sq_a3");
  r.num("gamma_over_2pi_hz", 300e6);
  r.num("mu_b_over_gamma", 0.0);
  r.num("gamma0_over_gamma", 0.0);
  return derive_params(r.resolved());
}

// ---------------------------------------------------------------- tables

void Table::add(std::vector<std::string> row) {
  if (row.size() != cols_.size())
    throw std::logic_error("table " + kind_ + ": row has " + std::to_string(row.size()) + " fields");
  rows_.push_back(std::move(row));
}

std::string Table::num(double v) { return format_double(v); }
std::string Table::integer(long v) { return std::to_string(v); }

std::string Table::render(const std::string& run_id) const {
  std::string s = "# topoarray:" + kind_ + " v" + kFormatVersion + " run_id=" + run_id + " units:";
  for (const auto& c : cols_) s += " " + c.name + "[" + c.unit + "]";
  s += "\n";
  for (size_t i = 0; i < cols_.size(); ++i) s += (i ? "," : "") + cols_[i].name;
  s += "\n";
  for (const auto& r : rows_) {
    for (size_t i = 0; i < r.size(); ++i) {
      if (i) s += ',';
      s += r[i];
    }
    s += '\n';
  }
  return s;
}

namespace {

void write_file(const fs::path& p, const std::string& text, bool append = false) {
  std::ofstream f(p, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed: " + p.string());
}

}  // namespace

void Table::write(const fs::path& p, const std::string& run_id) const { write_file(p, render(run_id)); }

// ---------------------------------------------------------------- hashing

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string file_sha256(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return sha256_hex(ss.str());
}

// ---------------------------------------------------------------- subcommands

namespace {

struct Output {
  std::vector<std::pair<std::string, Table>> tables;
  json summary = json::object();
};

std::string b01(bool b) { return b ? "1" : "0"; }

Denominator parse_denominator(const std::string& s) {
  if (s == "quadratic") return Denominator::Quadratic;
  if (s == "linearized") return Denominator::Linearized;
  throw ConfigError("denominator must be quadratic or linearized, got '" + s + "'");
}

ContourMethod parse_contour(const std::string& s) {
  if (s == "real") return ContourMethod::RealAxis;
  if (s == "deformed") return ContourMethod::Deformed;
  throw ConfigError("contour must be real or deformed, got '" + s + "'");
}

SamplingSpec resolve_sampling(Resolver& r) {
  SamplingSpec s;
  s.kind = parse_sampling(r.str("band_sampling", "valley"));
  s.n = int(r.integer(s.kind == Sampling::Path ? "band_path_points" : "band_grid", s.kind == Sampling::Path ? 40 : 64));
  s.window = r.num("band_window", 6.0);
  if (s.n < 2) throw ConfigError("band sampling needs at least 2 points");
  if (!(s.window > 0)) throw ConfigError("band_window must be positive");
  return s;
}

Environment resolve_environment(Resolver& r, const PhysicalParams& p, int workers) {
  const double eps = r.num("eps_scale", 1.0);
  if (!(eps > 0)) throw ConfigError("eps_scale must be positive");
  Environment env = make_environment(p, eps, parse_denominator(r.str("denominator", "quadratic")));
  env.workers = workers;
  return env;
}

json gaps_json(const GapInfo& g) {
  return {{"lower_max", g.lower_max},     {"middle_min", g.middle_min}, {"middle_max", g.middle_max},
          {"upper_min", g.upper_min},     {"lower_gap", g.lower_gap()}, {"upper_gap", g.upper_gap()},
          {"gap", g.gap()}};
}

Output do_bands(Resolver& r, int workers) {
  const PhysicalParams p = resolve_physics(r);
  const Environment env = resolve_environment(r, p, workers);
  const SamplingSpec s = resolve_sampling(r);
  Output out;

  const auto res = band_structure(sample_points(s, env.cone), p.muB, env);
  Table t("bands", {{"k_index", "-"},
                    {"kx", "1/a"},
                    {"ky", "1/a"},
                    {"eig", "-"},
                    {"label", "-"},
                    {"Re_omega", "gamma"},
                    {"Im_omega", "gamma"},
                    {"resonant", "-"}});
  for (size_t i = 0; i < res.samples.size(); ++i) {
    const auto& smp = res.samples[i];
    for (int b = 0; b < 2; ++b)
      t.add({Table::integer(long(i)), Table::num(smp.k.x()), Table::num(smp.k.y()), Table::integer(b),
             band_label_name(smp.label[b]), Table::num(smp.omega[b].real()), Table::num(smp.omega[b].imag()),
             b01(smp.resonant)});
  }
  out.tables.emplace_back("bands.csv", std::move(t));
  out.summary["mu_b"] = p.muB;
  out.summary["J"] = p.J;
  out.summary["q0"] = p.q0;
  out.summary["samples"] = res.samples.size();
  out.summary["gaps"] = gaps_json(res.gaps);
  out.summary["has_lower"] = res.has_lower;
  out.summary["has_upper"] = res.has_upper;
  out.summary["middle_variation"] = res.middle_variation;
  out.summary["middle_circular"] = res.middle_circular;
  out.summary["ambiguous"] = res.ambiguous;

  if (r.has("mu_b_list")) {
    const std::string unit = r.str("mu_b_list_unit", "gamma");
    double scale = 1;
    if (unit == "J")
      scale = p.J;
    else if (unit != "gamma")
      throw ConfigError("mu_b_list_unit must be gamma or J, got '" + unit + "'");
    auto mus = r.list("mu_b_list");
    for (double& m : mus) m *= scale;
    const auto scan = gap_vs_field(mus, env, s);
    Table g("gap_vs_field", {{"mu_b", "gamma"}, {"gap", "gamma"}, {"lower_gap", "gamma"}, {"upper_gap", "gamma"},
                             {"refinements", "-"}});
    for (const auto& pt : scan.points)
      g.add({Table::num(pt.muB), Table::num(pt.gap), Table::num(pt.info.lower_gap()), Table::num(pt.info.upper_gap()),
             Table::integer(pt.refinements)});
    out.tables.emplace_back("gap_vs_field.csv", std::move(g));
    out.summary["gap_vs_field"] = {{"slope", scan.slope}, {"plateau", scan.plateau}};
  }
  if (r.has("delta_list")) {
    const auto scan = max_gap_vs_detuning(r.list("delta_list"), r.resolved(), s);
    Table g("gap_vs_detuning", {{"delta_a_over_2pi", "THz"}, {"J", "gamma"}, {"max_gap", "gamma"}});
    for (const auto& pt : scan.points) g.add({Table::num(pt.delta_thz), Table::num(pt.J), Table::num(pt.max_gap)});
    out.tables.emplace_back("gap_vs_detuning.csv", std::move(g));
    out.summary["gap_vs_detuning"] = {{"exponent", scan.exponent}};
  }
  return out;
}

Output do_chern(Resolver& r, int workers) {
  const PhysicalParams p = resolve_physics(r);
  const Environment env = resolve_environment(r, p, workers);
  ChernGridSpec base;
  base.kind = parse_grid_kind(r.str("chern_grid_kind", "valley"));
  base.valley_width = r.num("chern_valley_width", base.valley_width);
  const auto grids = r.list("chern_grids", "100,200,400");
  Output out;
  Table t("chern", {{"n", "-"},
                    {"lower", "-"},
                    {"middle", "-"},
                    {"upper", "-"},
                    {"flux_lower", "2pi"},
                    {"flux_middle", "2pi"},
                    {"flux_upper", "2pi"},
                    {"integer_defect", "2pi"},
                    {"refined", "-"},
                    {"min_link", "-"}});
  Table map("curvature", {{"kx", "1/a"},
                          {"ky", "1/a"},
                          {"area", "1/a^2"},
                          {"ring", "q0"},
                          {"flux_middle", "rad"},
                          {"flux_composite", "rad"},
                          {"inside", "-"}});
  json per = json::array();
  bool stable = true;
  std::array<int, 3> first{};
  for (size_t i = 0; i < grids.size(); ++i) {
    ChernGridSpec s = base;
    if (grids[i] != std::floor(grids[i]) || grids[i] < 4) throw ConfigError("chern_grids entries must be integers >= 4");
    s.n = int(grids[i]);
    const auto c = chern_numbers(s, p.muB, env, i == 0);
    if (i == 0) {
      first = c.chern;
      for (const auto& q : c.plaquettes)
        map.add({Table::num(q.center.x()), Table::num(q.center.y()), Table::num(q.area), Table::num(q.ring),
                 Table::num(q.middle), Table::num(q.composite), b01(q.inside)});
    }
    stable = stable && c.chern == first;
    t.add({Table::integer(s.n), Table::integer(c.chern[0]), Table::integer(c.chern[1]), Table::integer(c.chern[2]),
           Table::num(c.flux[0]), Table::num(c.flux[1]), Table::num(c.flux[2]), Table::num(c.integer_defect),
           Table::integer(c.refined), Table::num(c.min_link)});
    per.push_back({{"n", s.n}, {"chern", c.chern}, {"integer_defect", c.integer_defect}});
  }
  out.tables.emplace_back("chern.csv", std::move(t));
  out.tables.emplace_back("curvature.csv", std::move(map));
  out.summary["mu_b"] = p.muB;
  out.summary["chern"] = first;
  out.summary["sum"] = first[0] + first[1] + first[2];
  out.summary["stable"] = stable;
  out.summary["grids"] = per;
  return out;
}

Output do_edge(Resolver& r, int workers) {
  const PhysicalParams p = resolve_physics(r);
  const Environment env = resolve_environment(r, p, workers);
  StripeConfig c;
  c.orientation = parse_orientation(r.str("orientation", "x"));
  c.m = int(r.integer("m", c.m));
  c.muB = p.muB;
  c.nk = int(r.integer("k_points", c.nk));
  c.k_min = r.num("k_min", 0.0);
  c.k_max = r.num("k_max", 0.0);
  c.edge_columns = int(r.integer("edge_columns", c.edge_columns));
  c.edge_ratio = r.num("edge_ratio", c.edge_ratio);
  c.model = parse_stripe_model(r.str("edge_model", "cone"));
  c.contour.orientation = c.orientation;
  c.contour.method = parse_contour(r.str("contour", "real"));
  c.contour.eps_scale = env.eps_scale;
  c.contour.denominator = env.options.denominator;
  c.contour.quad.rel_tol = r.num("quad_tol", c.contour.quad.rel_tol);
  c.workers = workers;
  validate(c);

  auto s = edge_spectrum(c, env);
  lifetime_report(s, p);
  Output out;
  Table t("edge", {{"k", "1/a"},
                   {"Re_omega", "gamma"},
                   {"Im_omega", "gamma"},
                   {"class", "-"},
                   {"in_resonance", "-"},
                   {"in_lightcone", "-"},
                   {"v_g", "a*gamma"},
                   {"hops", "-"}});
  int counts[3] = {0, 0, 0};
  double max_im = -INFINITY;
  for (const auto& row : s.states)
    for (const auto& e : row) {
      t.add({Table::num(e.k), Table::num(e.omega.real()), Table::num(e.omega.imag()), edge_class_name(e.cls),
             b01(e.in_resonance_window), b01(e.in_light_cone), Table::num(e.group_velocity), Table::num(e.hops)});
      if (e.gap != GapSide::None) counts[int(e.cls)]++;
      max_im = std::max(max_im, e.omega.imag());
    }
  out.tables.emplace_back("edge.csv", std::move(t));
  const auto ch = edge_chirality(s);
  out.summary["orientation"] = orientation_name(c.orientation);
  out.summary["m"] = c.m;
  out.summary["k_points"] = s.k.size();
  if (s.has_gaps) out.summary["gaps"] = gaps_json(s.gaps);
  out.summary["in_gap"] = {{"left", counts[0]}, {"right", counts[1]}, {"bulk", counts[2]}};
  out.summary["chirality"] = {{"left", ch.left},
                              {"right", ch.right},
                              {"left_sign", ch.left_sign},
                              {"right_sign", ch.right_sign},
                              {"consistent", ch.consistent},
                              {"opposite", ch.opposite()}};
  out.summary["max_linewidth_outside_window"] = ch.max_linewidth_outside;
  out.summary["max_im"] = max_im;
  return out;
}

// Bloch gap used as the scale of inhomogeneous broadening: the wider of the
// two gaps on the default valley sampling plus a zone grid.
double reference_gap(const Environment& env, const SamplingSpec& s, double muB, json& info) {
  auto ks = sample_points(s, env.cone);
  SamplingSpec g = s;
  g.kind = Sampling::Grid;
  const auto extra = sample_points(g, env.cone);
  ks.insert(ks.end(), extra.begin(), extra.end());
  const auto gaps = band_structure(ks, muB, env).gaps;
  info = gaps_json(gaps);
  return std::max(gaps.lower_gap(), gaps.upper_gap());
}

Output do_evolve(Resolver& r, int workers, std::uint64_t seed) {
  const PhysicalParams p = resolve_physics(r);
  Output out;
  const int shells = int(r.integer("shells", 22));
  if (shells < 1 || shells > 60) throw ConfigError("shells must be in 1..60");
  DisorderSpec ds;
  ds.filling = r.num("filling", 1.0);
  ds.exact_count = r.flag("exact_count", false);
  ds.seed = seed;
  if (r.has("sigma_inh_over_gap")) {
    const double f = r.num("sigma_inh_over_gap");
    const Environment env = resolve_environment(r, p, workers);
    json info;
    const double gap = reference_gap(env, resolve_sampling(r), p.muB, info);
    if (!(gap > 0)) throw NumericalError("no open Bloch gap to scale the broadening");
    ds.sigma_inh = f * gap;
    out.summary["reference_gap"] = gap;
    out.summary["reference_gaps"] = info;
  } else {
    ds.sigma_inh = r.num("sigma_inh_over_gamma", 0.0);
  }
  const auto lat = apply_disorder(hexagon_lattice(shells, p), ds);
  const bool gamma0 = r.flag("include_gamma0", false);

  SpectrumOptions so;
  so.boundary_depth = int(r.integer("boundary_depth", so.boundary_depth));
  so.edge_weight_threshold = r.num("edge_weight_threshold", so.edge_weight_threshold);
  so.gap_max_linewidth = r.num("gap_max_linewidth", so.gap_max_linewidth);
  const bool spectrum_only = r.flag("spectrum_only", false);

  DriveConfig d;
  std::vector<double> times;
  double arc_threshold = 0;
  EvolveOptions eo;
  if (!spectrum_only) {
    d.site = int(r.integer("drive_site", -1));
    if (d.site < 0) d.site = default_drive_site(lat);
    d.rabi = r.num("rabi_over_gamma");
    d.omega_L = r.num("omega_l_over_gamma");
    d.t0 = r.num("ramp_t0", 0.0);
    d.ramp_sigma = r.num("ramp_sigma", 1.0);
    times = r.times("times", "0:300:10");
    arc_threshold = r.num("arc_threshold", 0.25);
    eo.tol = r.num("evolve_tol", eo.tol);
    eo.workers = workers;
  }

  const auto es = eigensystem(assemble_hamiltonian(lat, p.muB, p, gamma0, workers));
  const auto rep = spectrum_report(es, lat, so);
  Table sp("spectrum", {{"rank", "-"}, {"Re_omega", "gamma"}, {"Im_omega", "gamma"}, {"class", "-"}});
  double max_im = -INFINITY;
  for (size_t i = 0; i < rep.omega.size(); ++i) {
    sp.add({Table::integer(long(i)), Table::num(rep.omega[i].real()), Table::num(rep.omega[i].imag()),
            rep.edge[i] ? "edge" : "bulk"});
    max_im = std::max(max_im, rep.omega[i].imag());
  }
  out.tables.emplace_back("spectrum.csv", std::move(sp));
  out.summary["sites"] = lat.count();
  out.summary["shells"] = shells;
  out.summary["sigma_inh"] = ds.sigma_inh;
  out.summary["max_im"] = max_im;
  out.summary["gap"] = {{"found", rep.has_gap}, {"lo", rep.gap_lo}, {"hi", rep.gap_hi}, {"width", rep.gap()}};
  out.summary["in_gap"] = rep.in_gap;
  out.summary["in_gap_edge"] = rep.in_gap_edge;
  if (spectrum_only) return out;

  const auto s = evolve(es, lat, d, times, eo);
  const auto m = transport_metrics(s, lat, d.site, so.boundary_depth, arc_threshold);
  const auto sites = lat.sites();
  Table snap("snapshots", {{"t", "1/gamma"}, {"site_index", "-"}, {"x", "a"}, {"y", "a"}, {"prob", "-"}});
  for (size_t k = 0; k < s.t.size(); ++k)
    for (size_t j = 0; j < sites.size(); ++j)
      snap.add({Table::num(s.t[k]), Table::integer(sites[j]), Table::num(lat.pos[sites[j]].x()),
                Table::num(lat.pos[sites[j]].y()), Table::num(s.prob[k][j])});
  Table met("metrics", {{"t", "1/gamma"},
                        {"centroid", "rad"},
                        {"angular_velocity", "rad*gamma"},
                        {"chirality", "-"},
                        {"boundary_fraction", "-"},
                        {"bulk_fraction", "-"},
                        {"arc_progress", "rad"},
                        {"survival", "-"}});
  bool clockwise = true, boundary = true;
  int post = 0;
  for (size_t k = 0; k < s.t.size(); ++k) {
    met.add({Table::num(s.t[k]), Table::num(m.centroid[k]), Table::num(m.angular_velocity[k]),
             Table::integer(m.chirality[k]), Table::num(m.boundary_fraction[k]), Table::num(m.bulk_fraction[k]),
             Table::num(m.arc_progress[k]), Table::num(m.survival[k])});
    if (s.t[k] >= d.t0) {
      ++post;
      clockwise = clockwise && m.chirality[k] == -1;
      boundary = boundary && m.boundary_fraction[k] > m.bulk_fraction[k];
    }
  }
  out.tables.emplace_back("snapshots.csv", std::move(snap));
  out.tables.emplace_back("metrics.csv", std::move(met));
  out.summary["drive_site"] = d.site;
  out.summary["drive_position"] = {lat.pos[d.site].x(), lat.pos[d.site].y()};
  out.summary["step"] = s.step;
  out.summary["halvings"] = s.halvings;
  out.summary["post_ramp"] = {{"snapshots", post},
                              {"clockwise", post > 0 && clockwise},
                              {"boundary_over_bulk", post > 0 && boundary}};
  out.summary["final_arc_progress"] = m.arc_progress.empty() ? 0.0 : m.arc_progress.back();
  return out;
}

Output do_validate(Resolver& r) {
  const PhysicalParams p = resolve_physics(r);
  const double n = r.num("n_sites", 1519);
  const double gap = r.num("gap_over_gamma", 1.0);
  const double lam = r.num("lambda_edge", 1600);
  const double thr = r.num("markov_threshold", 0.1);
  const auto v = markov_check(p, n, gap, lam, thr);
  Output out;
  out.summary["markov"] = {{"L_a", v.L},          {"tau_c_s", v.tau_c}, {"tau_A_s", v.tau_A},
                           {"margin", v.margin},  {"lambda_edge", v.lambda_edge},
                           {"n_max_gamma", v.n_max}, {"threshold", v.threshold}, {"pass", v.pass}};
  return out;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t parse_seed(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("seed must be a non-negative integer");
  return v;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"bands", "chern", "edge", "evolve", "validate"};
  return s;
}

RunResult run(const std::string& subcommand, const Config& cfg, const Flags& flags,
              const std::vector<fs::path>& inputs) {
  const auto& subs = subcommands();
  if (std::find(subs.begin(), subs.end(), subcommand) == subs.end())
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  const auto wall0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();

  Config c = cfg;
  if (flags.seed) c.set("seed", std::to_string(*flags.seed));
  if (flags.workers) c.set("workers", std::to_string(*flags.workers));
  if (flags.eps_scale) c.set("eps_scale", *flags.eps_scale);
  Resolver r(c);
  const std::uint64_t seed = parse_seed(r.str("seed", "0"));
  int workers = int(r.integer("workers", 1));
  if (workers < 0) throw ConfigError("workers must be >= 0");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  json input_list = json::array();
  std::string input_digest;
  for (const auto& p : inputs) {
    const std::string h = file_sha256(p);
    input_list.push_back({{"path", p.string()}, {"sha256", h}});
    input_digest += h + "\n";
  }

  Output out;
  if (subcommand == "bands")
    out = do_bands(r, workers);
  else if (subcommand == "chern")
    out = do_chern(r, workers);
  else if (subcommand == "edge")
    out = do_edge(r, workers);
  else if (subcommand == "evolve")
    out = do_evolve(r, workers, seed);
  else
    out = do_validate(r);

  // worker count changes wall-clock only, so it stays out of the run id
  Config keyed = r.resolved();
  keyed.set("workers", "-");
  RunResult res;
  res.run_id = sha256_hex(subcommand + "\n" + kCodeVersion + "\n" + keyed.emit() + input_digest).substr(0, 16);

  try {
    fs::create_directories(flags.out_dir);
  } catch (const fs::filesystem_error& e) {
    throw IoError("cannot create output directory " + flags.out_dir.string() + ": " + e.what());
  }
  for (const auto& [name, table] : out.tables) {
    table.write(flags.out_dir / name, res.run_id);
    res.files.push_back(name);
  }
  out.summary["run_id"] = res.run_id;
  out.summary["subcommand"] = subcommand;
  out.summary["format_version"] = kFormatVersion;
  const std::string summary_name = subcommand + "_summary.json";
  write_file(flags.out_dir / summary_name, out.summary.dump(2) + "\n");
  res.files.push_back(summary_name);
  res.summary = out.summary;

  json conf = json::object();
  for (const auto& [k, v] : r.resolved().entries()) conf[k] = v;
  res.manifest = {{"schema", std::string("topoarray-manifest/") + kFormatVersion},
                  {"run_id", res.run_id},
                  {"subcommand", subcommand},
                  {"config", conf},
                  {"seed", seed},
                  {"code_version", kCodeVersion},
                  {"inputs", input_list},
                  {"outputs", res.files},
                  {"workers", workers},
                  {"started_utc", started},
                  {"wall_clock_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count()}};
  write_file(flags.out_dir / "manifests.jsonl", res.manifest.dump() + "\n", true);
  return res;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topological emitter-array toolkit: bands, Chern numbers, edge spectra, driven dynamics.",
               "topoarray"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  double eps_scale = 1;
  std::string out_dir = ".";
  auto* o_seed = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  auto* o_workers = app.add_option("--workers", workers, "worker threads, 0 for all cores");
  auto* o_eps = app.add_option("--eps-scale", eps_scale, "scale of the resonance regulator");
  app.add_option("--out-dir", out_dir, "output directory");
  for (const auto& name : subcommands()) {
    auto* sc = app.add_subcommand(name, "run " + name);
    sc->add_option("config", config_path, "config file (key = value)")->required();
    sc->fallthrough();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  Flags f;
  if (o_seed->count()) f.seed = seed;
  if (o_workers->count()) f.workers = workers;
  if (o_eps->count()) f.eps_scale = eps_scale;
  f.out_dir = out_dir;
  try {
    const Config cfg = Config::load(config_path);
    const auto res = run(sub, cfg, f, {config_path});
    out << "run_id " << res.run_id << "\n";
    for (const auto& file : res.files) out << (f.out_dir / file).string() << "\n";
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumericalError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace topo::cli
