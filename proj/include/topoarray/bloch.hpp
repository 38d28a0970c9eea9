#pragma once
// 2x2 Bloch matrix of the emitter array, band structures, gap scans.
// Frequencies are offsets (omega - omega_A) in units of gamma.

#include <array>
#include <vector>

#include "topoarray/photonic.hpp"

namespace topo {

// Source of g(k): the analytic cone, or a tabulated band file with a fitted
// cone kept for ring geometry.
struct Environment {
  PhysicalParams params;
  DiracConeModel cone;
  MomentumOptions options;
  const TabulatedBands* table = nullptr;
  double eps_scale = 1.0;
  int workers = 1;

  Eigen::Matrix2cd g(const Vec2& k) const;  // Cartesian, units of a
};

Environment make_environment(const PhysicalParams& p, double eps_scale = 1.0,
                             Denominator d = Denominator::Quadratic);

struct BlochMatrix {
  Vec2 k;
  double omega_A = 0;          // gamma, not included in m
  Eigen::Matrix2cd zeeman;     // mu_B sigma_y
  Eigen::Matrix2cd interaction;
  Eigen::Matrix2cd m;          // zeeman + interaction
};

BlochMatrix bloch_matrix(const Vec2& k, double muB, const Environment& env);

enum class BandLabel { Lower = 0, Middle = 1, Upper = 2 };
const char* band_label_name(BandLabel b);

struct BandSample {
  Vec2 k;
  std::array<cplx, 2> omega;              // offsets from omega_A
  std::array<Eigen::Vector2cd, 2> vec;     // unit right eigenvectors
  std::array<BandLabel, 2> label;
  int middle = 0;                          // index of the middle-band eigenpair
  bool resonant = false;                   // near a valley ring
  bool ambiguous = false;                  // eigenvalues closer than tolerance
};

struct GapInfo {
  double lower_max = 0, middle_min = 0, middle_max = 0, upper_min = 0;
  double lower_gap() const { return middle_min - lower_max; }
  double upper_gap() const { return upper_min - middle_max; }
  double gap() const { return std::min(lower_gap(), upper_gap()); }
};

struct BandResult {
  std::vector<BandSample> samples;
  GapInfo gaps;
  double middle_variation = 0;   // max - min of Re over samples
  double middle_circular = 0;    // mean |<sigma_lower|v_middle>|^2
  int ambiguous = 0;
  bool has_lower = false, has_upper = false;
};

// Eigenpairs and labels at one k. The middle band is the eigenpair that stays
// finite across the rings; the other is lower inside a ring and upper outside.
BandSample band_sample(const Vec2& k, double muB, const Environment& env);

// Normalized distance |k - valley image| / q0 to the nearest valley.
double ring_coordinate(const Vec2& k, const DiracConeModel& m);

BandResult band_structure(const std::vector<Vec2>& ks, double muB, const Environment& env);

enum class Sampling { Path, Grid, Valley };
Sampling parse_sampling(const std::string& s);

struct SamplingSpec {
  Sampling kind = Sampling::Valley;
  int n = 64;              // grid points per axis, or points per path leg
  double window = 6.0;     // valley window half-width in units of q0
};

// Path: Gamma-K-M-K'-Gamma. Grid: offset N x N over the zone. Valley: the grid
// plus N x N squares around both valleys.
std::vector<Vec2> sample_points(const SamplingSpec& s, const DiracConeModel& m);

struct GapPoint {
  double muB = 0;
  double gap = 0;
  GapInfo info;
  int refinements = 0;
};

struct GapScan {
  std::vector<GapPoint> points;
  double slope = 0;      // d gap / d muB over the linear regime
  double plateau = 0;    // largest gap
};

// Gap at one field; sampling doubled until the gap changes by < 1%.
GapPoint converged_gap(double muB, const Environment& env, SamplingSpec s, int max_refine = 4);
GapScan gap_vs_field(const std::vector<double>& muBs, const Environment& env, const SamplingSpec& s);

struct DetuningPoint {
  double delta_thz = 0;
  double J = 0;
  double max_gap = 0;
  GapScan scan;
};

struct DetuningScan {
  std::vector<DetuningPoint> points;
  double exponent = 0;  // log-log slope of max_gap vs detuning
};

DetuningScan max_gap_vs_detuning(const std::vector<double>& delta_thz, const Config& base,
                                 const SamplingSpec& s);

}  // namespace topo
