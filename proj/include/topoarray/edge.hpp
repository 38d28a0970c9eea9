#pragma once
// Stripe (ribbon) spectra: m emitter rows, periodic along the stripe.
// Amplitudes are taken in the position gauge, c_b e^{i k l}, so the coupling
// between rows b, b' is g_pref / P * g(k; t_b - t_b').

#include <Eigen/Dense>
#include <vector>

#include "topoarray/bloch.hpp"
#include "topoarray/greens.hpp"

namespace topo {

// Cone: mixed_greens of the momentum model used for the bands (default).
// ClosedForm: row sums of greens_real, on-site -i Gamma_PC / 2.
enum class StripeModel { Cone, ClosedForm };
StripeModel parse_stripe_model(const std::string& s);
const char* stripe_model_name(StripeModel m);

struct StripeConfig {
  Orientation orientation = Orientation::X;
  int m = 41;
  double muB = 0.5;
  int nk = 201;
  // k range; equal ends mean the whole 1-D zone
  double k_min = 0, k_max = 0;
  int edge_columns = 5;
  double edge_ratio = 5;
  StripeModel model = StripeModel::Cone;
  ContourSpec contour;
  int workers = 1;
};

// Throws ConfigError on m < 7, bad ratio/columns, or k outside the 1-D zone.
void validate(const StripeConfig& c);
std::vector<double> stripe_k_samples(const StripeConfig& c);

// 2m x 2m, index 2 b + alpha, frequencies relative to omega_A in gamma.
Eigen::MatrixXcd stripe_matrix(double k, const StripeConfig& c, const Environment& env);

enum class EdgeClass { Left, Right, Bulk };
const char* edge_class_name(EdgeClass c);

// Left: weight on the first `columns` rows exceeds ratio times the weight on
// the last `columns` rows. Right is the mirror image. Otherwise Bulk.
EdgeClass classify_profile(const Eigen::VectorXcd& v, int columns, double ratio);

enum class GapSide { None, Lower, Upper };

struct EdgeState {
  double k = 0;                 // 1/a
  cplx omega;                   // gamma, relative to omega_A
  Eigen::VectorXcd profile;     // unit norm
  EdgeClass cls = EdgeClass::Bulk;
  GapSide gap = GapSide::None;  // Re omega inside a bulk gap of the band model
  bool in_resonance_window = false;
  bool in_light_cone = false;
  double linewidth = 0;         // -2 Im omega
  double group_velocity = 0;    // a gamma
  double effective_decay = 0;   // linewidth + Gamma_0 inside the light cone
  double hops = 0;              // |v_g| / (a * effective_decay), inf if no decay
};

struct EdgeSpectrum {
  std::vector<double> k;
  std::vector<std::vector<EdgeState>> states;  // per k, sorted by Re omega
  GapInfo gaps;                                // bulk windows, Cone model only
  bool has_gaps = false;
};

EdgeSpectrum edge_spectrum(const StripeConfig& c, const Environment& env);

// Fills in_light_cone, effective_decay and hops.
void lifetime_report(EdgeSpectrum& s, const PhysicalParams& p);

// Mean speed of one edge branch across the lower half of a gap, outside the
// resonance window on one side of a valley projection: half the gap divided
// by the distance from the window edge to where the branch comes within
// `threshold` (share of the half gap) of the bottom of the gap.
struct Traversal {
  bool found = false;
  double d_omega = 0;   // gamma
  double d_k = 0;       // 1/a
  double velocity = 0;  // a gamma
  double decay = 0;     // effective decay at the far end, gamma
  double hops = 0;
  bool in_light_cone = false;
};
Traversal edge_traversal(const EdgeSpectrum& s, EdgeClass side, GapSide gap, double valley_k, double q0,
                         double direction, double threshold = 0.05);

// In-gap edge states outside the resonance window and in the lower half of
// their gap, tallied per side with the sign of the group velocity.
struct EdgeChirality {
  int left = 0, right = 0;
  int left_sign = 0, right_sign = 0;  // sign of the first state seen, 0 if none
  bool consistent = true;             // every state on a side shares its sign
  double max_linewidth_outside = 0;   // over all states outside the window, gamma
  bool opposite() const { return left > 0 && right > 0 && consistent && left_sign == -right_sign; }
};
EdgeChirality edge_chirality(const EdgeSpectrum& s);

}  // namespace topo
