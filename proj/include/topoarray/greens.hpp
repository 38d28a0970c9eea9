#pragma once
// Real-space Green's function of the two-valley cone, on-site decay, and the
// mixed representation g(p_long; x_perp) used by the stripe solver.

#include <vector>

#include "topoarray/photonic.hpp"
#include "topoarray/quadrature.hpp"

namespace topo {

// H^(2)_m(x) = J_m(x) - i Y_m(x), m in {0, 1}, x > 0.
cplx hankel2(int order, double x);

// G(r) in units of 1/a, circular basis. Multiply by g_pref_red for gamma.
GreensMatrix greens_real(const Vec2& r, const PhysicalParams& p);

// Gamma_PC in units of gamma.
double gamma_pc(const PhysicalParams& p);
// -i Gamma_PC / 2; the real Lamb shift is absorbed into omega_A.
cplx onsite_term(const PhysicalParams& p);

enum class Orientation { X, Y };
Orientation parse_orientation(const std::string& s);
const char* orientation_name(Orientation o);

// Local frame of a stripe. Rows sit at t = j * row_spacing, shifted along l
// by (j mod 2) * row_shift. Components stay in the global Cartesian basis.
struct StripeFrame {
  Vec2 l_hat, t_hat;
  double period = 0;       // 1-D lattice period, a
  double row_spacing = 0;  // a
  double row_shift = 0;    // a
  double width = 0;        // transverse momentum interval, 1/a
};
StripeFrame stripe_frame(Orientation o);

enum class ContourMethod { RealAxis, Deformed };

struct ContourSpec {
  Orientation orientation = Orientation::X;
  ContourMethod method = ContourMethod::RealAxis;
  double eps_scale = 1.0;      // regulator for the real-axis method
  bool extrapolate = true;     // eps -> 0 from eps and eps/2
  Denominator denominator = Denominator::Quadratic;
  QuadOptions quad;
};

struct MixedResult {
  std::vector<GreensMatrix> g;  // one per transverse offset, Cartesian, units of a
  double error = 0;
  int evaluations = 0;
  bool resonant = false;  // some valley ring crosses the integration line
};

// g(p_long; x) = int dp_t / 2pi g(p_long l + p_t t) e^{i p_t x} over one
// transverse period, for every x in x_perp (units of a).
MixedResult mixed_greens(double p_long, const std::vector<double>& x_perp,
                         const DiracConeModel& m, const ContourSpec& spec);

// Row sums of greens_real in closed form: for each row offset d,
//   P * sum_n G(l_d + n P, d * row_spacing) e^{-i p_long (l_d + n P)},
// with l_d the row shift for odd d. The full-plane linearized cones give
// residues in the transverse momentum and an exponentially convergent sum
// over longitudinal images. For d = 0 the n = 0 term (the divergent self term)
// is left out. Cartesian, same units as mixed_greens. Throws on the edges of
// the resonance window, where the d = 0 sum diverges.
std::vector<GreensMatrix> mixed_greens_closed(double p_long, const std::vector<int>& rows,
                                              const PhysicalParams& p, Orientation o);

// Pole abscissae (relative to the transverse axis) of the lower branch on the
// line p_long, for the valley images nearest the line.
std::vector<double> mixed_poles(double p_long, const DiracConeModel& m, Orientation o);

// |p_long - valley projection| < q0 for some valley image.
bool in_resonance_window(double p_long, const DiracConeModel& m, Orientation o);

}  // namespace topo
