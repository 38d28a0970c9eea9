#pragma once
// Photonic environment: analytic Dirac-cone model near the two valleys,
// tabulated band data, and the momentum-space Green's function g(k).
// Reduced units: momenta in 1/a, frequencies in gamma, fields squared in 1/a^3.

#include <string>
#include <vector>

#include "topoarray/units.hpp"

namespace topo {

enum class Valley { K, Kp };
enum class Branch { Plus, Minus };
enum class Denominator { Quadratic, Linearized };

struct DiracConeModel {
  double omega_A = 0;      // gamma
  double omega_Dirac = 0;  // gamma
  double v_s = 0;          // a gamma
  double c = 0;            // a gamma
  double E0_sq = 0;        // 1/a^3
  double eps = 0;          // gamma^2
  Vec2 pK, pKprime;
  LatticeGeometry geom;
  double q0() const { return (omega_Dirac - omega_A) / v_s; }
};

// eps = 2 omega_A * 1e-4 delta_A * eps_scale.
DiracConeModel make_cone_model(const PhysicalParams& p, double eps_scale = 1.0);

// Nearest copy of v under reciprocal-lattice translations.
Vec2 nearest_image(const Vec2& k, const Vec2& v, const LatticeGeometry& g);
Vec2 reduce_to_bz(const Vec2& k, const LatticeGeometry& g);

double cone_dispersion(const DiracConeModel& m, const Vec2& p, Valley v, Branch b);
// Field at the emitter for the mode at p; the valley image nearest p is used.
Vec2 cone_field(const DiracConeModel& m, const Vec2& p, Valley v, Branch b);
// Same, from the offset q = p - valley and E0.
Vec2 cone_field_offset(const Vec2& q, double E0, Valley v, Branch b);

struct MomentumOptions {
  Denominator denominator = Denominator::Quadratic;
  // 0: nearest image of each valley only. >0: all images with |k - V - G| < cutoff.
  double image_cutoff = 0;
  // weight images by exp(-(|k - V - G| / cutoff)^2) instead of a hard edge
  bool gaussian_taper = false;
};

// g(k) in units of a, Cartesian basis.
GreensMatrix momentum_greens(const Vec2& k, const DiracConeModel& m,
                             const MomentumOptions& opt = {});
// Contribution of one valley image at offset q (complex q allowed via sin/cos).
Eigen::Matrix2cd cone_term(const DiracConeModel& m, double q, double sinphi, double cosphi,
                           Valley v, Denominator d);
// Analytic continuation for complex offsets; products are not conjugated.
Eigen::Matrix2cd cone_term_complex(const DiracConeModel& m, cplx q, cplx s, cplx c, Valley v,
                                   Denominator d, double eps);

struct TabulatedBands {
  std::vector<Vec2> k;  // 1/a
  int nbands = 0;
  // [ik * nbands + n]
  std::vector<double> omega;  // omega a / (2 pi c)
  std::vector<Eigen::Vector2cd> u;
  std::string normalization;
};

TabulatedBands load_tabulated(const std::string& path);
TabulatedBands parse_tabulated(const std::string& text);
std::string emit_tabulated(const TabulatedBands& t);

// Full-band sum over the table. k must coincide with a table point up to
// reciprocal-lattice translation or time reversal.
GreensMatrix momentum_greens(const Vec2& k, const TabulatedBands& t, const PhysicalParams& p,
                             double eps_scale = 1.0);

struct DiracFit {
  DiracConeModel model;
  double omega_Dirac_dimless = 0;  // omega a / (2 pi c)
  double v_s_over_c = 0;
  double E0_sq_a3 = 0;
  double residual_rms = 0;  // gamma
  int points = 0;
  int lower_band = -1;
};

DiracFit dirac_fit(const TabulatedBands& t, const PhysicalParams& p, double radius,
                   double min_radius = 1e-9);

}  // namespace topo
