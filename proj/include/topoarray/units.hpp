#pragma once
// Physical constants, reduced units, config grammar, lattice geometry and
// polarization bases. Internally lengths are in units of a, momenta in 1/a,
// rates and frequencies in units of gamma.

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace topo {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;

constexpr double kPi = 3.14159265358979323846;
constexpr double kC = 299792458.0;  // m/s

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat "key = value" file. '#' starts a comment. Keys are unique.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string emit() const;

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  const std::map<std::string, std::string>& entries() const { return kv_; }

  bool operator==(const Config& o) const { return kv_ == o.kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

// Every key any subcommand understands. Unknown keys are config errors.
const std::vector<std::string>& known_keys();
std::string format_double(double v);

struct PhysicalParams {
  // primaries, SI
  double lambda_A = 0;  // m
  double gamma = 0;     // rad/s
  double n_d = 0;
  double muB = 0;       // gamma
  double delta_A = 0;   // rad/s
  double v_s = 0;       // m/s
  double E0_sq_a3 = 0;  // E0^2 in units of 1/a^3
  double Gamma_0 = 0;   // gamma
  double a = 0;         // m
  // derived, SI
  double omega_A = 0;
  double omega_Dirac = 0;
  double cell_area = 0;  // m^2
  double E0_sq = 0;      // m^-3
  double xi = 0;         // m
  double g_pref = 0;     // m rad/s
  double K_amp = 0;      // 1/m (dimensionless in units of 1/a: K_amp_a)
  // derived, reduced
  double c_red = 0;      // c/(a gamma)
  double vs_red = 0;     // v_s/(a gamma)
  double wA_red = 0;     // omega_A/gamma
  double delta_red = 0;  // delta_A/gamma
  double xi_a = 0;       // xi/a
  double q0 = 0;         // resonance ring radius, 1/a
  double K_amp_a = 0;    // K_amp * a
  double g_pref_red = 0; // g_pref/(a gamma)
  double coupling = 0;   // g_pref*K_amp/gamma
  double J = 0;          // interaction scale at a valley, gamma
};

PhysicalParams derive_params(const Config& cfg);
// Recomputes every derived field from the primaries.
PhysicalParams derive_from_primaries(PhysicalParams p);

struct LatticeGeometry {
  Vec2 R1, R2;
  Vec2 G1, G2;
  Vec2 pK, pKprime;
  double light_cone_radius = 0;
};

// In units of a. pK = (2/3)G1 + (1/3)G2 sits at polar angle 30 degrees.
LatticeGeometry lattice_vectors(const PhysicalParams& p);

enum class Basis { Circular, Cartesian };
Basis parse_basis(const std::string& tag);
const char* basis_name(Basis b);

struct GreensMatrix {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  Basis basis = Basis::Cartesian;
};

// Columns are the Cartesian components of sigma+ and sigma-.
Eigen::Matrix2cd circular_unitary();
GreensMatrix basis_transform(const GreensMatrix& g, Basis target);

}  // namespace topo
