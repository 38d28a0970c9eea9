#pragma once
// Berry curvature and Chern numbers by link variables on a logically
// rectangular grid over the zone.

#include <array>
#include <vector>

#include "topoarray/bloch.hpp"

namespace topo {

enum class GridKind { Uniform, Valley };
GridKind parse_grid_kind(const std::string& s);

struct ChernGridSpec {
  int n = 100;
  GridKind kind = GridKind::Valley;
  double valley_width = 2.0;  // warp width in units of q0
  double shift = 0.5;         // node offset in cells
  int max_depth = 4;          // local refinement of singular plaquettes
};

// Reduced coordinates of the grid lines along one reciprocal axis, in [0, 1).
std::vector<double> grid_lines(const ChernGridSpec& s, double q0);

struct Plaquette {
  Vec2 center;
  double area = 0;         // 1/a^2
  double ring = 0;         // ring coordinate of the centre
  double middle = 0;       // flux of the middle band, radians
  double composite = 0;    // flux of the other band
  bool inside = false;     // centre inside a ring: composite counts as lower
};

struct ChernResult {
  std::array<int, 3> chern{};         // lower, middle, upper
  std::array<double, 3> flux{};       // integrated flux / 2 pi
  double composite_total = 0;         // lower + upper, / 2 pi
  double integer_defect = 0;          // max |flux - chern| over lower, upper
  double min_link = 1;                // smallest link modulus seen
  int refined = 0;                    // plaquettes refined locally
  GapInfo gaps;
  std::vector<Plaquette> plaquettes;  // filled when keep_map
};

// Eigenvectors are evaluated with the regulator removed; grid nodes on a ring
// are an error. Throws NumericalError when the gaps are closed on the grid.
// phase_seed != 0 multiplies every eigenvector by a random phase first.
ChernResult chern_numbers(const ChernGridSpec& s, double muB, const Environment& env,
                          bool keep_map = false, unsigned long phase_seed = 0);

struct BerryMap {
  ChernResult result;
  double concentration = 0;  // share of middle-band |flux| within radius of a valley
  double radius = 0;         // in units of q0
};

BerryMap berry_map(const ChernGridSpec& s, double muB, const Environment& env, double radius_q0 = 3.0);

}  // namespace topo
