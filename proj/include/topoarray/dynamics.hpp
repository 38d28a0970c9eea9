#pragma once
// Finite hexagonal patches, disorder, the 2N x 2N non-Hermitian Hamiltonian,
// sorted spectra with an edge census, driven evolution and transport metrics.
// Amplitudes are indexed 2 j + s over present sites j, s = 0 (sigma+), 1 (sigma-).

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "topoarray/greens.hpp"

namespace topo {

struct FiniteLattice {
  std::vector<Vec2> pos;       // a
  std::vector<double> omega;   // gamma, relative to omega_A
  std::vector<char> present;
  int shells = 0;
  std::uint64_t seed = 0;
  double filling = 1, sigma_inh = 0;
  bool exact_count = false;

  int size() const { return int(pos.size()); }
  int count() const;
  // lattice indices of present sites, in order
  std::vector<int> sites() const;
};

FiniteLattice hexagon_lattice(int shells, const PhysicalParams& p);

struct DisorderSpec {
  double filling = 1;
  double sigma_inh = 0;  // gamma
  std::uint64_t seed = 0;
  bool exact_count = false;  // keep exactly round(filling N) sites
};
FiniteLattice apply_disorder(const FiniteLattice& l, const DisorderSpec& d);

// Sites of `l` (present only) with fewer than six present neighbours at
// distance a, grown inwards by depth - 1 neighbour steps.
std::vector<char> boundary_mask(const FiniteLattice& l, int depth);

// Lattice index of the present site nearest the middle of the right edge.
int default_drive_site(const FiniteLattice& l);

Eigen::MatrixXcd assemble_hamiltonian(const FiniteLattice& l, double muB, const PhysicalParams& p,
                                      bool include_gamma0 = false, int workers = 1);

struct Eigensystem {
  Eigen::VectorXcd values;  // sorted by real part
  Eigen::MatrixXcd vectors; // unit columns
};
Eigensystem eigensystem(const Eigen::MatrixXcd& H);

struct SpectrumOptions {
  int boundary_depth = 2;
  double edge_weight_threshold = 0.5;
  // gap search window on Re omega; empty means the whole spectrum
  double search_lo = 0, search_hi = 0;
  // radiative states (resonance window) do not bound the gap
  double gap_max_linewidth = 0.1;
};

struct SpectrumReport {
  std::vector<cplx> omega;              // sorted by real part
  std::vector<double> boundary_weight;  // share of |c|^2 on the boundary mask
  std::vector<char> edge;
  bool has_gap = false;
  double gap_lo = 0, gap_hi = 0;  // gamma
  int in_gap = 0, in_gap_edge = 0;
  double gap() const { return has_gap ? gap_hi - gap_lo : 0; }
};

// The gap is the widest interval between consecutive bulk-classified states
// whose linewidth is at most gap_max_linewidth.
SpectrumReport spectrum_report(const Eigensystem& es, const FiniteLattice& l, const SpectrumOptions& o);

struct DriveConfig {
  int site = -1;          // lattice index
  double rabi = 0;        // gamma
  double omega_L = 0;     // gamma, relative to omega_A
  double t0 = 0;          // 1/gamma
  double ramp_sigma = 1;  // 1/gamma
  double envelope(double t) const;
};

struct EvolveOptions {
  double tol = 1e-6;     // relative change in c under step halving
  int max_halvings = 14;
  int workers = 1;
  Eigen::VectorXcd c0;   // initial amplitudes, empty means zero
};

struct SnapshotSeries {
  std::vector<double> t;
  std::vector<std::vector<double>> prob;  // per time, per present site
  std::vector<double> norm;               // sum of prob
  double step = 0;                        // accepted quadrature panel width
  int halvings = 0;
};

// i dc/dt = (H - omega_L) c + Omega(t)/2 s in the frame of the laser, s with
// weight 1/sqrt2 on both circular components of the driven site.
SnapshotSeries evolve(const Eigensystem& es, const FiniteLattice& l, const DriveConfig& d,
                      const std::vector<double>& times, const EvolveOptions& o = {});

struct TransportMetrics {
  std::vector<double> centroid;          // signed angle of the boundary population, rad, unwrapped
  std::vector<double> angular_velocity;  // rad gamma, from successive snapshots
  std::vector<int> chirality;            // sign of centroid, 0 if symmetric
  std::vector<double> boundary_fraction;
  std::vector<double> bulk_fraction;
  std::vector<double> arc_progress;      // furthest clockwise arc reached so far, rad
  std::vector<double> survival;          // total norm
};

// Angles are measured about the patch centre from the driven site;
// clockwise is negative. The centroid is followed from snapshot to snapshot
// (each snapshot is measured relative to the previous centroid), so
// snapshots must be dense enough that it moves less than pi between them.
// Arc progress walks clockwise over 10 degree bins from the drive while bins
// hold at least arc_threshold times the uniform share of the boundary
// population, bridging up to two dark bins.
TransportMetrics transport_metrics(const SnapshotSeries& s, const FiniteLattice& l, int drive_site,
                                   int boundary_depth = 2, double arc_threshold = 0.25);

struct ValidityReport {
  double L = 0;          // a
  double tau_c = 0;      // s
  double tau_A = 0;      // s
  double margin = 0;     // tau_A / tau_c
  double lambda_edge = 0;
  double n_max = 0;      // gamma
  double threshold = 0;
  bool pass = false;
};

ValidityReport markov_check(const PhysicalParams& p, double n_sites, double gap_over_gamma,
                            double lambda_edge = 1600, double threshold = 0.1);

}  // namespace topo
