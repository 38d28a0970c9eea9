#pragma once
// Adaptive Gauss-Kronrod (7,15) for vector-valued integrands along straight
// segments of the complex plane.

#include <functional>
#include <vector>

#include "topoarray/units.hpp"

namespace topo {

struct Segment {
  cplx a, b;
};

// out must be filled with f(z) on segment seg; dz/ds is applied by the integrator.
using VecIntegrand = std::function<void(int seg, cplx z, Eigen::VectorXcd& out)>;

struct QuadResult {
  Eigen::VectorXcd value;
  double error = 0;
  int intervals = 0;
  int evaluations = 0;
};

struct QuadOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-10;
  int max_intervals = 20000;
};

// Throws NumericalError when the tolerance is not met within max_intervals.
QuadResult integrate_segments(const VecIntegrand& f, int dim, const std::vector<Segment>& segs,
                              const QuadOptions& opt = {});

// Neumaier compensated sum, order fixed by the caller.
class CompensatedSum {
 public:
  void add(cplx v);
  cplx value() const { return sum_ + comp_; }

 private:
  cplx sum_{0, 0}, comp_{0, 0};
};

// Fixed Gauss-Legendre rule on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace topo
