#include "topoarray/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>

namespace topo {

void CompensatedSum::add(cplx v) {
  auto step = [](double& s, double& c, double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  };
  double sr = sum_.real(), si = sum_.imag(), cr = comp_.real(), ci = comp_.imag();
  step(sr, cr, v.real());
  step(si, ci, v.imag());
  sum_ = cplx(sr, si);
  comp_ = cplx(cr, ci);
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  auto zeros = boost::math::legendre_p_zeros<double>(n);
  x.clear();
  w.clear();
  for (double z : zeros) {
    double dp = boost::math::legendre_p_prime(n, z);
    double wt = 2.0 / ((1 - z * z) * dp * dp);
    if (z == 0) {
      x.push_back(0);
      w.push_back(wt);
    } else {
      x.push_back(-z);
      w.push_back(wt);
      x.push_back(z);
      w.push_back(wt);
    }
  }
  std::vector<size_t> idx(x.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, ws;
  for (size_t i : idx) {
    xs.push_back(x[i]);
    ws.push_back(w[i]);
  }
  x = xs;
  w = ws;
}

namespace {

struct Piece {
  int seg;
  double s0, s1;  // parameter range on the segment
  Eigen::VectorXcd val;
  double err;
  double floor;  // rounding noise of the rule on this piece
};

struct PieceLess {
  bool operator()(const Piece& a, const Piece& b) const {
    if (a.err != b.err) return a.err < b.err;
    if (a.seg != b.seg) return a.seg > b.seg;
    return a.s0 > b.s0;
  }
};

}  // namespace

QuadResult integrate_segments(const VecIntegrand& f, int dim, const std::vector<Segment>& segs,
                              const QuadOptions& opt) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G7 = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G7::weights();

  QuadResult res;
  Eigen::VectorXcd fv(dim), sk(dim), sg(dim);
  Eigen::VectorXd sa(dim);
  auto rule = [&](int seg, double s0, double s1) {
    const Segment& S = segs[seg];
    const cplx dz = S.b - S.a;
    const double half = 0.5 * (s1 - s0), mid = 0.5 * (s1 + s0);
    sk.setZero();
    sg.setZero();
    sa.setZero();
    for (size_t i = 0; i < xk.size(); ++i) {
      for (int sign : {-1, 1}) {
        if (i == 0 && sign == 1) continue;
        double s = mid + sign * half * xk[i];
        f(seg, S.a + s * dz, fv);
        ++res.evaluations;
        sk += wk[i] * fv;
        sa += wk[i] * fv.cwiseAbs();
        if (i % 2 == 0) sg += wg[i / 2] * fv;
      }
    }
    Piece p{seg, s0, s1, sk * (half * dz), 0.0, 50 * std::numeric_limits<double>::epsilon() * std::abs(half * dz) * sa.maxCoeff()};
    p.err = ((sk - sg) * (half * dz)).cwiseAbs().maxCoeff();
    return p;
  };

  std::priority_queue<Piece, std::vector<Piece>, PieceLess> heap;
  std::vector<Piece> done;
  for (int i = 0; i < int(segs.size()); ++i)
    if (segs[i].a != segs[i].b) heap.push(rule(i, 0.0, 1.0));

  auto totals = [&](double& err, double& mag) {
    Eigen::VectorXcd tot = Eigen::VectorXcd::Zero(dim);
    err = 0;
    auto acc = [&](const Piece& p) {
      tot += p.val;
      err += p.err;
    };
    for (auto& p : done) acc(p);
    auto copy = heap;
    while (!copy.empty()) {
      acc(copy.top());
      copy.pop();
    }
    mag = tot.cwiseAbs().maxCoeff();
  };

  double err = 0, mag = 0;
  totals(err, mag);
  int count = int(heap.size());
  // running error bookkeeping avoids rescanning the heap every step
  while (!heap.empty() && err > std::max(opt.abs_tol, opt.rel_tol * mag)) {
    if (count >= opt.max_intervals)
    {
      char buf[160];
      std::snprintf(buf, sizeof buf, "quadrature did not converge: error %.3e of %.3e after %d intervals (%zu at rounding level)",
                    err, mag, count, done.size());
      throw NumericalError(buf);
    }
    Piece p = heap.top();
    heap.pop();
    double sm = 0.5 * (p.s0 + p.s1);
    if (!(sm > p.s0 && sm < p.s1) || p.err <= p.floor) {
      done.push_back(p);  // at machine resolution or rounding noise
      continue;
    }
    Piece a = rule(p.seg, p.s0, sm), b = rule(p.seg, sm, p.s1);
    err += a.err + b.err - p.err;
    heap.push(a);
    heap.push(b);
    ++count;
    if (count % 64 == 0) totals(err, mag);
  }
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  std::sort(done.begin(), done.end(), [](const Piece& a, const Piece& b) {
    return a.seg != b.seg ? a.seg < b.seg : a.s0 < b.s0;
  });
  res.value = Eigen::VectorXcd::Zero(dim);
  res.error = 0;
  for (int c = 0; c < dim; ++c) {
    CompensatedSum cs;
    for (auto& p : done) cs.add(p.val(c));
    res.value(c) = cs.value();
  }
  for (auto& p : done) res.error += p.err;
  res.intervals = int(done.size());
  return res;
}

}  // namespace topo
