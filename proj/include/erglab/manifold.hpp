#pragma once

// Center-stable disks by backward graph transform along a block orbit, and
// contraction checks of the resulting disks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "erglab/domination.hpp"
#include "erglab/errors.hpp"
#include "erglab/linalg.hpp"
#include "erglab/pesin.hpp"
#include "erglab/systems.hpp"

namespace erglab {

struct TransformParams {
  std::size_t ell = 1;
  std::size_t depth = 20;
  double radius = 0.05;
  std::size_t resolution = 33;  // nodes per parameter axis, odd, >= 17
  double cone_aperture = 0.5;   // radians, about E^cs
  int newton_iterations = 40;
};

struct CsDisk {
  Vector base;
  double radius = 0.0;
  std::size_t ell = 1;
  std::size_t depth = 0;
  Matrix cs, cu;  // E^cs(x), E^cu(x) bases
  std::size_t resolution = 0;
  std::vector<Vector> params;  // parameter u in E^cs coordinates, grid order
  std::vector<Vector> values;  // graph value w in E^cu coordinates
  std::vector<double> tangent_angle;
  std::size_t center_node = 0;
  std::vector<double> schedule;  // c_k, k = 0..depth
  bool block_certified = false;  // prefix averages < -1 up to depth

  int cs_dim() const { return static_cast<int>(cs.cols()); }
  double max_tangent_angle() const {
    return tangent_angle.empty() ? 0.0 : *std::max_element(tangent_angle.begin(), tangent_angle.end());
  }
  // Chart displacement of node q from the base point.
  Vector offset(std::size_t q) const { return cs * params[q] + cu * values[q]; }
  template <SmoothSystem S>
  Vector point(const S& sys, std::size_t q) const {
    return sys.shift(base, offset(q));
  }
};

namespace detail {

// Cubic Lagrange weights (and derivatives) on the uniform grid -R + j h.
struct Stencil {
  std::size_t start = 0;
  double w[4] = {0, 0, 0, 0};
  double dw[4] = {0, 0, 0, 0};
};

inline Stencil cubic_stencil(double u, double radius, std::size_t res) {
  const double h = 2 * radius / static_cast<double>(res - 1);
  const double t = (u + radius) / h;
  const long base = static_cast<long>(std::floor(t)) - 1;
  Stencil s;
  s.start = static_cast<std::size_t>(std::clamp<long>(base, 0, static_cast<long>(res) - 4));
  const double x = t - static_cast<double>(s.start);  // nodes at 0, 1, 2, 3
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0, deriv = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      den *= i - j;
      num *= x - j;
      double prod = 1.0;
      for (int m = 0; m < 4; ++m)
        if (m != i && m != j) prod *= x - m;
      deriv += prod;
    }
    s.w[i] = num / den;
    s.dw[i] = deriv / den / h;
  }
  return s;
}

// Graph w(u) over the parameter square [-R, R]^dcs (dcs = 1 or 2).
class GraphGrid {
 public:
  GraphGrid(int dcs, int dcu, double radius, std::size_t res)
      : dcs_(dcs), dcu_(dcu), radius_(radius), res_(res) {
    if (dcs < 1 || dcs > 2) throw std::invalid_argument("center-stable disks support dim E^cs in {1, 2}");
    std::size_t n = res;
    if (dcs == 2) n *= res;
    values_.assign(n, Vector::Zero(dcu));
  }

  std::size_t size() const { return values_.size(); }
  double radius() const { return radius_; }
  Vector param(std::size_t q) const {
    const double h = 2 * radius_ / static_cast<double>(res_ - 1);
    Vector u(dcs_);
    if (dcs_ == 1) {
      u(0) = -radius_ + h * static_cast<double>(q);
    } else {
      u(0) = -radius_ + h * static_cast<double>(q / res_);
      u(1) = -radius_ + h * static_cast<double>(q % res_);
    }
    return u;
  }
  std::size_t center() const { return dcs_ == 1 ? res_ / 2 : (res_ / 2) * res_ + res_ / 2; }
  Vector& value(std::size_t q) { return values_[q]; }
  const Vector& value(std::size_t q) const { return values_[q]; }
  const std::vector<Vector>& values() const { return values_; }

  // Interpolated value and derivative (dcu x dcs) at u.
  void eval(const Vector& u, Vector& w, Matrix& dw) const {
    w = Vector::Zero(dcu_);
    dw = Matrix::Zero(dcu_, dcs_);
    if (dcs_ == 1) {
      const Stencil s = cubic_stencil(u(0), radius_, res_);
      for (int i = 0; i < 4; ++i) {
        w += s.w[i] * values_[s.start + i];
        dw.col(0) += s.dw[i] * values_[s.start + i];
      }
    } else {
      const Stencil a = cubic_stencil(u(0), radius_, res_), b = cubic_stencil(u(1), radius_, res_);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const Vector& v = values_[(a.start + i) * res_ + b.start + j];
          w += a.w[i] * b.w[j] * v;
          dw.col(0) += a.dw[i] * b.w[j] * v;
          dw.col(1) += a.w[i] * b.dw[j] * v;
        }
    }
  }

 private:
  int dcs_, dcu_;
  double radius_;
  std::size_t res_;
  std::vector<Vector> values_;
};

// One step of f in the chart at y: v -> displacement(f y, f(y + v)). Tiny v
// use a second-order Taylor step, since such offsets are below the
// resolution of the point coordinates.
template <SmoothSystem S>
Vector local_step(const S& sys, const Vector& y, const Vector& fy, const Matrix& jy, const Vector& v) {
  constexpr double kExactAbove = 1e-5;
  constexpr double kProbe = 1e-3;
  const double n = v.norm();
  if (n == 0.0) return Vector::Zero(v.size());
  if (n >= kExactAbove) return sys.displacement(fy, sys.map(sys.shift(y, v)));
  const Vector e = v / n;
  const Vector plus = sys.displacement(fy, sys.map(sys.shift(y, kProbe * e)));
  const Vector minus = sys.displacement(fy, sys.map(sys.shift(y, -kProbe * e)));
  const Vector second = (plus + minus) / (kProbe * kProbe);
  return jy * v + 0.5 * n * n * second;
}

// Local f^ell in charts along an orbit segment: y_j = f^j y_0, j < ell.
template <SmoothSystem S>
struct LocalIterate {
  const S* sys;
  std::vector<Vector> ys;   // ell + 1 points
  std::vector<Matrix> jys;  // ell Jacobians

  LocalIterate(const S& s, const Vector& y0, std::size_t ell) : sys(&s) {
    ys.push_back(y0);
    for (std::size_t j = 0; j < ell; ++j) {
      jys.push_back(s.jacobian(ys.back()));
      ys.push_back(s.map(ys.back()));
    }
  }

  // Image offset and derivative of f^ell at y_0 + v.
  void apply(const Vector& v, Vector& out, Matrix& deriv) const {
    Vector cur = v;
    deriv = Matrix::Identity(v.size(), v.size());
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const Matrix jac = cur.norm() < 1e-5 ? jys[j] : Matrix(sys->jacobian(sys->shift(ys[j], cur)));
      deriv = jac * deriv;
      cur = local_step(*sys, ys[j], ys[j + 1], jys[j], cur);
    }
    out = cur;
  }
};

}  // namespace detail

// Backward graph transform: the flat disk tangent to E^cs at f^{n ell} x is
// pulled back level by level through balls of radius 2 r e^{c_k} e^{k/2};
// the level-0 graph is the returned disk. The splitting must cover orbit
// positions 0..ell * depth.
template <SmoothSystem S>
CsDisk center_stable_disk(const S& sys, const SplittingEstimate<Vector>& split, const TransformParams& params) {
  const std::size_t ell = params.ell, depth = params.depth, res = params.resolution;
  if (ell < 1 || depth < 1) throw std::invalid_argument("center_stable_disk: ell and depth must be positive");
  if (res < 17 || res % 2 == 0) throw std::invalid_argument("center_stable_disk: resolution must be odd and >= 17");
  if (!(params.radius > 0.0)) throw std::invalid_argument("center_stable_disk: radius must be positive");
  if (split.length() < ell * depth + 1) throw std::invalid_argument("center_stable_disk: splitting too short");
  const int d = sys.dim();
  const int dcu = split.index, dcs = d - split.index;

  // Schedule c_k from the log-norms along the ell-orbit.
  std::vector<double> a(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    std::vector<Matrix> factors;
    for (std::size_t j = 0; j < ell; ++j) factors.push_back(sys.jacobian(split.points[k * ell + j]));
    a[k] = restricted_product(factors, split.cs[k * ell]).log_sv.front();
  }
  std::vector<double> c(depth + 1, 0.0);
  for (std::size_t k = 0; k < depth; ++k) c[k + 1] = c[k] + a[k];

  auto radius_at = [&](std::size_t k) { return params.radius * std::exp(c[k] + 0.5 * static_cast<double>(k)); };

  detail::GraphGrid next(dcs, dcu, radius_at(depth), res);  // flat disk at level depth
  for (std::size_t k = depth; k-- > 0;) {
    const std::size_t pos = k * ell;
    const Matrix& qcs = split.cs[pos];
    const Matrix& qcu = split.cu[pos];
    Matrix frame_next(d, d);
    frame_next << split.cu[pos + ell], split.cs[pos + ell];
    const Matrix to_next = frame_next.inverse();  // oblique coordinates (a_cu; a_cs) at level k+1
    const detail::LocalIterate<S> step(sys, split.points[pos], ell);
    detail::GraphGrid cur(dcs, dcu, radius_at(k), res);
    // absolute part: roundoff of offsets computed from unit-scale coordinates
    const double tol = 1e-13 * next.radius() + 4e-15;

    for (std::size_t q = 0; q < cur.size(); ++q) {
      const Vector u = cur.param(q);
      Vector w = Vector::Zero(dcu);
      bool converged = false;
      for (int it = 0; it < params.newton_iterations; ++it) {
        Vector img;
        Matrix dimg;
        step.apply(qcs * u + qcu * w, img, dimg);
        const Vector coords = to_next * img;
        const Vector acu = coords.head(dcu), acs = coords.tail(dcs);
        if (!coords.allFinite()) break;
        if (acs.lpNorm<Eigen::Infinity>() > 1.25 * next.radius())
          throw step_failure_error("backward step leaves the next ball", k, q);
        Vector g;
        Matrix dg;
        next.eval(acs, g, dg);
        const Vector resid = acu - g;
        const Matrix dcoords = to_next * dimg * qcu;
        const Matrix jac = dcoords.topRows(dcu) - dg * dcoords.bottomRows(dcs);
        const Vector delta = jac.fullPivLu().solve(resid);
        if (!delta.allFinite()) break;
        w -= delta;
        if (resid.norm() <= tol || delta.norm() <= 1e-15 * std::max(w.norm(), cur.radius())) {
          converged = true;
          break;
        }
      }
      if (!converged) throw step_failure_error("Newton iteration did not converge", k, q);
      cur.value(q) = w;
    }

    // Cone check on the pulled-back graph.
    for (std::size_t q = 0; q < cur.size(); ++q) {
      Vector w;
      Matrix dw;
      cur.eval(cur.param(q), w, dw);
      const Matrix tangent = orthonormalize(qcs + qcu * dw);
      if (subspace_distance(tangent, qcs) >= params.cone_aperture)
        throw cone_escape_error("pulled-back graph leaves the center-stable cone", k, q);
    }
    next = std::move(cur);
  }

  CsDisk disk;
  disk.base = split.points.front();
  disk.radius = params.radius;
  disk.ell = ell;
  disk.depth = depth;
  disk.cs = split.cs.front();
  disk.cu = split.cu.front();
  disk.resolution = res;
  disk.center_node = next.center();
  disk.schedule = c;
  disk.block_certified = block_verdict(a).member;
  for (std::size_t q = 0; q < next.size(); ++q) {
    Vector w;
    Matrix dw;
    next.eval(next.param(q), w, dw);
    disk.params.push_back(next.param(q));
    disk.values.push_back(next.value(q));
    disk.tangent_angle.push_back(subspace_distance(orthonormalize(disk.cs + disk.cu * dw), disk.cs));
  }
  return disk;
}

// Splitting estimated along the forward orbit, then the disk.
template <SmoothSystem S>
CsDisk center_stable_disk(const S& sys, const Vector& x, int index, const TransformParams& params,
                          std::size_t horizon = 40) {
  const auto split = estimate_splitting(sys, x, index, horizon, params.ell * params.depth + 1);
  return center_stable_disk(sys, split, params);
}

// Tangent direction of the disk at its center (orthonormal basis).
inline Matrix center_tangent(const CsDisk& disk) {
  const int dcs = disk.cs_dim();
  const std::size_t res = disk.resolution;
  const double h = 2 * disk.radius / static_cast<double>(res - 1);
  Matrix dw(disk.cu.cols(), dcs);
  const std::size_t c = disk.center_node;
  for (int j = 0; j < dcs; ++j) {
    const std::size_t stride = (dcs == 2 && j == 0) ? res : 1;
    // fourth-order central difference
    dw.col(j) = (-disk.values[c + 2 * stride] + 8 * disk.values[c + stride] - 8 * disk.values[c - stride] +
                 disk.values[c - 2 * stride]) /
                (12 * h);
  }
  return orthonormalize(disk.cs + disk.cu * dw);
}

struct RadiusSearch {
  double radius = 0.0;  // largest radius that built without error
  double requested = 0.0;
  bool reached = false;  // requested radius achieved
  std::optional<CsDisk> disk;
  std::string last_error;
};

// Bisection for the largest r <= r_max whose disk builds without cone escape
// or step failure.
template <SmoothSystem S>
RadiusSearch search_radius(const S& sys, const SplittingEstimate<Vector>& split, TransformParams params, double r_max,
                           int bisections = 20) {
  RadiusSearch out;
  out.requested = r_max;
  auto attempt = [&](double r) -> bool {
    params.radius = r;
    try {
      out.disk = center_stable_disk(sys, split, params);
      out.radius = r;
      return true;
    } catch (const cone_escape_error& e) {
      out.last_error = e.what();
    } catch (const step_failure_error& e) {
      out.last_error = e.what();
    }
    return false;
  };
  if (attempt(r_max)) {
    out.reached = true;
    return out;
  }
  double lo = 0.0, hi = r_max;
  for (int b = 0; b < bisections; ++b) {
    const double mid = 0.5 * (lo + hi);
    if (attempt(mid))
      lo = mid;
    else
      hi = mid;
  }
  if (lo > 0.0 && out.radius != lo) attempt(lo);
  return out;
}

// Max node difference between disks built at the given depths (same grid);
// entry j compares depths[j] and depths[j + 1].
template <SmoothSystem S>
std::vector<double> depth_cauchy(const S& sys, const SplittingEstimate<Vector>& split, TransformParams params,
                                 const std::vector<std::size_t>& depths) {
  std::vector<CsDisk> disks;
  for (std::size_t n : depths) {
    params.depth = n;
    disks.push_back(center_stable_disk(sys, split, params));
  }
  std::vector<double> diffs;
  for (std::size_t j = 0; j + 1 < disks.size(); ++j) {
    double m = 0.0;
    for (std::size_t q = 0; q < disks[j].values.size(); ++q)
      m = std::max(m, (disks[j].values[q] - disks[j + 1].values[q]).norm());
    diffs.push_back(m);
  }
  return diffs;
}

// Max residual of f^ell(from-disk nodes) against the graph of `to`, over
// nodes whose image parameter lies inside the `to` domain. `to` must be based
// at f^ell of the `from` base point.
template <SmoothSystem S>
double graph_residual(const S& sys, const CsDisk& from, const CsDisk& to) {
  const int dcs = to.cs_dim(), dcu = static_cast<int>(to.cu.cols());
  detail::GraphGrid grid(dcs, dcu, to.radius, to.resolution);
  for (std::size_t q = 0; q < to.values.size(); ++q) grid.value(q) = to.values[q];
  Matrix frame(sys.dim(), sys.dim());
  frame << to.cu, to.cs;
  const Matrix coords_of = frame.inverse();
  const detail::LocalIterate<S> step(sys, from.base, from.ell);
  double worst = 0.0;
  for (std::size_t q = 0; q < from.values.size(); ++q) {
    Vector img;
    Matrix dimg;
    step.apply(from.offset(q), img, dimg);
    const Vector coords = coords_of * img;
    const Vector acs = coords.tail(dcs);
    if (acs.lpNorm<Eigen::Infinity>() > to.radius) continue;
    Vector g;
    Matrix dg;
    grid.eval(acs, g, dg);
    worst = std::max(worst, (coords.head(dcu) - g).norm());
  }
  return worst;
}

// Below this distance the roundoff component along E^cu dominates the orbit
// separation, so the pair counts as merged.
inline const double kMergeDistance = std::sqrt(std::numeric_limits<double>::epsilon());
// Contraction a pair must show before a turnaround ends its fit window.
inline constexpr double kTrackedDecades = 3.0;

struct ContractionReport {
  std::vector<double> rates;          // per node; -inf when the orbits merge
  std::vector<bool> merged;  // distance fell below kMergeDistance
  double threshold = 0.0;             // -1 / (2 ell)
  double worst_rate = -std::numeric_limits<double>::infinity();
  bool pass = false;
};

// Least-squares slope of log d(f^n y, f^n x), n = 0..iterates, for every
// disk node y other than the base point. The fit window ends when the orbits
// merge, or at the first increase after the distance has fallen by
// kTrackedDecades, where the node's offset from the true manifold starts to
// grow along E^cu.
template <SmoothSystem S>
ContractionReport verify_contraction(const S& sys, const CsDisk& disk, std::size_t iterates) {
  if (iterates < 10) throw std::invalid_argument("verify_contraction: need at least 10 iterates");
  ContractionReport rep;
  rep.threshold = -1.0 / (2.0 * static_cast<double>(disk.ell));
  std::vector<Vector> xs{disk.base};
  for (std::size_t n = 0; n < iterates; ++n) xs.push_back(sys.map(xs.back()));
  bool all = true;
  for (std::size_t q = 0; q < disk.values.size(); ++q) {
    if (q == disk.center_node) continue;
    Vector y = disk.point(sys, q);
    std::vector<double> ns, logs;
    bool merged = false;
    for (std::size_t n = 0; n <= iterates; ++n) {
      const double dist = sys.displacement(xs[n], y).norm();
      if (!(dist > kMergeDistance)) {
        merged = true;
        break;
      }
      if (!logs.empty() && std::log(dist) > logs.back() &&
          logs.front() - logs.back() > kTrackedDecades * std::log(10.0))
        break;
      ns.push_back(static_cast<double>(n));
      logs.push_back(std::log(dist));
      if (n < iterates) y = sys.map(y);
    }
    double rate = -std::numeric_limits<double>::infinity();
    if (ns.size() >= 2) {
      const double mn = std::accumulate(ns.begin(), ns.end(), 0.0) / static_cast<double>(ns.size());
      const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t j = 0; j < ns.size(); ++j) {
        sxy += (ns[j] - mn) * (logs[j] - ml);
        sxx += (ns[j] - mn) * (ns[j] - mn);
      }
      rate = sxy / sxx;
    }
    rep.rates.push_back(rate);
    rep.merged.push_back(merged);
    rep.worst_rate = std::max(rep.worst_rate, rate);
    all = all && (merged || rate < rep.threshold);
  }
  rep.pass = all;
  return rep;
}

// Flat disk through x along `basis` (for checks against arbitrary directions).
inline CsDisk flat_disk(const Vector& x, const Matrix& basis, double radius, std::size_t resolution = 33,
                        std::size_t ell = 1) {
  const Matrix cs = orthonormalize(basis);
  const Matrix cu = orthogonal_complement(cs);
  detail::GraphGrid grid(static_cast<int>(cs.cols()), static_cast<int>(cu.cols()), radius, resolution);
  CsDisk disk;
  disk.base = x;
  disk.radius = radius;
  disk.ell = ell;
  disk.cs = cs;
  disk.cu = cu;
  disk.resolution = resolution;
  disk.center_node = grid.center();
  for (std::size_t q = 0; q < grid.size(); ++q) {
    disk.params.push_back(grid.param(q));
    disk.values.push_back(grid.value(q));
    disk.tangent_angle.push_back(0.0);
  }
  return disk;
}

}  // namespace erglab
