#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "geometry.hpp"
#include "mapzoo.hpp"
#include "radius.hpp"
#include "sampling.hpp"
#include "transform.hpp"

namespace qcg {

/// Deterministic unit vectors: equally spaced angles in 2D, a Fibonacci lattice in 3D.
inline std::vector<VecN> sphere_samples(int n, int count) {
  if (count < 1) throw InvalidInput("sphere_samples: count must be positive");
  std::vector<VecN> out;
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      out.push_back(VecN{std::cos(a), std::sin(a)});
    }
    return out;
  }
  if (n == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      out.push_back(VecN{r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    return out;
  }
  throw InvalidInput("sphere_samples: n must be 2 or 3");
}

struct LinearDistortion {
  double r = 0.0;
  double L = 0.0;
  double l = 0.0;
  double H = 0.0;
};

inline std::vector<LinearDistortion> linear_distortion(const QCMap& f, const std::vector<double>& r_grid,
                                                       int sphere_count = 4096) {
  const auto dirs = sphere_samples(f.n, sphere_count);
  std::vector<LinearDistortion> out;
  for (double r : r_grid) {
    if (!(r > 0.0)) throw InvalidInput("linear_distortion: radii must be positive");
    LinearDistortion d{r, 0.0, std::numeric_limits<double>::infinity(), 0.0};
    for (const auto& e : dirs) {
      const double v = norm(f(e * r));
      d.L = std::max(d.L, v);
      d.l = std::min(d.l, v);
    }
    d.H = d.L / d.l;
    out.push_back(d);
  }
  return out;
}

/// Boundary map on the unit sphere.
using SphereMap = std::function<VecN(const VecN&)>;

struct GenDerivative {
  std::vector<double> r;
  std::vector<double> rho;
  /// sup over the samples of |g_k - g_{k-1}|, one entry per k >= 1.
  std::vector<double> distances;
  std::vector<VecN> directions;
  std::vector<VecN> values;  // final iterate on the samples
  SphereMap g;               // final iterate, evaluable anywhere on the sphere
  bool simple = false;
};

/// Rescalings f(r_k x) / rho_f(r_k) on the unit sphere.
inline GenDerivative gen_derivative(const QCMap& f, const std::vector<double>& r_seq, int sphere_count,
                                    const RadiusOptions& opt, double tol = 1e-2) {
  if (r_seq.size() < 2) throw InvalidInput("gen_derivative: need at least two radii");
  for (std::size_t k = 0; k < r_seq.size(); ++k) {
    if (!(r_seq[k] > 0.0)) throw InvalidInput("gen_derivative: radii must be positive");
    if (k > 0 && !(r_seq[k] < r_seq[k - 1])) throw InvalidInput("gen_derivative: radii must decrease");
  }
  GenDerivative out;
  out.directions = sphere_samples(f.n, sphere_count);
  std::vector<VecN> prev;
  for (double r : r_seq) {
    const double rho = mean_radius(f, r, opt).value;
    std::vector<VecN> cur;
    for (const auto& e : out.directions) cur.push_back(f(e * r) * (1.0 / rho));
    if (!prev.empty()) {
      double d = 0.0;
      for (std::size_t i = 0; i < cur.size(); ++i) d = std::max(d, distance(cur[i], prev[i]));
      out.distances.push_back(d);
    }
    out.r.push_back(r);
    out.rho.push_back(rho);
    prev = std::move(cur);
  }
  out.values = prev;
  const QCMap fc = f;
  const double r = out.r.back(), rho = out.rho.back();
  out.g = [fc, r, rho](const VecN& e) { return fc(e * r) * (1.0 / rho); };
  const double first = out.distances.front(), last = out.distances.back();
  out.simple = last <= tol * std::max(1.0, first) && (last <= first || last <= 1e-12);
  return out;
}

struct AsymptoticRep {
  MeanRadiusCurve rhoCurve;
  SphereMap g;
  double dExponent = 0.0;
  QCMap D;

  /// rho_f(r) by log-linear interpolation of the stored curve.
  double rho(double r) const { return std::exp(rhoCurve.interpolate(std::log(r))); }
  /// max over sphere samples of |f(x) - D(x)| / (|f(x)| + |D(x)|) on |x| = r.
  double residual(const QCMap& f, double r, int sphere_count = 256) const {
    double worst = 0.0;
    for (const auto& e : sphere_samples(f.n, sphere_count)) {
      const VecN a = f(e * r), b = D(e * r);
      worst = std::max(worst, norm(a - b) / (norm(a) + norm(b)));
    }
    return worst;
  }
};

inline SphereMap identity_direction_map() {
  return [](const VecN& e) { return e; };
}

inline AsymptoticRep asymptotic_representative(const QCMap& f, SphereMap g, double d, const std::vector<double>& t_grid,
                                               const RadiusOptions& opt) {
  if (!g) throw InvalidInput("asymptotic_representative: boundary map missing");
  if (t_grid.size() < 2) throw InvalidInput("asymptotic_representative: need at least two grid points");
  for (const auto& e : sphere_samples(f.n, 64))
    if (!(norm(g(e)) > 0.0)) throw DegenerateError("asymptotic_representative: g vanishes on the sphere");
  AsymptoticRep rep;
  rep.rhoCurve = log_transform_curve(f, t_grid, opt);
  rep.g = g;
  rep.dExponent = d;
  const auto curve = rep.rhoCurve;
  QCMap D;
  D.n = f.n;
  D.M = f.M;
  D.label = "D[" + f.label + "]";
  D.eval = [curve, g](const VecN& x) {
    const double r = norm(x);
    if (r == 0.0) return VecN(x.dim());
    return g(x * (1.0 / r)) * std::exp(curve.interpolate(std::log(r)));
  };
  rep.D = D;
  return rep;
}

struct SampledBiLipschitz {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double L = 0.0;
  long pairs = 0;
};

/// Ratios |f~x - f~y| / |x - y| in the quotient metric over random nearby pairs
/// with heights in [t_lo, t_hi].
inline SampledBiLipschitz sampled_bi_lipschitz(const TransformedMap& tm, double t_lo, double t_hi, long pairs,
                                               std::uint64_t seed, double min_scale = 1e-3, double max_scale = 0.5) {
  if (!(t_lo < t_hi) || !(t_hi < tm.M())) throw DomainError("sampled_bi_lipschitz: heights must lie below M");
  if (pairs < 1) throw InvalidInput("sampled_bi_lipschitz: need pairs");
  const int n = tm.dim();
  const auto& z = tm.zorich();
  const VecN flo = z.group().fundamental_lo(), fhi = z.group().fundamental_hi();
  Rng rng(seed, 0);
  SampledBiLipschitz out{std::numeric_limits<double>::infinity(), 0.0, 0.0, 0};
  const double lmin = std::log(min_scale), lmax = std::log(max_scale);
  while (out.pairs < pairs) {
    VecN u(n - 1);
    for (int i = 0; i < n - 1; ++i) u[i] = rng.uniform(flo[i], fhi[i]);
    const BeamPoint x(u, rng.uniform(t_lo, t_hi));
    const VecN dir = rng.in_ball(n);
    const double nd = norm(dir);
    if (nd < 1e-6) continue;
    BeamPoint y = x;
    const double s = std::exp(rng.uniform(lmin, lmax)) / nd;
    for (int i = 0; i < n; ++i) y.vec()[i] += s * dir[i];
    if (y.height() < t_lo || y.height() > t_hi) continue;
    const double d = z.quotient_distance(x, y);
    if (!(d > 0.0)) continue;
    const BeamPoint fx = tm(x);
    const double r = z.quotient_distance(fx, tm(y, fx)) / d;
    out.min_ratio = std::min(out.min_ratio, r);
    out.max_ratio = std::max(out.max_ratio, r);
    ++out.pairs;
  }
  out.L = std::max(out.max_ratio, 1.0 / out.min_ratio);
  return out;
}

}  // namespace qcg
