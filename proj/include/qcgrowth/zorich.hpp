#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "sampling.hpp"

namespace qcg {

/// Zorich map for n = 2 or 3.
///
/// n = 2: Z(x1, t) = e^t (cos pi x1, sin pi x1), G generated by x1 -> x1 + 2.
/// n = 3: on the unit cell, the square pyramid over [-1,1]^2 with apex (0,0,1)
/// projected radially onto the upper hemisphere; neighbouring cells are
/// reflections, and odd cells land in the lower hemisphere. G is generated by
/// the translations 2e_1, 2e_2 and the half-turn u -> (2,2) - u.
class ZorichMap {
 public:
  explicit ZorichMap(int n) : n_(n) {
    if (n != 2 && n != 3) throw InvalidInput("ZorichMap: only n = 2 and n = 3 are implemented");
    std::vector<LatticeGroupElement> gens;
    if (n == 2) {
      gens.push_back(LatticeGroupElement::translate({2.0}));
      group_ = BeamGroup(2, gens, VecN{0.0}, VecN{2.0});
    } else {
      gens.push_back(LatticeGroupElement::translate({2.0, 0.0}));
      gens.push_back(LatticeGroupElement::translate({0.0, 2.0}));
      gens.push_back(LatticeGroupElement::half_turn({2.0, 2.0}));
      group_ = BeamGroup(3, gens, VecN{0.0, 0.0}, VecN{1.0, 2.0});
    }
  }

  int dim() const { return n_; }
  const BeamGroup& group() const { return group_; }
  const std::vector<LatticeGroupElement>& generators() const { return group_.generators(); }

  /// Unit-sphere parameterization of the slice at height 0.
  VecN psi(const VecN& u) const {
    if (u.dim() != n_ - 1) throw InvalidInput("ZorichMap::psi: wrong base dimension");
    if (n_ == 2) {
      const double a = std::numbers::pi * u[0];
      return VecN{std::cos(a), std::sin(a)};
    }
    bool flip = false;
    const VecN w = fold(u, flip);
    VecN p = pyramid(w);
    p *= 1.0 / norm(p);
    if (flip) p[2] = -p[2];
    return p;
  }

  VecN operator()(const BeamPoint& x) const {
    if (x.dim() != n_) throw InvalidInput("ZorichMap: dimension mismatch");
    return std::exp(x.height()) * psi(x.base());
  }

  /// |det DZ| at x. In the plane, with coordinates (x1, t), Z reverses orientation.
  double jacobian(const BeamPoint& x) const {
    const double s = x.height();
    if (n_ == 2) return std::numbers::pi * std::exp(2.0 * s);
    bool flip = false;
    const VecN p = pyramid(fold(x.base(), flip));
    const double r = norm(p);
    return std::exp(3.0 * s) * 4.0 / (r * r * r);
  }

  /// Canonical preimage in the closed fundamental set.
  BeamPoint inverse(const VecN& y) const {
    if (y.dim() != n_) throw InvalidInput("ZorichMap::inverse: dimension mismatch");
    const double r = norm(y);
    if (!(r > 0.0)) throw DomainError("ZorichMap::inverse: the origin has no preimage");
    if (!std::isfinite(r)) throw DomainError("ZorichMap::inverse: non-finite point");
    const double t = std::log(r);
    if (n_ == 2) {
      double a = std::atan2(y[1], y[0]) / std::numbers::pi;
      if (a < 0.0) a += 2.0;
      if (a >= 2.0) a -= 2.0;
      return BeamPoint(VecN{a}, t);
    }
    const double sx = y[0] / r, sy = y[1] / r;
    double sz = y[2] / r;
    const bool lower = sz < 0.0;
    if (lower) sz = -sz;
    const double lam = 1.0 / (sz + std::max(std::abs(sx), std::abs(sy)));
    double w1 = std::clamp(0.5 * (lam * sx + 1.0), 0.0, 1.0);
    double w2 = std::clamp(0.5 * (lam * sy + 1.0), 0.0, 1.0);
    if (lower) w2 = 2.0 - w2;
    return BeamPoint(VecN{w1, w2}, t);
  }

  /// Preimage of y; with a hint, the orbit representative closest to it.
  BeamPoint inverse(const VecN& y, const std::optional<BeamPoint>& hint) const {
    BeamPoint c = inverse(y);
    if (!hint) return c;
    return group_.nearest_representative(c, *hint);
  }

  double quotient_distance(const BeamPoint& a, const BeamPoint& b) const { return group_.distance(a, b); }

 private:
  /// Reflect u into the unit cell; `flip` is set for odd cells.
  static VecN fold(const VecN& u, bool& flip) {
    VecN w(2);
    long parity = 0;
    for (int i = 0; i < 2; ++i) {
      const double c = std::floor(u[i]);
      double a = u[i] - c;
      const long ci = static_cast<long>(c);
      const bool odd = (ci % 2) != 0;
      if (odd) a = 1.0 - a;
      w[i] = a;
      parity += odd ? 1 : 0;
    }
    flip = (parity % 2) != 0;
    return w;
  }

  static VecN pyramid(const VecN& w) {
    const double v1 = 2.0 * w[0] - 1.0, v2 = 2.0 * w[1] - 1.0;
    return VecN{v1, v2, 1.0 - std::max(std::abs(v1), std::abs(v2))};
  }

  int n_;
  BeamGroup group_;
};

inline VecN zorich(const ZorichMap& z, const BeamPoint& x) { return z(x); }
inline BeamPoint zorich_inverse(const ZorichMap& z, const VecN& y, const std::optional<BeamPoint>& hint = std::nullopt) {
  return z.inverse(y, hint);
}
inline VecN folding_psi(const ZorichMap& z, const VecN& u) { return z.psi(u); }

/// Max over sampled x and every generator g of |Z(g x) - Z(x)|.
inline double verify_automorphy(const ZorichMap& z, int samples, std::uint64_t seed,
                                const std::vector<LatticeGroupElement>& gens) {
  if (samples < 1) throw InvalidInput("verify_automorphy: samples must be >= 1");
  Rng rng(seed, 0);
  double worst = 0.0;
  const int m = z.dim() - 1;
  for (int k = 0; k < samples; ++k) {
    VecN u(m);
    for (int i = 0; i < m; ++i) u[i] = rng.uniform(-4.0, 4.0);
    const BeamPoint x(u, rng.uniform(-3.0, 1.0));
    const VecN zx = z(x);
    for (const auto& g : gens) {
      const VecN d = z(g.apply(x)) - zx;
      worst = std::max(worst, norm(d));
    }
  }
  return worst;
}

inline double verify_automorphy(const ZorichMap& z, int samples, std::uint64_t seed) {
  return verify_automorphy(z, samples, seed, z.generators());
}

/// Bracket [1/c, c] of |psi(u) - psi(v)| / |u - v| over random pairs inside
/// one cell; returns c.
inline double slice_lipschitz_bracket(const ZorichMap& z, int pairs, std::uint64_t seed) {
  Rng rng(seed, 1);
  const int m = z.dim() - 1;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int k = 0; k < pairs; ++k) {
    VecN u(m), v(m);
    for (int i = 0; i < m; ++i) {
      u[i] = rng.uniform();
      v[i] = rng.uniform();
    }
    const double du = distance(u, v);
    if (du < 1e-9) continue;
    const double q = distance(z.psi(u), z.psi(v)) / du;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  return std::max(hi, 1.0 / lo);
}

}  // namespace qcg
