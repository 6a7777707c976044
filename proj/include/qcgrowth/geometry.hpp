#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace qcg {

inline constexpr int kMaxDim = 8;

/// Fixed-capacity real vector with runtime dimension.
class VecN {
 public:
  VecN() = default;
  explicit VecN(int n) : n_(n) {
    if (n < 0 || n > kMaxDim) throw InvalidInput("VecN: dimension out of range");
  }
  VecN(std::initializer_list<double> xs) : n_(static_cast<int>(xs.size())) {
    if (n_ > kMaxDim) throw InvalidInput("VecN: dimension out of range");
    std::copy(xs.begin(), xs.end(), c_.begin());
  }
  static VecN from(std::span<const double> xs) {
    VecN v(static_cast<int>(xs.size()));
    std::copy(xs.begin(), xs.end(), v.c_.begin());
    return v;
  }
  static VecN unit(int n, int i) {
    VecN v(n);
    v[i] = 1.0;
    return v;
  }

  int dim() const { return n_; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coords() const { return {c_.data(), static_cast<std::size_t>(n_)}; }
  std::span<double> coords() { return {c_.data(), static_cast<std::size_t>(n_)}; }

  VecN& operator+=(const VecN& o) {
    for (int i = 0; i < n_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  VecN& operator-=(const VecN& o) {
    for (int i = 0; i < n_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  VecN& operator*=(double s) {
    for (int i = 0; i < n_; ++i) c_[i] *= s;
    return *this;
  }
  friend VecN operator+(VecN a, const VecN& b) { return a += b; }
  friend VecN operator-(VecN a, const VecN& b) { return a -= b; }
  friend VecN operator*(VecN a, double s) { return a *= s; }
  friend VecN operator*(double s, VecN a) { return a *= s; }
  friend VecN operator-(VecN a) { return a *= -1.0; }
  friend bool operator==(const VecN& a, const VecN& b) {
    if (a.n_ != b.n_) return false;
    for (int i = 0; i < a.n_; ++i)
      if (a.c_[i] != b.c_[i]) return false;
    return true;
  }

  bool finite() const {
    for (int i = 0; i < n_; ++i)
      if (!std::isfinite(c_[i])) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> c_{};
  int n_ = 0;
};

inline double dot(const VecN& a, const VecN& b) {
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm(const VecN& a) { return std::sqrt(dot(a, a)); }
inline double distance(const VecN& a, const VecN& b) { return norm(a - b); }

/// Point of the beam Q x R: base coordinates in R^{n-1} and a height.
/// Stored as a single n-vector whose last entry is the height.
class BeamPoint {
 public:
  BeamPoint() = default;
  explicit BeamPoint(VecN full) : p_(full) {
    if (full.dim() < 2) throw InvalidInput("BeamPoint: dimension must be >= 2");
  }
  BeamPoint(const VecN& base, double height) : p_(base.dim() + 1) {
    for (int i = 0; i < base.dim(); ++i) p_[i] = base[i];
    p_[base.dim()] = height;
  }

  int dim() const { return p_.dim(); }
  double height() const { return p_[p_.dim() - 1]; }
  double& height() { return p_[p_.dim() - 1]; }
  double base(int i) const { return p_[i]; }
  double& base(int i) { return p_[i]; }
  VecN base() const {
    VecN b(p_.dim() - 1);
    for (int i = 0; i < b.dim(); ++i) b[i] = p_[i];
    return b;
  }
  const VecN& vec() const { return p_; }
  VecN& vec() { return p_; }

 private:
  VecN p_;
};

inline double distance(const BeamPoint& a, const BeamPoint& b) { return distance(a.vec(), b.vec()); }

// ---------------------------------------------------------------------------
// Small dense matrices

/// Row-major square matrix of dimension <= kMaxDim.
class SmallMat {
 public:
  SmallMat() = default;
  explicit SmallMat(int n) : n_(n) {
    if (n < 0 || n > kMaxDim) throw InvalidInput("SmallMat: dimension out of range");
  }
  static SmallMat identity(int n) {
    SmallMat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  int dim() const { return n_; }
  double& operator()(int r, int c) { return a_[static_cast<std::size_t>(r * kMaxDim + c)]; }
  double operator()(int r, int c) const { return a_[static_cast<std::size_t>(r * kMaxDim + c)]; }

  VecN apply(const VecN& v) const {
    VecN out(n_);
    for (int r = 0; r < n_; ++r) {
      double s = 0.0;
      for (int c = 0; c < n_; ++c) s += (*this)(r, c) * v[c];
      out[r] = s;
    }
    return out;
  }
  friend SmallMat operator*(const SmallMat& a, const SmallMat& b) {
    SmallMat m(a.n_);
    for (int r = 0; r < a.n_; ++r)
      for (int c = 0; c < a.n_; ++c) {
        double s = 0.0;
        for (int k = 0; k < a.n_; ++k) s += a(r, k) * b(k, c);
        m(r, c) = s;
      }
    return m;
  }
  SmallMat transposed() const {
    SmallMat m(n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) m(r, c) = (*this)(c, r);
    return m;
  }

 private:
  std::array<double, kMaxDim * kMaxDim> a_{};
  int n_ = 0;
};

/// Determinant by LU with partial pivoting.
inline double determinant(SmallMat m) {
  const int n = m.dim();
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(m(r, k)) > std::abs(m(piv, k))) piv = r;
    if (m(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(m(k, c), m(piv, c));
      det = -det;
    }
    det *= m(k, k);
    for (int r = k + 1; r < n; ++r) {
      const double f = m(r, k) / m(k, k);
      for (int c = k; c < n; ++c) m(r, c) -= f * m(k, c);
    }
  }
  return det;
}

// ---------------------------------------------------------------------------
// Generalized cross product

namespace detail {

inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

inline double det3(const std::array<double, 9>& m) {
  return m[0] * det2(m[4], m[5], m[7], m[8]) - m[1] * det2(m[3], m[5], m[6], m[8]) +
         m[2] * det2(m[3], m[4], m[6], m[7]);
}

}  // namespace detail

/// Formal determinant with symbolic top row e_1..e_n and rows v_1..v_{n-1}.
/// The result is orthogonal to every v_i and its length is the (n-1)-volume
/// of the parallelepiped they span.
inline VecN pi(std::span<const VecN> vs) {
  const int n = static_cast<int>(vs.size()) + 1;
  if (n < 2 || n > kMaxDim) throw InvalidInput("pi: need between 1 and kMaxDim-1 vectors");
  for (const auto& v : vs)
    if (v.dim() != n) throw InvalidInput("pi: every input must have dimension (count + 1)");

  VecN out(n);
  switch (n) {
    case 2:
      out[0] = vs[0][1];
      out[1] = -vs[0][0];
      return out;
    case 3: {
      const VecN& a = vs[0];
      const VecN& b = vs[1];
      out[0] = a[1] * b[2] - a[2] * b[1];
      out[1] = a[2] * b[0] - a[0] * b[2];
      out[2] = a[0] * b[1] - a[1] * b[0];
      return out;
    }
    case 4: {
      for (int col = 0; col < 4; ++col) {
        std::array<double, 9> minor{};
        for (int r = 0; r < 3; ++r) {
          int k = 0;
          for (int c = 0; c < 4; ++c)
            if (c != col) minor[static_cast<std::size_t>(r * 3 + k++)] = vs[static_cast<std::size_t>(r)][c];
        }
        out[col] = ((col % 2 == 0) ? 1.0 : -1.0) * detail::det3(minor);
      }
      return out;
    }
    default: {
      for (int col = 0; col < n; ++col) {
        SmallMat minor(n - 1);
        for (int r = 0; r < n - 1; ++r) {
          int k = 0;
          for (int c = 0; c < n; ++c)
            if (c != col) minor(r, k++) = vs[static_cast<std::size_t>(r)][c];
        }
        out[col] = ((col % 2 == 0) ? 1.0 : -1.0) * determinant(minor);
      }
      return out;
    }
  }
}

inline VecN pi(std::initializer_list<VecN> vs) { return pi(std::span<const VecN>(vs.begin(), vs.size())); }

// ---------------------------------------------------------------------------
// l^p estimate between the (n-1)- and n-norms

struct LpBound {
  double lhs = 0.0;  // sum x_i^n
  double rhs = 0.0;  // N^{1/(1-n)} (sum x_i^{n-1})^{n/(n-1)}
};

inline LpBound lp_bound(std::span<const double> x, int n) {
  if (x.empty()) throw InvalidInput("lp_bound: empty vector");
  if (n < 2) throw InvalidInput("lp_bound: n must be >= 2");
  const double dn = n;
  double sn = 0.0;
  double sm = 0.0;
  for (double xi : x) {
    if (!(xi >= 0.0)) throw InvalidInput("lp_bound: entries must be nonnegative");
    sn += std::pow(xi, dn);
    sm += std::pow(xi, dn - 1.0);
  }
  const double count = static_cast<double>(x.size());
  return {sn, std::pow(count, 1.0 / (1.0 - dn)) * std::pow(sm, dn / (dn - 1.0))};
}

/// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
  if (n < 2) throw InvalidInput("unit_ball_volume: n must be >= 2");
  if (n == 2) return std::numbers::pi;
  if (n == 3) return 4.0 * std::numbers::pi / 3.0;
  const double h = 0.5 * n;
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

// ---------------------------------------------------------------------------
// Slice subdivision S_t = Q x [t0, t0 + t]

/// Extent of the closed base cell Q = [0,1]^{n-2} x [0,2] along axis i.
inline double base_extent(int n, int axis) { return axis == n - 2 ? 2.0 : 1.0; }

/// Box P_i = T_i x [t0, t0 + t] with T_i an axis-aligned (n-1)-cube.
struct BoxP {
  int index = 0;
  VecN lower;  // lower corner of T_i, dimension n-1
  double side = 0.0;
  double t0 = 0.0;
  double height = 0.0;

  int dim() const { return lower.dim() + 1; }
  double base_volume() const { return std::pow(side, lower.dim()); }
  double volume() const { return base_volume() * height; }
  BeamPoint centroid() const {
    VecN c = lower;
    for (int i = 0; i < c.dim(); ++i) c[i] += 0.5 * side;
    return BeamPoint(c, t0 + 0.5 * height);
  }
  /// Point with box-local coordinates s in [0,1]^n.
  BeamPoint at(const VecN& s) const {
    VecN b = lower;
    for (int i = 0; i < b.dim(); ++i) b[i] += s[i] * side;
    return BeamPoint(b, t0 + s[b.dim()] * height);
  }
};

/// Number of cubes per unit length, floor(1/t).
inline long cubes_per_unit(double t) { return static_cast<long>(std::floor(1.0 / t)); }

/// Box count N of the subdivision (2 floor(1/t)^{n-1}) without building the boxes.
inline long subdivision_count(double t, int n) {
  if (!(t > 0.0 && t <= 0.5)) throw InvalidInput("subdivision_count: t must lie in (0, 1/2]");
  if (n < 2 || n > kMaxDim) throw InvalidInput("subdivision_count: bad dimension");
  const long k = cubes_per_unit(t);
  long count = 2 * k;
  for (int i = 0; i < n - 2; ++i) count *= k;
  return count;
}

inline std::vector<BoxP> subdivide_slice(double t0, double t, int n) {
  const long total = subdivision_count(t, n);
  const long k = cubes_per_unit(t);
  const double side = 1.0 / static_cast<double>(k);
  const int m = n - 1;

  std::vector<long> per_axis(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) per_axis[static_cast<std::size_t>(i)] = (i == m - 1) ? 2 * k : k;

  std::vector<BoxP> boxes;
  boxes.reserve(static_cast<std::size_t>(total));
  std::vector<long> idx(static_cast<std::size_t>(m), 0);
  for (long b = 0; b < total; ++b) {
    BoxP box;
    box.index = static_cast<int>(b);
    box.lower = VecN(m);
    for (int i = 0; i < m; ++i) box.lower[i] = static_cast<double>(idx[static_cast<std::size_t>(i)]) * side;
    box.side = side;
    box.t0 = t0;
    box.height = t;
    boxes.push_back(box);
    for (int i = m - 1; i >= 0; --i) {
      auto& v = idx[static_cast<std::size_t>(i)];
      if (++v < per_axis[static_cast<std::size_t>(i)]) break;
      v = 0;
    }
  }
  return boxes;
}

// ---------------------------------------------------------------------------
// Automorphy groups acting on base coordinates

/// Isometry u -> O u + translation of the base, extended to the beam by
/// leaving the height untouched.
struct LatticeGroupElement {
  VecN translation;
  SmallMat orthogonal;

  static LatticeGroupElement identity(int base_dim) {
    return {VecN(base_dim), SmallMat::identity(base_dim)};
  }
  static LatticeGroupElement translate(const VecN& tau) {
    return {tau, SmallMat::identity(tau.dim())};
  }
  /// Point reflection u -> c - u.
  static LatticeGroupElement half_turn(const VecN& c) {
    SmallMat m(c.dim());
    for (int i = 0; i < c.dim(); ++i) m(i, i) = -1.0;
    return {c, m};
  }

  int base_dim() const { return translation.dim(); }

  VecN apply_base(const VecN& u) const { return orthogonal.apply(u) + translation; }
  BeamPoint apply(const BeamPoint& x) const { return BeamPoint(apply_base(x.base()), x.height()); }

  LatticeGroupElement inverse() const {
    SmallMat ot = orthogonal.transposed();
    return {-ot.apply(translation), ot};
  }
  /// (this o other)(u) = this(other(u))
  LatticeGroupElement compose(const LatticeGroupElement& other) const {
    return {orthogonal.apply(other.translation) + translation, orthogonal * other.orthogonal};
  }
  bool is_translation() const {
    const int m = base_dim();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        if (orthogonal(r, c) != (r == c ? 1.0 : 0.0)) return false;
    return true;
  }
  double translation_sup() const {
    double s = 0.0;
    for (int i = 0; i < base_dim(); ++i) s = std::max(s, std::abs(translation[i]));
    return s;
  }
};

/// Finite window of a discrete group generated by lattice isometries, with
/// period reduction and a fundamental box for canonical representatives.
class BeamGroup {
 public:
  BeamGroup() = default;

  /// `periods_bound` is the enumeration radius in lattice periods.
  BeamGroup(int n, std::vector<LatticeGroupElement> generators, VecN fund_lo, VecN fund_hi,
            double periods_bound = 2.0)
      : n_(n), gens_(std::move(generators)), lo_(fund_lo), hi_(fund_hi) {
    if (n < 2 || n > kMaxDim) throw InvalidInput("BeamGroup: bad dimension");
    const int m = n - 1;
    if (lo_.dim() != m || hi_.dim() != m) throw InvalidInput("BeamGroup: fundamental box has wrong dimension");
    for (const auto& g : gens_)
      if (g.base_dim() != m) throw InvalidInput("BeamGroup: generator has wrong dimension");

    period_ = VecN(m);
    for (const auto& g : gens_) {
      if (!g.is_translation()) continue;
      int axis = -1;
      int nonzero = 0;
      for (int i = 0; i < m; ++i)
        if (g.translation[i] != 0.0) {
          axis = i;
          ++nonzero;
        }
      if (nonzero == 1) {
        const double p = std::abs(g.translation[axis]);
        if (period_[axis] == 0.0 || p < period_[axis]) period_[axis] = p;
      }
    }
    double unit = 0.0;
    for (int i = 0; i < m; ++i) unit = std::max(unit, period_[i]);
    if (unit == 0.0) unit = 1.0;
    enumerate(periods_bound * unit);
  }

  /// Group generated by `generators` with no fundamental box: every coordinate
  /// with a translation period reduces into [0, period).
  static BeamGroup from_generators(int n, std::vector<LatticeGroupElement> generators) {
    const int m = n - 1;
    VecN lo(m), hi(m);
    BeamGroup probe(n, generators, lo, hi, 0.0);
    for (int i = 0; i < m; ++i)
      hi[i] = probe.period_[i] > 0.0 ? probe.period_[i] : std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i)
      if (probe.period_[i] == 0.0) lo[i] = -std::numeric_limits<double>::infinity();
    return BeamGroup(n, std::move(generators), lo, hi);
  }

  int dim() const { return n_; }
  const std::vector<LatticeGroupElement>& generators() const { return gens_; }
  const std::vector<LatticeGroupElement>& elements() const { return elems_; }
  const VecN& fundamental_lo() const { return lo_; }
  const VecN& fundamental_hi() const { return hi_; }

  bool in_fundamental(const VecN& u, double tol = 1e-12) const {
    for (int i = 0; i < u.dim(); ++i)
      if (u[i] < lo_[i] - tol || u[i] > hi_[i] + tol) return false;
    return true;
  }

  /// Returns g with g(x) in the fundamental box (when one is reachable).
  LatticeGroupElement canonicalizer(const VecN& u) const {
    const int m = n_ - 1;
    VecN shift(m);
    for (int i = 0; i < m; ++i)
      if (period_[i] > 0.0) shift[i] = -period_[i] * std::floor(u[i] / period_[i]);
    LatticeGroupElement red = LatticeGroupElement::translate(shift);
    const VecN r = red.apply_base(u);
    if (in_fundamental(r, 0.0)) return red;

    const LatticeGroupElement* best = nullptr;
    double best_excess = std::numeric_limits<double>::infinity();
    for (const auto& e : elems_) {
      const VecN c = e.apply_base(r);
      double excess = 0.0;
      for (int i = 0; i < m; ++i) excess += std::max(0.0, lo_[i] - c[i]) + std::max(0.0, c[i] - hi_[i]);
      if (excess < best_excess) {
        best_excess = excess;
        best = &e;
        if (excess == 0.0) break;
      }
    }
    return best ? best->compose(red) : red;
  }

  BeamPoint canonical(const BeamPoint& x) const { return canonicalizer(x.base()).apply(x); }

  double distance(const BeamPoint& x, const BeamPoint& y) const {
    if (x.dim() != n_ || y.dim() != n_) throw InvalidInput("quotient distance: dimension mismatch");
    const BeamPoint cx = canonical(x);
    const BeamPoint cy = canonical(y);
    double best = distance_raw(cx, cy);
    for (const auto& e : elems_) best = std::min(best, distance_raw(cx, e.apply(cy)));
    return best;
  }

  /// Orbit point of y closest (Euclidean) to `hint`.
  BeamPoint nearest_representative(const BeamPoint& y, const BeamPoint& hint) const {
    const LatticeGroupElement gh = canonicalizer(hint.base());
    const BeamPoint ch = gh.apply(hint);
    const BeamPoint cy = canonical(y);
    BeamPoint best = cy;
    double bd = distance_raw(ch, cy);
    for (const auto& e : elems_) {
      const BeamPoint c = e.apply(cy);
      const double d = distance_raw(ch, c);
      if (d < bd) {
        bd = d;
        best = c;
      }
    }
    return gh.inverse().apply(best);
  }

 private:
  static double distance_raw(const BeamPoint& a, const BeamPoint& b) { return qcg::distance(a.vec(), b.vec()); }

  void enumerate(double bound) {
    const int m = n_ - 1;
    auto key = [m](const LatticeGroupElement& g) {
      std::vector<long long> k;
      for (int i = 0; i < m; ++i) k.push_back(std::llround(g.translation[i] * 1e6));
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) k.push_back(std::llround(g.orthogonal(r, c) * 1e6));
      return k;
    };
    std::vector<LatticeGroupElement> steps;
    for (const auto& g : gens_) {
      steps.push_back(g);
      steps.push_back(g.inverse());
    }
    std::map<std::vector<long long>, std::size_t> seen;
    elems_.clear();
    const auto id = LatticeGroupElement::identity(m);
    seen[key(id)] = 0;
    elems_.push_back(id);
    for (std::size_t head = 0; head < elems_.size(); ++head) {
      for (const auto& s : steps) {
        LatticeGroupElement g = s.compose(elems_[head]);
        if (g.translation_sup() > bound + 1e-9) continue;
        auto k = key(g);
        if (seen.count(k)) continue;
        seen[k] = elems_.size();
        elems_.push_back(g);
      }
    }
  }

  int n_ = 0;
  std::vector<LatticeGroupElement> gens_;
  VecN lo_, hi_, period_;
  std::vector<LatticeGroupElement> elems_;
};

/// Quotient of the Euclidean metric by the group generated by `generators`.
/// An empty generator list gives the plain Euclidean distance.
inline double quotient_distance(const BeamPoint& x, const BeamPoint& y,
                                const std::vector<LatticeGroupElement>& generators) {
  if (x.dim() != y.dim()) throw InvalidInput("quotient_distance: dimension mismatch");
  if (generators.empty()) return distance(x, y);
  return BeamGroup::from_generators(x.dim(), generators).distance(x, y);
}

}  // namespace qcg
