#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "koch.hpp"
#include "zorich.hpp"

namespace qcg {

/// Quasiconformal map fixing 0, defined on B(0, e^M).
struct QCMap {
  int n = 2;
  std::string label;
  double M = 0.0;
  std::map<std::string, double> params;
  std::optional<double> dilatation_hint;

  std::function<VecN(const VecN&)> eval;
  /// Analytic Jacobian determinant; empty means finite differences.
  std::function<double(const VecN&)> jacobian_det;
  /// Explicit Zorich transform, when one is known in closed form.
  std::function<BeamPoint(const BeamPoint&)> beam;
  /// Closed-form vol f(B(0, r)), when known.
  std::function<double(double)> exact_volume;

  bool in_domain(const VecN& x) const { return std::isinf(M) || norm(x) < std::exp(M); }

  VecN operator()(const VecN& x) const {
    if (x.dim() != n) throw InvalidInput("QCMap: dimension mismatch");
    if (!in_domain(x)) throw DomainError("QCMap " + label + ": point outside B(0, e^M)");
    return eval(x);
  }

  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_det); }

  double jacobian(const VecN& x) const {
    if (jacobian_det) return jacobian_det(x);
    return fd_jacobian(x);
  }

  /// Central differences with step 1e-6 |x|.
  double fd_jacobian(const VecN& x) const {
    const double h = 1e-6 * std::max(norm(x), 1e-300);
    SmallMat m(n);
    for (int j = 0; j < n; ++j) {
      VecN xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const VecN d = (eval(xp) - eval(xm)) * (0.5 / h);
      for (int i = 0; i < n; ++i) m(i, j) = d[i];
    }
    return determinant(m);
  }

  std::string describe() const {
    std::ostringstream os;
    os << label << "\tn=" << n << "\tM=" << M;
    for (const auto& [k, v] : params) os << '\t' << k << '=' << v;
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Radial maps

struct RadialProfile {
  std::string label;
  std::function<double(double)> h;
  std::function<double(double)> hprime;  // may be empty

  double log_transform(double t) const { return std::log(h(std::exp(t))); }
  double derivative(double r) const {
    if (hprime) return hprime(r);
    const double e = 1e-6 * r;
    return (h(r + e) - h(r - e)) / (2.0 * e);
  }

  /// Range [C1, C2] of the slope of the log transform on a grid; throws if h is
  /// not strictly increasing there.
  std::pair<double, double> slope_bounds(double t_lo, double t_hi, int points = 200) const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double prev_h = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= points; ++k) {
      const double t = t_lo + (t_hi - t_lo) * k / points;
      const double r = std::exp(t);
      const double hv = h(r);
      if (!(hv > prev_h) || !(hv > 0.0)) throw InvalidInput("RadialProfile " + label + ": h is not strictly increasing");
      prev_h = hv;
      const double slope = r * derivative(r) / hv;
      lo = std::min(lo, slope);
      hi = std::max(hi, slope);
    }
    return {lo, hi};
  }
};

inline RadialProfile power_profile(double d) {
  if (!(d > 0.0)) throw InvalidInput("power_profile: d must be positive");
  return {"power", [d](double r) { return std::pow(r, d); }, [d](double r) { return d * std::pow(r, d - 1.0); }};
}

/// h(r) = r^d / ln(1/r) on (0, 1).
inline RadialProfile log_corrected_profile(double d) {
  if (!(d > 0.0)) throw InvalidInput("log_corrected_profile: d must be positive");
  return {"log-corrected",
          [d](double r) { return std::pow(r, d) / std::log(1.0 / r); },
          [d](double r) {
            const double L = std::log(1.0 / r);
            return std::pow(r, d - 1.0) / L * (d + 1.0 / L);
          }};
}

/// Complex dilatation of the planar radial map at radius r.
inline double radial_dilatation(const RadialProfile& p, double r) {
  const double q = r * p.derivative(r) / p.h(r);
  return (q - 1.0) / (q + 1.0);
}

inline QCMap radial_map(const RadialProfile& profile, int n, double M = 0.0, std::string label = "") {
  if (n < 2 || n > kMaxDim) throw InvalidInput("radial_map: bad dimension");
  profile.slope_bounds(std::min(M, 0.0) - 60.0, std::min(M, 0.0) - 1e-3);
  QCMap f;
  f.n = n;
  f.M = M;
  f.label = label.empty() ? profile.label : label;
  f.eval = [profile, n](const VecN& x) {
    const double r = norm(x);
    if (r == 0.0) return VecN(n);
    return x * (profile.h(r) / r);
  };
  f.jacobian_det = [profile, n](const VecN& x) {
    const double r = norm(x);
    return profile.derivative(r) * std::pow(profile.h(r) / r, n - 1);
  };
  f.beam = [profile](const BeamPoint& x) {
    BeamPoint y = x;
    y.height() = profile.log_transform(x.height());
    return y;
  };
  const double omega = unit_ball_volume(n);
  f.exact_volume = [profile, n, omega](double r) { return omega * std::pow(profile.h(r), n); };
  const double mu = std::abs(radial_dilatation(profile, std::exp(std::min(M, 0.0) - 1.0)));
  f.dilatation_hint = (1.0 + mu) / (1.0 - mu);
  return f;
}

// ---------------------------------------------------------------------------
// Linear maps

inline QCMap linear_diag_map(const VecN& diag, std::string label = "diag") {
  const int n = diag.dim();
  double det = 1.0, smax = 0.0, smin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) throw InvalidInput("linear_diag_map: entries must be positive");
    det *= diag[i];
    smax = std::max(smax, diag[i]);
    smin = std::min(smin, diag[i]);
  }
  QCMap f;
  f.n = n;
  f.M = 0.0;
  f.label = std::move(label);
  for (int i = 0; i < n; ++i) f.params["a" + std::to_string(i + 1)] = diag[i];
  f.eval = [diag](const VecN& x) {
    VecN y = x;
    for (int i = 0; i < x.dim(); ++i) y[i] *= diag[i];
    return y;
  };
  f.jacobian_det = [det](const VecN&) { return det; };
  f.exact_volume = [det, n](double r) { return det * unit_ball_volume(n) * std::pow(r, n); };
  f.dilatation_hint = smax / smin;
  return f;
}

inline QCMap identity_map(int n) {
  QCMap f;
  f.n = n;
  f.M = 0.0;
  f.label = "identity";
  f.eval = [](const VecN& x) { return x; };
  f.jacobian_det = [](const VecN&) { return 1.0; };
  f.beam = [](const BeamPoint& x) { return x; };
  f.exact_volume = [n](double r) { return unit_ball_volume(n) * std::pow(r, n); };
  f.dilatation_hint = 1.0;
  return f;
}

inline QCMap scalar_map(int n, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInput("scalar_map: lambda must be positive");
  QCMap f;
  f.n = n;
  f.M = 0.0;
  f.label = "scalar";
  f.params["lambda"] = lambda;
  f.eval = [lambda](const VecN& x) { return x * lambda; };
  const double det = std::pow(lambda, n);
  f.jacobian_det = [det](const VecN&) { return det; };
  const double shift = std::log(lambda);
  f.beam = [shift](const BeamPoint& x) {
    BeamPoint y = x;
    y.height() += shift;
    return y;
  };
  f.exact_volume = [det, n](double r) { return det * unit_ball_volume(n) * std::pow(r, n); };
  f.dilatation_hint = 1.0;
  return f;
}

/// f(r e^{i theta}) = r e^{i(theta + c ln r)}.
inline QCMap spiral_map(double c) {
  QCMap f;
  f.n = 2;
  f.M = 0.0;
  f.label = "spiral";
  f.params["c"] = c;
  f.eval = [c](const VecN& x) {
    const double r = norm(x);
    if (r == 0.0) return VecN(2);
    const double a = c * std::log(r);
    const double ca = std::cos(a), sa = std::sin(a);
    return VecN{ca * x[0] - sa * x[1], sa * x[0] + ca * x[1]};
  };
  f.jacobian_det = [](const VecN&) { return 1.0; };
  f.beam = [c](const BeamPoint& x) {
    double u = x.base(0) + c * x.height() / std::numbers::pi;
    u -= 2.0 * std::floor(0.5 * u);
    return BeamPoint(VecN{u}, x.height());
  };
  f.exact_volume = [](double r) { return std::numbers::pi * r * r; };
  const double k = 0.5 * (std::abs(c) + std::sqrt(c * c + 4.0));
  f.dilatation_hint = k * k;
  return f;
}

// ---------------------------------------------------------------------------
// Snowflake beam

struct SnowflakeBeamSpec {
  int level = 0;
  double M = -1.0;
  int d_min = -12;
  /// Square S_d carries level min(L, |d| - |d_first|) when true, L everywhere otherwise.
  bool graded = true;

  int d_first() const { return static_cast<int>(std::ceil(std::min(M, -2.0))) - 1; }

  std::vector<int> active_squares() const {
    std::vector<int> ds;
    for (int d = d_first(); d >= d_min; --d) ds.push_back(d);
    return ds;
  }
  int level_at(int d) const {
    if (!graded) return level;
    return std::min(level, std::abs(d) - std::abs(d_first()));
  }
  double half_side(int d) const { return 0.5 / std::abs(d); }
};

namespace detail {

/// Second divided difference of exp at (a, b, c).
inline double exp_dd2(double a, double b, double c) {
  const double m = (a + b + c) / 3.0;
  const double spread = std::max({a, b, c}) - std::min({a, b, c});
  if (spread < 1e-3) {
    const double y1 = a - m, y2 = b - m, y3 = c - m;
    return 0.5 * std::exp(m) * (1.0 + (y1 * y1 + y2 * y2 + y3 * y3) / 24.0 + y1 * y2 * y3 / 60.0);
  }
  double lo = a, mid = b, hi = c;
  if (lo > mid) std::swap(lo, mid);
  if (mid > hi) std::swap(mid, hi);
  if (lo > mid) std::swap(lo, mid);
  auto dd1 = [](double x, double y) {
    const double dx = y - x;
    return dx == 0.0 ? std::exp(x) : std::exp(x) * std::expm1(dx) / dx;
  };
  return (dd1(mid, hi) - dd1(lo, mid)) / (hi - lo);
}

/// Integral of exp(2 t) over a planar triangle with vertices (x, t).
inline double integrate_exp2t(Pt2 a, Pt2 b, Pt2 c) {
  const double area = 0.5 * std::abs(orient(a, b, c));
  if (area == 0.0) return 0.0;
  return 2.0 * area * exp_dd2(2.0 * a.y, 2.0 * b.y, 2.0 * c.y);
}

/// Part of triangle below the line y = yc, as a fan of triangles.
inline void clip_below(const std::array<Pt2, 3>& tri, double yc, std::vector<std::array<Pt2, 3>>& out) {
  std::vector<Pt2> poly;
  for (int i = 0; i < 3; ++i) {
    const Pt2 p = tri[static_cast<std::size_t>(i)], q = tri[static_cast<std::size_t>((i + 1) % 3)];
    const bool pin = p.y <= yc, qin = q.y <= yc;
    if (pin) poly.push_back(p);
    if (pin != qin) {
      const double s = (yc - p.y) / (q.y - p.y);
      poly.push_back(p + s * (q - p));
    }
  }
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) out.push_back({poly[0], poly[k], poly[k + 1]});
}

}  // namespace detail

/// Zorich transform of the snowflake-beam map: identity off the squares,
/// A_d o h o A_d^{-1} on S_d.
class SnowflakeBeam {
 public:
  explicit SnowflakeBeam(SnowflakeBeamSpec spec) : spec_(spec) {
    if (spec.level < 0) throw InvalidInput("snowflake: level must be >= 0");
    if (!(spec.M < 0.0)) throw InvalidInput("snowflake: M must be negative");
    for (int l = 0; l <= spec.level; ++l) levels_.push_back(std::make_shared<SquareHomeomorphism>(l));
  }

  const SnowflakeBeamSpec& spec() const { return spec_; }
  const SquareHomeomorphism& homeomorphism(int level) const { return *levels_[static_cast<std::size_t>(level)]; }

  /// Square index d whose closed square contains the canonical point, or 0.
  int square_of(const BeamPoint& x) const {
    const double t = x.height();
    const int d = static_cast<int>(std::lround(t));
    if (d > spec_.d_first() || d < spec_.d_min) return 0;
    const double hs = spec_.half_side(d);
    if (std::abs(t - d) > hs || std::abs(canonical_u(x.base(0)) - 1.0) > hs) return 0;
    return d;
  }

  Pt2 to_local(const BeamPoint& x, int d) const {
    const double k = 2.0 * std::abs(d);
    return {k * (canonical_u(x.base(0)) - 1.0), k * (x.height() - d)};
  }
  static Pt2 to_beam(Pt2 p, int d) {
    const double k = 2.0 * std::abs(d);
    return {1.0 + p.x / k, d + p.y / k};
  }

  BeamPoint operator()(const BeamPoint& x) const {
    const int d = square_of(x);
    if (d == 0) return x;
    const Pt2 p = clamp_local(to_local(x, d));
    const Pt2 q = to_beam(homeomorphism(spec_.level_at(d))(p), d);
    const double shift = x.base(0) - canonical_u(x.base(0));
    return BeamPoint(VecN{q.x + shift}, q.y);
  }

  double jacobian(const BeamPoint& x) const {
    const int d = square_of(x);
    if (d == 0) return 1.0;
    return homeomorphism(spec_.level_at(d)).jacobian(clamp_local(to_local(x, d)));
  }

  /// Exact beam integral of pi e^{2t} over f~({t < s}) minus the same over {t < s}.
  double volume_correction(double s) const {
    const int d = static_cast<int>(std::lround(s));
    if (d > spec_.d_first() || d < spec_.d_min) return 0.0;
    const double hs = spec_.half_side(d);
    if (s <= d - hs || s >= d + hs) return 0.0;
    const double yc = 2.0 * std::abs(d) * (s - d);
    std::vector<std::array<Pt2, 3>> clipped;
    double src = 0.0, dst = 0.0;
    for (const auto& pc : homeomorphism(spec_.level_at(d)).pieces()) {
      clipped.clear();
      detail::clip_below(pc.src, yc, clipped);
      for (const auto& tri : clipped) {
        const Pt2 a = to_beam(tri[0], d), b = to_beam(tri[1], d), c = to_beam(tri[2], d);
        src += detail::integrate_exp2t(a, b, c);
        const Pt2 ia = to_beam(pc.map(tri[0]), d), ib = to_beam(pc.map(tri[1]), d), ic = to_beam(pc.map(tri[2]), d);
        dst += detail::integrate_exp2t(ia, ib, ic);
      }
    }
    return std::numbers::pi * (dst - src);
  }

 private:
  static double canonical_u(double u) { return u - 2.0 * std::floor(0.5 * u); }
  static Pt2 clamp_local(Pt2 p) { return {std::clamp(p.x, -1.0, 1.0), std::clamp(p.y, -1.0, 1.0)}; }

  SnowflakeBeamSpec spec_;
  std::vector<std::shared_ptr<SquareHomeomorphism>> levels_;
};

/// Planar map f = Z o f~ o Z^{-1} for the snowflake-beam transform f~.
inline QCMap snowflake_beam_map(const SnowflakeBeamSpec& spec) {
  auto beam = std::make_shared<SnowflakeBeam>(spec);
  auto z = std::make_shared<ZorichMap>(2);
  QCMap f;
  f.n = 2;
  f.M = spec.M;
  f.label = "snowflake";
  f.params["L"] = spec.level;
  f.params["d_min"] = spec.d_min;
  f.params["graded"] = spec.graded ? 1.0 : 0.0;
  f.eval = [beam, z](const VecN& y) {
    if (norm(y) == 0.0) return VecN(2);
    const BeamPoint x = z->inverse(y);
    return (*z)((*beam)(x));
  };
  f.jacobian_det = [beam, z](const VecN& y) {
    const BeamPoint x = z->inverse(y);
    const BeamPoint fx = (*beam)(x);
    return beam->jacobian(x) * z->jacobian(x) / z->jacobian(fx);
  };
  f.beam = [beam](const BeamPoint& x) { return (*beam)(x); };
  f.exact_volume = [beam](double r) {
    const double s = std::log(r);
    return std::numbers::pi * r * r + beam->volume_correction(s);
  };
  double k = 1.0;
  for (int d : spec.active_squares()) k = std::max(k, beam->homeomorphism(spec.level_at(d)).max_dilatation());
  f.dilatation_hint = k;
  return f;
}

// ---------------------------------------------------------------------------
// Catalog

struct ZooEntry {
  std::string label;
  int n;
  double M;
  std::string schema;
};

inline std::vector<ZooEntry> zoo_catalog() {
  return {
      {"identity", 0, 0.0, "-"},
      {"scalar", 0, 0.0, "lambda (default 0.5)"},
      {"diag", 0, 0.0, "a1..an (default 1,4 in 2D; 1,2,4 in 3D)"},
      {"power", 0, 0.0, "d (default 2)"},
      {"log-corrected", 0, -1.0, "d (default 2)"},
      {"spiral", 2, 0.0, "c (default 1)"},
      {"snowflake", 2, -1.0, "L (0..4), d_min (default -12), graded (default 1)"},
  };
}

inline std::string list_zoo() {
  std::ostringstream os;
  for (const auto& e : zoo_catalog())
    os << e.label << '\t' << (e.n == 0 ? std::string("2,3") : std::to_string(e.n)) << '\t' << e.M << '\t' << e.schema << '\n';
  return os.str();
}

inline QCMap make_map(const std::string& label, int n, const std::map<std::string, double>& p = {}) {
  auto get = [&](const std::string& k, double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
  };
  if (n != 2 && n != 3) throw InvalidInput("make_map: n must be 2 or 3");
  if (label == "identity") return identity_map(n);
  if (label == "scalar" || label == "half") {
    QCMap f = scalar_map(n, get("lambda", 0.5));
    return f;
  }
  if (label == "diag") {
    VecN a(n);
    for (int i = 0; i < n; ++i) a[i] = get("a" + std::to_string(i + 1), n == 2 ? (i == 0 ? 1.0 : 4.0) : std::pow(2.0, i));
    return linear_diag_map(a);
  }
  if (label == "power") {
    const double d = get("d", 2.0);
    QCMap f = radial_map(power_profile(d), n, 0.0, "power");
    f.params["d"] = d;
    return f;
  }
  if (label == "log-corrected") {
    const double d = get("d", 2.0);
    QCMap f = radial_map(log_corrected_profile(d), n, -1.0, "log-corrected");
    f.params["d"] = d;
    return f;
  }
  if (label == "spiral") {
    if (n != 2) throw InvalidInput("spiral map is planar only");
    return spiral_map(get("c", 1.0));
  }
  if (label == "snowflake") {
    if (n != 2) throw InvalidInput("snowflake map is planar only");
    SnowflakeBeamSpec s;
    s.level = static_cast<int>(get("L", 0));
    s.M = get("M", -1.0);
    s.d_min = static_cast<int>(get("d_min", -12));
    s.graded = get("graded", 1.0) != 0.0;
    return snowflake_beam_map(s);
  }
  throw InvalidInput("unknown map: " + label);
}

/// Default zoo for dimension n.
inline std::vector<QCMap> builtin_zoo(int n) {
  if (n != 2 && n != 3) throw InvalidInput("builtin_zoo: n must be 2 or 3");
  std::vector<QCMap> zoo{make_map("identity", n), make_map("scalar", n), make_map("diag", n), make_map("power", n),
                         make_map("log-corrected", n)};
  if (n == 2) {
    zoo.push_back(make_map("spiral", 2));
    for (int L = 0; L <= 4; ++L) zoo.push_back(make_map("snowflake", 2, {{"L", L}}));
  }
  return zoo;
}

}  // namespace qcg
