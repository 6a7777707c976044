#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "geometry.hpp"
#include "koch.hpp"
#include "radius.hpp"
#include "sampling.hpp"
#include "transform.hpp"

namespace qcg {

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidInput("median: empty input");
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
  const double hi = v[k];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(k)));
}

// Volume of the unit ball in R^k, including k = 1.
inline double ball_volume(int k) { return k == 1 ? 2.0 : unit_ball_volume(k); }

// Visits every midpoint cell of an axis-aligned box in R^m with the given cell counts.
template <class F>
void for_each_cell(const VecN& lo, const VecN& hi, const std::vector<long>& cells, F&& body) {
  const int m = lo.dim();
  long total = 1;
  for (long c : cells) total *= c;
  VecN h(m);
  for (int i = 0; i < m; ++i) h[i] = (hi[i] - lo[i]) / static_cast<double>(cells[static_cast<std::size_t>(i)]);
  double area = 1.0;
  for (int i = 0; i < m; ++i) area *= h[i];
  for (long k = 0; k < total; ++k) {
    long r = k;
    VecN u(m);
    for (int i = m - 1; i >= 0; --i) {
      const long c = cells[static_cast<std::size_t>(i)];
      u[i] = lo[i] + (static_cast<double>(r % c) + 0.5) * h[i];
      r /= c;
    }
    body(k, u, area);
  }
}

inline VecN base_lo(int n) { return VecN(n - 1); }
inline VecN base_hi(int n) {
  VecN v(n - 1);
  for (int i = 0; i < n - 1; ++i) v[i] = base_extent(n, i);
  return v;
}

// Neumaier compensated sum.
struct KahanSum {
  double sum = 0.0, c = 0.0;
  void add(double v) {
    const double t = sum + v;
    c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + c; }
};

// Area of the convex hull of planar points (Andrew's monotone chain).
inline double hull_area(std::vector<Pt2> p) {
  if (p.size() < 3) return 0.0;
  std::sort(p.begin(), p.end(), [](Pt2 a, Pt2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Pt2> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && orient(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && orient(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
    h[k++] = p[i];
  }
  double a = 0.0;
  for (std::size_t i = 1; i + 1 < k; ++i) a += cross(h[i] - h[0], h[i + 1] - h[0]);
  return 0.5 * std::abs(a);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// BIP integrals

struct BipOptions {
  /// Midpoint cells per unit length along each base axis.
  int res = 32;
  bool refine = true;
  PartialsOptions partials;
  int threads = 1;
};

struct BipIntegral {
  double value = 0.0;
  double coarse = 0.0;
  /// |I(2 res) - I(res)|, zero when refinement is off.
  double delta = 0.0;
  int excluded = 0;
};

namespace detail {

inline std::pair<double, int> bip_at(const TransformedMap& tm, double t, int res, const BipOptions& opt) {
  const int n = tm.dim();
  const double p = static_cast<double>(n) / (n - 1);
  std::vector<long> cells;
  for (int i = 0; i < n - 1; ++i) cells.push_back(static_cast<long>(res * base_extent(n, i)));
  long total = 1;
  for (long c : cells) total *= c;
  std::vector<double> val(static_cast<std::size_t>(total), 0.0);
  std::vector<char> bad(static_cast<std::size_t>(total), 0);
  std::vector<VecN> us(static_cast<std::size_t>(total));
  double area = 0.0;
  for_each_cell(base_lo(n), base_hi(n), cells, [&](long k, const VecN& u, double a) {
    us[static_cast<std::size_t>(k)] = u;
    area = a;
  });
  parallel_for(us.size(), opt.threads, [&](std::size_t k) {
    try {
      const auto sp = slice_partials(tm, t, us[k], opt.partials);
      val[k] = std::pow(norm(pi(sp.d)), p);
    } catch (const BranchJumpError&) {
      bad[k] = 1;
    }
  });
  double sum = 0.0;
  int excluded = 0;
  for (std::size_t k = 0; k < val.size(); ++k) {
    if (bad[k]) ++excluded;
    else sum += val[k];
  }
  return {sum * area, excluded};
}

}  // namespace detail

inline BipIntegral bip_integral(const TransformedMap& tm, double t, const BipOptions& opt = {}) {
  if (!(t < tm.M())) throw DomainError("bip_integral: t must be below M");
  if (opt.res < 8) throw InvalidInput("bip_integral: resolution must be >= 8");
  BipIntegral out;
  const auto [c, ec] = detail::bip_at(tm, t, opt.res, opt);
  out.coarse = out.value = c;
  out.excluded = ec;
  if (opt.refine) {
    const auto [f, ef] = detail::bip_at(tm, t, 2 * opt.res, opt);
    out.value = f;
    out.delta = std::abs(f - c);
    out.excluded += ef;
  }
  return out;
}

enum class BipVerdict { Bounded, Growing, Inconclusive };

inline const char* to_string(BipVerdict v) {
  switch (v) {
    case BipVerdict::Bounded: return "bounded";
    case BipVerdict::Growing: return "growing";
    case BipVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct BipReport {
  std::vector<double> t;
  std::vector<double> integrals;
  std::vector<double> deltas;
  int excluded = 0;
  double sup = 0.0;
  double slope = 0.0;   // Theil-Sen slope of integral against t
  double mad = 0.0;     // median absolute residual about the fit
  BipVerdict verdict = BipVerdict::Inconclusive;
};

inline double theil_sen_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> s;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x[j] != x[i]) s.push_back((y[j] - y[i]) / (x[j] - x[i]));
  return s.empty() ? 0.0 : detail::median(std::move(s));
}

/// Growing means the integral increases as t decreases.
inline BipVerdict trend_verdict(const std::vector<double>& t, const std::vector<double>& v, double* slope = nullptr,
                                double* mad = nullptr) {
  const double med = detail::median(v);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double b = theil_sen_slope(t, v);
  std::vector<double> icpt, res;
  for (std::size_t i = 0; i < t.size(); ++i) icpt.push_back(v[i] - b * t[i]);
  const double a = detail::median(icpt);
  for (std::size_t i = 0; i < t.size(); ++i) res.push_back(std::abs(v[i] - a - b * t[i]));
  const double m = detail::median(res);
  if (slope) *slope = b;
  if (mad) *mad = m;
  if (*hi - *lo < 0.1 * std::abs(med)) return BipVerdict::Bounded;
  const auto [tl, th] = std::minmax_element(t.begin(), t.end());
  if (b < 0.0 && -b * (*th - *tl) > 2.0 * m) return BipVerdict::Growing;
  return BipVerdict::Inconclusive;
}

inline BipReport bip_sup(const TransformedMap& tm, const std::vector<double>& t_samples, const BipOptions& opt = {}) {
  if (t_samples.empty()) throw InvalidInput("bip_sup: no slices");
  BipReport r;
  for (double t : t_samples) {
    const BipIntegral b = bip_integral(tm, t, opt);
    r.t.push_back(t);
    r.integrals.push_back(b.value);
    r.deltas.push_back(b.delta);
    r.excluded += b.excluded;
  }
  r.sup = *std::max_element(r.integrals.begin(), r.integrals.end());
  r.verdict = trend_verdict(r.t, r.integrals, &r.slope, &r.mad);
  return r;
}

// ---------------------------------------------------------------------------
// Beam volumes

/// vol_n f~(box) as the integral of |J_f~| over an axis-aligned beam box, by MC.
inline VolumeEstimate beam_volume(const TransformedMap& tm, const VecN& lo, double t_lo, const VecN& hi, double t_hi,
                                  std::uint64_t budget, std::uint64_t seed, int threads = 1, std::uint64_t stream = 0) {
  if (budget < 2) throw InvalidInput("beam_volume: budget must be >= 2");
  const int m = lo.dim();
  double box = t_hi - t_lo;
  for (int i = 0; i < m; ++i) box *= hi[i] - lo[i];
  const std::uint64_t chunks = (budget + kChunkSize - 1) / kChunkSize;
  std::vector<MeanAccumulator> acc(chunks);
  for_each_chunk(budget, kChunkSize, threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
    Rng rng(seed, (stream << 32) + c);
    MeanAccumulator a;
    for (std::uint64_t k = b; k < e; ++k) {
      VecN u(m);
      for (int i = 0; i < m; ++i) u[i] = rng.uniform(lo[i], hi[i]);
      a.add(std::abs(tm.jacobian(BeamPoint(u, rng.uniform(t_lo, t_hi)))));
    }
    acc[c] = a;
  });
  MeanAccumulator total;
  for (const auto& a : acc) total.merge(a);
  VolumeEstimate est;
  est.value = box * total.mean();
  est.std_error = box * total.std_error();
  est.samples = total.count;
  est.flagged = est.std_error > 0.1 * est.value;
  return est;
}

// ---------------------------------------------------------------------------
// Volume comparison

struct VolumeComparison {
  double increment = 0.0;
  double increment_error = 0.0;
  double Vt = 0.0;
  double Vt_error = 0.0;
  double ratio = 0.0;
};

inline VolumeComparison volume_comparison(const QCMap& f, double t0, double t, const RadiusOptions& opt) {
  if (!(t > 0.0 && t <= 0.25)) throw InvalidInput("volume_comparison: t must lie in (0, 1/4]");
  if (!(t0 + t < f.M)) throw DomainError("volume_comparison: t0 + t must be below M");
  const auto c = log_transform_curve(f, {t0, t0 + t}, opt);
  VolumeComparison out;
  out.increment = c.rho_tilde[1] - c.rho_tilde[0];
  out.increment_error = std::hypot(c.error[0], c.error[1]);
  const TransformedMap tm(f);
  const int n = f.n;
  const auto v = beam_volume(tm, detail::base_lo(n), t0, detail::base_hi(n), t0 + t, opt.budget, opt.seed, opt.threads, 1);
  out.Vt = v.value;
  out.Vt_error = v.std_error;
  out.ratio = out.increment / out.Vt;
  return out;
}

// ---------------------------------------------------------------------------
// Box subdivision

struct SubdivisionOptions {
  /// Samples per face edge; each face gets face_samples^{n-1} points.
  int face_samples = 16;
  int mc_samples = 256;
  /// Midpoint cells per edge of Q_i for vol_{n-1} f~(Q_i).
  int base_quad = 4;
  /// Volume budget for the direct V_t estimate.
  std::uint64_t vt_budget = 200000;
  BipOptions bip;
  PartialsOptions partials;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BoxReport {
  int index = 0;
  double diam = 0.0;
  double nu = 0.0;
  double vol = 0.0;
  double vol_error = 0.0;
  double base_image_vol = 0.0;  // vol_{n-1} f~(Q_i)
  double projected_vol = 0.0;   // vol_{n-1} P(f~(P_i))
  double pi_norm = 0.0;         // |Pi(y_i)| at the centre of Q_i
  bool flagged = false;
};

struct RatioRange {
  double lo = 0.0;
  double hi = 0.0;
  bool overlaps(const RatioRange& o, double rel = 0.0) const {
    return lo <= o.hi * (1.0 + rel) && o.lo <= hi * (1.0 + rel);
  }
};

/// One inequality small <= large of a bound chain.
struct ChainStep {
  std::string name;
  double small = 0.0;
  double large = 0.0;
  bool holds(double rel = 1e-12) const { return small <= large * (1.0 + rel); }
};

struct BoundChains {
  std::vector<ChainStep> lower;
  std::vector<ChainStep> upper;
  double lowerLHS = 0.0;  // V_t
  double lowerRHS = 0.0;  // C1^{-1} N^{1/(1-n)} (2^n / Omega_{n-1})^{n/(n-1)}
  double upperLHS = 0.0;  // V_t
  double upperRHS = 0.0;  // 2^{p+1} C1 C2^n C3^p BIP s
  bool all_hold() const {
    for (const auto& s : lower)
      if (!s.holds()) return false;
    for (const auto& s : upper)
      if (!s.holds()) return false;
    return true;
  }
};

struct SubdivisionReport {
  int n = 2;
  double t0 = 0.0;
  double t = 0.0;
  double side = 0.0;
  long N = 0;
  std::vector<BoxReport> boxes;
  /// Sum of the box volumes and its standard error.
  double Vt = 0.0;
  double Vt_error = 0.0;
  /// Independent estimate of vol f~(S_t).
  double Vt_direct = 0.0;
  double Vt_direct_error = 0.0;
  double projected_total = 0.0;
  double bip = 0.0;  // BIP integral at t0
  RatioRange ratioC1range, ratioC2range, ratioC3range;
  double C1 = 0.0, C2 = 0.0, C3 = 0.0;
  int flagged = 0;
  BoundChains chains;
};

namespace detail {

inline BoxReport analyze_box(const TransformedMap& tm, const BoxP& box, const SubdivisionOptions& opt) {
  const int n = tm.dim();
  const int m = n - 1;
  BoxReport r;
  r.index = box.index;
  const BeamPoint hint = tm(box.centroid());
  const int k = opt.face_samples;

  // Boundary samples, grouped by face (axis, side).
  std::vector<std::vector<VecN>> faces(static_cast<std::size_t>(2 * n));
  long per_face = 1;
  for (int i = 0; i < m; ++i) per_face *= k;
  for (int axis = 0; axis < n; ++axis)
    for (int s = 0; s < 2; ++s) {
      auto& pts = faces[static_cast<std::size_t>(2 * axis + s)];
      for (long q = 0; q < per_face; ++q) {
        VecN loc(n);
        long rest = q;
        for (int i = 0, j = 0; i < n; ++i) {
          if (i == axis) {
            loc[i] = s;
            continue;
          }
          loc[i] = k == 1 ? 0.5 : static_cast<double>(rest % k) / (k - 1);
          rest /= k;
          ++j;
        }
        pts.push_back(tm(box.at(loc), hint).vec());
      }
    }

  std::vector<const VecN*> all;
  for (const auto& f : faces)
    for (const auto& p : f) all.push_back(&p);
  double d2 = 0.0;
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = a + 1; b < all.size(); ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double e = (*all[a])[i] - (*all[b])[i];
        s += e * e;
      }
      d2 = std::max(d2, s);
    }
  r.diam = std::sqrt(d2);

  double nu2 = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < n; ++axis)
    for (const auto& p : faces[static_cast<std::size_t>(2 * axis)])
      for (const auto& q : faces[static_cast<std::size_t>(2 * axis + 1)]) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
          const double e = p[i] - q[i];
          s += e * e;
        }
        nu2 = std::min(nu2, s);
      }
  r.nu = std::sqrt(nu2);

  if (n == 2) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const VecN* p : all) {
      lo = std::min(lo, (*p)[0]);
      hi = std::max(hi, (*p)[0]);
    }
    r.projected_vol = hi - lo;
  } else if (n == 3) {
    std::vector<Pt2> pts;
    for (const VecN* p : all) pts.push_back({(*p)[0], (*p)[1]});
    r.projected_vol = hull_area(std::move(pts));
  } else {
    throw InvalidInput("subdivision: projected volumes need n <= 3");
  }

  Rng rng(opt.seed, static_cast<std::uint64_t>(box.index));
  MeanAccumulator acc;
  for (int s = 0; s < opt.mc_samples; ++s) {
    VecN loc(n);
    for (int i = 0; i < n; ++i) loc[i] = rng.uniform();
    acc.add(std::abs(tm.jacobian(box.at(loc))));
  }
  r.vol = box.volume() * acc.mean();
  r.vol_error = box.volume() * acc.std_error();

  VecN lo = box.lower, hi = box.lower;
  for (int i = 0; i < m; ++i) hi[i] += box.side;
  std::vector<long> cells(static_cast<std::size_t>(m), opt.base_quad);
  try {
    for_each_cell(lo, hi, cells, [&](long, const VecN& u, double a) {
      r.base_image_vol += norm(pi(slice_partials(tm, box.t0, u, opt.partials, hint).d)) * a;
    });
    VecN c = box.lower;
    for (int i = 0; i < m; ++i) c[i] += 0.5 * box.side;
    r.pi_norm = norm(pi(slice_partials(tm, box.t0, c, opt.partials, hint).d));
  } catch (const BranchJumpError&) {
    r.flagged = true;
  }
  return r;
}

}  // namespace detail

inline BoundChains bound_chains(const SubdivisionReport& rep) {
  const int n = rep.n;
  const double dn = n;
  const double p = dn / (dn - 1.0);
  BoundChains c;
  double sum_dn = 0.0, sum_nun = 0.0, sum_base = 0.0, sum_pi_base = 0.0, sum_pi = 0.0, sum_proj = 0.0;
  std::vector<double> diams;
  for (const auto& b : rep.boxes) {
    if (b.flagged) continue;
    diams.push_back(b.diam);
    sum_dn += std::pow(b.diam, dn);
    sum_nun += std::pow(b.nu, dn);
    sum_base += std::pow(b.base_image_vol, p);
    sum_pi_base += std::pow(2.0 * b.pi_norm * std::pow(rep.side, dn - 1.0), p);
    sum_pi += std::pow(b.pi_norm, p) * std::pow(rep.side, dn - 1.0);
    sum_proj += b.projected_vol;
  }
  if (diams.empty()) throw EstimationError("bound_chains: every box is flagged");
  const double V = rep.Vt;
  const double Nd = static_cast<double>(diams.size());
  const LpBound lp = lp_bound(diams, n);
  const double omega = detail::ball_volume(n - 1);

  c.lower.push_back({"C1^-1 sum diam^n <= V_t", sum_dn / rep.C1, V});
  c.lower.push_back({"l^p: N^{1/(1-n)} (sum diam^{n-1})^{n/(n-1)} <= sum diam^n", lp.rhs, lp.lhs});
  double sum_dm = 0.0;
  for (double d : diams) sum_dm += std::pow(d, dn - 1.0);
  c.lower.push_back({"sum vol P(f~P_i) <= Omega_{n-1} 2^{1-n} sum diam^{n-1}", sum_proj,
                     omega * std::pow(2.0, 1.0 - dn) * sum_dm});
  c.lower.push_back({"vol Q = 2 <= sum vol P(f~P_i)", 2.0, sum_proj});
  c.lowerLHS = V;
  c.lowerRHS = std::pow(Nd, 1.0 / (1.0 - dn)) * std::pow(std::pow(2.0, dn) / omega, p) / rep.C1;
  c.lower.push_back({"C1^-1 N^{1/(1-n)} (2^n / Omega_{n-1})^{n/(n-1)} <= V_t", c.lowerRHS, V});

  c.upper.push_back({"V_t <= C1 sum diam^n", V, rep.C1 * sum_dn});
  c.upper.push_back({"C1 sum diam^n <= C1 C2^n sum nu^n", rep.C1 * sum_dn, rep.C1 * std::pow(rep.C2, dn) * sum_nun});
  const double k3 = rep.C1 * std::pow(rep.C2, dn) * std::pow(rep.C3, p);
  c.upper.push_back({"C1 C2^n sum nu^n <= C1 C2^n C3^p sum vol(f~Q_i)^p", rep.C1 * std::pow(rep.C2, dn) * sum_nun,
                     k3 * sum_base});
  c.upper.push_back({"sum vol(f~Q_i)^p <= sum (2 |Pi(y_i)| s^{n-1})^p", sum_base, sum_pi_base});
  c.upper.push_back({"sum |Pi(y_i)|^p s^{n-1} <= 2 BIP", sum_pi, 2.0 * rep.bip});
  c.upperLHS = V;
  c.upperRHS = std::pow(2.0, p + 1.0) * k3 * rep.bip * rep.side;
  c.upper.push_back({"V_t <= 2^{p+1} C1 C2^n C3^p BIP s", V, c.upperRHS});
  return c;
}

inline SubdivisionReport subdivision_analysis(const TransformedMap& tm, double t0, double t,
                                              const SubdivisionOptions& opt = {}) {
  const int n = tm.dim();
  if (!(t0 < tm.M() - 1.0)) throw DomainError("subdivision_analysis: t0 must be below M - 1");
  if (!(t > 0.0 && t < 0.5)) throw InvalidInput("subdivision_analysis: t must lie in (0, 1/2)");
  if (opt.face_samples < 2 || opt.mc_samples < 2 || opt.base_quad < 1)
    throw InvalidInput("subdivision_analysis: sampling parameters too small");
  const auto boxes = subdivide_slice(t0, t, n);
  SubdivisionReport rep;
  rep.n = n;
  rep.t0 = t0;
  rep.t = t;
  rep.side = boxes.front().side;
  rep.N = static_cast<long>(boxes.size());
  rep.boxes.resize(boxes.size());
  parallel_for(boxes.size(), opt.threads, [&](std::size_t i) { rep.boxes[i] = detail::analyze_box(tm, boxes[i], opt); });

  const double dn = n;
  double var = 0.0;
  bool first = true;
  detail::KahanSum vt, proj;
  for (const auto& b : rep.boxes) {
    vt.add(b.vol);
    var += b.vol_error * b.vol_error;
    proj.add(b.projected_vol);
    if (b.flagged) {
      ++rep.flagged;
      continue;
    }
    const double r1 = b.vol / std::pow(b.diam, dn);
    const double r2 = b.diam / b.nu;
    const double r3 = std::pow(b.nu, dn - 1.0) / b.base_image_vol;
    if (first) {
      rep.ratioC1range = {r1, r1};
      rep.ratioC2range = {r2, r2};
      rep.ratioC3range = {r3, r3};
      first = false;
    }
    rep.ratioC1range = {std::min(rep.ratioC1range.lo, r1), std::max(rep.ratioC1range.hi, r1)};
    rep.ratioC2range = {std::min(rep.ratioC2range.lo, r2), std::max(rep.ratioC2range.hi, r2)};
    rep.ratioC3range = {std::min(rep.ratioC3range.lo, r3), std::max(rep.ratioC3range.hi, r3)};
  }
  rep.Vt = vt.value();
  rep.projected_total = proj.value();
  rep.Vt_error = std::sqrt(var);
  rep.C1 = std::max(rep.ratioC1range.hi, 1.0 / rep.ratioC1range.lo);
  rep.C2 = rep.ratioC2range.hi;
  rep.C3 = rep.ratioC3range.hi;

  const auto vd = beam_volume(tm, detail::base_lo(n), t0, detail::base_hi(n), t0 + t, opt.vt_budget, opt.seed, opt.threads, 2);
  rep.Vt_direct = vd.value;
  rep.Vt_direct_error = vd.std_error;
  BipOptions bo = opt.bip;
  bo.threads = opt.threads;
  rep.bip = bip_integral(tm, t0, bo).value;
  rep.chains = bound_chains(rep);
  return rep;
}

struct DqBracket {
  double lower = 0.0;
  double measured = 0.0;
  double upper = 0.0;
  bool brackets() const { return lower <= measured && measured <= upper; }
};

/// Bounds on (rho~(t0 + t) - rho~(t0)) / t implied by the chains, with the
/// measured volume comparison ratio standing in for the missing constant.
inline DqBracket dq_bracket(const BoundChains& c, const VolumeComparison& vc, double t) {
  DqBracket b;
  b.measured = vc.increment / t;
  b.lower = vc.ratio * c.lowerRHS / t;
  b.upper = vc.ratio * c.upperRHS / t;
  return b;
}

// ---------------------------------------------------------------------------
// Weak quasisymmetry

struct QSRegion {
  double t_lo = -6.0;
  double t_hi = -2.0;
};

struct QSOptions {
  long triples = 100000;
  std::uint64_t seed = 1;
  int bins = 10;
  /// |x - b| is drawn log-uniformly from this range, |x - a| / |x - b| uniformly from (0, 1].
  double min_scale = 1e-3;
  double max_scale = 0.5;
  /// Best sampled triples handed to a compass search; 0 keeps the raw sample maximum.
  int refine = 64;
  int threads = 1;
};

struct QSReport {
  std::vector<double> ratioBins;  // upper bin edges in (0, 1]
  std::vector<double> Hcurve;     // sup of image ratios with preimage ratio <= edge
  double weakH = 1.0;
  double sampledH = 1.0;          // before refinement
  long triples = 0;
};

namespace detail {

struct Triple {
  double img = 0.0;
  double pre = 0.0;
  BeamPoint x, a, b;
};

}  // namespace detail

inline QSReport weak_qs_estimate(const TransformedMap& tm, const QSRegion& region, const QSOptions& opt = {}) {
  using detail::Triple;
  const int n = tm.dim();
  if (!(region.t_lo < region.t_hi) || !(region.t_hi < tm.M())) throw DomainError("weak_qs_estimate: region must lie below M");
  if (opt.triples < 1 || opt.bins < 1 || opt.refine < 0) throw InvalidInput("weak_qs_estimate: need triples and bins");
  const auto& z = tm.zorich();
  const VecN flo = z.group().fundamental_lo(), fhi = z.group().fundamental_hi();
  const std::uint64_t count = static_cast<std::uint64_t>(opt.triples);
  const std::uint64_t chunks = (count + kChunkSize - 1) / kChunkSize;
  const std::size_t nb = static_cast<std::size_t>(opt.bins);
  const std::size_t keep = static_cast<std::size_t>(opt.refine);
  std::vector<std::vector<double>> best(chunks, std::vector<double>(nb, 0.0));
  std::vector<std::vector<Triple>> cands(chunks);
  std::vector<long> used(chunks, 0);
  const double lmin = std::log(opt.min_scale), lmax = std::log(opt.max_scale);
  auto better = [](const Triple& p, const Triple& q) { return p.img > q.img; };

  // Image ratio of a triple, or nothing when it leaves the sampling region.
  auto evaluate = [&](const BeamPoint& x, BeamPoint a, BeamPoint b) -> std::optional<Triple> {
    for (double t : {x.height(), a.height(), b.height()})
      if (t < region.t_lo || t > region.t_hi) return std::nullopt;
    double da = z.quotient_distance(x, a), db = z.quotient_distance(x, b);
    if (da > db) {
      std::swap(a, b);
      std::swap(da, db);
    }
    if (!(db > 0.0) || db > opt.max_scale * (1.0 + 1e-12)) return std::nullopt;
    const BeamPoint fx = tm(x);
    const double ia = z.quotient_distance(fx, tm(a, fx));
    const double ib = z.quotient_distance(fx, tm(b, fx));
    if (!(ib > 0.0)) return std::nullopt;
    return Triple{ia / ib, da / db, x, a, b};
  };
  auto bin_of = [&](double pre) {
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(pre * static_cast<double>(nb))));
    return std::min(k, nb) - 1;
  };

  for_each_chunk(count, kChunkSize, opt.threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
    Rng rng(opt.seed, c);
    auto& bc = best[c];
    auto& top = cands[c];
    auto near = [&](const BeamPoint& x, double dist) {
      for (;;) {
        VecN dir(n);
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
          dir[i] = rng.uniform(-1.0, 1.0);
          r2 += dir[i] * dir[i];
        }
        if (r2 > 1.0 || r2 < 1e-12) continue;
        const double s = dist / std::sqrt(r2);
        BeamPoint y = x;
        for (int i = 0; i < n; ++i) y.vec()[i] += s * dir[i];
        if (y.height() >= region.t_lo && y.height() <= region.t_hi) return y;
      }
    };
    for (std::uint64_t k = b; k < e; ++k) {
      VecN u(n - 1);
      for (int i = 0; i < n - 1; ++i) u[i] = rng.uniform(flo[i], fhi[i]);
      const BeamPoint x(u, rng.uniform(region.t_lo, region.t_hi));
      const double sb = std::exp(rng.uniform(lmin, lmax));
      const double q = 1.0 - rng.uniform();
      const BeamPoint a = near(x, q * sb), bb = near(x, sb);
      const auto tr = evaluate(x, a, bb);
      if (!tr) continue;
      const std::size_t bin = bin_of(tr->pre);
      bc[bin] = std::max(bc[bin], tr->img);
      ++used[c];
      if (keep == 0) continue;
      if (top.size() < keep) {
        top.push_back(*tr);
        std::push_heap(top.begin(), top.end(), better);
      } else if (tr->img > top.front().img) {
        std::pop_heap(top.begin(), top.end(), better);
        top.back() = *tr;
        std::push_heap(top.begin(), top.end(), better);
      }
    }
  });

  QSReport r;
  std::vector<double> sup(nb, 0.0);
  std::vector<Triple> pool;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    r.triples += used[c];
    for (std::size_t i = 0; i < nb; ++i) sup[i] = std::max(sup[i], best[c][i]);
    pool.insert(pool.end(), cands[c].begin(), cands[c].end());
  }
  r.sampledH = std::max(1.0, *std::max_element(sup.begin(), sup.end()));

  // Compass search over (x, a - x, b - x), keeping every point inside the region.
  std::stable_sort(pool.begin(), pool.end(), better);
  if (pool.size() > keep) pool.resize(keep);
  std::vector<Triple> refined(pool.size());
  parallel_for(pool.size(), opt.threads, [&](std::size_t i) {
    Triple cur = pool[i];
    double h = 0.1 * z.quotient_distance(cur.x, cur.b);
    const double stop = 1e-7 * h;
    for (int iter = 0; iter < 4000 && h > stop; ++iter) {
      bool moved = false;
      for (int j = 0; j < 3 * n && !moved; ++j)
        for (double sgn : {1.0, -1.0}) {
          BeamPoint x = cur.x, a = cur.a, b = cur.b;
          const int which = j / n, coord = j % n;
          const double d = sgn * h;
          if (which == 0) {
            x.vec()[coord] += d;
            a.vec()[coord] += d;
            b.vec()[coord] += d;
          } else {
            (which == 1 ? a : b).vec()[coord] += d;
          }
          const auto tr = evaluate(x, a, b);
          if (tr && tr->img > cur.img) {
            cur = *tr;
            moved = true;
            break;
          }
        }
      if (!moved) h *= 0.5;
    }
    refined[i] = cur;
  });
  for (const auto& t : refined) {
    const std::size_t bin = bin_of(t.pre);
    sup[bin] = std::max(sup[bin], t.img);
  }

  double run = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    run = std::max(run, sup[i]);
    r.ratioBins.push_back(static_cast<double>(i + 1) / static_cast<double>(nb));
    r.Hcurve.push_back(run);
  }
  r.weakH = std::max(1.0, run);
  return r;
}

// ---------------------------------------------------------------------------
// Slice size

struct SliceSizeOptions {
  /// n = 2: number of segments; n = 3: cells along the last base axis.
  long resolution = 1000;
  /// Base sub-box to measure; defaults to all of Q.
  std::optional<std::pair<VecN, VecN>> range;
  PartialsOptions partials;
  int max_depth = 24;
};

struct SliceSize {
  double size = 0.0;
  int flagged = 0;
  long samples = 0;
};

inline SliceSize slice_size(const TransformedMap& tm, double t0, const SliceSizeOptions& opt = {}) {
  if (!(t0 < tm.M())) throw DomainError("slice_size: t0 must be below M");
  if (opt.resolution < 1) throw InvalidInput("slice_size: resolution must be positive");
  const int n = tm.dim();
  VecN lo = detail::base_lo(n), hi = detail::base_hi(n);
  if (opt.range) std::tie(lo, hi) = *opt.range;
  if (lo.dim() != n - 1 || hi.dim() != n - 1) throw InvalidInput("slice_size: range has wrong dimension");
  const double bound = opt.partials.jump_factor * opt.partials.bound_hint;
  SliceSize out;

  if (n == 2) {
    const long N = opt.resolution;
    const double h = (hi[0] - lo[0]) / static_cast<double>(N);
    // Adds the length between parameters a < b, splitting the segment when the images jump.
    auto segment = [&](auto&& self, double a, const BeamPoint& ga, double b, const BeamPoint& gb, int depth) -> double {
      const double d = distance(ga, gb);
      if (d <= bound * (b - a) + 1e-300) return d;
      if (depth >= opt.max_depth) {
        ++out.flagged;
        return 0.0;
      }
      const double m = 0.5 * (a + b);
      const BeamPoint gm = slice_gamma(tm, t0, VecN{m}, ga);
      const BeamPoint gb2 = tm(BeamPoint(VecN{b}, t0), gm);
      ++out.samples;
      return self(self, a, ga, m, gm, depth + 1) + self(self, m, gm, b, gb2, depth + 1);
    };
    BeamPoint prev = slice_gamma(tm, t0, VecN{lo[0]});
    out.samples = 1;
    for (long k = 1; k <= N; ++k) {
      const double a = lo[0] + static_cast<double>(k - 1) * h;
      const double b = k == N ? hi[0] : lo[0] + static_cast<double>(k) * h;
      const BeamPoint cur = slice_gamma(tm, t0, VecN{b}, prev);
      ++out.samples;
      out.size += segment(segment, a, prev, b, cur, 0);
      prev = cur;
    }
    return out;
  }

  if (n != 3) throw InvalidInput("slice_size: n must be 2 or 3");
  const long c1 = opt.resolution;
  const long c0 = std::max<long>(1, std::lround(static_cast<double>(opt.resolution) * (hi[0] - lo[0]) / (hi[1] - lo[1])));
  std::vector<BeamPoint> grid(static_cast<std::size_t>((c0 + 1) * (c1 + 1)));
  auto at = [&](long i, long j) -> BeamPoint& { return grid[static_cast<std::size_t>(i * (c1 + 1) + j)]; };
  auto param = [&](long i, long j) {
    return VecN{lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) / static_cast<double>(c0),
                lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) / static_cast<double>(c1)};
  };
  for (long i = 0; i <= c0; ++i)
    for (long j = 0; j <= c1; ++j) {
      std::optional<BeamPoint> hint;
      if (j > 0) hint = at(i, j - 1);
      else if (i > 0) hint = at(i - 1, j);
      at(i, j) = slice_gamma(tm, t0, param(i, j), hint);
    }
  out.samples = static_cast<long>(grid.size());
  const double hmax = std::max((hi[0] - lo[0]) / static_cast<double>(c0), (hi[1] - lo[1]) / static_cast<double>(c1));
  auto tri = [&](const VecN& a, const VecN& b, const VecN& c) {
    const VecN e1 = b - a, e2 = c - a;
    const VecN x{e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]};
    return 0.5 * norm(x);
  };
  for (long i = 0; i < c0; ++i)
    for (long j = 0; j < c1; ++j) {
      // Resolve the cell corners against one branch.
      const BeamPoint& p00 = at(i, j);
      const VecN a = p00.vec();
      const VecN b = tm(BeamPoint(param(i + 1, j), t0), p00).vec();
      const VecN c = tm(BeamPoint(param(i + 1, j + 1), t0), p00).vec();
      const VecN d = tm(BeamPoint(param(i, j + 1), t0), p00).vec();
      const double lim = bound * 2.0 * hmax;
      if (distance(a, b) > lim || distance(a, c) > lim || distance(a, d) > lim) {
        ++out.flagged;
        continue;
      }
      out.size += tri(a, b, c) + tri(a, c, d);
    }
  return out;
}

}  // namespace qcg
