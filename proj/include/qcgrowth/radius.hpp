#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "mapzoo.hpp"
#include "sampling.hpp"

namespace qcg {

enum class VolumeMethod { MC, Grid, Analytic };

inline const char* to_string(VolumeMethod m) {
  switch (m) {
    case VolumeMethod::MC: return "MC";
    case VolumeMethod::Grid: return "grid";
    case VolumeMethod::Analytic: return "analytic";
  }
  return "?";
}

struct VolumeEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
  VolumeMethod method = VolumeMethod::MC;
  /// Relative standard error above 10%.
  bool flagged = false;
};

struct RadiusOptions {
  std::uint64_t budget = 1000000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Use the map's closed-form image volume when it has one.
  bool analytic = false;
};

inline std::uint64_t default_budget(int n) { return n == 2 ? 1000000 : 4000000; }

/// vol_n f(B(0, r)) as the integral of |J_f| over the ball. Every call with the
/// same seed uses the same normalized points u (sampled at r u), so estimates
/// for different r are strongly correlated.
inline VolumeEstimate image_volume(const QCMap& f, double r, const RadiusOptions& opt) {
  if (!(r > 0.0) || (!std::isinf(f.M) && !(r < std::exp(f.M))))
    throw DomainError("image_volume: radius outside (0, e^M)");
  VolumeEstimate est;
  if (opt.analytic && f.exact_volume) {
    est.value = f.exact_volume(r);
    est.method = VolumeMethod::Analytic;
    if (!(est.value > 0.0) || !std::isfinite(est.value)) throw EstimationError("image_volume: nonpositive volume");
    return est;
  }
  if (opt.budget < 2) throw InvalidInput("image_volume: budget must be >= 2");
  const int n = f.n;
  const std::uint64_t chunks = (opt.budget + kChunkSize - 1) / kChunkSize;
  std::vector<MeanAccumulator> acc(chunks);
  for_each_chunk(opt.budget, kChunkSize, opt.threads, [&](std::uint64_t c, std::uint64_t b, std::uint64_t e) {
    Rng rng(opt.seed, c);
    MeanAccumulator a;
    for (std::uint64_t k = b; k < e; ++k) {
      const VecN x = rng.in_ball(n) * r;
      const double j = f.jacobian(x);
      if (j < 0.0) {
        const double nx = norm(x);
        const double scale = nx > 0.0 ? std::pow(norm(f.eval(x)) / nx, n) : 1.0;
        if (-j > 1e-6 * scale) throw OrientationError("image_volume: negative Jacobian in " + f.label);
      }
      a.add(std::abs(j));
    }
    acc[c] = a;
  });
  MeanAccumulator total;
  for (const auto& a : acc) total.merge(a);
  const double ball = unit_ball_volume(n) * std::pow(r, n);
  est.value = ball * total.mean();
  est.std_error = ball * total.std_error();
  est.samples = total.count;
  est.method = VolumeMethod::MC;
  if (!(est.value > 0.0) || !std::isfinite(est.value)) throw EstimationError("image_volume: nonpositive volume");
  est.flagged = est.std_error > 0.1 * est.value;
  return est;
}

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;
  bool flagged = false;
};

inline ValueWithError mean_radius(const QCMap& f, double r, const RadiusOptions& opt) {
  const VolumeEstimate v = image_volume(f, r, opt);
  const int n = f.n;
  const double rho = std::pow(v.value / unit_ball_volume(n), 1.0 / n);
  return {rho, rho * v.std_error / (n * v.value), v.flagged};
}

struct MeanRadiusCurve {
  std::string label;
  int n = 2;
  std::uint64_t seed = 0;
  std::uint64_t budget = 0;
  std::vector<double> t;
  std::vector<double> rho_tilde;
  std::vector<double> error;
  std::vector<bool> flagged;

  std::size_t size() const { return t.size(); }

  /// Linear interpolation of rho~ (clamped linear extrapolation at the ends).
  double interpolate(double s) const {
    if (t.empty()) throw InvalidInput("MeanRadiusCurve: empty curve");
    if (t.size() == 1) return rho_tilde[0] + (s - t[0]);
    std::size_t k = 1;
    while (k + 1 < t.size() && t[k] < s) ++k;
    const double a = (s - t[k - 1]) / (t[k] - t[k - 1]);
    return rho_tilde[k - 1] + a * (rho_tilde[k] - rho_tilde[k - 1]);
  }
};

inline MeanRadiusCurve log_transform_curve(const QCMap& f, const std::vector<double>& t_grid, const RadiusOptions& opt) {
  MeanRadiusCurve c;
  c.label = f.label;
  c.n = f.n;
  c.seed = opt.seed;
  c.budget = opt.budget;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    if (k > 0 && !(t > t_grid[k - 1])) throw InvalidInput("log_transform_curve: grid must be increasing");
    if (!(t < f.M)) throw DomainError("log_transform_curve: t must be below M");
    const VolumeEstimate v = image_volume(f, std::exp(t), opt);
    const int n = f.n;
    c.t.push_back(t);
    c.rho_tilde.push_back((std::log(v.value) - std::log(unit_ball_volume(n))) / n);
    c.error.push_back(v.std_error / (n * v.value));
    c.flagged.push_back(v.flagged);
  }
  return c;
}

struct DifferenceQuotient {
  double t0 = 0.0;
  double lag = 0.0;
  double dq = 0.0;
};

/// dq = (rho~(t0 + lag) - rho~(t0)) / lag for every grid pair at a listed lag.
inline std::vector<DifferenceQuotient> difference_quotients(const MeanRadiusCurve& c, const std::vector<double>& lags) {
  std::vector<DifferenceQuotient> out;
  for (double lag : lags) {
    if (!(lag > 0.0)) throw InvalidInput("difference_quotients: lags must be positive");
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) {
        const double dt = c.t[j] - c.t[i];
        if (std::abs(dt - lag) <= 1e-9 * std::max(1.0, lag)) {
          out.push_back({c.t[i], lag, (c.rho_tilde[j] - c.rho_tilde[i]) / dt});
          break;
        }
      }
  }
  return out;
}

/// All pairwise quotients when no lag set is given.
inline std::vector<DifferenceQuotient> difference_quotients(const MeanRadiusCurve& c) {
  std::vector<DifferenceQuotient> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double dt = c.t[j] - c.t[i];
      out.push_back({c.t[i], dt, (c.rho_tilde[j] - c.rho_tilde[i]) / dt});
    }
  return out;
}

struct BiLipschitz {
  double lmin = 0.0;
  double lmax = 0.0;
  double L = 0.0;
};

inline BiLipschitz bi_lipschitz_estimate(const std::vector<DifferenceQuotient>& dqs) {
  if (dqs.empty()) throw InvalidInput("bi_lipschitz_estimate: no difference quotients");
  BiLipschitz b{dqs[0].dq, dqs[0].dq, 0.0};
  for (const auto& q : dqs) {
    b.lmin = std::min(b.lmin, q.dq);
    b.lmax = std::max(b.lmax, q.dq);
  }
  b.L = std::max(b.lmax, 1.0 / b.lmin);
  return b;
}

inline BiLipschitz bi_lipschitz_estimate(const MeanRadiusCurve& c, const std::vector<double>& lags) {
  if (c.size() < 2) throw InvalidInput("bi_lipschitz_estimate: need at least two points");
  return bi_lipschitz_estimate(lags.empty() ? difference_quotients(c) : difference_quotients(c, lags));
}

/// rho_f(s r) / (s^d rho_f(r)) at r = e^t for each grid point.
inline std::vector<double> homogeneity_check(const QCMap& f, double d, double s, const std::vector<double>& t_grid,
                                             const RadiusOptions& opt) {
  if (!(s > 0.0)) throw InvalidInput("homogeneity_check: s must be positive");
  std::vector<double> out;
  for (double t : t_grid) {
    const double r = std::exp(t);
    const double a = mean_radius(f, s * r, opt).value;
    const double b = mean_radius(f, r, opt).value;
    out.push_back(a / (std::pow(s, d) * b));
  }
  return out;
}

}  // namespace qcg
