#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "geometry.hpp"
#include "mapzoo.hpp"
#include "zorich.hpp"

namespace qcg {

/// Zorich transform f~ of a map f, defined through f o Z = Z o f~ on the half-beam
/// below height M.
class TransformedMap {
 public:
  explicit TransformedMap(QCMap f) : f_(std::make_shared<QCMap>(std::move(f))), z_(f_->n) {}

  const QCMap& source() const { return *f_; }
  const ZorichMap& zorich() const { return z_; }
  int dim() const { return f_->n; }
  double M() const { return f_->M; }

  /// f~(x). Without a hint the canonical representative is returned; with a
  /// hint, the orbit point nearest to it.
  BeamPoint operator()(const BeamPoint& x, const std::optional<BeamPoint>& hint = std::nullopt) const {
    if (x.dim() != dim()) throw InvalidInput("TransformedMap: dimension mismatch");
    if (!(x.height() < M())) throw DomainError("TransformedMap: height must be below M");
    if (f_->beam) {
      const BeamPoint y = f_->beam(x);
      return hint ? z_.group().nearest_representative(y, *hint) : z_.group().canonical(y);
    }
    const VecN w = f_->eval(z_(x));
    const double nw = norm(w);
    if (!(nw > 0.0) || !std::isfinite(nw)) throw DegenerateError("TransformedMap: f(Z(x)) vanished or is not finite");
    return z_.inverse(w, hint);
  }

  /// Jacobian determinant of f~ at x: J_f(Z x) J_Z(x) / J_Z(f~ x).
  double jacobian(const BeamPoint& x) const {
    const BeamPoint fx = (*this)(x);
    return f_->jacobian(z_(x)) * z_.jacobian(x) / z_.jacobian(fx);
  }

  /// Residual |Z(f~ x) - f(Z x)| / |f(Z x)|.
  double functional_residual(const BeamPoint& x) const {
    const VecN w = f_->eval(z_(x));
    return norm(z_((*this)(x)) - w) / norm(w);
  }

 private:
  std::shared_ptr<QCMap> f_;
  ZorichMap z_;
};

/// Path-evaluation context: each result becomes the hint for the next call.
class BranchTracker {
 public:
  explicit BranchTracker(const TransformedMap& tm) : tm_(&tm) {}

  BeamPoint operator()(const BeamPoint& x) {
    last_ = (*tm_)(x, last_);
    return *last_;
  }
  void reset(std::optional<BeamPoint> hint = std::nullopt) { last_ = std::move(hint); }
  const std::optional<BeamPoint>& last() const { return last_; }

 private:
  const TransformedMap* tm_;
  std::optional<BeamPoint> last_;
};

inline BeamPoint transform_eval(const TransformedMap& tm, const BeamPoint& x) { return tm(x); }

/// gamma_t(u) = f~(u, t).
inline BeamPoint slice_gamma(const TransformedMap& tm, double t, const VecN& u,
                             const std::optional<BeamPoint>& hint = std::nullopt) {
  if (!(t < tm.M())) throw DomainError("slice_gamma: t must be below M");
  return tm(BeamPoint(u, t), hint);
}

struct PartialsOptions {
  double step = 1e-5;
  /// Lipschitz bound used by the jump test |delta| > factor * step * bound.
  double bound_hint = 100.0;
  double jump_factor = 10.0;
  /// Relative disagreement between one-sided quotients that marks a crease.
  double crease_tol = 1e-3;
};

struct SlicePartials {
  std::vector<VecN> d;  // n-1 vectors in R^n
  BeamPoint center;
  bool crease = false;
  bool one_sided = false;
};

/// Finite-difference partials of gamma_t at u. All stencil points are resolved
/// against the branch of the centre value.
inline SlicePartials slice_partials(const TransformedMap& tm, double t, const VecN& u, const PartialsOptions& opt = {},
                                    const std::optional<BeamPoint>& hint = std::nullopt) {
  if (!(opt.step > 0.0)) throw InvalidInput("slice_partials: step must be positive");
  const int m = tm.dim() - 1;
  if (u.dim() != m) throw InvalidInput("slice_partials: wrong base dimension");
  SlicePartials out;
  out.center = slice_gamma(tm, t, u, hint);
  const BeamPoint& c = out.center;
  const double h = opt.step;
  const double jump = opt.jump_factor * h * opt.bound_hint;
  auto at = [&](int axis, double off) {
    VecN v = u;
    v[axis] += off;
    return slice_gamma(tm, t, v, c).vec();
  };

  for (int i = 0; i < m; ++i) {
    const VecN p = at(i, h), q = at(i, -h);
    const VecN fwd = (p - c.vec()) * (1.0 / h);
    const VecN bwd = (c.vec() - q) * (1.0 / h);
    const bool fwd_ok = norm(p - c.vec()) <= jump && fwd.finite();
    const bool bwd_ok = norm(c.vec() - q) <= jump && bwd.finite();
    if (!fwd_ok && !bwd_ok) throw BranchJumpError("slice_partials: both one-sided stencils jump");
    if (fwd_ok != bwd_ok) {
      out.one_sided = true;
      out.d.push_back(fwd_ok ? fwd : bwd);
      continue;
    }
    const double scale = std::max(norm(fwd), norm(bwd));
    if (norm(fwd - bwd) > opt.crease_tol * scale) {
      // pick the side that looks affine over two steps
      out.crease = true;
      out.one_sided = true;
      const VecN p2 = at(i, 2.0 * h), q2 = at(i, -2.0 * h);
      const double rf = norm((p2 - p) * (1.0 / h) - fwd);
      const double rb = norm((q - q2) * (1.0 / h) - bwd);
      out.d.push_back(rf <= rb ? fwd : bwd);
      continue;
    }
    out.d.push_back((p - q) * (0.5 / h));
  }
  return out;
}

}  // namespace qcg
