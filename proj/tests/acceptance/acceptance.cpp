// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qcgrowth/qcgrowth.hpp"

using namespace qcg;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void need(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::vector<double> range(double a, double b, double h) {
  std::vector<double> v;
  const long n = std::lround((b - a) / h);
  for (long k = 0; k <= n; ++k) v.push_back(a + k * h);
  return v;
}

RadiusOptions mc(std::uint64_t budget, std::uint64_t seed = 1) {
  RadiusOptions o;
  o.budget = budget;
  o.seed = seed;
  return o;
}

TransformedMap tmap(const std::string& label, int n, const std::map<std::string, double>& p = {}) {
  return TransformedMap(make_map(label, n, p));
}

// ---------------------------------------------------------------------------

Verdict exact_curves() {
  Verdict v;
  const auto grid = range(-10.0, -1.0, 0.5);
  double worst = 0.0;
  for (int n : {2, 3}) {
    const auto id = log_transform_curve(make_map("identity", n), grid, mc(1 << 16));
    const auto half = log_transform_curve(make_map("half", n), grid, mc(1 << 16));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      worst = std::max(worst, std::abs(id.rho_tilde[k] - grid[k]));
      worst = std::max(worst, std::abs(half.rho_tilde[k] - (grid[k] - std::log(2.0))));
    }
  }
  v.need(worst < 1e-9, "max |error| = " + g(worst));
  v.note("max |error| " + g(worst));
  return v;
}

Verdict linear_map() {
  Verdict v;
  const auto grid = range(-10.0, -1.0, 0.5);
  const auto c = log_transform_curve(make_map("diag", 2), grid, mc(1000000, 2));
  double dev = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double e = std::abs(c.rho_tilde[k] - (grid[k] + std::log(2.0)));
    dev = std::max(dev, e);
    v.need(e <= 3.0 * c.error[k] + 1e-12, "rho~ at t = " + g(grid[k]) + " off by " + g(e));
  }
  double dq = 0.0;
  for (const auto& q : difference_quotients(c)) dq = std::max(dq, std::abs(q.dq - 1.0));
  v.need(dq < 1e-3, "max |dq - 1| = " + g(dq));
  v.note("max |rho~ - (t + ln 2)| " + g(dev) + ", max |dq - 1| " + g(dq));
  return v;
}

Verdict power_map() {
  Verdict v;
  const auto grid = range(-10.0, -1.0, 1.0);
  double dq = 0.0, bl = 0.0, bip = 0.0;
  for (int n : {2, 3}) {
    const QCMap f = make_map("power", n, {{"d", 2.0}});
    const auto c = log_transform_curve(f, grid, mc(default_budget(n), 3));
    const auto q = difference_quotients(c);
    for (const auto& d : q) dq = std::max(dq, std::abs(d.dq - 2.0));
    bl = std::max(bl, std::abs(bi_lipschitz_estimate(q).L - 2.0));
    const TransformedMap tm(f);
    for (double t : {-8.0, -6.0, -4.0, -2.0, -1.0}) bip = std::max(bip, std::abs(bip_integral(tm, t).value - 2.0));
  }
  v.need(dq < 1e-3, "max |dq - 2| = " + g(dq));
  v.need(bl < 1e-3, "|L - 2| = " + g(bl));
  v.need(bip < 1e-6, "max |BIP - 2| = " + g(bip));
  v.note("max |dq - 2| " + g(dq) + ", |L - 2| " + g(bl) + ", max |BIP - 2| " + g(bip));
  return v;
}

Verdict log_corrected() {
  Verdict v;
  const QCMap f = make_map("log-corrected", 2, {{"d", 2.0}});
  const auto h = homogeneity_check(f, 2.0, 0.8, {-3.0, -40.0}, mc(1000000, 4));
  v.need(std::abs(h[0] - 1.0) > 0.05, "ratio at t = -3 is " + g(h[0]));
  v.need(std::abs(h[1] - 1.0) < 0.01, "ratio at t = -40 is " + g(h[1]));
  const auto c = log_transform_curve(f, range(-40.0, -19.0, 0.5), mc(1000000, 4));
  double lo = 1e300, hi = -1e300;
  for (const auto& q : difference_quotients(c, {0.5, 1.0})) {
    if (q.t0 > -20.0) continue;
    lo = std::min(lo, q.dq);
    hi = std::max(hi, q.dq);
  }
  v.need(lo >= 2.0 && hi <= 2.06, "dq range [" + g(lo) + ", " + g(hi) + "]");
  v.note("homogeneity ratios " + g(h[0]) + " (t=-3), " + g(h[1]) + " (t=-40); dq in [" + g(lo) + ", " + g(hi) + "]");
  return v;
}

Verdict spiral() {
  Verdict v;
  const QCMap f = make_map("spiral", 2, {{"c", 1.0}});
  const auto grid = range(-10.0, -1.0, 0.5);
  const auto c = log_transform_curve(f, grid, mc(1 << 16, 5));
  double e = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) e = std::max(e, std::abs(c.rho_tilde[k] - grid[k]));
  v.need(e < 1e-9, "max |rho~ - t| = " + g(e));

  const TransformedMap tm(f);
  SliceSizeOptions so;
  so.resolution = 10000;
  double se = 0.0;
  for (double t0 : {-1.0, -3.0, -6.0}) se = std::max(se, std::abs(slice_size(tm, t0, so).size / 2.0 - 1.0));
  v.need(se < 1e-3, "slice size relative error " + g(se));

  const auto r = bip_sup(tm, {-1.0, -3.0, -6.0, -10.0});
  const auto [mn, mx] = std::minmax_element(r.integrals.begin(), r.integrals.end());
  const double spread = (*mx - *mn) / *mn;
  v.need(spread < 0.01, "BIP spread " + g(spread));
  v.note("max |rho~ - t| " + g(e) + ", slice rel err " + g(se) + ", BIP spread " + g(spread));
  return v;
}

Verdict zorich_properties() {
  Verdict v;
  for (int n : {2, 3}) {
    const ZorichMap z(n);
    Rng rng(6, static_cast<std::uint64_t>(n));
    double norm_dev = 0.0, scale_dev = 0.0, auto_dev = 0.0, trip = 0.0;
    const auto gens = z.generators();
    for (int k = 0; k < 10000; ++k) {
      VecN u(n - 1);
      for (int i = 0; i < n - 1; ++i) u[i] = rng.uniform(-3.0, 3.0);
      const double t = rng.uniform(-5.0, 2.0);
      const BeamPoint x(u, t);
      const VecN zx = z(x);
      norm_dev = std::max(norm_dev, std::abs(norm(zx) / std::exp(t) - 1.0));
      const VecN z0 = z(BeamPoint(u, 0.0)) * std::exp(t);
      scale_dev = std::max(scale_dev, norm(zx - z0) / norm(zx));
      for (const auto& gen : gens) auto_dev = std::max(auto_dev, norm(z(gen.apply(x)) - zx) / norm(zx));
      // interior of Q x R: stay off the cell walls and creases
      VecN ui(n - 1);
      const VecN lo = z.group().fundamental_lo(), hi = z.group().fundamental_hi();
      for (int i = 0; i < n - 1; ++i) ui[i] = rng.uniform(lo[i] + 1e-6, hi[i] - 1e-6);
      const BeamPoint xi(ui, t);
      trip = std::max(trip, z.quotient_distance(z.inverse(z(xi)), xi));
    }
    const std::string tag = "n=" + std::to_string(n) + " ";
    v.need(norm_dev < 1e-12, tag + "norm identity " + g(norm_dev));
    v.need(scale_dev < 1e-12, tag + "slice scaling " + g(scale_dev));
    v.need(auto_dev < 1e-12, tag + "automorphy " + g(auto_dev));
    v.need(trip < 1e-9, tag + "round trip " + g(trip));
    v.note(tag + "norm " + g(norm_dev) + " scale " + g(scale_dev) + " auto " + g(auto_dev) + " trip " + g(trip));
  }
  return v;
}

SubdivisionOptions sub_opts() {
  SubdivisionOptions o;
  o.seed = 11;
  return o;
}

Verdict subdivision_combinatorics() {
  Verdict v;
  for (int n : {2, 3})
    for (double t : {0.05, 0.02, 0.01}) {
      const double q = static_cast<double>(subdivision_count(t, n)) * std::pow(t, n - 1);
      v.need(q >= 1.9 && q <= 2.1, "N t^(n-1) = " + g(q) + " at n=" + std::to_string(n) + " t=" + g(t));
    }
  double proj_min = 1e300;
  for (int n : {2, 3})
    for (const char* label : {"identity", "diag"}) {
      const auto tm = tmap(label, n);
      const auto a = subdivision_analysis(tm, -5.0, 0.1, sub_opts());
      const auto b = subdivision_analysis(tm, -5.0, 0.05, sub_opts());
      const std::string tag = std::string(label) + " n=" + std::to_string(n);
      v.need(a.ratioC1range.overlaps(b.ratioC1range, 1e-9), tag + " C1 ranges disjoint");
      v.need(a.ratioC2range.overlaps(b.ratioC2range, 1e-9), tag + " C2 ranges disjoint");
      v.need(a.ratioC3range.overlaps(b.ratioC3range, 1e-9), tag + " C3 ranges disjoint");
      for (const auto* r : {&a, &b}) {
        proj_min = std::min(proj_min, r->projected_total);
        v.need(r->projected_total >= 2.0, tag + " projected total " + g(r->projected_total));
      }
    }
  v.note("N t^(n-1) = 2 on all grids; min projected total " + g(proj_min));
  return v;
}

std::vector<std::pair<std::string, QCMap>> bip_zoo() {
  std::vector<std::pair<std::string, QCMap>> z;
  for (int n : {2, 3})
    for (const char* l : {"identity", "scalar", "diag", "power", "log-corrected"})
      z.emplace_back(std::string(l) + " n=" + std::to_string(n), make_map(l, n));
  z.emplace_back("spiral n=2", make_map("spiral", 2));
  z.emplace_back("snowflake L=0", make_map("snowflake", 2, {{"L", 0}}));
  return z;
}

Verdict bound_chains_hold() {
  Verdict v;
  int runs = 0;
  double tightest = 1e300;
  for (const auto& [name, f] : bip_zoo()) {
    const TransformedMap tm(f);
    for (double t : {0.2, 0.1, 0.05}) {
      const auto rep = subdivision_analysis(tm, -5.0, t, sub_opts());
      const std::string tag = name + " t=" + g(t);
      for (const auto* chain : {&rep.chains.lower, &rep.chains.upper})
        for (const auto& s : *chain) v.need(s.holds(), tag + " step " + s.name + ": " + g(s.small) + " > " + g(s.large));
      const auto vc = volume_comparison(f, -5.0, t, mc(default_budget(f.n), 12));
      const auto b = dq_bracket(rep.chains, vc, t);
      v.need(b.brackets(), tag + " dq " + g(b.measured) + " outside [" + g(b.lower) + ", " + g(b.upper) + "]");
      tightest = std::min(tightest, b.measured / b.lower);
      ++runs;
    }
  }
  v.note(std::to_string(runs) + " runs; smallest measured/lower " + g(tightest));
  return v;
}

Verdict volume_ratio() {
  Verdict v;
  const std::vector<double> ts{0.2, 0.1, 0.05, 0.025};
  double id_dev = 0.0, worst = 0.0;
  std::string worst_name;
  for (int n : {2, 3}) {
    for (double t : ts)
      id_dev = std::max(id_dev, std::abs(volume_comparison(make_map("identity", n), -5.0, t, mc(200000, 13)).ratio - 0.5));
    std::vector<std::string> labels{"scalar", "diag", "power", "log-corrected"};
    if (n == 2) labels.push_back("spiral");
    for (const auto& l : labels) {
      const QCMap f = make_map(l, n);
      double lo = 1e300, hi = 0.0;
      for (double t : ts) {
        const double r = volume_comparison(f, -5.0, t, mc(default_budget(n), 13)).ratio;
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      const double var = hi / lo - 1.0;
      v.need(var < 0.2, l + " n=" + std::to_string(n) + " varies by " + g(var));
      if (var > worst) {
        worst = var;
        worst_name = l + " n=" + std::to_string(n);
      }
    }
  }
  v.need(id_dev < 1e-3, "identity ratio off by " + g(id_dev));
  v.note("identity |ratio - 0.5| " + g(id_dev) + "; largest variation " + g(worst) + " (" + worst_name + ")");
  return v;
}

Verdict snowflake_levels() {
  Verdict v;
  SliceSizeOptions so;
  so.resolution = 100000;
  so.range = std::make_pair(VecN{1.0 - 1.0 / 16}, VecN{1.0 + 1.0 / 16});
  std::vector<double> sizes, maxdq;
  RadiusOptions ro;
  ro.analytic = true;
  const auto grid = range(-9.0, -7.0, 0.125);
  for (int L = 0; L <= 4; ++L) {
    const QCMap f = make_map("snowflake", 2, {{"L", static_cast<double>(L)}});
    sizes.push_back(slice_size(TransformedMap(f), -8.0, so).size);
    double m = -1e300;
    for (const auto& q : difference_quotients(log_transform_curve(f, grid, ro), {0.125})) m = std::max(m, q.dq);
    maxdq.push_back(m);
  }
  std::string ratios;
  for (int L = 1; L <= 4; ++L) {
    const double r = sizes[L] / sizes[L - 1];
    ratios += (L > 1 ? " " : "") + g(r);
    v.need(std::abs(r / (4.0 / 3.0) - 1.0) <= 0.02, "slice ratio at L=" + std::to_string(L) + " is " + g(r));
    v.need(maxdq[L] > maxdq[L - 1], "max dq not increasing at L=" + std::to_string(L) + ": " + g(maxdq[L - 1]) + " -> " +
                                         g(maxdq[L]));
  }
  BipOptions bo;
  bo.res = 512;
  const std::vector<double> ts{-7.0, -6.0, -5.0, -4.0, -3.0};
  const auto b0 = bip_sup(tmap("snowflake", 2, {{"L", 0}}), ts, bo);
  const auto b4 = bip_sup(tmap("snowflake", 2, {{"L", 4}}), ts, bo);
  v.need(b0.verdict == BipVerdict::Bounded, std::string("L=0 verdict ") + to_string(b0.verdict));
  v.need(b4.verdict == BipVerdict::Growing, std::string("L=4 verdict ") + to_string(b4.verdict));
  char dq[128];
  std::snprintf(dq, sizeof dq, "%.6f %.6f %.6f %.6f %.6f", maxdq[0], maxdq[1], maxdq[2], maxdq[3], maxdq[4]);
  v.note("slice ratios " + ratios + "; max dq " + dq + "; BIP " + to_string(b0.verdict) + " -> " + to_string(b4.verdict));
  return v;
}

Verdict asymptotic_pipeline() {
  Verdict v;
  struct Case {
    std::string name;
    QCMap f;
    double d;
  };
  const std::vector<Case> cases{{"diag(1,4)", make_map("diag", 2), 1.0},
                                {"power n=2", make_map("power", 2, {{"d", 2.0}}), 2.0},
                                {"power n=3", make_map("power", 3, {{"d", 2.0}}), 2.0}};
  const std::vector<double> r_seq{std::exp(-6.0), std::exp(-7.0), std::exp(-8.0), std::exp(-9.0), std::exp(-10.0)};
  const auto grid = range(-12.0, -2.0, 0.5);
  for (const auto& c : cases) {
    double L[2], res = 0.0;
    for (int k = 0; k < 2; ++k) {
      const std::uint64_t budget = (k + 1) * default_budget(c.f.n) / 4;
      const auto opt = mc(budget, 21);
      const auto gd = gen_derivative(c.f, r_seq, 256, opt);
      const auto rep = asymptotic_representative(c.f, gd.g, c.d, grid, opt);
      if (k == 0) res = rep.residual(c.f, std::exp(-10.0));
      L[k] = sampled_bi_lipschitz(TransformedMap(rep.D), -8.0, -2.0, 20000L * (k + 1), 22).L;
    }
    v.need(res < 0.01, c.name + " residual " + g(res));
    v.need(std::isfinite(L[0]) && std::isfinite(L[1]), c.name + " bi-Lipschitz constant not finite");
    v.need(std::abs(L[1] / L[0] - 1.0) <= 0.1, c.name + " bi-Lipschitz " + g(L[0]) + " -> " + g(L[1]));
    v.note(c.name + ": residual " + g(res) + ", L " + g(L[0]) + " -> " + g(L[1]));
  }
  return v;
}

Verdict weak_qs() {
  Verdict v;
  QSOptions o;
  o.seed = 31;
  const QSRegion reg;
  for (int n : {2, 3}) {
    const double h = weak_qs_estimate(tmap("identity", n), reg, o).weakH;
    v.need(h == 1.0, "identity n=" + std::to_string(n) + " weakH " + g(h));
  }
  const double h1 = weak_qs_estimate(tmap("diag", 2), reg, o).weakH;
  o.triples *= 2;
  const double h2 = weak_qs_estimate(tmap("diag", 2), reg, o).weakH;
  v.need(std::abs(h2 / h1 - 1.0) <= 0.1, "diag weakH " + g(h1) + " -> " + g(h2));
  v.note("identity weakH 1; diag " + g(h1) + " -> " + g(h2));
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime bound
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all{
      {1, "exact curves", 10, exact_curves},
      {2, "linear map diag(1,4)", 120, linear_map},
      {3, "radial power map", 120, power_map},
      {4, "log-corrected map", 0, log_corrected},
      {5, "spiral map", 0, spiral},
      {6, "Zorich properties", 10, zorich_properties},
      {7, "subdivision combinatorics", 0, subdivision_combinatorics},
      {8, "bound chains", 0, bound_chains_hold},
      {9, "volume comparison ratio", 0, volume_ratio},
      {10, "snowflake levels", 600, snowflake_levels},
      {11, "asymptotic representative", 0, asymptotic_pipeline},
      {12, "weak quasisymmetry", 0, weak_qs},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0 && secs > c.limit_s) v.need(false, "runtime " + g(secs) + " s over " + g(c.limit_s) + " s");
    failed += !v.pass;
    std::printf("%s  %2d  %-26s %7.2fs  %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
