// Batch experiment runner.
//
//   qcgrowth <command> [--config FILE] [--out DIR] [--seed N] [--budget N] [--threads N] [--format csv|json]
//
// Exit status: 0 success, 2 config error, 3 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "qcgrowth/qcgrowth.hpp"

using nlohmann::json;
using namespace qcg;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  std::string stem;
  CsvTable csv;
  json data;
};

const std::vector<std::string> kCommands{"rho-curve", "dq",         "bip",      "subdivide", "qs",
                                         "slice-size", "asym-rep", "gen-derivative", "zoo"};

bool stochastic(const std::string& cmd) {
  return cmd == "rho-curve" || cmd == "dq" || cmd == "subdivide" || cmd == "qs" || cmd == "asym-rep" ||
         cmd == "gen-derivative";
}

template <class T>
T get(const json& cfg, const char* key, T dflt) {
  if (!cfg.contains(key)) return dflt;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

double require_num(const json& cfg, const char* key) {
  if (!cfg.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
  return get<double>(cfg, key, 0.0);
}

// Either an explicit array or {"from": a, "to": b, "step": h}.
std::vector<double> grid(const json& cfg, const char* key, std::vector<double> dflt = {}) {
  if (!cfg.contains(key)) {
    if (dflt.empty()) throw ConfigError(std::string("missing '") + key + "'");
    return dflt;
  }
  const json& g = cfg.at(key);
  if (g.is_array()) {
    std::vector<double> v;
    for (const auto& x : g) {
      if (!x.is_number()) throw ConfigError(std::string("'") + key + "' must hold numbers");
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw ConfigError(std::string("'") + key + "' is empty");
    return v;
  }
  if (g.is_object()) {
    const double a = require_num(g, "from"), b = require_num(g, "to"), h = get<double>(g, "step", 1.0);
    if (!(h > 0.0) || b < a) throw ConfigError(std::string("'") + key + "' needs from <= to and step > 0");
    const long count = std::lround((b - a) / h) + 1;
    std::vector<double> v;
    for (long k = 0; k < count; ++k) v.push_back(a + k * h);
    return v;
  }
  throw ConfigError(std::string("'") + key + "' must be an array or a range object");
}

void below_M(const std::vector<double>& ts, double M, const char* what) {
  for (double t : ts)
    if (!(t < M)) throw ConfigError(std::string(what) + " value " + fmt_double(t) + " is not below M = " + fmt_double(M));
}

QCMap map_from(const json& cfg) {
  if (!cfg.contains("map") || !cfg["map"].is_string()) throw ConfigError("missing 'map' label");
  std::map<std::string, double> p;
  if (cfg.contains("params")) {
    if (!cfg["params"].is_object()) throw ConfigError("'params' must be an object");
    for (const auto& [k, v] : cfg["params"].items()) {
      if (!v.is_number()) throw ConfigError("parameter '" + k + "' must be a number");
      p[k] = v.get<double>();
    }
  }
  try {
    return make_map(cfg["map"].get<std::string>(), get<int>(cfg, "n", 2), p);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

RadiusOptions radius_opts(const json& cfg, int n) {
  RadiusOptions o;
  o.budget = get<std::uint64_t>(cfg, "budget", default_budget(n));
  o.seed = get<std::uint64_t>(cfg, "seed", 1);
  o.threads = get<int>(cfg, "threads", 1);
  o.analytic = get<bool>(cfg, "analytic", false);
  if (o.budget < 2) throw ConfigError("budget must be at least 2");
  return o;
}

std::string bstr(bool b) { return b ? "1" : "0"; }

json curve_json(const MeanRadiusCurve& c) {
  json flags = json::array();
  for (bool b : c.flagged) flags.push_back(b);
  return {{"map", c.label}, {"n", c.n},         {"seed", c.seed},       {"budget", c.budget},
          {"t", c.t},       {"rhoTilde", c.rho_tilde}, {"stdError", c.error}, {"flagged", flags}};
}

int count_flags(const MeanRadiusCurve& c) {
  int k = 0;
  for (bool b : c.flagged) k += b;
  return k;
}

// ---------------------------------------------------------------------------

std::vector<Output> run_rho_curve(const json& cfg, const std::string& hash, json& notes) {
  const QCMap f = map_from(cfg);
  const auto ts = grid(cfg, "tGrid");
  below_M(ts, f.M, "tGrid");
  const auto c = log_transform_curve(f, ts, radius_opts(cfg, f.n));
  CsvTable t = curve_csv(c, hash);
  if (const int k = count_flags(c)) {
    notes["flaggedPoints"] = k;
    t.comments.push_back("flagged=" + std::to_string(k));
  }
  return {{"rho-curve", t, curve_json(c)}};
}

std::vector<Output> run_dq(const json& cfg, const std::string& hash, json& notes) {
  const QCMap f = map_from(cfg);
  const auto ts = grid(cfg, "tGrid");
  below_M(ts, f.M, "tGrid");
  const auto c = log_transform_curve(f, ts, radius_opts(cfg, f.n));
  std::vector<DifferenceQuotient> q;
  try {
    q = cfg.contains("lags") ? difference_quotients(c, grid(cfg, "lags")) : difference_quotients(c);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (q.empty()) throw ConfigError("no grid pairs at the requested lags");
  const auto bl = bi_lipschitz_estimate(q);
  if (const int k = count_flags(c)) notes["flaggedPoints"] = k;
  CsvTable t;
  t.comments = {"map=" + f.label + " n=" + std::to_string(f.n) + " config=" + hash,
                "lmin=" + fmt_double(bl.lmin) + " lmax=" + fmt_double(bl.lmax) + " L=" + fmt_double(bl.L)};
  t.header = {"t0", "lag", "dq"};
  json rows = json::array();
  for (const auto& d : q) {
    t.add_row(std::vector<double>{d.t0, d.lag, d.dq});
    rows.push_back({{"t0", d.t0}, {"lag", d.lag}, {"dq", d.dq}});
  }
  json data{{"curve", curve_json(c)}, {"quotients", rows}, {"biLipschitz", {{"lmin", bl.lmin}, {"lmax", bl.lmax}, {"L", bl.L}}}};
  return {{"dq", t, data}};
}

std::vector<Output> run_bip(const json& cfg, const std::string& hash, json& notes) {
  const TransformedMap tm(map_from(cfg));
  const auto ts = grid(cfg, "tSamples");
  below_M(ts, tm.M(), "tSamples");
  BipOptions o;
  o.res = get<int>(cfg, "res", 32);
  o.refine = get<bool>(cfg, "refine", true);
  o.threads = get<int>(cfg, "threads", 1);
  const auto r = bip_sup(tm, ts, o);
  if (r.excluded) notes["excludedCells"] = r.excluded;
  CsvTable t;
  t.comments = {"map=" + tm.source().label + " n=" + std::to_string(tm.dim()) + " res=" + std::to_string(o.res) +
                    " config=" + hash,
                "sup=" + fmt_double(r.sup) + " slope=" + fmt_double(r.slope) + " mad=" + fmt_double(r.mad) +
                    " verdict=" + to_string(r.verdict) + " excluded=" + std::to_string(r.excluded)};
  t.header = {"t", "integral", "delta"};
  for (std::size_t k = 0; k < r.t.size(); ++k) t.add_row(std::vector<double>{r.t[k], r.integrals[k], r.deltas[k]});
  json data{{"t", r.t},         {"integrals", r.integrals}, {"deltas", r.deltas},          {"sup", r.sup},
            {"slope", r.slope}, {"mad", r.mad},             {"verdict", to_string(r.verdict)}, {"excluded", r.excluded}};
  return {{"bip", t, data}};
}

json chain_json(const std::vector<ChainStep>& steps) {
  json a = json::array();
  for (const auto& s : steps) a.push_back({{"name", s.name}, {"small", s.small}, {"large", s.large}, {"holds", s.holds()}});
  return a;
}

std::vector<Output> run_subdivide(const json& cfg, const std::string& hash, json& notes) {
  const TransformedMap tm(map_from(cfg));
  const double t0 = require_num(cfg, "t0"), t = require_num(cfg, "t");
  if (!(t > 0.0 && t < 0.5)) throw ConfigError("t must lie in (0, 0.5)");
  below_M({t0 + 1.0}, tm.M(), "t0 + 1");
  SubdivisionOptions o;
  o.face_samples = get<int>(cfg, "faceSamples", o.face_samples);
  o.mc_samples = get<int>(cfg, "mcSamples", o.mc_samples);
  o.base_quad = get<int>(cfg, "baseQuad", o.base_quad);
  o.vt_budget = get<std::uint64_t>(cfg, "budget", o.vt_budget);
  o.bip.res = get<int>(cfg, "res", o.bip.res);
  o.seed = get<std::uint64_t>(cfg, "seed", 1);
  o.threads = get<int>(cfg, "threads", 1);
  const auto rep = subdivision_analysis(tm, t0, t, o);
  if (rep.flagged) notes["flaggedBoxes"] = rep.flagged;

  CsvTable boxes;
  boxes.comments = {"map=" + tm.source().label + " n=" + std::to_string(rep.n) + " t0=" + fmt_double(t0) +
                    " t=" + fmt_double(t) + " config=" + hash};
  boxes.header = {"index", "diam", "nu", "vol", "volError", "baseImageVol", "projectedVol", "piNorm", "flagged"};
  json jb = json::array();
  for (const auto& b : rep.boxes) {
    boxes.add_row({std::to_string(b.index), fmt_double(b.diam), fmt_double(b.nu), fmt_double(b.vol),
                   fmt_double(b.vol_error), fmt_double(b.base_image_vol), fmt_double(b.projected_vol),
                   fmt_double(b.pi_norm), bstr(b.flagged)});
    jb.push_back({{"index", b.index},
                  {"diam", b.diam},
                  {"nu", b.nu},
                  {"vol", b.vol},
                  {"volError", b.vol_error},
                  {"baseImageVol", b.base_image_vol},
                  {"projectedVol", b.projected_vol},
                  {"piNorm", b.pi_norm},
                  {"flagged", b.flagged}});
  }

  CsvTable sum;
  sum.comments = boxes.comments;
  sum.header = {"quantity", "value"};
  const std::vector<std::pair<std::string, double>> kv{
      {"side", rep.side},          {"N", static_cast<double>(rep.N)},
      {"Vt", rep.Vt},              {"VtError", rep.Vt_error},
      {"VtDirect", rep.Vt_direct}, {"VtDirectError", rep.Vt_direct_error},
      {"projectedTotal", rep.projected_total},
      {"bip", rep.bip},            {"C1", rep.C1},
      {"C2", rep.C2},              {"C3", rep.C3},
      {"ratioC1lo", rep.ratioC1range.lo}, {"ratioC1hi", rep.ratioC1range.hi},
      {"ratioC2lo", rep.ratioC2range.lo}, {"ratioC2hi", rep.ratioC2range.hi},
      {"ratioC3lo", rep.ratioC3range.lo}, {"ratioC3hi", rep.ratioC3range.hi},
      {"lowerRHS", rep.chains.lowerRHS},  {"upperRHS", rep.chains.upperRHS},
      {"chainsHold", rep.chains.all_hold() ? 1.0 : 0.0}};
  for (const auto& [k, v] : kv) sum.add_row({k, fmt_double(v)});

  json s = json::object();
  for (const auto& [k, v] : kv) s[k] = v;
  s["chainsHold"] = rep.chains.all_hold();
  json data{{"summary", s},
            {"boxes", jb},
            {"chains", {{"lower", chain_json(rep.chains.lower)}, {"upper", chain_json(rep.chains.upper)}}}};
  return {{"subdivide", boxes, data}, {"subdivide-summary", sum, json()}};
}

std::vector<Output> run_qs(const json& cfg, const std::string& hash, json&) {
  const TransformedMap tm(map_from(cfg));
  QSRegion reg;
  reg.t_lo = get<double>(cfg, "tLo", reg.t_lo);
  reg.t_hi = get<double>(cfg, "tHi", reg.t_hi);
  if (!(reg.t_lo < reg.t_hi)) throw ConfigError("need tLo < tHi");
  below_M({reg.t_hi}, tm.M(), "tHi");
  QSOptions o;
  o.triples = get<long>(cfg, "triples", o.triples);
  o.bins = get<int>(cfg, "bins", o.bins);
  o.refine = get<int>(cfg, "refine", o.refine);
  o.seed = get<std::uint64_t>(cfg, "seed", 1);
  o.threads = get<int>(cfg, "threads", 1);
  const auto r = weak_qs_estimate(tm, reg, o);
  CsvTable t;
  t.comments = {"map=" + tm.source().label + " n=" + std::to_string(tm.dim()) + " config=" + hash,
                "weakH=" + fmt_double(r.weakH) + " sampledH=" + fmt_double(r.sampledH) + " triples=" + std::to_string(r.triples)};
  t.header = {"ratioBin", "H"};
  for (std::size_t k = 0; k < r.ratioBins.size(); ++k) t.add_row(std::vector<double>{r.ratioBins[k], r.Hcurve[k]});
  return {{"qs", t, {{"ratioBins", r.ratioBins}, {"Hcurve", r.Hcurve}, {"weakH", r.weakH}, {"sampledH", r.sampledH}, {"triples", r.triples}}}};
}

std::vector<Output> run_slice_size(const json& cfg, const std::string& hash, json& notes) {
  const TransformedMap tm(map_from(cfg));
  const auto ts = grid(cfg, "tSamples");
  below_M(ts, tm.M(), "tSamples");
  SliceSizeOptions o;
  o.resolution = get<long>(cfg, "resolution", o.resolution);
  if (cfg.contains("range")) {
    const auto lo = get<std::vector<double>>(cfg["range"], "lo", {}), hi = get<std::vector<double>>(cfg["range"], "hi", {});
    if (static_cast<int>(lo.size()) != tm.dim() - 1 || hi.size() != lo.size())
      throw ConfigError("'range' needs lo and hi with n - 1 coordinates");
    VecN a(tm.dim() - 1), b(tm.dim() - 1);
    for (int i = 0; i < tm.dim() - 1; ++i) {
      a[i] = lo[i];
      b[i] = hi[i];
    }
    o.range = std::make_pair(a, b);
  }
  CsvTable t;
  t.comments = {"map=" + tm.source().label + " n=" + std::to_string(tm.dim()) +
                " resolution=" + std::to_string(o.resolution) + " config=" + hash};
  t.header = {"t0", "size", "flagged", "samples"};
  json rows = json::array();
  int flagged = 0;
  for (double t0 : ts) {
    const auto s = slice_size(tm, t0, o);
    flagged += s.flagged;
    t.add_row({fmt_double(t0), fmt_double(s.size), std::to_string(s.flagged), std::to_string(s.samples)});
    rows.push_back({{"t0", t0}, {"size", s.size}, {"flagged", s.flagged}, {"samples", s.samples}});
  }
  if (flagged) notes["flaggedCells"] = flagged;
  return {{"slice-size", t, rows}};
}

std::vector<double> radii(const json& cfg) {
  std::vector<double> r = grid(cfg, "r", {0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125});
  for (std::size_t k = 0; k < r.size(); ++k)
    if (!(r[k] > 0.0) || (k && !(r[k] < r[k - 1]))) throw ConfigError("'r' must be positive and decreasing");
  if (r.size() < 2) throw ConfigError("'r' needs at least two radii");
  return r;
}

std::vector<Output> run_gen_derivative(const json& cfg, const std::string& hash, json& notes) {
  const QCMap f = map_from(cfg);
  const auto r = radii(cfg);
  std::vector<double> lr;
  for (double x : r) lr.push_back(std::log(x));
  below_M(lr, f.M, "log r");
  const auto g = gen_derivative(f, r, get<int>(cfg, "sphere", 256), radius_opts(cfg, f.n), get<double>(cfg, "tol", 1e-2));
  notes["simple"] = g.simple;
  CsvTable t;
  t.comments = {"map=" + f.label + " n=" + std::to_string(f.n) + " config=" + hash, "simple=" + bstr(g.simple)};
  t.header = {"k", "r", "rho", "distance"};
  for (std::size_t k = 0; k < g.r.size(); ++k)
    t.add_row({std::to_string(k), fmt_double(g.r[k]), fmt_double(g.rho[k]), k ? fmt_double(g.distances[k - 1]) : ""});
  json vals = json::array();
  for (std::size_t i = 0; i < g.directions.size(); ++i) {
    json e = json::array(), v = json::array();
    for (int j = 0; j < f.n; ++j) {
      e.push_back(g.directions[i][j]);
      v.push_back(g.values[i][j]);
    }
    vals.push_back({{"direction", e}, {"value", v}});
  }
  json data{{"r", g.r}, {"rho", g.rho}, {"distances", g.distances}, {"simple", g.simple}, {"boundaryMap", vals}};
  return {{"gen-derivative", t, data}};
}

std::vector<Output> run_asym_rep(const json& cfg, const std::string& hash, json&) {
  const QCMap f = map_from(cfg);
  const auto ts = grid(cfg, "tGrid");
  below_M(ts, f.M, "tGrid");
  const auto opt = radius_opts(cfg, f.n);
  const std::string gmode = get<std::string>(cfg, "g", "identity");
  SphereMap g;
  if (gmode == "identity") {
    g = identity_direction_map();
  } else if (gmode == "derived") {
    const auto r = radii(cfg);
    g = gen_derivative(f, r, get<int>(cfg, "sphere", 256), opt).g;
  } else {
    throw ConfigError("'g' must be identity or derived");
  }
  const double d = get<double>(cfg, "d", f.params.count("d") ? f.params.at("d") : 1.0);
  const auto rep = asymptotic_representative(f, g, d, ts, opt);
  CsvTable t;
  t.comments = {"map=" + f.label + " n=" + std::to_string(f.n) + " g=" + gmode + " d=" + fmt_double(d) + " config=" + hash};
  t.header = {"t", "rhoTilde", "stdError", "residual"};
  std::vector<double> res;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    res.push_back(rep.residual(f, std::exp(ts[k])));
    t.add_row(std::vector<double>{ts[k], rep.rhoCurve.rho_tilde[k], rep.rhoCurve.error[k], res.back()});
  }
  json data{{"curve", curve_json(rep.rhoCurve)}, {"g", gmode}, {"d", d}, {"residual", res}};
  return {{"asym-rep", t, data}};
}

void error_record(const char* kind, const std::string& msg) {
  std::cerr << json{{"error", kind}, {"message", msg}, {"schemaVersion", kSchemaVersion}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Growth experiments for quasiconformal maps via the Zorich transform"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path, out_dir, format;
  std::uint64_t seed = 0, budget = 0;
  int threads = 0;
  auto* o_config = app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  auto* o_out = app.add_option("--out", out_dir, "output directory (default results)");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_budget = app.add_option("--budget", budget, "Monte Carlo samples");
  auto* o_threads = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o_format = app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  (void)o_config;

  for (const auto& c : kCommands) app.add_subcommand(c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("config", e.what());
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  json cfg = json::object();
  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      cfg = json::parse(is);
      if (!cfg.is_object()) throw ConfigError("config must be a JSON object");
    }
  } catch (const json::exception& e) {
    error_record("config", std::string("cannot parse config: ") + e.what());
    return 2;
  } catch (const ConfigError& e) {
    error_record("config", e.what());
    return 2;
  }
  if (o_seed->count()) cfg["seed"] = seed;
  if (o_budget->count()) cfg["budget"] = budget;
  if (o_threads->count()) cfg["threads"] = threads;
  if (o_format->count()) cfg["format"] = format;
  if (o_out->count()) cfg["out"] = out_dir;
  cfg["command"] = cmd;

  if (cmd == "zoo") {
    if (get<std::string>(cfg, "format", "csv") == "json") {
      json a = json::array();
      for (const auto& e : zoo_catalog())
        a.push_back({{"label", e.label}, {"n", e.n == 0 ? json{2, 3} : json{e.n}}, {"M", e.M}, {"params", e.schema}});
      std::cout << versioned("zoo", "-", a).dump(2) << '\n';
    } else {
      std::cout << list_zoo();
    }
    return 0;
  }

  try {
    if (stochastic(cmd) && !cfg.contains("seed")) throw ConfigError("a seed is required for " + cmd);
    const std::string fmt = get<std::string>(cfg, "format", "csv");
    if (fmt != "csv" && fmt != "json") throw ConfigError("format must be csv or json");
    const std::string dir = get<std::string>(cfg, "out", "results");

    // The hash covers the numerical inputs, not where or how results are written.
    json key = cfg;
    key.erase("out");
    key.erase("format");
    key.erase("threads");
    ResultWriter w(dir, key);
    json notes = json::object();

    std::vector<Output> outs;
    if (cmd == "rho-curve") outs = run_rho_curve(cfg, w.hash(), notes);
    else if (cmd == "dq") outs = run_dq(cfg, w.hash(), notes);
    else if (cmd == "bip") outs = run_bip(cfg, w.hash(), notes);
    else if (cmd == "subdivide") outs = run_subdivide(cfg, w.hash(), notes);
    else if (cmd == "qs") outs = run_qs(cfg, w.hash(), notes);
    else if (cmd == "slice-size") outs = run_slice_size(cfg, w.hash(), notes);
    else if (cmd == "gen-derivative") outs = run_gen_derivative(cfg, w.hash(), notes);
    else if (cmd == "asym-rep") outs = run_asym_rep(cfg, w.hash(), notes);

    for (const auto& [k, v] : notes.items()) w.annotate(k, v);
    for (const auto& o : outs) {
      if (fmt == "csv") w.add(o.stem, "csv", o.csv.str());
      else if (!o.data.is_null()) w.add(o.stem, "json", versioned(o.stem, w.hash(), o.data).dump(2) + "\n");
    }
    for (const auto& p : w.commit()) std::cout << p.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    error_record("config", e.what());
    return 2;
  } catch (const InvalidInput& e) {
    error_record("config", e.what());
    return 2;
  } catch (const DomainError& e) {
    error_record("config", e.what());
    return 2;
  } catch (const json::exception& e) {
    error_record("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_record("numerical", e.what());
    return 3;
  }
}
