#include "platelab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "platelab/ls_checker.hpp"
#include "platelab/plate_discrete.hpp"
#include "platelab/sampling.hpp"
#include "platelab/stab_lab.hpp"
#include "platelab/weight_design.hpp"

namespace platelab::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

}  // namespace

std::string RunConfig::normalize_key(const std::string& key) {
  std::string k = trim(key);
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = normalize_key(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (cfg.has(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    cfg.set(key, trim(line.substr(eq + 1)), where);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return parse(f, path);
}

void RunConfig::set(const std::string& key, const std::string& value, const std::string& source) {
  entries_[normalize_key(key)] = Entry{value, source};
}

void RunConfig::merge(const RunConfig& other) {
  for (const auto& [k, e] : other.entries_) entries_[k] = e;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(normalize_key(key)) > 0; }

const RunConfig::Entry& RunConfig::entry(const std::string& key) const {
  const auto it = entries_.find(normalize_key(key));
  if (it == entries_.end()) throw ConfigError("missing configuration key '" + key + "'");
  return it->second;
}

std::string RunConfig::get_string(const std::string& key) const { return entry(key).value; }

double RunConfig::get_double(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (trim(e.value.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(e.source + ": field '" + key + "' expects a finite number, got '" + e.value + "'");
}

int RunConfig::get_int(const std::string& key) const {
  const Entry& e = entry(key);
  try {
    size_t used = 0;
    const long v = std::stol(e.value, &used);
    if (trim(e.value.substr(used)).empty() && v >= -2147483647L && v <= 2147483647L)
      return static_cast<int>(v);
  } catch (const std::exception&) {
  }
  throw ConfigError(e.source + ": field '" + key + "' expects an integer, got '" + e.value + "'");
}

bool RunConfig::get_bool(const std::string& key) const {
  const Entry& e = entry(key);
  std::string v = e.value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(e.source + ": field '" + key + "' expects true/false, got '" + e.value + "'");
}

std::vector<double> RunConfig::get_list(const std::string& key) const {
  const Entry& e = entry(key);
  std::vector<double> out;
  for (const auto& part : split(e.value, ',')) {
    try {
      size_t used = 0;
      const double v = std::stod(part, &used);
      if (used != part.size() || !std::isfinite(v)) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(e.source + ": field '" + key + "' expects a comma-separated list of numbers");
    }
  }
  if (out.empty()) throw ConfigError(e.source + ": field '" + key + "' is empty");
  return out;
}

json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [k, e] : entries_) j[k] = e.value;
  return j;
}

namespace {

void dump_rec(std::ostringstream& os, const json& j, int indent, int level) {
  const std::string pad = indent > 0 ? std::string(static_cast<size_t>(indent * (level + 1)), ' ') : "";
  const std::string pad_close = indent > 0 ? std::string(static_cast<size_t>(indent * level), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{" << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << "," << nl;
        first = false;
        os << pad << json(it.key()).dump() << sep;
        dump_rec(os, it.value(), indent, level + 1);
      }
      os << nl << pad_close << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[" << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << "," << nl;
        first = false;
        os << pad;
        dump_rec(os, v, indent, level + 1);
      }
      os << nl << pad_close << "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      os << (std::isfinite(v) ? format_double(v) : std::string("null"));
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::ostringstream os;
  dump_rec(os, j, indent, 0);
  return os.str();
}

namespace {

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

const std::vector<KeySpec> kCommon{
    {"seed", "0", "random seed"},
    {"out", "-", "output path ('-' for stdout)"},
    {"manifest", "", "write a JSON run manifest to this path"},
};

const std::vector<KeySpec> kDomain{
    {"domain", "interval", "interval or rectangle"},
    {"n", "100", "cells along x"},
    {"ny", "0", "cells along y (0: same as n)"},
    {"length", "1", "length along x"},
    {"ly", "1", "length along y"},
    {"bc", "clamped", "boundary pair"},
    {"a", "default", "boundary parameter a'"},
    {"rigidity", "", "variable rigidity: const:v, affine:a0:a1 or file:path (1-D)"},
    {"metric", "1,1", "constant diagonal metric coefficients (rectangle)"},
};

const std::vector<KeySpec> kWeight{
    {"dim", "1", "1 (interval model) or 2 (strip, weight along the normal axis)"},
    {"psi", "bump:0:1:0.5", "bump:a:length:center or poly:c0,c1,..."},
    {"region-lo", "", "verification box lower corner (default by dim)"},
    {"region-hi", "", "verification box upper corner (default by dim)"},
    {"points", "33", "grid points per axis"},
    {"tau0", "0.2", "lower band tau >= tau0 * sigma"},
    {"tau-upper-ratio", "inf", "upper band tau <= ratio * sigma (inf: none)"},
    {"xi-resolution", "65", "samples along the q_a = 0 line"},
    {"metric", "", "constant diagonal metric coefficients (default euclidean)"},
};

std::vector<CommandSpec> command_specs() {
  auto cat = [](std::vector<KeySpec> a, const std::vector<KeySpec>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  std::vector<CommandSpec> v;
  v.push_back({"ls-check", "Lopatinskii-Sapiro checks with rank and positivity oracles",
               cat(kCommon, {{"bc", "clamped", "catalog pair"},
                             {"a", "default", "boundary parameter a'"},
                             {"bc-file", "", "declarative boundary-pair file (overrides bc)"},
                             {"tau", "", "fixed tau (0: unconjugated only; empty: random)"},
                             {"kappa0", "0.5", "lower band tau >= kappa0 * sigma"},
                             {"samples", "200", "random samples per check"},
                             {"weight-dn", "1", "normal derivative of the weight"},
                             {"weight-dt", "0", "tangential derivative of the weight"}})});
  v.push_back({"roots", "roots and case classification of the conjugated symbol",
               cat(kCommon, {{"xi", "1", "tangential covector (comma list)"},
                             {"tau", "1", "tau"},
                             {"sigma", "0.5", "sigma"},
                             {"weight-dn", "1", "normal derivative of the weight"},
                             {"weight-dt", "0", "tangential derivative of the weight (comma list)"},
                             {"tol", "1e-9", "classification tolerance (relative to lambda)"}})});
  v.push_back({"subell", "sub-ellipticity check of phi = exp(gamma psi)",
               cat(cat(kCommon, kWeight), {{"gamma", "1", "gamma"}})});
  v.push_back({"gamma-search", "smallest gamma giving sub-ellipticity, then optional mu search",
               cat(cat(kCommon, kWeight), {{"gamma-max", "1e6", "give up above this gamma"},
                                           {"mu-search", "false", "run the mu search at gamma = 2 gamma0"},
                                           {"recheck-samples", "20000", "fresh samples for the mu recheck"}})});
  v.push_back({"assemble", "assemble the discrete plate operator and export it", cat(kCommon, kDomain)});
  v.push_back({"spectrum", "lowest eigenvalues of the discrete plate operator",
               cat(cat(kCommon, kDomain), {{"count", "10", "number of eigenvalues"},
                                           {"columns", "false", "full columnar export"}})});
  v.push_back({"simulate", "damped plate time integration with energy log",
               cat(cat(kCommon, kDomain), {{"alpha", "bump:0.3:0.5:1.0", "damping profile"},
                                           {"T", "10", "final time"},
                                           {"dt", "0.01", "time step"},
                                           {"log-stride", "auto", "steps between logged rows"},
                                           {"init", "smooth", "smooth, mode:k or kernel"}})});
  v.push_back({"resolvent", "resolvent norm sweep along the imaginary axis",
               cat(cat(kCommon, kDomain), {{"alpha", "bump:0.3:0.5:1.0", "damping profile"},
                                           {"sigma-grid", "0:200:0.5", "lo:hi:step"},
                                           {"threads", "0", "worker threads (0: PLATELAB_THREADS or all cores)"},
                                           {"halfplane", "true", "also compute the spectrum of the reduced generator"}})});
  v.push_back({"decay-fit", "empirical constant of the logarithmic decay bound",
               cat(kCommon, {{"in", "", "energy log CSV"},
                             {"order", "1", "power n of the generator"},
                             {"amp", "", "squared norm of A^n Y0 (default: amp_A<n> from the log header)"}})});
  v.push_back({"catalog", "boundary-pair catalog with determinants at |w'| = 1", kCommon});
  return v;
}

struct Output {
  std::ofstream file;
  std::ostream* os = nullptr;
  std::string path;
};

void open_output(Output& o, const RunConfig& cfg, std::ostream& out) {
  o.path = cfg.get_string("out");
  if (o.path.empty() || o.path == "-") {
    o.os = &out;
    o.path = "-";
    return;
  }
  o.file.open(o.path);
  if (!o.file) throw ConfigError(cfg.entry("out").source + ": cannot open output '" + o.path + "'");
  o.os = &o.file;
}

struct Context {
  const RunConfig& cfg;
  std::ostream& out;
  std::ostream& err;
  json summary = json::object();
};

std::uint64_t seed_of(const RunConfig& cfg) {
  const auto& e = cfg.entry("seed");
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(e.value, &used);
    if (used == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(e.source + ": field 'seed' expects a nonnegative integer");
}

json cplx_json(cplx z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

// ---------------------------------------------------------------- ls-check

BoundaryPair boundary_pair_from(const RunConfig& cfg) {
  if (!cfg.get_string("bc-file").empty()) return load_boundary_pair(cfg.get_string("bc-file"));
  const std::string name = cfg.get_string("bc");
  CatalogParams params;
  params.a = cfg.get_string("a") == "default" ? catalog_default_parameter(name) : cfg.get_double("a");
  return catalog_bc(name, params);
}

json point_json(const TangentialPoint& p, const WeightJet& w) {
  return json{{"xi_prime", std::vector<double>(p.xi_prime.data(), p.xi_prime.data() + p.xi_prime.size())},
              {"tau", p.tau},
              {"sigma", p.sigma},
              {"weight_dn", w.d_normal},
              {"weight_dt", std::vector<double>(w.d_tangential.data(), w.d_tangential.data() + w.d_tangential.size())}};
}

json report_json(const LSReport& r) {
  json j{{"verdict", r.verdict},
         {"indeterminate", r.indeterminate},
         {"case", to_string(r.case_tag)},
         {"normalized_margin", r.normalized_margin},
         {"marginal", r.marginal}};
  if (r.determinant) j["determinant"] = cplx_json(*r.determinant);
  if (r.auxiliary_determinant) j["auxiliary_determinant"] = cplx_json(*r.auxiliary_determinant);
  json roots = json::array();
  for (const auto& z : r.upper_roots) roots.push_back(cplx_json(z));
  j["upper_roots"] = roots;
  return j;
}

int cmd_ls_check(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const BoundaryPair bp = boundary_pair_from(cfg);
  const int samples = cfg.get_int("samples");
  if (samples < 1) throw ConfigError(cfg.entry("samples").source + ": samples must be positive");
  const double kappa0 = cfg.get_double("kappa0");
  if (!(kappa0 > 0.0)) throw ConfigError(cfg.entry("kappa0").source + ": kappa0 must be positive");
  const double wdn = cfg.get_double("weight-dn"), wdt = cfg.get_double("weight-dt");
  std::optional<double> fixed_tau;
  if (!cfg.get_string("tau").empty()) {
    fixed_tau = cfg.get_double("tau");
    if (*fixed_tau < 0.0) throw ConfigError(cfg.entry("tau").source + ": tau must be nonnegative");
  }
  Rng rng(seed_of(cfg));
  const MetricField g = MetricField::euclidean(2);
  const Vec x = Vec::Zero(2);
  bool ok = true;
  json counterexample = nullptr;

  Vec unit(1);
  unit << 1.0;
  const LSReport ref = ls_unconjugated(bp, g, x, unit);
  double min_margin = std::numeric_limits<double>::infinity();
  int unc_fail = 0;
  for (int k = 0; k < samples; ++k) {
    Vec w(1);
    w << (k % 2 == 0 ? 1.0 : -1.0) * rng.log_uniform(0.1, 10.0);
    const LSReport r = ls_unconjugated(bp, g, x, w);
    min_margin = std::min(min_margin, r.normalized_margin);
    if (!r.verdict) {
      ++unc_fail;
      if (counterexample.is_null())
        counterexample = json{{"check", "unconjugated"}, {"omega_prime", w(0)}, {"report", report_json(r)}};
    }
  }
  ok = ok && ref.verdict && unc_fail == 0;
  json rep{{"command", "ls-check"},
           {"pair", bp.name},
           {"b1", bp.b1.describe()},
           {"b2", bp.b2.describe()},
           {"unconjugated",
            {{"determinant_at_unit", cplx_json(*ref.determinant)},
             {"verdict_at_unit", ref.verdict},
             {"samples", samples},
             {"failures", unc_fail},
             {"min_normalized_margin", min_margin}}}};

  if (!(fixed_tau && *fixed_tau == 0.0)) {
    int checked = 0, marginal = 0, fails = 0, disagreements = 0;
    double min_pos = std::numeric_limits<double>::infinity();
    std::map<std::string, int> cases;
    for (int k = 0; k < samples; ++k) {
      TangentialPoint p;
      p.x = x;
      p.xi_prime = Vec(1);
      p.xi_prime << 2.0 * rng.normal();
      if (fixed_tau) {
        p.tau = *fixed_tau;
        p.sigma = rng.uniform(0.0, p.tau / kappa0);
      } else {
        p.sigma = rng.uniform(0.0, 3.0);
        p.tau = kappa0 * p.sigma + rng.uniform(0.0, 3.0);
      }
      if (p.lambda_aug() == 0.0) continue;
      const WeightJet w = WeightJet::simple(Vec::Constant(1, wdt), wdn);
      const LSReport r = ls_conjugated(bp, g, w, p);
      if (r.marginal) {
        ++marginal;
        continue;
      }
      ++checked;
      ++cases[to_string(r.case_tag)];
      const int rank = ls_rank_oracle(bp, g, w, p);
      const double pos = positivity_margin(bp, g, w, p);
      min_pos = std::min(min_pos, pos);
      const bool agree = (r.verdict == (rank == 4)) && ((rank == 4) == (pos > kPositivityTolerance));
      if (!agree) ++disagreements;
      if (!r.verdict) ++fails;
      if ((!agree || !r.verdict) && counterexample.is_null())
        counterexample = json{{"check", "conjugated"},
                              {"point", point_json(p, w)},
                              {"report", report_json(r)},
                              {"rank", rank},
                              {"positivity_margin", pos}};
    }
    ok = ok && fails == 0 && disagreements == 0;
    rep["conjugated"] = json{{"samples", samples},
                             {"checked", checked},
                             {"marginal_skipped", marginal},
                             {"failures", fails},
                             {"oracle_disagreements", disagreements},
                             {"min_positivity_margin", min_pos},
                             {"cases", cases},
                             {"kappa0", kappa0}};
  }
  rep["pass"] = ok;
  if (!counterexample.is_null()) rep["counterexample"] = counterexample;
  Output o;
  open_output(o, cfg, ctx.out);
  *o.os << dump_json(rep) << "\n";
  ctx.summary["pass"] = ok;
  return ok ? kExitPass : kExitCheckFailed;
}

// ---------------------------------------------------------------- roots

int cmd_roots(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto xi = cfg.get_list("xi");
  const auto dt = cfg.get_list("weight-dt");
  if (dt.size() != xi.size()) throw ConfigError(cfg.entry("weight-dt").source + ": weight-dt must match xi in length");
  TangentialPoint p;
  p.x = Vec::Zero(static_cast<int>(xi.size()) + 1);
  p.xi_prime = Eigen::Map<const Vec>(xi.data(), static_cast<int>(xi.size()));
  p.tau = cfg.get_double("tau");
  p.sigma = cfg.get_double("sigma");
  p.validate(true);
  const WeightJet w = WeightJet::simple(Eigen::Map<const Vec>(dt.data(), static_cast<int>(dt.size())),
                                        cfg.get_double("weight-dn"));
  const MetricField g = MetricField::euclidean(static_cast<int>(xi.size()) + 1);
  json rep{{"command", "roots"}, {"point", point_json(p, w)}, {"lambda_aug", p.lambda_aug()}};
  json factors = json::array();
  for (int j = 1; j <= 2; ++j) {
    const RootPair rp = factor_roots(g, p, w, j);
    factors.push_back(json{{"factor", j},
                           {"radicand", cplx_json(rp.radicand)},
                           {"alpha", cplx_json(rp.alpha)},
                           {"pi_1", cplx_json(rp.pi_1)},
                           {"pi_2", cplx_json(rp.pi_2)},
                           {"im_sign_criterion", im_sign_criterion(g, p, w, j)}});
  }
  rep["factors"] = factors;
  const RootConfiguration rc = classify_roots(g, p, w, cfg.get_double("tol"));
  json up = json::array(), lo = json::array();
  for (const auto& z : rc.upper_roots) up.push_back(cplx_json(z));
  for (const auto& z : rc.lower_roots) lo.push_back(cplx_json(z));
  rep["classification"] = json{{"case", to_string(rc.case_tag)},
                               {"upper_roots", up},
                               {"upper_factors", rc.upper_factors},
                               {"lower_roots", lo},
                               {"marginal", rc.marginal},
                               {"tolerance", rc.classification_tolerance}};
  Output o;
  open_output(o, cfg, ctx.out);
  *o.os << dump_json(rep) << "\n";
  return kExitPass;
}

// ---------------------------------------------------------------- subell / gamma-search

struct WeightSetup {
  MetricField g;
  FieldPtr psi;
  RegionGrid region;
  SubellipticityOptions opt;
};

WeightSetup weight_setup(const RunConfig& cfg) {
  WeightSetup s;
  const int dim = cfg.get_int("dim");
  if (dim != 1 && dim != 2) throw ConfigError(cfg.entry("dim").source + ": dim must be 1 or 2");
  const std::string spec = cfg.get_string("psi");
  const auto parts = split(spec, ':');
  FieldPtr profile;
  try {
    if (parts.size() == 4 && parts[0] == "bump") {
      profile = std::make_shared<IntervalBumpField>(std::stod(parts[1]), std::stod(parts[2]), std::stod(parts[3]));
    } else if (parts.size() == 2 && parts[0] == "poly") {
      std::vector<double> c;
      for (const auto& t : split(parts[1], ',')) c.push_back(std::stod(t));
      profile = PolynomialField::univariate(c);
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.entry("psi").source + ": " + e.what());
  }
  if (!profile) throw ConfigError(cfg.entry("psi").source + ": psi expects bump:a:length:center or poly:c0,c1,...");
  s.psi = dim == 1 ? profile : std::make_shared<AxisField>(profile, 2, 1);

  auto box = [&](const std::string& key, std::vector<double> def) {
    if (cfg.get_string(key).empty()) return def;
    auto v = cfg.get_list(key);
    if (static_cast<int>(v.size()) != dim)
      throw ConfigError(cfg.entry(key).source + ": " + key + " needs " + std::to_string(dim) + " entries");
    return v;
  };
  const auto lo = box("region-lo", dim == 1 ? std::vector<double>{0.6} : std::vector<double>{0.0, 0.6});
  const auto hi = box("region-hi", dim == 1 ? std::vector<double>{0.95} : std::vector<double>{1.0, 0.95});
  s.region.lo = Eigen::Map<const Vec>(lo.data(), dim);
  s.region.hi = Eigen::Map<const Vec>(hi.data(), dim);
  for (int i = 0; i < dim; ++i)
    if (!(s.region.hi(i) > s.region.lo(i))) throw ConfigError("region-hi must exceed region-lo on every axis");
  s.region.points_per_axis = cfg.get_int("points");
  if (s.region.points_per_axis < 2) throw ConfigError(cfg.entry("points").source + ": points must be at least 2");

  if (cfg.get_string("metric").empty()) {
    s.g = MetricField::euclidean(dim);
  } else {
    const auto m = cfg.get_list("metric");
    if (static_cast<int>(m.size()) != dim)
      throw ConfigError(cfg.entry("metric").source + ": metric needs " + std::to_string(dim) + " entries");
    s.g = MetricField::affine_diagonal(Eigen::Map<const Vec>(m.data(), dim), Mat::Zero(dim, dim));
  }
  s.g.require_elliptic_on_box(s.region.lo, s.region.hi);
  s.opt.tau0 = cfg.get_double("tau0");
  if (!(s.opt.tau0 > 0.0)) throw ConfigError(cfg.entry("tau0").source + ": tau0 must be positive");
  const std::string upper = cfg.get_string("tau-upper-ratio");
  if (upper != "inf") {
    s.opt.tau_upper_ratio = cfg.get_double("tau-upper-ratio");
    if (!(s.opt.tau_upper_ratio > s.opt.tau0))
      throw ConfigError(cfg.entry("tau-upper-ratio").source + ": need tau-upper-ratio > tau0");
  }
  s.opt.xi_resolution = cfg.get_int("xi-resolution");
  return s;
}

int cmd_subell(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const WeightSetup s = weight_setup(cfg);
  const WeightField wf{s.psi, cfg.get_double("gamma")};
  json rep{{"command", "subell"}, {"weight", wf.to_json()}, {"region", s.region.to_json()}, {"tau0", s.opt.tau0}};
  json factors = json::array();
  bool ok = true;
  for (int j = 1; j <= 2; ++j) {
    const auto r = subellipticity_check(s.g, wf, j, s.region, s.opt);
    ok = ok && r.margin > 0.0;
    factors.push_back(r.to_json());
  }
  rep["factors"] = factors;
  rep["pass"] = ok;
  Output o;
  open_output(o, cfg, ctx.out);
  *o.os << dump_json(rep) << "\n";
  ctx.summary["pass"] = ok;
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_gamma_search(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const WeightSetup s = weight_setup(cfg);
  const auto gs = gamma_search(s.g, s.psi, s.region, s.opt, cfg.get_double("gamma-max"));
  json rep{{"command", "gamma-search"}, {"psi", s.psi->to_json()}, {"region", s.region.to_json()}, {"result", gs.to_json()}};
  bool ok = gs.found;
  if (ok && cfg.get_bool("mu-search")) {
    const WeightField wf{s.psi, 2.0 * gs.gamma0};
    json mus = json::array();
    for (int j = 1; j <= 2; ++j) {
      const auto sub = subellipticity_check(s.g, wf, j, s.region, s.opt);
      MuSearchOptions mo;
      mo.tau0 = s.opt.tau0;
      mo.seed = seed_of(cfg);
      mo.recheck_samples = cfg.get_int("recheck-samples");
      const auto m = mu_search(s.g, wf, j, s.region, mo);
      ok = ok && sub.margin > 0.0 && m.found && m.recheck_passed;
      mus.push_back(json{{"factor", j}, {"subellipticity", sub.to_json()}, {"mu_search", m.to_json()}});
    }
    rep["at_twice_gamma0"] = mus;
  }
  rep["pass"] = ok;
  Output o;
  open_output(o, cfg, ctx.out);
  *o.os << dump_json(rep) << "\n";
  ctx.summary["pass"] = ok;
  return ok ? kExitPass : kExitCheckFailed;
}

// ---------------------------------------------------------------- plate commands

DiscretePlateOperator operator_from(const RunConfig& cfg) {
  const std::string domain = cfg.get_string("domain");
  const int n = cfg.get_int("n");
  Grid grid;
  if (domain == "interval") {
    grid = Grid::interval(n, cfg.get_double("length"));
  } else if (domain == "rectangle") {
    const int ny = cfg.get_int("ny") > 0 ? cfg.get_int("ny") : n;
    grid = Grid::rectangle(n, ny, cfg.get_double("length"), cfg.get_double("ly"));
  } else {
    throw ConfigError(cfg.entry("domain").source + ": domain must be interval or rectangle");
  }
  BcSpec bc;
  try {
    bc = BcSpec::of(cfg.get_string("bc"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.entry("bc").source + ": " + e.what());
  }
  if (cfg.get_string("a") != "default") bc.a = cfg.get_double("a");
  PlateCoefficients coef;
  const std::string rig = cfg.get_string("rigidity");
  if (!rig.empty()) {
    if (grid.dim != 1) throw ConfigError(cfg.entry("rigidity").source + ": variable rigidity is 1-D only");
    const auto parts = split(rig, ':');
    std::function<double(double)> a;
    if (parts.size() == 2 && parts[0] == "const") {
      const double c = std::stod(parts[1]);
      a = [c](double) { return c; };
    } else if (parts.size() == 3 && parts[0] == "affine") {
      const double a0 = std::stod(parts[1]), a1 = std::stod(parts[2]);
      a = [a0, a1](double t) { return a0 + a1 * t; };
    } else if (parts.size() >= 2 && parts[0] == "file") {
      const auto prof = std::make_shared<SampledProfile>(SampledProfile::load(rig.substr(5)));
      a = [prof](double t) { return (*prof)(t); };
    } else {
      throw ConfigError(cfg.entry("rigidity").source + ": rigidity expects const:v, affine:a0:a1 or file:path");
    }
    coef.rigidity.resize(grid.cells[0] + 1);
    for (int i = 0; i <= grid.cells[0]; ++i) coef.rigidity(i) = a(i * grid.h(0));
  }
  if (grid.dim == 2) coef.axis_metric = cfg.get_list("metric");
  return assemble(grid, bc, coef);
}

void write_meta(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << ": " << v << "\n";
}

int cmd_assemble(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DiscretePlateOperator op = operator_from(cfg);
  const double sym = symmetry_residual(op);
  const double rq = min_rayleigh_quotient(op);
  double scale = 0.0;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.matrix, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  const bool ok = sym <= 1e-10 && rq >= -1e-8 * scale;
  Output o;
  open_output(o, cfg, ctx.out);
  write_operator_columns(*o.os, op);
  ctx.summary = json{{"symmetry_residual", sym}, {"min_rayleigh_quotient", rq}, {"scale", scale}, {"pass", ok}};
  ctx.err << dump_json(ctx.summary, 0) << "\n";
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_spectrum(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DiscretePlateOperator op = operator_from(cfg);
  const int count = std::min(cfg.get_int("count"), op.size());
  if (count < 1) throw ConfigError(cfg.entry("count").source + ": count must be positive");
  const SpectralScale sc = spectrum(op);
  const int kdim = kernel_dimension(sc);
  Output o;
  open_output(o, cfg, ctx.out);
  if (cfg.get_bool("columns")) {
    SpectralScale head = sc;
    head.mu = sc.mu.head(count);
    head.phi = sc.phi.leftCols(count);
    write_operator_columns(*o.os, op, &head);
  } else {
    write_meta(*o.os, {{"bc", bc_name(op.bc.pair)},
                       {"bc_parameter", format_double(op.bc.a)},
                       {"dim", std::to_string(op.grid.dim)},
                       {"unknowns", std::to_string(op.size())},
                       {"kernel_dimension", std::to_string(kdim)}});
    *o.os << "k,mu\n";
    for (int k = 0; k < count; ++k) *o.os << (k + 1) << "," << format_double(sc.mu(k)) << "\n";
  }
  ctx.summary = json{{"kernel_dimension", kdim}, {"unknowns", op.size()}};
  return kExitPass;
}

Eigen::VectorXd smooth_profile(const DiscretePlateOperator& op) {
  return op.sample([&](const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int a = 0; a < x.size(); ++a) {
      const double s = x(a) / op.grid.length[a];
      v *= s * s * (1.0 - s) * (1.0 - s) * (1.0 + s);
    }
    return v;
  });
}

StateVector initial_state(const RunConfig& cfg, const Generator& gen) {
  const std::string init = cfg.get_string("init");
  StateVector Y = StateVector::zero(gen.size());
  if (init == "smooth") {
    Y.y = smooth_profile(gen.op());
  } else if (init.rfind("mode:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(init.substr(5));
    } catch (const std::exception&) {
      throw ConfigError(cfg.entry("init").source + ": mode:k needs an integer k");
    }
    if (k < 1 || k > gen.size()) throw ConfigError(cfg.entry("init").source + ": mode index out of range");
    Y.y = gen.scale().phi.col(k - 1);
  } else if (init == "kernel") {
    if (gen.kernel_dim() == 0) throw ConfigError(cfg.entry("init").source + ": the operator has no kernel");
    Y.y = gen.kernel_alpha().col(0);
  } else {
    throw ConfigError(cfg.entry("init").source + ": init expects smooth, mode:k or kernel");
  }
  return Y;
}

Generator generator_from(const RunConfig& cfg, const DiscretePlateOperator& op) {
  Eigen::VectorXd alpha;
  try {
    alpha = damping_profile(op, cfg.get_string("alpha"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.entry("alpha").source + ": " + e.what());
  }
  return Generator::build(op, alpha);
}

int cmd_simulate(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DiscretePlateOperator op = operator_from(cfg);
  const Generator gen = generator_from(cfg, op);
  const double T = cfg.get_double("T"), dt = cfg.get_double("dt");
  if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("T and dt must be positive");
  const auto steps = static_cast<long>(std::max(1.0, std::round(T / dt)));
  int stride;
  if (cfg.get_string("log-stride") == "auto")
    stride = static_cast<int>(std::max(1L, steps / 10000));
  else
    stride = cfg.get_int("log-stride");
  if (stride < 1) throw ConfigError(cfg.entry("log-stride").source + ": log-stride must be positive");
  const StateVector Y0 = initial_state(cfg, gen);
  SimulationResult res = simulate(Y0, gen, T, dt, stride);
  auto& log = res.log;
  log.metadata = {{"bc", bc_name(op.bc.pair)},
                  {"bc_parameter", format_double(op.bc.a)},
                  {"unknowns", std::to_string(op.size())},
                  {"alpha", cfg.get_string("alpha")},
                  {"init", cfg.get_string("init")},
                  {"T", format_double(T)},
                  {"steps", std::to_string(res.steps)},
                  {"log_stride", std::to_string(stride)},
                  {"seed", std::to_string(seed_of(cfg))},
                  {"amp_A0", format_double(power_amplitude(Y0, gen, 0))},
                  {"amp_A1", format_double(power_amplitude(Y0, gen, 1))},
                  {"amp_A2", format_double(power_amplitude(Y0, gen, 2))},
                  {"dissipated", format_double(res.dissipated)},
                  {"kernel_drift", format_double(res.max_kernel_drift)},
                  {"monotone", log.monotone() ? "true" : "false"}};
  Output o;
  open_output(o, cfg, ctx.out);
  log.write_csv(*o.os);
  const bool ok = log.monotone();
  ctx.summary = json{{"monotone", ok},
                     {"energy_initial", log.energy.front()},
                     {"energy_final", log.energy.back()},
                     {"dissipated", res.dissipated},
                     {"kernel_drift", res.max_kernel_drift},
                     {"steps", res.steps}};
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_resolvent(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const DiscretePlateOperator op = operator_from(cfg);
  const Generator gen = generator_from(cfg, op);
  const auto parts = split(cfg.get_string("sigma-grid"), ':');
  if (parts.size() != 3) throw ConfigError(cfg.entry("sigma-grid").source + ": sigma-grid expects lo:hi:step");
  std::vector<double> grid;
  try {
    grid = sigma_grid(std::stod(parts[0]), std::stod(parts[1]), std::stod(parts[2]));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(cfg.entry("sigma-grid").source + ": " + e.what());
  }
  int threads = cfg.get_int("threads");
  if (threads <= 0) {
    try {
      threads = thread_count_from_env();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const SweepResult sw = resolvent_sweep(gen, grid, threads);
  bool ok = std::isfinite(sw.fitted_c);
  int skipped = 0;
  for (const auto& r : sw.rows) skipped += r.skipped ? 1 : 0;
  std::vector<std::pair<std::string, std::string>> meta{{"bc", bc_name(op.bc.pair)},
                                                        {"unknowns", std::to_string(op.size())},
                                                        {"alpha", cfg.get_string("alpha")},
                                                        {"sigma_grid", cfg.get_string("sigma-grid")},
                                                        {"skipped", std::to_string(skipped)}};
  ctx.summary = json{{"fitted_c", sw.fitted_c}, {"skipped", skipped}};
  if (cfg.get_bool("halfplane")) {
    const HalfplaneResult hp = halfplane_check(gen);
    double radius = 0.0;
    for (const auto& l : hp.eigenvalues) radius = std::max(radius, std::abs(l));
    const bool in_half = hp.min_re > 1e-9 * std::max(1.0, radius);
    ok = ok && in_half;
    meta.emplace_back("min_re_eigenvalue", format_double(hp.min_re));
    ctx.summary["min_re_eigenvalue"] = hp.min_re;
    ctx.summary["open_right_halfplane"] = in_half;
  }
  Output o;
  open_output(o, cfg, ctx.out);
  write_meta(*o.os, meta);
  sw.write_csv(*o.os);
  ctx.summary["pass"] = ok;
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_decay_fit(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const std::string path = cfg.get_string("in");
  if (path.empty()) throw ConfigError("decay-fit needs an energy log ('in')");
  std::ifstream f(path);
  if (!f) throw ConfigError(cfg.entry("in").source + ": cannot open '" + path + "'");
  EnergyLog log;
  try {
    log = EnergyLog::read_csv(f, path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const int n = cfg.get_int("order");
  double amp;
  if (cfg.get_string("amp").empty()) {
    const std::string v = log.meta("amp_A" + std::to_string(n));
    if (v.empty()) throw ConfigError("no 'amp' given and the log header lacks amp_A" + std::to_string(n));
    amp = std::stod(v);
  } else {
    amp = cfg.get_double("amp");
  }
  if (!(amp > 0.0))
    throw ConfigError("amplitude is zero: the initial state lies in the kernel and the decay bound is vacuous");
  const double c = decay_fit(log, n, amp);
  double t_sup = 0.0, best = -1.0;
  for (size_t i = 0; i < log.size(); ++i) {
    const double v = log.energy[i] * std::pow(std::log(2.0 + log.t[i]), 4.0 * n) / amp;
    if (v > best) {
      best = v;
      t_sup = log.t[i];
    }
  }
  json rep{{"command", "decay-fit"},
           {"input", path},
           {"order", n},
           {"amp", amp},
           {"c", c},
           {"t_at_sup", t_sup},
           {"rows", log.size()},
           {"t_final", log.t.back()},
           {"monotone", log.monotone()}};
  Output o;
  open_output(o, cfg, ctx.out);
  *o.os << dump_json(rep) << "\n";
  const bool ok = std::isfinite(c);
  ctx.summary = json{{"c", c}, {"pass", ok}};
  return ok ? kExitPass : kExitCheckFailed;
}

int cmd_catalog(Context& ctx) {
  const MetricField g = MetricField::euclidean(2);
  Vec unit(1);
  unit << 1.0;
  json list = json::array();
  bool ok = true;
  for (const auto& name : catalog_names()) {
    CatalogParams params;
    params.a = catalog_default_parameter(name);
    const BoundaryPair bp = catalog_bc(name, params);
    const LSReport r = ls_unconjugated(bp, g, Vec::Zero(2), unit);
    ok = ok && r.verdict;
    list.push_back(json{{"name", name},
                        {"b1", bp.b1.describe()},
                        {"b2", bp.b2.describe()},
                        {"orders", {bp.b1.order(), bp.b2.order()}},
                        {"parameter", params.a},
                        {"determinant_at_unit", cplx_json(*r.determinant)},
                        {"ls", r.verdict}});
  }
  Output o;
  open_output(o, ctx.cfg, ctx.out);
  *o.os << dump_json(json{{"command", "catalog"}, {"pairs", list}}) << "\n";
  return ok ? kExitPass : kExitCheckFailed;
}

int dispatch(const std::string& name, Context& ctx) {
  if (name == "ls-check") return cmd_ls_check(ctx);
  if (name == "roots") return cmd_roots(ctx);
  if (name == "subell") return cmd_subell(ctx);
  if (name == "gamma-search") return cmd_gamma_search(ctx);
  if (name == "assemble") return cmd_assemble(ctx);
  if (name == "spectrum") return cmd_spectrum(ctx);
  if (name == "simulate") return cmd_simulate(ctx);
  if (name == "resolvent") return cmd_resolvent(ctx);
  if (name == "decay-fit") return cmd_decay_fit(ctx);
  if (name == "catalog") return cmd_catalog(ctx);
  throw ConfigError("unknown command '" + name + "'");
}

void write_manifest(const std::string& path, const std::string& command, const RunConfig& cfg,
                    const json& summary, int code) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open manifest '" + path + "'");
  json m{{"tool", "plate_lab"},
         {"version", kVersion},
         {"command", command},
         {"config", cfg.to_json()},
         {"summary", summary},
         {"exit_code", code}};
  f << dump_json(m) << "\n";
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> v;
  for (const auto& c : command_specs()) v.push_back(c.name);
  return v;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto specs = command_specs();
  CLI::App app{"plate_lab: boundary conditions, Carleman weights and damped plates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::map<std::string, std::string> config_paths;
  for (const auto& spec : specs) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", config_paths[spec.name], "key = value configuration file");
    for (const auto& key : spec.keys) {
      auto& slot = values[spec.name][key.name];
      std::string help = key.help;
      if (!key.default_value.empty()) help += " [" + key.default_value + "]";
      options[spec.name][key.name] = sub->add_option("--" + key.name, slot, help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitConfigError;
  }
  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const CommandSpec& spec = *std::find_if(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; });

  RunConfig cfg;
  std::string manifest;
  try {
    for (const auto& key : spec.keys) cfg.set(key.name, key.default_value, "default");
    if (!config_paths[name].empty()) {
      const RunConfig file = RunConfig::load(config_paths[name]);
      for (const auto& [k, e] : file.entries()) {
        const bool known = std::any_of(spec.keys.begin(), spec.keys.end(), [&](const KeySpec& ks) { return ks.name == k; });
        if (!known) throw ConfigError(e.source + ": unknown key '" + k + "' for command " + name);
      }
      cfg.merge(file);
    }
    for (const auto& key : spec.keys)
      if (options[name][key.name]->count() > 0) cfg.set(key.name, values[name][key.name], "--" + key.name);
    manifest = cfg.get_string("manifest");
    Context ctx{cfg, out, err};
    const int code = dispatch(name, ctx);
    if (!manifest.empty()) write_manifest(manifest, name, cfg, ctx.summary, code);
    if (code != kExitPass) err << "plate_lab " << name << ": check failed\n";
    return code;
  } catch (const ConfigError& e) {
    err << "plate_lab " << name << ": configuration error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    err << "plate_lab " << name << ": invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::domain_error& e) {
    err << "plate_lab " << name << ": invalid input: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "plate_lab " << name << ": failed: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace platelab::cli
