#include "platelab/ls_checker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "platelab/sampling.hpp"

namespace platelab {

namespace {

cplx poly_eval(const std::array<cplx, 4>& c, cplx z) {
  return ((c[3] * z + c[2]) * z + c[1]) * z + c[0];
}

cplx poly_deriv(const std::array<cplx, 4>& c, cplx z) {
  return (3.0 * c[3] * z + 2.0 * c[2]) * z + c[1];
}

CVec complexify(const Vec& v) { return v.cast<cplx>(); }

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

cplx TangentialTerm::eval(const MetricField& g, const Vec& x, const CVec& zeta) const {
  cplx v = coeff;
  if (norm_power != 0) {
    const cplx r = g.r_complex(x, zeta);
    const int half = norm_power / 2;
    for (int k = 0; k < half; ++k) v *= r;
    if (norm_power % 2 != 0) v *= std::sqrt(r);
  }
  if (covector.size() > 0) {
    if (covector.size() != zeta.size())
      throw std::invalid_argument("tangential covector has the wrong dimension");
    cplx s = 0.0;
    for (int i = 0; i < zeta.size(); ++i) s += covector(i) * zeta(i);
    v *= s;
  }
  return v;
}

BoundaryOperatorSymbol::BoundaryOperatorSymbol(std::string label, int order)
    : label_(std::move(label)), order_(order) {
  if (order < 0 || order > 3) throw std::invalid_argument("boundary operator order must be in [0,3]");
}

BoundaryOperatorSymbol& BoundaryOperatorSymbol::add(int normal_power, TangentialTerm term) {
  if (normal_power < 0 || normal_power > 3)
    throw std::invalid_argument("normal power must be in [0,3]");
  if (term.norm_power < 0) throw std::invalid_argument("norm power must be nonnegative");
  terms_[normal_power].push_back(std::move(term));
  return *this;
}

BoundaryOperatorSymbol& BoundaryOperatorSymbol::add(int normal_power, cplx coeff, int norm_power) {
  TangentialTerm t;
  t.coeff = coeff;
  t.norm_power = norm_power;
  return add(normal_power, std::move(t));
}

int BoundaryOperatorSymbol::normal_degree() const {
  for (int m = 3; m >= 0; --m)
    if (!terms_[m].empty()) return m;
  return -1;
}

std::array<cplx, 4> BoundaryOperatorSymbol::coefficients(const MetricField& g, const Vec& x,
                                                         const CVec& zeta) const {
  std::array<cplx, 4> c{};
  for (int m = 0; m < 4; ++m)
    for (const auto& t : terms_[m]) c[m] += t.eval(g, x, zeta);
  return c;
}

cplx BoundaryOperatorSymbol::eval(const MetricField& g, const Vec& x, const CVec& zeta,
                                  cplx xi_d) const {
  return poly_eval(coefficients(g, x, zeta), xi_d);
}

cplx BoundaryOperatorSymbol::eval_dxi(const MetricField& g, const Vec& x, const CVec& zeta,
                                      cplx xi_d) const {
  return poly_deriv(coefficients(g, x, zeta), xi_d);
}

std::array<cplx, 4> BoundaryOperatorSymbol::conjugated_coefficients(const MetricField& g,
                                                                    const TangentialPoint& p,
                                                                    const WeightJet& w) const {
  const CVec zeta = complexify(p.xi_prime) + I_unit * p.tau * complexify(w.d_tangential);
  const std::array<cplx, 4> c = coefficients(g, p.x, zeta);
  const cplx s = I_unit * p.tau * w.d_normal;
  std::array<cplx, 4> e{};
  for (int k = 0; k < 4; ++k)
    for (int m = k; m < 4; ++m) e[k] += c[m] * binom(m, k) * std::pow(s, m - k);
  return e;
}

void BoundaryOperatorSymbol::validate_homogeneity() const {
  for (int m = 0; m < 4; ++m)
    for (const auto& t : terms_[m])
      if (t.degree() + m != order_) {
        std::ostringstream os;
        os << "operator '" << label_ << "': term of normal power " << m << " has tangential degree "
           << t.degree() << ", expected " << order_ - m;
        throw std::invalid_argument(os.str());
      }
  if (normal_degree() < 0) throw std::invalid_argument("operator '" + label_ + "' has no terms");
}

std::string BoundaryOperatorSymbol::describe() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (int m = 3; m >= 0; --m)
    for (const auto& t : terms_[m]) {
      if (!first) os << " + ";
      first = false;
      os << "(" << t.coeff.real() << (t.coeff.imag() < 0 ? "-" : "+") << std::abs(t.coeff.imag())
         << "i)";
      if (t.norm_power) os << "*|w|^" << t.norm_power;
      if (t.covector.size() > 0) os << "*(l.w)";
      if (m) os << "*z^" << m;
    }
  return first ? "0" : os.str();
}

const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"hinged",       "clamped",      "neumann_pair",
                                              "ex2_dn2_dn3",  "ex3_dn_dn3_A", "ex4_id_dn2_A",
                                              "ex5_dn2A_dn3"};
  return names;
}

double catalog_default_parameter(const std::string& name) {
  if (name == "ex3") return catalog_default_parameter("ex3_dn_dn3_A");
  if (name == "ex4") return catalog_default_parameter("ex4_id_dn2_A");
  if (name == "ex5") return catalog_default_parameter("ex5_dn2A_dn3");
  if (name == "ex3_dn_dn3_A") return -1.0;
  if (name == "ex4_id_dn2_A") return 1.0;
  if (name == "ex5_dn2A_dn3") return 1.0;
  return 0.0;
}

namespace {

std::vector<TangentialTerm> a_prime_terms(const CatalogParams& params, int degree) {
  if (!params.a_prime.empty()) {
    for (const auto& t : params.a_prime)
      if (t.degree() != degree)
        throw std::invalid_argument("a' term has degree " + std::to_string(t.degree()) +
                                    ", expected " + std::to_string(degree));
    return params.a_prime;
  }
  TangentialTerm t;
  t.coeff = params.a;
  t.norm_power = degree;
  return {t};
}

void check_excluded_value(const std::vector<TangentialTerm>& terms, int tdim, cplx excluded,
                          const std::string& name) {
  const MetricField g = MetricField::euclidean(tdim + 1);
  const Vec x = Vec::Zero(tdim + 1);
  const int count = tdim == 1 ? 2 : 256;
  for (int k = 0; k < count; ++k) {
    Vec w(tdim);
    if (tdim == 1) {
      w(0) = k == 0 ? 1.0 : -1.0;
    } else {
      const double th = 2.0 * M_PI * k / count;
      w.setZero();
      w(0) = std::cos(th);
      w(1) = std::sin(th);
    }
    cplx v = 0.0;
    for (const auto& t : terms) v += t.eval(g, x, w.cast<cplx>());
    if (std::abs(v - excluded) <= 1e-9 * (1.0 + std::abs(excluded))) {
      std::ostringstream os;
      os << name << ": parameter a' takes the excluded value " << excluded.real()
         << " on the unit sphere";
      throw std::invalid_argument(os.str());
    }
  }
}

void add_terms(BoundaryOperatorSymbol& b, int normal_power, const std::vector<TangentialTerm>& ts,
               cplx factor) {
  for (auto t : ts) {
    t.coeff *= factor;
    b.add(normal_power, t);
  }
}

}  // namespace

BoundaryPair catalog_bc(const std::string& requested, const CatalogParams& params) {
  static const std::map<std::string, std::string> aliases{{"ex2", "ex2_dn2_dn3"},  {"free", "ex2_dn2_dn3"},
                                                          {"ex3", "ex3_dn_dn3_A"}, {"ex4", "ex4_id_dn2_A"},
                                                          {"ex5", "ex5_dn2A_dn3"}};
  const auto alias = aliases.find(requested);
  const std::string& name = alias == aliases.end() ? requested : alias->second;
  BoundaryPair bp;
  bp.name = name;
  const cplx i = I_unit;
  if (name == "hinged") {
    bp.b1 = BoundaryOperatorSymbol("u", 0);
    bp.b1.add(0, 1.0);
    bp.b2 = BoundaryOperatorSymbol("dn2", 2);
    bp.b2.add(2, -1.0);
  } else if (name == "clamped") {
    bp.b1 = BoundaryOperatorSymbol("u", 0);
    bp.b1.add(0, 1.0);
    bp.b2 = BoundaryOperatorSymbol("dn", 1);
    bp.b2.add(1, -i);
  } else if (name == "neumann_pair") {
    bp.b1 = BoundaryOperatorSymbol("dn", 1);
    bp.b1.add(1, -i);
    bp.b2 = BoundaryOperatorSymbol("dn_lap", 3);
    bp.b2.add(3, i).add(1, i, 2);
  } else if (name == "ex2_dn2_dn3") {
    bp.b1 = BoundaryOperatorSymbol("dn2_2lapt", 2);
    bp.b1.add(2, -1.0).add(0, -2.0, 2);
    bp.b2 = BoundaryOperatorSymbol("dn3", 3);
    bp.b2.add(3, i);
  } else if (name == "ex3_dn_dn3_A") {
    const auto a = a_prime_terms(params, 3);
    if (params.check_admissible) check_excluded_value(a, params.tangential_dim, 2.0, name);
    bp.b1 = BoundaryOperatorSymbol("dn", 1);
    bp.b1.add(1, -i);
    bp.b2 = BoundaryOperatorSymbol("dn3_A", 3);
    bp.b2.add(3, i);
    add_terms(bp.b2, 0, a, 1.0);
  } else if (name == "ex4_id_dn2_A") {
    const auto a = a_prime_terms(params, 1);
    if (params.check_admissible) check_excluded_value(a, params.tangential_dim, -2.0, name);
    bp.b1 = BoundaryOperatorSymbol("u", 0);
    bp.b1.add(0, 1.0);
    bp.b2 = BoundaryOperatorSymbol("dn2_Adn", 2);
    bp.b2.add(2, -1.0);
    add_terms(bp.b2, 1, a, -i);
  } else if (name == "ex5_dn2A_dn3") {
    const auto a = a_prime_terms(params, 1);
    if (params.check_admissible) check_excluded_value(a, params.tangential_dim, -1.5, name);
    bp.b1 = BoundaryOperatorSymbol("dn2_Adn", 2);
    bp.b1.add(2, -1.0);
    add_terms(bp.b1, 1, a, -i);
    bp.b2 = BoundaryOperatorSymbol("dn3_2dnlapt", 3);
    bp.b2.add(3, i).add(1, 2.0 * i, 2);
  } else if (name == "degenerate_equal") {
    bp.b1 = BoundaryOperatorSymbol("u", 0);
    bp.b1.add(0, 1.0);
    bp.b2 = bp.b1;
  } else {
    throw std::invalid_argument("unknown boundary pair '" + name + "'");
  }
  bp.b1.validate_homogeneity();
  bp.b2.validate_homogeneity();
  return bp;
}

BoundaryPair parse_boundary_pair(std::istream& in, const std::string& source) {
  BoundaryPair bp;
  std::map<int, int> orders;
  struct Pending {
    int op;
    int power;
    TangentialTerm term;
  };
  std::vector<Pending> pending;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    std::istringstream probe(line);
    std::string word;
    if (!(probe >> word)) continue;
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key == "name") {
      std::istringstream vs(value);
      vs >> bp.name;
      continue;
    }
    if (key.size() < 4 || key[0] != 'B' || (key[1] != '1' && key[1] != '2') || key[2] != '.')
      fail("unknown key '" + key + "'");
    const int op = key[1] - '0';
    const std::string field = key.substr(3);
    std::istringstream vs(value);
    if (field == "order") {
      int k;
      if (!(vs >> k)) fail("order must be an integer");
      orders[op] = k;
    } else if (field.size() == 2 && field[0] == 'z' && field[1] >= '0' && field[1] <= '3') {
      double re, im;
      if (!(vs >> re >> im)) fail("coefficient needs real and imaginary parts");
      Pending pd{op, field[1] - '0', {}};
      pd.term.coeff = cplx(re, im);
      int np = 0;
      if (vs >> np) pd.term.norm_power = np;
      std::vector<double> cov;
      double c;
      while (vs >> c) cov.push_back(c);
      if (!vs.eof()) fail("malformed coefficient line");
      if (!cov.empty()) pd.term.covector = Eigen::Map<Vec>(cov.data(), static_cast<int>(cov.size()));
      pending.push_back(pd);
    } else {
      fail("unknown field '" + field + "'");
    }
  }
  if (!orders.count(1) || !orders.count(2)) throw std::invalid_argument(source + ": B1.order and B2.order are required");
  if (bp.name.empty()) bp.name = "custom";
  bp.b1 = BoundaryOperatorSymbol("B1", orders[1]);
  bp.b2 = BoundaryOperatorSymbol("B2", orders[2]);
  for (auto& pd : pending) (pd.op == 1 ? bp.b1 : bp.b2).add(pd.power, pd.term);
  bp.b1.validate_homogeneity();
  bp.b2.validate_homogeneity();
  return bp;
}

BoundaryPair load_boundary_pair(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open boundary operator file '" + path + "'");
  return parse_boundary_pair(f, path);
}

LSReport ls_unconjugated(const BoundaryPair& bp, const MetricField& g, const Vec& x,
                         const Vec& omega_prime, double tol) {
  if (omega_prime.size() == 0 || omega_prime.norm() == 0.0)
    throw std::invalid_argument("undefined: LS is posed only for w' != 0");
  LSReport rep;
  const double nrm = std::sqrt(g.r(x, omega_prime));
  const CVec zeta = complexify(omega_prime);
  const cplx z = I_unit * nrm;
  const auto c1 = bp.b1.coefficients(g, x, zeta);
  const auto c2 = bp.b2.coefficients(g, x, zeta);
  const cplx det = poly_eval(c1, z) * poly_deriv(c2, z) - poly_eval(c2, z) * poly_deriv(c1, z);
  rep.case_tag = RootCase::DoubleUpperRoot;
  rep.upper_roots = {z};
  rep.determinant = det;
  rep.boundary_values = {poly_eval(c1, z), poly_eval(c2, z)};
  rep.normalized_margin = std::abs(det) / std::pow(nrm, bp.b1.order() + bp.b2.order() - 1);
  rep.verdict = rep.normalized_margin > tol;
  return rep;
}

LSReport ls_conjugated(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                       const TangentialPoint& p, double tol, double root_tol) {
  const RootConfiguration rc = classify_roots(g, p, w, root_tol);
  LSReport rep;
  rep.case_tag = rc.case_tag;
  rep.marginal = rc.marginal;
  rep.upper_roots = rc.upper_roots;
  const double lam = p.lambda_aug();
  const int k1 = bp.b1.order(), k2 = bp.b2.order();
  const auto e1 = bp.b1.conjugated_coefficients(g, p, w);
  const auto e2 = bp.b2.conjugated_coefficients(g, p, w);

  switch (rc.case_tag) {
    case RootCase::NoUpperRoot:
      rep.normalized_margin = std::numeric_limits<double>::infinity();
      rep.verdict = true;
      break;
    case RootCase::OneUpperRoot: {
      const cplx rho = rc.upper_roots[0];
      const cplx v1 = poly_eval(e1, rho), v2 = poly_eval(e2, rho);
      rep.boundary_values = {v1, v2};
      rep.auxiliary_determinant = v1 * poly_deriv(e2, rho) - v2 * poly_deriv(e1, rho);
      rep.normalized_margin = std::sqrt(std::norm(v1) / std::pow(lam, 2 * k1) +
                                        std::norm(v2) / std::pow(lam, 2 * k2));
      rep.verdict = rep.normalized_margin > tol;
      break;
    }
    case RootCase::TwoDistinctUpperRoots: {
      const cplx r1 = rc.upper_roots[0], r2 = rc.upper_roots[1];
      const cplx det = poly_eval(e1, r1) * poly_eval(e2, r2) - poly_eval(e2, r1) * poly_eval(e1, r2);
      rep.determinant = det;
      rep.normalized_margin = std::abs(det) / (std::abs(r1 - r2) * std::pow(lam, k1 + k2 - 1));
      rep.verdict = rep.normalized_margin > tol;
      break;
    }
    case RootCase::DoubleUpperRoot: {
      const cplx rho = 0.5 * (rc.upper_roots[0] + rc.upper_roots[1]);
      const cplx det = poly_eval(e1, rho) * poly_deriv(e2, rho) - poly_eval(e2, rho) * poly_deriv(e1, rho);
      rep.determinant = det;
      rep.boundary_values = {poly_eval(e1, rho), poly_eval(e2, rho)};
      rep.normalized_margin = std::abs(det) / std::pow(lam, k1 + k2 - 1);
      rep.verdict = rep.normalized_margin > tol;
      break;
    }
  }
  if (rc.marginal) {
    rep.indeterminate = true;
    rep.verdict = false;
  }
  return rep;
}

CMat ls_coefficient_matrix(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                           const TangentialPoint& p, const RootConfiguration& rc) {
  const int mplus = static_cast<int>(rc.upper_roots.size());
  std::vector<cplx> kappa{1.0};
  for (const cplx rho : rc.upper_roots) {
    std::vector<cplx> next(kappa.size() + 1, 0.0);
    for (size_t k = 0; k < kappa.size(); ++k) {
      next[k + 1] += kappa[k];
      next[k] -= rho * kappa[k];
    }
    kappa = next;
  }
  CMat M = CMat::Zero(6 - mplus, 4);
  const auto e1 = bp.b1.conjugated_coefficients(g, p, w);
  const auto e2 = bp.b2.conjugated_coefficients(g, p, w);
  for (int l = 0; l < 4; ++l) {
    M(0, l) = e1[l];
    M(1, l) = e2[l];
  }
  for (int s = 0; s <= 3 - mplus; ++s)
    for (size_t k = 0; k < kappa.size(); ++k) M(2 + s, s + static_cast<int>(k)) = kappa[k];
  return M;
}

int ls_rank_oracle(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                   const TangentialPoint& p, double tol, double root_tol) {
  p.validate(true);
  const TangentialPoint q = p.dilated(1.0 / p.lambda_aug());
  const RootConfiguration rc = classify_roots(g, q, w, root_tol);
  const CMat M = ls_coefficient_matrix(bp, g, w, q, rc);
  Eigen::JacobiSVD<CMat> svd(M);
  const Vec s = svd.singularValues();
  const double thresh = tol * std::max(1.0, s(0));
  int rank = 0;
  for (int k = 0; k < s.size(); ++k)
    if (s(k) > thresh) ++rank;
  return rank;
}

double positivity_margin(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                         const TangentialPoint& p, double root_tol) {
  const RootConfiguration rc = classify_roots(g, p, w, root_tol);
  const CMat M = ls_coefficient_matrix(bp, g, w, p, rc);
  const double lam = p.lambda_aug();
  const int mplus = static_cast<int>(rc.upper_roots.size());
  CMat N = M;
  for (int row = 0; row < M.rows(); ++row) {
    const int j = row + 1;
    double e;
    if (j == 1)
      e = 3.5 - bp.b1.order();
    else if (j == 2)
      e = 3.5 - bp.b2.order();
    else
      e = 6.5 - mplus - j;
    N.row(row) *= std::pow(lam, e);
  }
  for (int l = 0; l < 4; ++l) N.col(l) *= std::pow(lam, -(3.5 - l));
  const CMat G = N.adjoint() * N;
  Eigen::SelfAdjointEigenSolver<CMat> es(G, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()(0));
}

PerturbationResult perturbation_margin(const BoundaryPair& bp, const MetricField& g, const Vec& x,
                                       const Vec& xi_prime, int sample_budget, std::uint64_t seed) {
  PerturbationResult res;
  const LSReport base = ls_unconjugated(bp, g, x, xi_prime);
  res.c0 = base.normalized_margin;
  res.c1 = 0.5 * res.c0;
  if (!base.verdict) {
    res.warning = true;
    res.message = "unperturbed margin below tolerance";
    return res;
  }
  if (sample_budget < 1) throw std::invalid_argument("sample budget must be positive");
  const int td = static_cast<int>(xi_prime.size());
  const double nrm = std::sqrt(g.r(x, xi_prime));
  const int power = bp.b1.order() + bp.b2.order() - 1;
  const double bound = res.c1 * std::pow(nrm, power);

  struct Sample {
    CVec zeta;
    cplx delta, delta_t;
  };
  Rng rng(seed);
  std::vector<Sample> samples;
  samples.reserve(sample_budget);
  for (int k = 0; k < sample_budget; ++k) {
    Sample s;
    s.zeta = CVec(td);
    for (int i = 0; i < td; ++i) s.zeta(i) = cplx(rng.normal(), rng.normal());
    s.delta = cplx(rng.normal(), rng.normal());
    s.delta_t = cplx(rng.normal(), rng.normal());
    const double l1 = s.zeta.norm() + std::abs(s.delta) + std::abs(s.delta_t);
    const double radius = (k % 4 == 0) ? 1.0 : rng.uniform();
    s.zeta *= radius / l1;
    s.delta *= radius / l1;
    s.delta_t *= radius / l1;
    samples.push_back(s);
  }

  const CVec xi_c = complexify(xi_prime);
  const cplx z0 = I_unit * nrm;
  auto holds = [&](double eps) {
    const double scale = eps * nrm;
    for (const auto& s : samples) {
      const CVec zeta = xi_c + scale * s.zeta;
      const cplx z1 = z0 + scale * s.delta;
      const cplx z2 = z0 + scale * s.delta_t;
      const auto c1 = bp.b1.coefficients(g, x, zeta);
      const auto c2 = bp.b2.coefficients(g, x, zeta);
      const cplx d1 = poly_eval(c1, z1) * poly_deriv(c2, z1) - poly_eval(c2, z1) * poly_deriv(c1, z1);
      if (!(std::abs(d1) >= bound)) return false;
      const cplx d2 = poly_eval(c1, z1) * poly_eval(c2, z2) - poly_eval(c2, z1) * poly_eval(c1, z2);
      if (!(std::abs(d2) >= bound * std::abs(z1 - z2))) return false;
    }
    return true;
  };

  double lo = 0.0, hi = 1.0;
  if (holds(hi)) {
    res.epsilon = hi;
    return res;
  }
  for (int it = 0; it < 48; ++it) {
    const double mid = 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  res.epsilon = lo;
  return res;
}

ThresholdResult conjugation_thresholds(const BoundaryPair& bp, const MetricField& g,
                                       const std::vector<Vec>& boundary_sample,
                                       const std::vector<double>& mu_grid, int samples_per_point,
                                       std::uint64_t seed) {
  if (boundary_sample.empty()) throw std::invalid_argument("empty boundary sample");
  if (mu_grid.empty()) throw std::invalid_argument("empty threshold grid");
  ThresholdResult res;
  const int td = static_cast<int>(boundary_sample.front().size()) - 1;
  if (td < 1) throw std::invalid_argument("boundary points need at least one tangential coordinate");

  Rng dir_rng(seed);
  for (const Vec& x : boundary_sample)
    for (int k = 0; k < 16; ++k) {
      const Vec om = dir_rng.unit_sphere(td);
      if (!ls_unconjugated(bp, g, x, om).verdict) return res;
    }

  std::vector<double> grid = mu_grid;
  std::sort(grid.begin(), grid.end());

  auto passes = [&](double mu0, double mu1) {
    for (size_t ix = 0; ix < boundary_sample.size(); ++ix) {
      Rng rng(seed * 1000003ULL + ix * 7919ULL + 17ULL);
      const Vec& x = boundary_sample[ix];
      for (int k = 0; k < samples_per_point; ++k) {
        WeightJet w = WeightJet::simple(mu0 * rng.unit_ball(td), 1.0);
        if (k % 8 == 0 && mu0 > 0) w.d_tangential = mu0 * rng.unit_sphere(td);
        TangentialPoint p;
        p.x = x;
        p.tau = 1.0;
        p.sigma = mu1 * ((k % 8 == 1) ? 1.0 : rng.uniform());
        const double rad = (k % 16 == 2) ? 0.0 : rng.log_uniform(1e-2, 1e2);
        p.xi_prime = rad * rng.unit_sphere(td);
        const LSReport rep = ls_conjugated(bp, g, w, p);
        ++res.samples_checked;
        if (rep.indeterminate) {
          ++res.indeterminate;
          continue;
        }
        if (!rep.verdict) return false;
      }
    }
    return true;
  };

  double mu0 = 0.0;
  for (double m : grid) {
    if (m <= 0.0) continue;
    if (!passes(m, m)) break;
    mu0 = m;
  }
  if (mu0 == 0.0) return res;
  double mu1 = mu0;
  for (double m : grid) {
    if (m <= mu0) continue;
    if (!passes(mu0, m)) break;
    mu1 = m;
  }
  res.mu0 = mu0;
  res.mu1 = mu1;
  return res;
}

}  // namespace platelab
