#include "platelab/weight_design.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "platelab/sampling.hpp"

namespace platelab {

using nlohmann::json;

PolynomialField::PolynomialField(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {
  if (dim < 1) throw std::invalid_argument("polynomial field dimension must be positive");
  for (const auto& t : terms_)
    if (static_cast<int>(t.exponents.size()) != dim)
      throw std::invalid_argument("polynomial term has wrong number of exponents");
}

std::shared_ptr<PolynomialField> PolynomialField::univariate(const std::vector<double>& coeffs) {
  std::vector<Term> terms;
  for (size_t k = 0; k < coeffs.size(); ++k)
    if (coeffs[k] != 0.0) terms.push_back({coeffs[k], {static_cast<int>(k)}});
  return std::make_shared<PolynomialField>(1, terms);
}

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

}  // namespace

FieldJet PolynomialField::jet(const Vec& x) const {
  FieldJet fj;
  fj.grad = Vec::Zero(dim_);
  fj.hessian = Mat::Zero(dim_, dim_);
  for (const auto& t : terms_) {
    double v = t.coeff;
    for (int i = 0; i < dim_; ++i) v *= ipow(x(i), t.exponents[i]);
    fj.value += v;
    for (int a = 0; a < dim_; ++a) {
      const int ea = t.exponents[a];
      if (ea == 0) continue;
      double ga = t.coeff * ea;
      for (int i = 0; i < dim_; ++i) ga *= ipow(x(i), i == a ? ea - 1 : t.exponents[i]);
      fj.grad(a) += ga;
      for (int b = 0; b < dim_; ++b) {
        const int eb = (b == a) ? ea - 1 : t.exponents[b];
        if (eb == 0) continue;
        double h = t.coeff * ea * eb;
        for (int i = 0; i < dim_; ++i) {
          int e = t.exponents[i];
          if (i == a) --e;
          if (i == b) --e;
          h *= ipow(x(i), e);
        }
        fj.hessian(a, b) += h;
      }
    }
  }
  return fj;
}

json PolynomialField::to_json() const {
  json terms = json::array();
  for (const auto& t : terms_) terms.push_back({{"coeff", t.coeff}, {"exponents", t.exponents}});
  return {{"kind", "polynomial"}, {"dim", dim_}, {"terms", terms}};
}

IntervalBumpField::IntervalBumpField(double a, double length, double center, double scale)
    : a_(a), len_(length), m_(center), scale_(scale), beta_(0.0) {
  if (!(length > 0.0)) throw std::invalid_argument("interval length must be positive");
  if (!(center > 0.0 && center < 1.0)) throw std::invalid_argument("critical point must lie inside the interval");
  auto endpoint = [&](double b) {
    beta_ = b;
    return primitive(1.0);
  };
  if (std::abs(m_ - 0.5) > 1e-15) {
    double lo = 0.0, hi = (m_ < 0.5) ? -1.0 : 1.0;
    while (endpoint(hi) * endpoint(lo) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (endpoint(mid) * endpoint(lo) > 0.0)
        lo = mid;
      else
        hi = mid;
    }
    beta_ = 0.5 * (lo + hi);
  }
  const double peak = primitive(m_);
  scale_ = scale / peak;
}

double IntervalBumpField::primitive(double t) const {
  const double b = beta_;
  if (std::abs(b) < 1e-4) {
    return m_ * t - 0.5 * t * t + b * (0.5 * m_ * t * t - t * t * t / 3.0) +
           b * b * (m_ * t * t * t / 6.0 - t * t * t * t / 8.0);
  }
  return (((m_ - t) * b + 1.0) * std::exp(b * t) - (m_ * b + 1.0)) / (b * b);
}

FieldJet IntervalBumpField::jet(const Vec& x) const {
  const double t = (x(0) - a_) / len_;
  const double e = std::exp(beta_ * t);
  FieldJet fj;
  fj.value = scale_ * primitive(t);
  fj.grad = Vec::Constant(1, scale_ * (m_ - t) * e / len_);
  fj.hessian = Mat::Constant(1, 1, scale_ * (-1.0 + beta_ * (m_ - t)) * e / (len_ * len_));
  return fj;
}

json IntervalBumpField::to_json() const {
  return {{"kind", "interval_bump"}, {"a", a_}, {"length", len_}, {"center", m_},
          {"beta", beta_}, {"normalization", scale_}};
}

ProductField::ProductField(FieldPtr fx, FieldPtr fy) : fx_(std::move(fx)), fy_(std::move(fy)) {
  if (!fx_ || !fy_ || fx_->dim() != 1 || fy_->dim() != 1)
    throw std::invalid_argument("product field needs two one-dimensional factors");
}

FieldJet ProductField::jet(const Vec& x) const {
  const FieldJet a = fx_->jet(Vec::Constant(1, x(0)));
  const FieldJet b = fy_->jet(Vec::Constant(1, x(1)));
  FieldJet fj;
  fj.value = a.value * b.value;
  fj.grad = Vec(2);
  fj.grad << a.grad(0) * b.value, a.value * b.grad(0);
  fj.hessian = Mat(2, 2);
  fj.hessian << a.hessian(0, 0) * b.value, a.grad(0) * b.grad(0), a.grad(0) * b.grad(0),
      a.value * b.hessian(0, 0);
  return fj;
}

json ProductField::to_json() const {
  return {{"kind", "product"}, {"x", fx_->to_json()}, {"y", fy_->to_json()}};
}

AxisField::AxisField(FieldPtr f, int dim, int axis) : f_(std::move(f)), dim_(dim), axis_(axis) {
  if (!f_ || f_->dim() != 1) throw std::invalid_argument("axis field needs a one-dimensional profile");
  if (axis < 0 || axis >= dim) throw std::invalid_argument("axis out of range");
}

FieldJet AxisField::jet(const Vec& x) const {
  const FieldJet a = f_->jet(Vec::Constant(1, x(axis_)));
  FieldJet fj;
  fj.value = a.value;
  fj.grad = Vec::Zero(dim_);
  fj.grad(axis_) = a.grad(0);
  fj.hessian = Mat::Zero(dim_, dim_);
  fj.hessian(axis_, axis_) = a.hessian(0, 0);
  return fj;
}

json AxisField::to_json() const {
  return {{"kind", "axis"}, {"dim", dim_}, {"axis", axis_}, {"profile", f_->to_json()}};
}

FieldPtr field_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "polynomial") {
    std::vector<PolynomialField::Term> terms;
    for (const auto& t : j.at("terms"))
      terms.push_back({t.at("coeff").get<double>(), t.at("exponents").get<std::vector<int>>()});
    return std::make_shared<PolynomialField>(j.at("dim").get<int>(), terms);
  }
  if (kind == "interval_bump")
    return std::make_shared<IntervalBumpField>(j.at("a"), j.at("length"), j.at("center"));
  if (kind == "product")
    return std::make_shared<ProductField>(field_from_json(j.at("x")), field_from_json(j.at("y")));
  if (kind == "axis")
    return std::make_shared<AxisField>(field_from_json(j.at("profile")), j.at("dim"), j.at("axis"));
  throw std::invalid_argument("unknown field kind '" + kind + "'");
}

FieldJet WeightField::phi_jet(const Vec& x) const {
  const FieldJet p = psi->jet(x);
  FieldJet f;
  f.value = std::exp(gamma * p.value);
  f.grad = gamma * f.value * p.grad;
  f.hessian = gamma * f.value * (gamma * p.grad * p.grad.transpose() + p.hessian);
  return f;
}

WeightJet WeightField::boundary_jet(const Vec& x) const {
  const FieldJet f = phi_jet(x);
  const int d = static_cast<int>(f.grad.size());
  WeightJet w;
  w.phi = f.value;
  w.d_tangential = f.grad.head(d - 1);
  w.d_normal = f.grad(d - 1);
  w.hessian = f.hessian;
  return w;
}

json WeightField::to_json() const { return {{"gamma", gamma}, {"psi", psi->to_json()}}; }

double poisson_bracket(const SymbolJet& f, const SymbolJet& g) {
  if (f.dx.size() != g.dx.size() || f.dxi.size() != g.dxi.size() || f.dx.size() != f.dxi.size())
    throw std::invalid_argument("jets have mismatched dimensions");
  return f.dxi.dot(g.dx) - f.dx.dot(g.dxi);
}

std::pair<SymbolJet, SymbolJet> conjugated_symbol_jets(const MetricField& g, const WeightField& wf,
                                                       const Vec& x, const Vec& xi, double tau,
                                                       double sigma, int j) {
  const int d = g.dim();
  const FieldJet f = wf.phi_jet(x);
  const Vec& dp = f.grad;
  const Mat& H = f.hessian;
  const double sgn = (j == 1) ? -1.0 : 1.0;
  SymbolJet qs, qa;
  qs.dx = Vec::Zero(d);
  qs.dxi = Vec::Zero(d);
  qa.dx = Vec::Zero(d);
  qa.dxi = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    const double gi = g.coeff(x, i);
    qs.value += gi * (xi(i) * xi(i) - tau * tau * dp(i) * dp(i));
    qa.value += 2.0 * tau * gi * xi(i) * dp(i);
    qs.dxi(i) = 2.0 * gi * xi(i);
    qa.dxi(i) = 2.0 * tau * gi * dp(i);
    for (int k = 0; k < d; ++k) {
      const double dg = g.coeff_derivative(i, k);
      qs.dx(k) += dg * (xi(i) * xi(i) - tau * tau * dp(i) * dp(i)) - 2.0 * tau * tau * gi * dp(i) * H(i, k);
      qa.dx(k) += 2.0 * tau * (dg * xi(i) * dp(i) + gi * xi(i) * H(i, k));
    }
  }
  qs.value += sgn * sigma * sigma;
  return {qs, qa};
}

std::vector<Vec> RegionGrid::points() const {
  const int d = dim();
  if (d < 1 || d > 2) throw std::invalid_argument("region grids support dimension 1 or 2");
  if (points_per_axis < 2) throw std::invalid_argument("region grid needs at least 2 points per axis");
  std::vector<Vec> pts;
  const int n = points_per_axis;
  auto coord = [&](int axis, int k) { return lo(axis) + (hi(axis) - lo(axis)) * k / (n - 1); };
  if (d == 1) {
    for (int k = 0; k < n; ++k) pts.push_back(Vec::Constant(1, coord(0, k)));
  } else {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        Vec p(2);
        p << coord(0, a), coord(1, b);
        pts.push_back(p);
      }
  }
  return pts;
}

RegionGrid RegionGrid::refined() const {
  RegionGrid r = *this;
  r.points_per_axis = 2 * points_per_axis - 1;
  return r;
}

json RegionGrid::to_json() const {
  return {{"lo", std::vector<double>(lo.data(), lo.data() + lo.size())},
          {"hi", std::vector<double>(hi.data(), hi.data() + hi.size())},
          {"points_per_axis", points_per_axis}};
}

namespace {

json sample_json(const BracketSample& s) {
  return {{"x", std::vector<double>(s.x.data(), s.x.data() + s.x.size())},
          {"xi", std::vector<double>(s.xi.data(), s.xi.data() + s.xi.size())},
          {"tau", s.tau},
          {"sigma", s.sigma},
          {"q_s", s.q_s},
          {"q_a", s.q_a},
          {"bracket", s.bracket},
          {"margin", s.margin}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json SubellipticityReport::to_json() const {
  json j = {{"factor", factor},
            {"margin", finite_or_null(margin)},
            {"vacuous", vacuous},
            {"characteristic_points", characteristic_points},
            {"xi_resolution", xi_resolution},
            {"grid", grid.to_json()},
            {"refinements", refinements},
            {"stabilized", stabilized}};
  if (!vacuous) j["worst"] = sample_json(worst);
  return j;
}

std::vector<BracketSample> characteristic_samples(const MetricField& g, const WeightField& wf, int j,
                                                  const RegionGrid& region, int xi_resolution,
                                                  const SubellipticityOptions& opt) {
  const int d = region.dim();
  if (g.dim() != d) throw std::invalid_argument("metric and region dimensions differ");
  if (j != 1 && j != 2) throw std::invalid_argument("factor index must be 1 or 2");
  const double tau = 1.0;
  const double sigma_max = tau / opt.tau0;
  const double sigma_min = std::isfinite(opt.tau_upper_ratio) ? tau / opt.tau_upper_ratio : 0.0;
  std::vector<BracketSample> out;

  for (const Vec& x : region.points()) {
    const FieldJet f = wf.phi_jet(x);
    Vec c(d);
    for (int i = 0; i < d; ++i) c(i) = g.coeff(x, i) * f.grad(i);
    if (c.norm() == 0.0) continue;
    const double grad2 = g.norm2_full(x, f.grad);

    std::vector<Vec> cands;
    if (d == 1) {
      cands.push_back(Vec::Zero(1));
    } else {
      Vec e(2);
      e << -c(1), c(0);
      e /= e.norm();
      const double ge = g.norm2_full(x, e);
      const double bound = (j == 1) ? grad2 * tau * tau + sigma_max * sigma_max : grad2 * tau * tau;
      const double R = std::sqrt(std::max(0.0, bound) / ge);
      const int n = std::max(3, xi_resolution);
      for (int k = 0; k < n; ++k) cands.push_back((-R + 2.0 * R * k / (n - 1)) * e);
      if (j == 2) {
        const double inner = grad2 * tau * tau - sigma_max * sigma_max;
        if (inner > 0.0) {
          const double r_in = std::sqrt(inner / ge);
          cands.push_back(r_in * e);
          cands.push_back(-r_in * e);
        }
      }
    }

    for (const Vec& xi : cands) {
      const double s = g.norm2_full(x, xi) - tau * tau * grad2;
      const double sig2 = (j == 1) ? s : -s;
      if (sig2 < 0.0) continue;
      const double sigma = std::sqrt(sig2);
      if (sigma > sigma_max * (1.0 + 1e-12) || sigma < sigma_min) continue;
      const auto [qs, qa] = conjugated_symbol_jets(g, wf, x, xi, tau, sigma, j);
      const double lam2 = tau * tau + xi.squaredNorm() + sigma * sigma;
      const double scale = std::max(lam2, tau * tau * grad2);
      if (std::abs(qs.value) > opt.residual_tol * scale || std::abs(qa.value) > opt.residual_tol * scale)
        continue;
      BracketSample b;
      b.x = x;
      b.xi = xi;
      b.tau = tau;
      b.sigma = sigma;
      b.q_s = qs.value;
      b.q_a = qa.value;
      b.bracket = poisson_bracket(qs, qa);
      b.margin = b.bracket / std::pow(lam2, 1.5);
      out.push_back(b);
    }
  }
  return out;
}

namespace {

SubellipticityReport evaluate_once(const MetricField& g, const WeightField& wf, int j,
                                   const RegionGrid& region, int xi_res,
                                   const SubellipticityOptions& opt) {
  SubellipticityReport rep;
  rep.factor = j;
  rep.grid = region;
  rep.xi_resolution = xi_res;
  const auto samples = characteristic_samples(g, wf, j, region, xi_res, opt);
  rep.characteristic_points = samples.size();
  if (samples.empty()) {
    rep.vacuous = true;
    rep.margin = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.margin = std::numeric_limits<double>::infinity();
  for (const auto& s : samples)
    if (s.margin < rep.margin) {
      rep.margin = s.margin;
      rep.worst = s;
    }
  return rep;
}

}  // namespace

SubellipticityReport subellipticity_check(const MetricField& g, const WeightField& wf, int j,
                                          const RegionGrid& region,
                                          const SubellipticityOptions& opt) {
  if (!(opt.tau0 > 0.0)) throw std::invalid_argument("tau0 must be positive");
  if (std::isfinite(opt.tau_upper_ratio) && !(opt.tau_upper_ratio > opt.tau0))
    throw std::invalid_argument("upper ratio must exceed tau0");
  SubellipticityReport cur = evaluate_once(g, wf, j, region, opt.xi_resolution, opt);
  if (!opt.refine) return cur;
  RegionGrid grid = region;
  int xi_res = opt.xi_resolution;
  for (int level = 1; level <= opt.max_refinements; ++level) {
    grid = grid.refined();
    xi_res = 2 * xi_res - 1;
    SubellipticityReport next = evaluate_once(g, wf, j, grid, xi_res, opt);
    next.refinements = level;
    bool stable;
    if (cur.vacuous || next.vacuous)
      stable = cur.vacuous && next.vacuous;
    else
      stable = (cur.margin > 0) == (next.margin > 0) &&
               std::abs(next.margin - cur.margin) <= 0.1 * std::abs(next.margin);
    cur = next;
    if (stable) {
      cur.stabilized = true;
      break;
    }
  }
  return cur;
}

json GammaSearchResult::to_json() const {
  return {{"gamma0", gamma0},         {"found", found},
          {"margin_j1", finite_or_null(margin_j1)}, {"margin_j2", finite_or_null(margin_j2)},
          {"vacuous_j1", vacuous_j1}, {"vacuous_j2", vacuous_j2},
          {"evaluations", evaluations}, {"min_grad_psi", min_grad_psi}};
}

GammaSearchResult gamma_search(const MetricField& g, const FieldPtr& psi, const RegionGrid& region,
                               const SubellipticityOptions& opt, double gamma_max,
                               int bisection_steps) {
  GammaSearchResult res;
  double min_grad = std::numeric_limits<double>::infinity();
  double max_grad = 0.0;
  Vec where;
  for (const Vec& x : region.refined().points()) {
    const double n = psi->jet(x).grad.norm();
    if (n < min_grad) {
      min_grad = n;
      where = x;
    }
    max_grad = std::max(max_grad, n);
  }
  res.min_grad_psi = min_grad;
  if (!(min_grad > 1e-8 * std::max(1.0, max_grad))) {
    std::ostringstream os;
    os << "gradient of psi vanishes on the verification region (|dpsi| = " << min_grad << " at x =";
    for (int i = 0; i < where.size(); ++i) os << ' ' << where(i);
    os << ")";
    throw std::domain_error(os.str());
  }

  SubellipticityOptions fast = opt;
  fast.refine = false;
  auto passes = [&](double gamma) {
    WeightField wf{psi, gamma};
    ++res.evaluations;
    const auto r1 = subellipticity_check(g, wf, 1, region, fast);
    if (!(r1.margin > 0)) return false;
    const auto r2 = subellipticity_check(g, wf, 2, region, fast);
    return r2.margin > 0;
  };

  double lo = 0.0, hi = 1.0;
  if (passes(hi)) {
    lo = hi;
    while (lo > 1.0 / 1024.0 && passes(lo * 0.5)) lo *= 0.5;
    hi = lo;
    lo *= 0.5;
  } else {
    lo = hi;
    while (true) {
      hi = 2.0 * lo;
      if (hi > gamma_max) return res;
      if (passes(hi)) break;
      lo = hi;
    }
  }
  for (int it = 0; it < bisection_steps; ++it) {
    const double mid = std::sqrt(lo * hi);
    (passes(mid) ? hi : lo) = mid;
  }
  res.gamma0 = hi;
  res.found = true;
  WeightField wf{psi, hi};
  const auto r1 = subellipticity_check(g, wf, 1, region, fast);
  const auto r2 = subellipticity_check(g, wf, 2, region, fast);
  res.margin_j1 = r1.margin;
  res.margin_j2 = r2.margin;
  res.vacuous_j1 = r1.vacuous;
  res.vacuous_j2 = r2.vacuous;
  return res;
}

json MuSearchResult::to_json() const {
  return {{"mu", mu},
          {"found", found},
          {"C", c},
          {"reference_bracket", reference_bracket},
          {"worst_ratio", worst_ratio},
          {"samples", samples},
          {"recheck_passed", recheck_passed},
          {"recheck_worst_ratio", recheck_worst_ratio}};
}

double urg_quantity(const MetricField& g, const WeightField& wf, int j, const Vec& x, const Vec& xi,
                    double tau, double sigma, double mu) {
  const auto [qs, qa] = conjugated_symbol_jets(g, wf, x, xi, tau, sigma, j);
  return mu * (qs.value * qs.value + qa.value * qa.value) + tau * poisson_bracket(qs, qa);
}

namespace {

struct UrgSample {
  double f;
  double b;
  double lam4;
};

UrgSample urg_sample(const MetricField& g, const WeightField& wf, int j, const Vec& x, const Vec& xi,
                     double tau, double sigma) {
  const auto [qs, qa] = conjugated_symbol_jets(g, wf, x, xi, tau, sigma, j);
  const double lam2 = xi.squaredNorm() + tau * tau + sigma * sigma;
  return {qs.value * qs.value + qa.value * qa.value, tau * poisson_bracket(qs, qa), lam2 * lam2};
}

/// (xi, tau, sigma) on the unit sphere with tau >= tau0 sigma
void sphere_point(int d, double theta, double chi, double psi_angle, Vec& xi, double& tau, double& sigma) {
  const double c = std::cos(theta), s = std::sin(theta);
  xi = Vec(d);
  if (d == 1)
    xi(0) = c;
  else {
    xi(0) = c * std::cos(chi);
    xi(1) = c * std::sin(chi);
  }
  tau = s * std::cos(psi_angle);
  sigma = s * std::sin(psi_angle);
}

}  // namespace

MuSearchResult mu_search(const MetricField& g, const WeightField& wf, int j, const RegionGrid& region,
                         const MuSearchOptions& opt) {
  MuSearchResult res;
  const int d = region.dim();
  const double psi_max = std::atan(1.0 / opt.tau0);
  const int n = opt.sphere_resolution;
  std::vector<UrgSample> samples;
  for (const Vec& x : region.points()) {
    const int nchi = (d == 1) ? 1 : n;
    for (int a = 0; a <= n; ++a) {
      const double theta = (d == 1 ? M_PI : 0.5 * M_PI) * a / n;
      for (int c = 0; c < nchi; ++c) {
        const double chi = 2.0 * M_PI * c / nchi;
        for (int b = 0; b <= n; ++b) {
          Vec xi;
          double tau, sigma;
          sphere_point(d, theta, chi, psi_max * b / n, xi, tau, sigma);
          samples.push_back(urg_sample(g, wf, j, x, xi, tau, sigma));
        }
      }
    }
  }
  SubellipticityOptions sopt;
  sopt.tau0 = opt.tau0;
  const auto chars = characteristic_samples(g, wf, j, region, 2 * n + 1, sopt);
  double ref = std::numeric_limits<double>::infinity();
  for (const auto& s : chars) {
    const UrgSample u = urg_sample(g, wf, j, s.x, s.xi, s.tau, s.sigma);
    samples.push_back(u);
    ref = std::min(ref, u.b / u.lam4);
  }
  if (chars.empty()) {
    for (const auto& s : samples) ref = std::min(ref, s.f / s.lam4);
  }
  res.samples = samples.size();
  res.reference_bracket = ref;
  res.c = ref > 0.0 ? opt.c_fraction * ref : 1e-300;

  for (double mu = 0x1.0p-10; mu <= opt.mu_max; mu *= 2.0) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) worst = std::min(worst, (mu * s.f + s.b) / (res.c * s.lam4));
    res.worst_ratio = worst;
    if (worst >= 1.0) {
      res.mu = mu;
      res.found = true;
      break;
    }
  }
  if (!res.found) {
    res.mu = opt.mu_max;
    return res;
  }

  Rng rng(opt.seed + 0x5151);
  RegionGrid shifted = region;
  shifted.points_per_axis = region.points_per_axis + 2;
  const auto fresh_chars = characteristic_samples(g, wf, j, shifted, 2 * n + 3, sopt);
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < opt.recheck_samples; ++k) {
    if (!fresh_chars.empty() && k % 2 == 1) {
      const auto& c0 = fresh_chars[rng.next() % fresh_chars.size()];
      const double lam = std::sqrt(c0.xi.squaredNorm() + c0.tau * c0.tau + c0.sigma * c0.sigma);
      const double eps = rng.log_uniform(1e-4, 1e-1) * lam;
      Vec xi = c0.xi;
      for (int i = 0; i < d; ++i) xi(i) += eps * rng.normal();
      const double tau = std::abs(c0.tau + eps * rng.normal());
      const double sigma = std::min(std::abs(c0.sigma + eps * rng.normal()), tau / opt.tau0);
      const UrgSample u = urg_sample(g, wf, j, c0.x, xi, tau, sigma);
      worst = std::min(worst, (res.mu * u.f + u.b) / (res.c * u.lam4));
      continue;
    }
    Vec x(d);
    for (int i = 0; i < d; ++i) x(i) = rng.uniform(region.lo(i), region.hi(i));
    Vec xi;
    double tau, sigma;
    sphere_point(d, rng.uniform(0.0, d == 1 ? M_PI : 0.5 * M_PI), rng.uniform(0.0, 2.0 * M_PI),
                 rng.uniform(0.0, psi_max), xi, tau, sigma);
    const UrgSample u = urg_sample(g, wf, j, x, xi, tau, sigma);
    worst = std::min(worst, (res.mu * u.f + u.b) / (res.c * u.lam4));
  }
  res.recheck_worst_ratio = worst;
  res.recheck_passed = worst >= 1.0;
  return res;
}

Domain Domain::interval(double a, double b) {
  if (!(b > a)) throw std::invalid_argument("empty interval domain");
  Domain d;
  d.kind = Kind::Interval;
  d.lo = Vec::Constant(1, a);
  d.hi = Vec::Constant(1, b);
  return d;
}

Domain Domain::rectangle(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0 && y1 > y0)) throw std::invalid_argument("empty rectangle domain");
  Domain d;
  d.kind = Kind::Rectangle;
  d.lo = Vec(2);
  d.hi = Vec(2);
  d.lo << x0, y0;
  d.hi << x1, y1;
  return d;
}

ExclusionSet ExclusionSet::interval(double a, double b) {
  ExclusionSet e;
  e.kind = Kind::Interval;
  e.center = Vec::Constant(1, 0.5 * (a + b));
  e.radius = 0.5 * (b - a);
  return e;
}

ExclusionSet ExclusionSet::disc(double cx, double cy, double r) {
  ExclusionSet e;
  e.kind = Kind::Disc;
  e.center = Vec(2);
  e.center << cx, cy;
  e.radius = r;
  return e;
}

bool ExclusionSet::contains(const Vec& x) const { return (x - center).norm() < radius; }

WeightField build_global_weight(const Domain& domain, const ExclusionSet& o0, double gamma,
                                GlobalWeightReport* report, int verify_points) {
  if (!(o0.radius > 0.0)) throw std::invalid_argument("exclusion set is empty");
  const int d = static_cast<int>(domain.lo.size());
  if (o0.center.size() != d) throw std::invalid_argument("exclusion set dimension does not match the domain");
  for (int i = 0; i < d; ++i)
    if (!(o0.center(i) - o0.radius > domain.lo(i) && o0.center(i) + o0.radius < domain.hi(i)))
      throw std::invalid_argument("exclusion set touches the boundary");

  auto profile = [&](int axis) {
    const double a = domain.lo(axis), L = domain.hi(axis) - domain.lo(axis);
    return std::make_shared<IntervalBumpField>(a, L, (o0.center(axis) - a) / L);
  };
  WeightField wf;
  wf.gamma = gamma;
  if (domain.kind == Domain::Kind::Interval)
    wf.psi = profile(0);
  else
    wf.psi = std::make_shared<ProductField>(profile(0), profile(1));

  GlobalWeightReport rep;
  rep.boundary_max_normal_derivative = -std::numeric_limits<double>::infinity();
  rep.interior_min_psi = std::numeric_limits<double>::infinity();
  rep.min_grad_outside = std::numeric_limits<double>::infinity();
  const int n = verify_points;
  auto coord = [&](int axis, int k) {
    return domain.lo(axis) + (domain.hi(axis) - domain.lo(axis)) * k / (n - 1);
  };
  auto check_boundary = [&](const Vec& x, const Vec& normal) {
    const FieldJet fj = wf.psi->jet(x);
    rep.boundary_max_abs_psi = std::max(rep.boundary_max_abs_psi, std::abs(fj.value));
    rep.boundary_max_normal_derivative = std::max(rep.boundary_max_normal_derivative, fj.grad.dot(normal));
  };
  auto check_interior = [&](const Vec& x) {
    const FieldJet fj = wf.psi->jet(x);
    rep.interior_min_psi = std::min(rep.interior_min_psi, fj.value);
    if (!o0.contains(x)) rep.min_grad_outside = std::min(rep.min_grad_outside, fj.grad.norm());
  };
  if (d == 1) {
    check_boundary(domain.lo, Vec::Constant(1, -1.0));
    check_boundary(domain.hi, Vec::Constant(1, 1.0));
    for (int k = 1; k < n - 1; ++k) check_interior(Vec::Constant(1, coord(0, k)));
  } else {
    rep.corner_exclusion = 0.05 * std::min(domain.hi(0) - domain.lo(0), domain.hi(1) - domain.lo(1));
    for (int k = 0; k < n; ++k) {
      for (int side = 0; side < 2; ++side) {
        Vec xb(2), yb(2), nx(2), ny(2);
        xb << (side ? domain.hi(0) : domain.lo(0)), coord(1, k);
        nx << (side ? 1.0 : -1.0), 0.0;
        yb << coord(0, k), (side ? domain.hi(1) : domain.lo(1));
        ny << 0.0, (side ? 1.0 : -1.0);
        auto away = [&](const Vec& p) {
          for (int cx = 0; cx < 2; ++cx)
            for (int cy = 0; cy < 2; ++cy) {
              Vec c(2);
              c << (cx ? domain.hi(0) : domain.lo(0)), (cy ? domain.hi(1) : domain.lo(1));
              if ((p - c).norm() < rep.corner_exclusion) return false;
            }
          return true;
        };
        if (away(xb)) check_boundary(xb, nx);
        else rep.boundary_max_abs_psi = std::max(rep.boundary_max_abs_psi, std::abs(wf.psi->jet(xb).value));
        if (away(yb)) check_boundary(yb, ny);
        else rep.boundary_max_abs_psi = std::max(rep.boundary_max_abs_psi, std::abs(wf.psi->jet(yb).value));
      }
    }
    for (int a = 1; a < n - 1; ++a)
      for (int b = 1; b < n - 1; ++b) {
        Vec x(2);
        x << coord(0, a), coord(1, b);
        check_interior(x);
      }
  }
  rep.grid_points = n;
  if (report) *report = rep;
  if (!(rep.boundary_max_abs_psi <= 1e-10) || !(rep.boundary_max_normal_derivative < 0.0) ||
      !(rep.interior_min_psi > 0.0) || !(rep.min_grad_outside > 0.0))
    throw std::runtime_error("global weight failed grid verification");
  return wf;
}

}  // namespace platelab
