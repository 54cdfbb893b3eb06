#include "platelab/symbol_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace platelab {

MetricField MetricField::euclidean(int dim) {
  if (dim < 1) throw std::invalid_argument("metric dimension must be >= 1");
  return affine_diagonal(Vec::Ones(dim), Mat::Zero(dim, dim));
}

MetricField MetricField::affine_diagonal(Vec base, Mat grad) {
  if (grad.rows() != base.size() || grad.cols() != base.size())
    throw std::invalid_argument("metric gradient table must be dim x dim");
  MetricField m;
  m.base_ = std::move(base);
  m.grad_ = std::move(grad);
  return m;
}

double MetricField::coeff(const Vec& x, int i) const {
  double v = base_(i);
  const int n = std::min<int>(static_cast<int>(x.size()), dim());
  for (int k = 0; k < n; ++k) v += grad_(i, k) * x(k);
  return v;
}

double MetricField::r(const Vec& x, const Vec& xi_t) const { return r_bilinear(x, xi_t, xi_t); }

double MetricField::r_bilinear(const Vec& x, const Vec& a, const Vec& b) const {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += coeff(x, i) * a(i) * b(i);
  return s;
}

cplx MetricField::r_complex(const Vec& x, const CVec& zeta) const {
  cplx s = 0.0;
  for (int i = 0; i < zeta.size(); ++i) s += coeff(x, i) * zeta(i) * zeta(i);
  return s;
}

cplx MetricField::r_complex(const Vec& x, const Vec& xi_t, const Vec& eta_t) const {
  return {r(x, xi_t) - r(x, eta_t), 2.0 * r_bilinear(x, xi_t, eta_t)};
}

double MetricField::norm2_full(const Vec& x, const Vec& xi) const { return bilinear_full(x, xi, xi); }

double MetricField::bilinear_full(const Vec& x, const Vec& a, const Vec& b) const {
  double s = 0.0;
  for (int i = 0; i < dim(); ++i) s += coeff(x, i) * a(i) * b(i);
  return s;
}

double MetricField::min_coefficient_on_box(const Vec& lo, const Vec& hi) const {
  const int d = dim();
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 0; mask < (1 << d); ++mask) {
    Vec c(d);
    for (int k = 0; k < d; ++k) c(k) = (mask >> k) & 1 ? hi(k) : lo(k);
    for (int i = 0; i < d; ++i) best = std::min(best, coeff(c, i));
  }
  return best;
}

void MetricField::require_elliptic_on_box(const Vec& lo, const Vec& hi) const {
  if (!(min_coefficient_on_box(lo, hi) > 0.0))
    throw std::domain_error("metric is not elliptic on the configured box");
}

double TangentialPoint::lambda_T() const {
  return std::sqrt(tau * tau + xi_prime.squaredNorm());
}

double TangentialPoint::lambda_aug() const {
  return std::sqrt(tau * tau + xi_prime.squaredNorm() + sigma * sigma);
}

void TangentialPoint::validate(bool require_nonzero) const {
  if (!(tau >= 0.0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be nonnegative");
  if (require_nonzero && lambda_aug() == 0.0)
    throw std::invalid_argument("(xi', tau, sigma) must be nonzero");
}

TangentialPoint TangentialPoint::dilated(double t) const {
  TangentialPoint q = *this;
  q.xi_prime *= t;
  q.tau *= t;
  q.sigma *= t;
  return q;
}

WeightJet WeightJet::simple(Vec d_tangential, double d_normal) {
  WeightJet w;
  const int d = static_cast<int>(d_tangential.size()) + 1;
  w.d_tangential = std::move(d_tangential);
  w.d_normal = d_normal;
  w.hessian = Mat::Zero(d, d);
  return w;
}

std::string to_string(RootCase c) {
  switch (c) {
    case RootCase::NoUpperRoot: return "NoUpperRoot";
    case RootCase::OneUpperRoot: return "OneUpperRoot";
    case RootCase::TwoDistinctUpperRoots: return "TwoDistinctUpperRoots";
    case RootCase::DoubleUpperRoot: return "DoubleUpperRoot";
  }
  return "?";
}

cplx sqrt_branch(cplx m) {
  cplx a = std::sqrt(m);
  if (a.real() == 0.0 && a.imag() < 0.0) a = -a;
  if (a.real() < 0.0) a = -a;
  return a;
}

cplx factor_radicand(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j) {
  if (j != 1 && j != 2) throw std::invalid_argument("factor index must be 1 or 2");
  const Vec eta = p.tau * w.d_tangential;
  const double sign = (j == 1) ? -1.0 : 1.0;
  return g.r_complex(p.x, p.xi_prime, eta) + sign * p.sigma * p.sigma;
}

cplx factor_symbol_eval(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j,
                        cplx xi_d) {
  const cplx s = xi_d + I_unit * p.tau * w.d_normal;
  return s * s + factor_radicand(g, p, w, j);
}

RootPair factor_roots(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j) {
  RootPair rp;
  rp.factor = j;
  rp.radicand = factor_radicand(g, p, w, j);
  rp.alpha = sqrt_branch(rp.radicand);
  const cplx shift = -I_unit * p.tau * w.d_normal;
  rp.pi_1 = shift - I_unit * rp.alpha;
  rp.pi_2 = shift + I_unit * rp.alpha;
  return rp;
}

std::array<cplx, 4> quartic_roots(const MetricField& g, const TangentialPoint& p,
                                  const WeightJet& w) {
  const RootPair a = factor_roots(g, p, w, 1);
  const RootPair b = factor_roots(g, p, w, 2);
  return {a.pi_1, a.pi_2, b.pi_1, b.pi_2};
}

cplx quartic_eval(const MetricField& g, const TangentialPoint& p, const WeightJet& w, cplx xi_d) {
  return factor_symbol_eval(g, p, w, 1, xi_d) * factor_symbol_eval(g, p, w, 2, xi_d);
}

RootConfiguration classify_roots(const MetricField& g, const TangentialPoint& p, const WeightJet& w,
                                 double tol) {
  if (!(w.d_normal > 0.0))
    throw std::invalid_argument("root classification requires a positive normal derivative of the weight");
  p.validate(true);
  RootConfiguration rc;
  rc.classification_tolerance = tol;
  rc.scale = p.lambda_aug();
  const double band = tol * rc.scale;

  const RootPair f1 = factor_roots(g, p, w, 1);
  const RootPair f2 = factor_roots(g, p, w, 2);
  const std::array<cplx, 4> roots{f1.pi_1, f1.pi_2, f2.pi_1, f2.pi_2};
  const std::array<int, 4> owner{1, 1, 2, 2};

  for (int k = 0; k < 4; ++k) {
    const double im = roots[k].imag();
    if (std::abs(im) <= band) rc.marginal = true;
    if (im >= -band) {
      rc.upper_roots.push_back(roots[k]);
      rc.upper_factors.push_back(owner[k]);
    } else {
      rc.lower_roots.push_back(roots[k]);
    }
  }
  if (rc.upper_roots.size() > 2) {
    rc.marginal = true;
    std::vector<int> idx(rc.upper_roots.size());
    for (size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      return rc.upper_roots[a].imag() > rc.upper_roots[b].imag();
    });
    std::vector<cplx> keep;
    std::vector<int> keep_owner;
    for (size_t k = 0; k < idx.size(); ++k) {
      if (k < 2) {
        keep.push_back(rc.upper_roots[idx[k]]);
        keep_owner.push_back(rc.upper_factors[idx[k]]);
      } else {
        rc.lower_roots.push_back(rc.upper_roots[idx[k]]);
      }
    }
    rc.upper_roots = keep;
    rc.upper_factors = keep_owner;
  }

  switch (rc.upper_roots.size()) {
    case 0: rc.case_tag = RootCase::NoUpperRoot; break;
    case 1: rc.case_tag = RootCase::OneUpperRoot; break;
    default:
      rc.case_tag = std::abs(rc.upper_roots[0] - rc.upper_roots[1]) <= band
                        ? RootCase::DoubleUpperRoot
                        : RootCase::TwoDistinctUpperRoots;
  }
  return rc;
}

bool im_sign_criterion(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j) {
  if (!(w.d_normal > 0.0)) throw std::invalid_argument("criterion requires a positive normal derivative");
  if (p.tau == 0.0) return false;
  const double dn = w.d_normal;
  const double rt = g.r_bilinear(p.x, p.xi_prime, w.d_tangential);
  const double lhs = dn * dn * g.r(p.x, p.xi_prime) + rt * rt;
  const double grad2 = dn * dn + g.r(p.x, w.d_tangential);
  const double sign = (j == 1) ? 1.0 : -1.0;
  const double rhs = p.tau * p.tau * dn * dn * grad2 + sign * p.sigma * p.sigma * dn * dn;
  return lhs < rhs;
}

double sqrt_real_part_indicator(cplx m, double x0) {
  const double x2 = x0 * x0;
  return 4.0 * x2 * m.real() - 4.0 * x2 * x2 + m.imag() * m.imag();
}

bool sqrt_real_part_below(cplx m, double x0) { return sqrt_real_part_indicator(m, x0) < 0.0; }

}  // namespace platelab
