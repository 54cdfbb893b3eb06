#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace platelab {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

inline constexpr cplx I_unit{0.0, 1.0};

/// Diagonal metric g^{ii}(x) = base_i + <grad_i, x>, affine in x.
/// The last coordinate is the normal one; r() only sees tangential indices.
class MetricField {
 public:
  MetricField() = default;
  static MetricField euclidean(int dim);
  static MetricField affine_diagonal(Vec base, Mat grad);

  int dim() const { return static_cast<int>(base_.size()); }
  double coeff(const Vec& x, int i) const;
  /// d/dx_k of g^{ii}
  double coeff_derivative(int i, int k) const { return grad_(i, k); }

  double r(const Vec& x, const Vec& xi_t) const;
  double r_bilinear(const Vec& x, const Vec& a, const Vec& b) const;
  cplx r_complex(const Vec& x, const CVec& zeta) const;
  cplx r_complex(const Vec& x, const Vec& xi_t, const Vec& eta_t) const;

  double norm2_full(const Vec& x, const Vec& xi) const;
  double bilinear_full(const Vec& x, const Vec& a, const Vec& b) const;

  /// min of g^{ii} over the corners of the box [lo, hi]; exact for affine coefficients.
  double min_coefficient_on_box(const Vec& lo, const Vec& hi) const;
  void require_elliptic_on_box(const Vec& lo, const Vec& hi) const;

  const Vec& base() const { return base_; }
  const Mat& grad() const { return grad_; }

 private:
  Vec base_;
  Mat grad_;
};

struct TangentialPoint {
  Vec x;
  Vec xi_prime;
  double tau = 0.0;
  double sigma = 0.0;

  double lambda_T() const;
  double lambda_aug() const;
  void validate(bool require_nonzero) const;
  TangentialPoint dilated(double t) const;
};

struct WeightJet {
  double phi = 1.0;
  Vec d_tangential;
  double d_normal = 1.0;
  Mat hessian;

  static WeightJet simple(Vec d_tangential, double d_normal);
};

struct RootPair {
  int factor = 1;
  cplx radicand;
  cplx alpha;
  cplx pi_1;
  cplx pi_2;
};

enum class RootCase { NoUpperRoot, OneUpperRoot, TwoDistinctUpperRoots, DoubleUpperRoot };

std::string to_string(RootCase c);

struct RootConfiguration {
  RootCase case_tag = RootCase::NoUpperRoot;
  std::vector<cplx> upper_roots;
  std::vector<int> upper_factors;
  std::vector<cplx> lower_roots;
  double classification_tolerance = 1e-9;
  double scale = 0.0;
  bool marginal = false;
};

inline constexpr double kDefaultRootTolerance = 1e-9;

cplx sqrt_branch(cplx m);

cplx factor_radicand(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j);

cplx factor_symbol_eval(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j,
                        cplx xi_d);

RootPair factor_roots(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j);

/// Ordered as {pi_{1,1}, pi_{1,2}, pi_{2,1}, pi_{2,2}}.
std::array<cplx, 4> quartic_roots(const MetricField& g, const TangentialPoint& p,
                                  const WeightJet& w);

cplx quartic_eval(const MetricField& g, const TangentialPoint& p, const WeightJet& w, cplx xi_d);

RootConfiguration classify_roots(const MetricField& g, const TangentialPoint& p, const WeightJet& w,
                                 double tol = kDefaultRootTolerance);

bool im_sign_criterion(const MetricField& g, const TangentialPoint& p, const WeightJet& w, int j);

/// Signed quantity 4 x0^2 Re m - 4 x0^4 + (Im m)^2; negative iff |Re sqrt(m)| < |x0|.
double sqrt_real_part_indicator(cplx m, double x0);
bool sqrt_real_part_below(cplx m, double x0);

}  // namespace platelab
