#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "platelab/symbol_core.hpp"

namespace platelab {

struct FieldJet {
  double value = 0.0;
  Vec grad;
  Mat hessian;
};

class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual int dim() const = 0;
  virtual FieldJet jet(const Vec& x) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

/// sum_k c_k prod_i x_i^{e_ki}
class PolynomialField : public ScalarField {
 public:
  struct Term {
    double coeff;
    std::vector<int> exponents;
  };
  PolynomialField(int dim, std::vector<Term> terms);
  /// c0 + c1 x + c2 x^2 + ... in one variable
  static std::shared_ptr<PolynomialField> univariate(const std::vector<double>& coeffs);

  int dim() const override { return dim_; }
  FieldJet jet(const Vec& x) const override;
  nlohmann::json to_json() const override;

 private:
  int dim_;
  std::vector<Term> terms_;
};

/// psi(x) = s * int_0^{(x-a)/L} (m - t) e^{beta t} dt on [a, a+L], zero at both ends
class IntervalBumpField : public ScalarField {
 public:
  IntervalBumpField(double a, double length, double center, double scale = 1.0);
  int dim() const override { return 1; }
  FieldJet jet(const Vec& x) const override;
  nlohmann::json to_json() const override;
  double beta() const { return beta_; }
  double center() const { return m_; }

 private:
  double a_, len_, m_, scale_, beta_;
  double primitive(double t) const;
};

/// f(x_0) * g(x_1) from two one-dimensional fields
class ProductField : public ScalarField {
 public:
  ProductField(FieldPtr fx, FieldPtr fy);
  int dim() const override { return 2; }
  FieldJet jet(const Vec& x) const override;
  nlohmann::json to_json() const override;

 private:
  FieldPtr fx_, fy_;
};

/// f(x_axis) viewed as a field on R^dim
class AxisField : public ScalarField {
 public:
  AxisField(FieldPtr f, int dim, int axis);
  int dim() const override { return dim_; }
  FieldJet jet(const Vec& x) const override;
  nlohmann::json to_json() const override;

 private:
  FieldPtr f_;
  int dim_, axis_;
};

FieldPtr field_from_json(const nlohmann::json& j);

struct WeightField {
  FieldPtr psi;
  double gamma = 1.0;

  FieldJet phi_jet(const Vec& x) const;
  /// tangential/normal split with the last coordinate normal
  WeightJet boundary_jet(const Vec& x) const;
  nlohmann::json to_json() const;
};

struct SymbolJet {
  double value = 0.0;
  Vec dx;
  Vec dxi;
};

double poisson_bracket(const SymbolJet& f, const SymbolJet& g);

/// q_s^j = r(x,xi) - tau^2 r(x,dphi) + (-1)^j sigma^2 and q_a = 2 tau r(x, xi, dphi), full metric
std::pair<SymbolJet, SymbolJet> conjugated_symbol_jets(const MetricField& g, const WeightField& wf,
                                                       const Vec& x, const Vec& xi, double tau,
                                                       double sigma, int j);

struct RegionGrid {
  Vec lo;
  Vec hi;
  int points_per_axis = 33;

  int dim() const { return static_cast<int>(lo.size()); }
  std::vector<Vec> points() const;
  RegionGrid refined() const;
  nlohmann::json to_json() const;
};

struct BracketSample {
  Vec x;
  Vec xi;
  double tau = 0.0, sigma = 0.0;
  double q_s = 0.0, q_a = 0.0;
  double bracket = 0.0;
  double margin = 0.0;
};

struct SubellipticityReport {
  int factor = 1;
  double margin = 0.0;
  bool vacuous = false;
  std::size_t characteristic_points = 0;
  int xi_resolution = 0;
  RegionGrid grid;
  int refinements = 0;
  bool stabilized = false;
  BracketSample worst;
  nlohmann::json to_json() const;
};

struct SubellipticityOptions {
  double tau0 = 1.0;
  /// upper ratio tau <= kappa0' sigma; infinity disables it
  double tau_upper_ratio = std::numeric_limits<double>::infinity();
  int xi_resolution = 65;
  int max_refinements = 3;
  double residual_tol = 1e-9;
  bool refine = true;
};

/// exact zeros of q^j at tau = 1, sampled along the q_a = 0 line for each grid point
std::vector<BracketSample> characteristic_samples(const MetricField& g, const WeightField& wf, int j,
                                                  const RegionGrid& region, int xi_resolution,
                                                  const SubellipticityOptions& opt = {});

SubellipticityReport subellipticity_check(const MetricField& g, const WeightField& wf, int j,
                                          const RegionGrid& region,
                                          const SubellipticityOptions& opt = {});

struct GammaSearchResult {
  double gamma0 = 0.0;
  bool found = false;
  double margin_j1 = 0.0;
  double margin_j2 = 0.0;
  bool vacuous_j1 = false;
  bool vacuous_j2 = false;
  int evaluations = 0;
  double min_grad_psi = 0.0;
  nlohmann::json to_json() const;
};

GammaSearchResult gamma_search(const MetricField& g, const FieldPtr& psi, const RegionGrid& region,
                               const SubellipticityOptions& opt = {}, double gamma_max = 1e6,
                               int bisection_steps = 8);

struct MuSearchResult {
  double mu = 0.0;
  bool found = false;
  double c = 0.0;
  double reference_bracket = 0.0;
  double worst_ratio = 0.0;
  std::size_t samples = 0;
  bool recheck_passed = false;
  double recheck_worst_ratio = 0.0;
  nlohmann::json to_json() const;
};

struct MuSearchOptions {
  double tau0 = 1.0;
  double c_fraction = 0.5;
  double mu_max = 0x1.0p40;
  int sphere_resolution = 24;
  int recheck_samples = 20000;
  std::uint64_t seed = 0;
};

/// t(rho) = mu (q_s^2 + q_a^2) + tau {q_s, q_a} at a point
double urg_quantity(const MetricField& g, const WeightField& wf, int j, const Vec& x, const Vec& xi,
                    double tau, double sigma, double mu);

MuSearchResult mu_search(const MetricField& g, const WeightField& wf, int j, const RegionGrid& region,
                         const MuSearchOptions& opt = {});

struct Domain {
  enum class Kind { Interval, Rectangle } kind = Kind::Interval;
  Vec lo;
  Vec hi;
  static Domain interval(double a, double b);
  static Domain rectangle(double x0, double x1, double y0, double y1);
};

struct ExclusionSet {
  enum class Kind { Interval, Disc } kind = Kind::Interval;
  Vec center;
  double radius = 0.0;
  static ExclusionSet interval(double a, double b);
  static ExclusionSet disc(double cx, double cy, double r);
  bool contains(const Vec& x) const;
};

struct GlobalWeightReport {
  double boundary_max_abs_psi = 0.0;
  double boundary_max_normal_derivative = 0.0;
  double interior_min_psi = 0.0;
  double min_grad_outside = 0.0;
  double corner_exclusion = 0.0;
  int grid_points = 0;
};

WeightField build_global_weight(const Domain& domain, const ExclusionSet& o0, double gamma = 1.0,
                                GlobalWeightReport* report = nullptr, int verify_points = 201);

}  // namespace platelab
