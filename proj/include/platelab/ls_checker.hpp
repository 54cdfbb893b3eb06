#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "platelab/symbol_core.hpp"

namespace platelab {

/// coeff * |zeta'|_x^norm_power * (covector . zeta'), the covector factor being absent when empty.
/// Odd norm powers use the principal square root of r(x, zeta') for complex arguments.
struct TangentialTerm {
  cplx coeff{0.0, 0.0};
  int norm_power = 0;
  Vec covector;

  int degree() const { return norm_power + (covector.size() > 0 ? 1 : 0); }
  cplx eval(const MetricField& g, const Vec& x, const CVec& zeta) const;
};

/// b(x, zeta', xi_d) = sum_m c_m(x, zeta') xi_d^m with m <= 3.
class BoundaryOperatorSymbol {
 public:
  BoundaryOperatorSymbol() = default;
  BoundaryOperatorSymbol(std::string label, int order);

  BoundaryOperatorSymbol& add(int normal_power, TangentialTerm term);
  BoundaryOperatorSymbol& add(int normal_power, cplx coeff, int norm_power = 0);

  const std::string& label() const { return label_; }
  int order() const { return order_; }
  int normal_degree() const;
  const std::array<std::vector<TangentialTerm>, 4>& terms() const { return terms_; }

  std::array<cplx, 4> coefficients(const MetricField& g, const Vec& x, const CVec& zeta) const;
  cplx eval(const MetricField& g, const Vec& x, const CVec& zeta, cplx xi_d) const;
  cplx eval_dxi(const MetricField& g, const Vec& x, const CVec& zeta, cplx xi_d) const;

  /// coefficients in xi_d of b(x, xi' + i tau d'phi, xi_d + i tau d_n phi)
  std::array<cplx, 4> conjugated_coefficients(const MetricField& g, const TangentialPoint& p,
                                              const WeightJet& w) const;

  void validate_homogeneity() const;
  std::string describe() const;

 private:
  std::string label_;
  int order_ = 0;
  std::array<std::vector<TangentialTerm>, 4> terms_;
};

struct BoundaryPair {
  std::string name;
  BoundaryOperatorSymbol b1;
  BoundaryOperatorSymbol b2;
};

struct CatalogParams {
  /// a'(x, w') = a * |w'|^k with k fixed by the family
  double a = 0.0;
  std::vector<TangentialTerm> a_prime;
  bool check_admissible = true;
  int tangential_dim = 1;
};

const std::vector<std::string>& catalog_names();
BoundaryPair catalog_bc(const std::string& name, const CatalogParams& params = {});
double catalog_default_parameter(const std::string& name);

BoundaryPair parse_boundary_pair(std::istream& in, const std::string& source = "<stream>");
BoundaryPair load_boundary_pair(const std::string& path);

struct LSReport {
  bool verdict = false;
  bool indeterminate = false;
  RootCase case_tag = RootCase::DoubleUpperRoot;
  std::optional<cplx> determinant;
  std::optional<cplx> auxiliary_determinant;
  std::vector<cplx> boundary_values;
  double normalized_margin = 0.0;
  bool marginal = false;
  std::vector<cplx> upper_roots;
};

inline constexpr double kMarginTolerance = 1e-8;
inline constexpr double kRankTolerance = 1e-8;
inline constexpr double kPositivityTolerance = 1e-14;

LSReport ls_unconjugated(const BoundaryPair& bp, const MetricField& g, const Vec& x,
                         const Vec& omega_prime, double tol = kMarginTolerance);

LSReport ls_conjugated(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                       const TangentialPoint& p, double tol = kMarginTolerance,
                       double root_tol = kDefaultRootTolerance);

CMat ls_coefficient_matrix(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                           const TangentialPoint& p, const RootConfiguration& rc);

int ls_rank_oracle(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                   const TangentialPoint& p, double tol = kRankTolerance,
                   double root_tol = kDefaultRootTolerance);

double positivity_margin(const BoundaryPair& bp, const MetricField& g, const WeightJet& w,
                         const TangentialPoint& p, double root_tol = kDefaultRootTolerance);

struct PerturbationResult {
  double epsilon = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  bool warning = false;
  std::string message;
};

PerturbationResult perturbation_margin(const BoundaryPair& bp, const MetricField& g, const Vec& x,
                                       const Vec& xi_prime, int sample_budget = 400,
                                       std::uint64_t seed = 0);

struct ThresholdResult {
  double mu0 = 0.0;
  double mu1 = 0.0;
  std::size_t samples_checked = 0;
  std::size_t indeterminate = 0;
};

ThresholdResult conjugation_thresholds(const BoundaryPair& bp, const MetricField& g,
                                       const std::vector<Vec>& boundary_sample,
                                       const std::vector<double>& mu_grid,
                                       int samples_per_point = 64, std::uint64_t seed = 0);

}  // namespace platelab
