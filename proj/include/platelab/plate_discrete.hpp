#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace platelab {

using SpMat = Eigen::SparseMatrix<double>;

enum class BcPair { Hinged, Clamped, NeumannPair, Ex2, Ex3, Ex4, Ex5 };

BcPair bc_from_name(const std::string& name);
std::string bc_name(BcPair bc);
std::vector<BcPair> all_bc_pairs();

struct BcSpec {
  BcPair pair = BcPair::Clamped;
  /// zeroth/first-order boundary coefficient of the parameterized families
  double a = 0.0;
  static BcSpec of(const std::string& name);
};

struct Grid {
  int dim = 1;
  std::vector<int> cells;
  std::vector<double> length;

  static Grid interval(int n, double length = 1.0);
  static Grid rectangle(int nx, int ny, double lx = 1.0, double ly = 1.0);

  double h(int axis) const { return length[axis] / cells[axis]; }
  int nodes(int axis) const { return cells[axis] + 1; }
  double cell_volume() const;
  void validate() const;
};

struct PlateCoefficients {
  /// nodal values of a(x) for (a u'')''; empty means a = 1 (1-D only)
  Eigen::VectorXd rigidity;
  /// constant diagonal metric coefficients per axis (2-D)
  std::vector<double> axis_metric;
};

/// Reduced operator acting on u~ = W^{1/2} u, where W holds the trapezoid weights of the
/// unknown nodes; the grid inner product is cell_volume * sum u~ v~.
struct DiscretePlateOperator {
  Grid grid;
  BcSpec bc;
  PlateCoefficients coefficients;
  Eigen::MatrixXd coords;
  Eigen::VectorXd weights;
  SpMat nodal;
  SpMat matrix;
  double cell_volume = 1.0;

  int size() const { return static_cast<int>(weights.size()); }
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return cell_volume * u.dot(v); }
  double norm(const Eigen::VectorXd& u) const;
  Eigen::VectorXd to_nodal(const Eigen::VectorXd& u) const;
  Eigen::VectorXd from_nodal(const Eigen::VectorXd& u) const;
  Eigen::VectorXd sample(const std::function<double(const Eigen::VectorXd&)>& f) const;
};

DiscretePlateOperator assemble(const Grid& grid, const BcSpec& bc, const PlateCoefficients& coef = {});

/// second-difference matrices on interior nodes (Dirichlet) and all nodes (even reflection)
SpMat dirichlet_second_difference(int n, double h);
SpMat neumann_second_difference(int n, double h);

DiscretePlateOperator disjoint_union(const DiscretePlateOperator& a, const DiscretePlateOperator& b);

double symmetry_residual(const DiscretePlateOperator& op);
double check_symmetry(const DiscretePlateOperator& op, int trials = 16, std::uint64_t seed = 0);

struct SpectralScale {
  Eigen::VectorXd mu;
  Eigen::MatrixXd phi;
  double cell_volume = 1.0;
  int full_size = 0;

  int count() const { return static_cast<int>(mu.size()); }
  bool complete() const { return count() == full_size; }
  Eigen::VectorXd coefficients(const Eigen::VectorXd& u) const;
  double hkb_norm(const Eigen::VectorXd& u, double k, bool* truncation_warning = nullptr) const;
};

SpectralScale spectrum(const DiscretePlateOperator& op, int count = -1);
double min_rayleigh_quotient(const DiscretePlateOperator& op);

/// relative to the largest computed eigenvalue, i.e. a few thousand ulps of the matrix norm
inline constexpr double kKernelTolerance = 1e-12;
std::vector<Eigen::VectorXd> kernel(const SpectralScale& scale, double tol = kKernelTolerance);
int kernel_dimension(const SpectralScale& scale, double tol = kKernelTolerance);

struct GreenCheck {
  double discrete = 0.0;
  double boundary_form = 0.0;
};

/// derivative-aware smooth function on R: f(x, k) = k-th derivative
using SmoothFn = std::function<double(double, int)>;

/// trapezoid <D4 u, v> - <u, D4 v> on [0, L] against the boundary form of the Green formula
GreenCheck green_form_check(int n, double length, const SmoothFn& u, const SmoothFn& v);

double beam_clamped_beta(int k);

struct SampledProfile {
  std::vector<double> x;
  std::vector<double> value;
  double operator()(double t) const;
  static SampledProfile load(const std::string& path);
  static SampledProfile parse(std::istream& in, const std::string& source);
};

void write_operator_columns(std::ostream& os, const DiscretePlateOperator& op,
                            const SpectralScale* scale = nullptr);

std::string format_double(double v);

}  // namespace platelab
