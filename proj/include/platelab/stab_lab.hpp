#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "platelab/plate_discrete.hpp"

namespace platelab {

using cplx_t = std::complex<double>;

Eigen::VectorXd damping_profile(const DiscretePlateOperator& op, const std::string& spec);

struct StateVector {
  Eigen::VectorXd y;
  Eigen::VectorXd v;
  double t = 0.0;

  static StateVector zero(int n);
  bool finite() const;
};

/// A = [[0, -I], [P0, alpha]] with P0 the reduced plate matrix.  Reduced coordinates z = (w, b)
/// parametrize the complement H-dot: w_k = sqrt(mu_k) <u0, phi_k> over non-kernel modes and
/// b = modal coefficients of u1, so the H-dot norm is Euclidean in z.
class Generator {
 public:
  static Generator build(const DiscretePlateOperator& op, Eigen::VectorXd alpha,
                         double kernel_tol = kKernelTolerance);

  const DiscretePlateOperator& op() const { return *op_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  const SpectralScale& scale() const { return scale_; }
  int size() const { return op_->size(); }
  int kernel_dim() const { return static_cast<int>(kernel_l2_.cols()); }
  const Eigen::MatrixXd& kernel_l2() const { return kernel_l2_; }
  const Eigen::MatrixXd& kernel_alpha() const { return kernel_alpha_; }
  double alpha_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  int reduced_dim() const { return static_cast<int>(reduced_.rows()); }
  const Eigen::MatrixXd& reduced() const { return reduced_; }
  Eigen::VectorXd to_reduced(const StateVector& Y) const;
  StateVector from_reduced(const Eigen::VectorXd& z) const;
  StateVector apply(const StateVector& Y) const;

  std::vector<double> kernel_forms(const StateVector& Y) const;

 private:
  std::shared_ptr<const DiscretePlateOperator> op_;
  Eigen::VectorXd alpha_;
  SpectralScale scale_;
  std::vector<int> modes_;
  Eigen::MatrixXd kernel_l2_;
  Eigen::MatrixXd kernel_alpha_;
  Eigen::MatrixXd reduced_;
};

std::pair<StateVector, StateVector> kernel_projection(const StateVector& Y, const Generator& gen);
double energy(const StateVector& Y, const DiscretePlateOperator& op);
double hdot_norm(const StateVector& Y, const Generator& gen);

struct StepInfo {
  double dissipation = 0.0;
};

class MidpointIntegrator {
 public:
  MidpointIntegrator(const Generator& gen, double dt);
  StateVector step(const StateVector& Y, StepInfo* info = nullptr) const;
  double dt() const { return dt_; }

 private:
  const Generator* gen_;
  double dt_;
  Eigen::SimplicialLDLT<SpMat> solver_;
};

StateVector step(const StateVector& Y, const Generator& gen, double dt);

struct EnergyLog {
  std::vector<double> t;
  std::vector<double> energy;
  std::vector<double> dissipation;
  double dt = 0.0;
  std::string scheme = "implicit-midpoint";
  std::vector<std::pair<std::string, std::string>> metadata;

  std::size_t size() const { return t.size(); }
  bool monotone(double rel_tol = 1e-12) const;
  void write_csv(std::ostream& os) const;
  static EnergyLog read_csv(std::istream& in, const std::string& source = "<stream>");
  std::string meta(const std::string& key) const;
};

struct SimulationResult {
  EnergyLog log;
  StateVector final_state;
  std::size_t steps = 0;
  double max_kernel_drift = 0.0;
  double dissipated = 0.0;
};

SimulationResult simulate(const StateVector& Y0, const Generator& gen, double T, double dt,
                          int log_stride = 1);

double decay_fit(const EnergyLog& log, int n, double amp);
double power_amplitude(const StateVector& Y0, const Generator& gen, int n);

class NearSingularError : public std::runtime_error {
 public:
  NearSingularError(const std::string& msg, double rcond) : std::runtime_error(msg), rcond_(rcond) {}
  double rcond() const { return rcond_; }

 private:
  double rcond_;
};

/// Hessenberg form of the reduced generator, reused across resolvent evaluations
class ResolventSolver {
 public:
  explicit ResolventSolver(const Generator& gen);
  double norm(cplx_t z, double* rcond = nullptr) const;
  int dim() const { return static_cast<int>(H_.rows()); }

 private:
  Eigen::MatrixXd H_;
  double hnorm_ = 0.0;
};

double resolvent_norm(const Generator& gen, cplx_t z);

struct SweepRow {
  double sigma = 0.0;
  double norm = 0.0;
  double log_norm = 0.0;
  double slack = 0.0;
  bool skipped = false;
  double rcond = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double fitted_c = 0.0;
  void write_csv(std::ostream& os) const;
};

std::vector<double> sigma_grid(double lo, double hi, double step);
SweepResult resolvent_sweep(const Generator& gen, const std::vector<double>& sigmas, int threads = 0);

struct HalfplaneResult {
  double min_re = 0.0;
  std::vector<cplx_t> eigenvalues;
};

HalfplaneResult halfplane_check(const Generator& gen, int count = 0);

int thread_count_from_env();

}  // namespace platelab
