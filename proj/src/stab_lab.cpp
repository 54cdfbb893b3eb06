#include "platelab/stab_lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace platelab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("damping spec: bad " + what + " '" + s + "'");
  }
}

double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * (3.0 - 2.0 * s);
}

double plateau(double x, double a, double b) {
  const double w = 0.25 * (b - a);
  return smoothstep((x - a) / w) * smoothstep((b - x) / w);
}

}  // namespace

VectorXd damping_profile(const DiscretePlateOperator& op, const std::string& spec) {
  const int N = op.size();
  const auto parts = split(spec, ':');
  if (parts.empty()) throw std::invalid_argument("empty damping spec");
  const std::string& kind = parts[0];
  VectorXd alpha(N);
  if (kind == "zero" || kind == "none") {
    if (parts.size() != 1) throw std::invalid_argument("damping spec 'zero' takes no arguments");
    alpha.setZero();
  } else if (kind == "const") {
    if (parts.size() != 2) throw std::invalid_argument("damping spec: expected const:value");
    alpha.setConstant(parse_number(parts[1], "value"));
  } else if (kind == "bump") {
    if (parts.size() != 4) throw std::invalid_argument("damping spec: expected bump:a:b:amplitude");
    const double a = parse_number(parts[1], "left end"), b = parse_number(parts[2], "right end");
    const double amp = parse_number(parts[3], "amplitude");
    if (!(b > a)) throw std::invalid_argument("damping spec: bump needs a < b");
    for (int k = 0; k < N; ++k) alpha(k) = amp * plateau(op.coords(k, 0), a, b);
  } else if (kind == "box") {
    if (parts.size() != 6) throw std::invalid_argument("damping spec: expected box:x0:x1:y0:y1:amplitude");
    if (op.grid.dim != 2) throw std::invalid_argument("damping spec: box needs a rectangle");
    const double x0 = parse_number(parts[1], "x0"), x1 = parse_number(parts[2], "x1");
    const double y0 = parse_number(parts[3], "y0"), y1 = parse_number(parts[4], "y1");
    const double amp = parse_number(parts[5], "amplitude");
    if (!(x1 > x0 && y1 > y0)) throw std::invalid_argument("damping spec: empty box");
    for (int k = 0; k < N; ++k)
      alpha(k) = amp * plateau(op.coords(k, 0), x0, x1) * plateau(op.coords(k, 1), y0, y1);
  } else if (kind == "file") {
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon + 1 >= spec.size())
      throw std::invalid_argument("damping spec: expected file:path");
    const SampledProfile prof = SampledProfile::load(spec.substr(colon + 1));
    for (int k = 0; k < N; ++k) alpha(k) = prof(op.coords(k, 0));
  } else {
    throw std::invalid_argument("unknown damping spec '" + spec + "' (zero, const, bump, box, file)");
  }
  if (!alpha.allFinite() || (alpha.array() < 0.0).any())
    throw std::invalid_argument("damping profile must be finite and nonnegative");
  return alpha;
}

StateVector StateVector::zero(int n) {
  StateVector s;
  s.y = VectorXd::Zero(n);
  s.v = VectorXd::Zero(n);
  return s;
}

bool StateVector::finite() const { return y.allFinite() && v.allFinite() && std::isfinite(t); }

Generator Generator::build(const DiscretePlateOperator& op, VectorXd alpha, double kernel_tol) {
  const int N = op.size();
  if (alpha.size() != N) throw std::invalid_argument("damping profile size does not match the grid");
  if (!alpha.allFinite() || (alpha.array() < 0.0).any())
    throw std::invalid_argument("damping profile must be finite and nonnegative");
  Generator g;
  g.op_ = std::make_shared<const DiscretePlateOperator>(op);
  g.alpha_ = std::move(alpha);
  g.scale_ = spectrum(op);
  const int kdim = kernel_dimension(g.scale_, kernel_tol);
  const double cv = op.cell_volume;
  g.kernel_l2_ = g.scale_.phi.leftCols(kdim);
  for (int k = kdim; k < N; ++k) g.modes_.push_back(k);

  if (kdim > 0) {
    const MatrixXd gram = cv * g.kernel_l2_.transpose() * g.alpha_.asDiagonal() * g.kernel_l2_;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gram);
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 1e-12 * std::max(1.0, g.alpha_.maxCoeff())))
      throw std::invalid_argument("damping-weighted Gram matrix is singular on the kernel (smallest eigenvalue " +
                                  format_double(lo) + "); damping must be positive on an open set");
    Eigen::LLT<MatrixXd> llt(gram);
    const MatrixXd Linv = llt.matrixL().solve(MatrixXd::Identity(kdim, kdim));
    g.kernel_alpha_ = g.kernel_l2_ * Linv.transpose();
  } else {
    g.kernel_alpha_.resize(N, 0);
  }

  const int m = static_cast<int>(g.modes_.size());
  MatrixXd R = MatrixXd::Zero(m + N, m + N);
  for (int i = 0; i < m; ++i) {
    const int k = g.modes_[i];
    const double s = std::sqrt(g.scale_.mu(k));
    R(i, m + k) = -s;
    R(m + k, i) = s;
  }
  R.bottomRightCorner(N, N) = cv * g.scale_.phi.transpose() * g.alpha_.asDiagonal() * g.scale_.phi;
  g.reduced_ = std::move(R);
  return g;
}

double Generator::alpha_inner(const VectorXd& u, const VectorXd& v) const {
  return op_->cell_volume * (alpha_.array() * u.array() * v.array()).sum();
}

std::vector<double> Generator::kernel_forms(const StateVector& Y) const {
  std::vector<double> f(kernel_dim());
  const double cv = op_->cell_volume;
  for (int j = 0; j < kernel_dim(); ++j) {
    const auto phi = kernel_alpha_.col(j);
    const double norm2 = alpha_inner(phi, phi);
    f[j] = (alpha_inner(Y.y, phi) + cv * Y.v.dot(phi)) / norm2;
  }
  return f;
}

VectorXd Generator::to_reduced(const StateVector& Y) const {
  const int m = static_cast<int>(modes_.size());
  const int N = size();
  VectorXd z(m + N);
  const VectorXd a = scale_.coefficients(Y.y);
  for (int i = 0; i < m; ++i) z(i) = std::sqrt(scale_.mu(modes_[i])) * a(modes_[i]);
  z.tail(N) = scale_.coefficients(Y.v);
  return z;
}

StateVector Generator::from_reduced(const VectorXd& z) const {
  const int m = static_cast<int>(modes_.size());
  const int N = size();
  if (z.size() != m + N) throw std::invalid_argument("reduced vector has the wrong size");
  StateVector Y = StateVector::zero(N);
  for (int i = 0; i < m; ++i) {
    const int k = modes_[i];
    Y.y += (z(i) / std::sqrt(scale_.mu(k))) * scale_.phi.col(k);
  }
  Y.v = scale_.phi * z.tail(N);
  const double cv = op_->cell_volume;
  VectorXd corr = VectorXd::Zero(N);
  for (int j = 0; j < kernel_dim(); ++j) {
    const auto phi = kernel_alpha_.col(j);
    const double c = -(alpha_inner(Y.y, phi) + cv * Y.v.dot(phi));
    corr += c * phi;
  }
  Y.y += corr;
  return Y;
}

StateVector Generator::apply(const StateVector& Y) const {
  StateVector out;
  out.t = Y.t;
  out.y = -Y.v;
  out.v = op_->matrix * Y.y + alpha_.cwiseProduct(Y.v);
  return out;
}

std::pair<StateVector, StateVector> kernel_projection(const StateVector& Y, const Generator& gen) {
  StateVector pn = StateVector::zero(gen.size());
  pn.t = Y.t;
  const auto f = gen.kernel_forms(Y);
  for (int j = 0; j < gen.kernel_dim(); ++j) pn.y += f[j] * gen.kernel_alpha().col(j);
  StateVector ph;
  ph.t = Y.t;
  ph.y = Y.y - pn.y;
  ph.v = Y.v;
  return {pn, ph};
}

double energy(const StateVector& Y, const DiscretePlateOperator& op) {
  const VectorXd Sy = op.matrix * Y.y;
  return 0.5 * (op.inner(Y.v, Y.v) + op.inner(Sy, Y.y));
}

double hdot_norm(const StateVector& Y, const Generator& gen) {
  return gen.to_reduced(kernel_projection(Y, gen).second).norm();
}

MidpointIntegrator::MidpointIntegrator(const Generator& gen, double dt) : gen_(&gen), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  const int N = gen.size();
  SpMat G = (0.25 * dt * dt) * gen.op().matrix;
  SpMat D(N, N);
  std::vector<Eigen::Triplet<double>> trip;
  for (int k = 0; k < N; ++k) trip.emplace_back(k, k, 1.0 + 0.5 * dt * gen.alpha()(k));
  D.setFromTriplets(trip.begin(), trip.end());
  G += D;
  solver_.compute(G);
  if (solver_.info() != Eigen::Success) throw std::runtime_error("midpoint matrix factorization failed");
}

StateVector MidpointIntegrator::step(const StateVector& Y, StepInfo* info) const {
  const auto& S = gen_->op().matrix;
  const auto& alpha = gen_->alpha();
  const double dt = dt_;
  const VectorXd rhs = Y.v - dt * (S * Y.y) - (0.5 * dt) * alpha.cwiseProduct(Y.v) - (0.25 * dt * dt) * (S * Y.v);
  StateVector out;
  out.v = solver_.solve(rhs);
  out.y = Y.y + (0.5 * dt) * (Y.v + out.v);
  out.t = Y.t + dt;
  if (info) {
    const VectorXd vm = 0.5 * (Y.v + out.v);
    info->dissipation = gen_->alpha_inner(vm, vm);
  }
  return out;
}

StateVector step(const StateVector& Y, const Generator& gen, double dt) {
  return MidpointIntegrator(gen, dt).step(Y);
}

bool EnergyLog::monotone(double rel_tol) const {
  if (energy.empty()) return true;
  const double scale = std::max(energy.front(), std::numeric_limits<double>::min());
  for (size_t i = 0; i < energy.size(); ++i) {
    if (energy[i] < -rel_tol * scale) return false;
    if (i > 0 && energy[i] > energy[i - 1] + rel_tol * scale) return false;
  }
  return true;
}

std::string EnergyLog::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return v;
  return {};
}

void EnergyLog::write_csv(std::ostream& os) const {
  os << "# dt: " << format_double(dt) << "\n";
  os << "# scheme: " << scheme << "\n";
  for (const auto& [k, v] : metadata)
    if (k != "dt" && k != "scheme") os << "# " << k << ": " << v << "\n";
  os << "t,energy,dissipation\n";
  for (size_t i = 0; i < t.size(); ++i)
    os << format_double(t[i]) << "," << format_double(energy[i]) << "," << format_double(dissipation[i]) << "\n";
}

EnergyLog EnergyLog::read_csv(std::istream& in, const std::string& source) {
  EnergyLog log;
  log.scheme.clear();
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      const std::string key = trim(line.substr(1, colon - 1));
      const std::string val = trim(line.substr(colon + 1));
      if (key == "dt")
        log.dt = std::stod(val);
      else if (key == "scheme")
        log.scheme = val;
      else
        log.metadata.emplace_back(key, val);
      continue;
    }
    if (!header) {
      if (line.rfind("t,energy", 0) != 0)
        throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected header 't,energy,dissipation'");
      header = true;
      continue;
    }
    const auto cols = split(line, ',');
    if (cols.size() < 3) throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected 3 columns");
    try {
      log.t.push_back(std::stod(cols[0]));
      log.energy.push_back(std::stod(cols[1]));
      log.dissipation.push_back(std::stod(cols[2]));
    } catch (const std::exception&) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  if (!header) throw std::invalid_argument(source + ": missing energy log header");
  return log;
}

SimulationResult simulate(const StateVector& Y0, const Generator& gen, double T, double dt, int log_stride) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("final time must be positive");
  if (log_stride < 1) throw std::invalid_argument("log stride must be at least 1");
  if (Y0.y.size() != gen.size() || Y0.v.size() != gen.size())
    throw std::invalid_argument("initial state size does not match the grid");
  const MidpointIntegrator integ(gen, dt);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(T / dt)));
  SimulationResult res;
  res.log.dt = dt;
  const auto f0 = gen.kernel_forms(Y0);
  StateVector Y = Y0;
  res.log.t.push_back(Y.t);
  res.log.energy.push_back(energy(Y, gen.op()));
  res.log.dissipation.push_back(0.0);
  double acc = 0.0, acc_t = 0.0;
  StepInfo info;
  for (std::size_t s = 1; s <= steps; ++s) {
    Y = integ.step(Y, &info);
    Y.t = Y0.t + static_cast<double>(s) * dt;
    if (!Y.v.allFinite() || !Y.y.allFinite())
      throw std::runtime_error("non-finite state detected at step " + std::to_string(s));
    acc += info.dissipation * dt;
    acc_t += dt;
    res.dissipated += info.dissipation * dt;
    if (s % static_cast<std::size_t>(log_stride) == 0 || s == steps) {
      res.log.t.push_back(Y.t);
      res.log.energy.push_back(energy(Y, gen.op()));
      res.log.dissipation.push_back(acc / acc_t);
      acc = acc_t = 0.0;
      const auto f = gen.kernel_forms(Y);
      for (size_t j = 0; j < f.size(); ++j)
        res.max_kernel_drift = std::max(res.max_kernel_drift, std::abs(f[j] - f0[j]));
    }
  }
  res.steps = steps;
  res.final_state = Y;
  return res;
}

double decay_fit(const EnergyLog& log, int n, double amp) {
  if (n < 0) throw std::invalid_argument("decay order must be nonnegative");
  if (!(amp > 0.0) || !std::isfinite(amp))
    throw std::invalid_argument("amplitude must be positive (initial state in the kernel makes the fit vacuous)");
  if (log.size() == 0) throw std::invalid_argument("empty energy log");
  double best = 0.0;
  for (size_t i = 0; i < log.size(); ++i)
    best = std::max(best, log.energy[i] * std::pow(std::log(2.0 + log.t[i]), 4.0 * n) / amp);
  return best;
}

double power_amplitude(const StateVector& Y0, const Generator& gen, int n) {
  if (n < 0) throw std::invalid_argument("power must be nonnegative");
  StateVector Y = Y0;
  for (int k = 0; k < n; ++k) Y = gen.apply(Y);
  const double r = hdot_norm(Y, gen);
  return r * r;
}

namespace {

/// Gaussian elimination with adjacent-row pivoting on an upper Hessenberg matrix
struct HessenbergLU {
  MatrixXcd U;
  std::vector<cplx_t> mult;
  std::vector<char> swapped;
  int n = 0;

  HessenbergLU(const MatrixXd& H, cplx_t z) : U(-H.cast<cplx_t>()), n(static_cast<int>(H.rows())) {
    U.diagonal().array() += z;
    mult.assign(n > 0 ? n - 1 : 0, 0.0);
    swapped.assign(mult.size(), 0);
    for (int k = 0; k + 1 < n; ++k) {
      if (std::abs(U(k + 1, k)) > std::abs(U(k, k))) {
        U.row(k).segment(k, n - k).swap(U.row(k + 1).segment(k, n - k));
        swapped[k] = 1;
      }
      if (U(k, k) == 0.0) continue;
      const cplx_t l = U(k + 1, k) / U(k, k);
      mult[k] = l;
      U.row(k + 1).segment(k, n - k) -= l * U.row(k).segment(k, n - k);
      U(k + 1, k) = 0.0;
    }
  }

  double min_pivot() const { return U.diagonal().cwiseAbs().minCoeff(); }

  VectorXcd solve(VectorXcd b) const {
    for (int k = 0; k + 1 < n; ++k) {
      if (swapped[k]) std::swap(b(k), b(k + 1));
      b(k + 1) -= mult[k] * b(k);
    }
    return U.triangularView<Eigen::Upper>().solve(b);
  }

  VectorXcd solve_adjoint(const VectorXcd& b) const {
    VectorXcd y = U.adjoint().triangularView<Eigen::Lower>().solve(b);
    for (int k = n - 2; k >= 0; --k) {
      y(k) -= std::conj(mult[k]) * y(k + 1);
      if (swapped[k]) std::swap(y(k), y(k + 1));
    }
    return y;
  }
};

}  // namespace

ResolventSolver::ResolventSolver(const Generator& gen) {
  Eigen::HessenbergDecomposition<MatrixXd> hd(gen.reduced());
  H_ = hd.matrixH();
  hnorm_ = gen.reduced().norm();
}

double ResolventSolver::norm(cplx_t z, double* rcond) const {
  const int n = dim();
  const double mnorm = hnorm_ + std::abs(z) * std::sqrt(static_cast<double>(n));
  const HessenbergLU lu(H_, z);
  if (!(lu.min_pivot() > 0.0)) {
    if (rcond) *rcond = 0.0;
    throw NearSingularError("resolvent: z is an eigenvalue of the reduced generator (zero pivot)", 0.0);
  }
  VectorXcd x(n);
  for (int k = 0; k < n; ++k) x(k) = cplx_t(1.0 + 0.5 * std::sin(1.7 * k + 0.3), 0.25 * std::cos(0.9 * k));
  x.normalize();
  double lam = 0.0;
  for (int it = 0; it < 1000; ++it) {
    const VectorXcd y = lu.solve(x);
    const double cur = y.squaredNorm();
    VectorXcd w = lu.solve_adjoint(y);
    const double wn = w.norm();
    if (!std::isfinite(wn) || wn == 0.0) break;
    x = w / wn;
    const bool done = it > 2 && std::abs(cur - lam) <= 1e-12 * cur;
    lam = std::max(lam, cur);
    if (done) break;
  }
  const double r = std::sqrt(lam);
  const double rc = 1.0 / (mnorm * r);
  if (rcond) *rcond = rc;
  if (!std::isfinite(r) || rc < 1e-14)
    throw NearSingularError("resolvent: near-singular shift (condition estimate " + format_double(rc) + ")", rc);
  return r;
}

double resolvent_norm(const Generator& gen, cplx_t z) { return ResolventSolver(gen).norm(z); }

std::vector<double> sigma_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("sigma grid needs lo <= hi and step > 0");
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> g;
  for (long k = 0; k <= n; ++k) g.push_back(lo + static_cast<double>(k) * step);
  return g;
}

int thread_count_from_env() {
  if (const char* s = std::getenv("PLATELAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (end != s && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    throw std::invalid_argument("PLATELAB_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult resolvent_sweep(const Generator& gen, const std::vector<double>& sigmas, int threads) {
  const ResolventSolver solver(gen);
  SweepResult res;
  res.rows.resize(sigmas.size());
  if (threads <= 0) threads = thread_count_from_env();
  threads = std::max(1, std::min<int>(threads, static_cast<int>(sigmas.size())));
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (size_t i = next++; i < sigmas.size(); i = next++) {
      SweepRow& row = res.rows[i];
      row.sigma = sigmas[i];
      try {
        row.norm = solver.norm(cplx_t(0.0, sigmas[i]), &row.rcond);
        row.log_norm = std::log(row.norm);
      } catch (const NearSingularError& e) {
        row.skipped = true;
        row.rcond = e.rcond();
        row.norm = std::numeric_limits<double>::infinity();
        row.log_norm = std::numeric_limits<double>::infinity();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  double c = -std::numeric_limits<double>::infinity();
  for (const auto& row : res.rows)
    if (!row.skipped) c = std::max(c, row.log_norm / (1.0 + std::sqrt(std::abs(row.sigma))));
  res.fitted_c = c;
  for (auto& row : res.rows)
    row.slack = row.skipped ? std::numeric_limits<double>::quiet_NaN()
                            : c * (1.0 + std::sqrt(std::abs(row.sigma))) - row.log_norm;
  return res;
}

void SweepResult::write_csv(std::ostream& os) const {
  os << "# fitted_c: " << format_double(fitted_c) << "\n";
  os << "# bound: log_norm <= c*(1+sqrt(|sigma|))\n";
  os << "sigma,norm,log_norm,slack,skipped,rcond\n";
  for (const auto& r : rows)
    os << format_double(r.sigma) << "," << format_double(r.norm) << "," << format_double(r.log_norm) << ","
       << format_double(r.slack) << "," << (r.skipped ? 1 : 0) << "," << format_double(r.rcond) << "\n";
}

HalfplaneResult halfplane_check(const Generator& gen, int count) {
  Eigen::EigenSolver<MatrixXd> es(gen.reduced(), false);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver did not converge");
  std::vector<cplx_t> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::stable_sort(ev.begin(), ev.end(), [](cplx_t a, cplx_t b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a.imag() < b.imag();
  });
  if (count > 0 && count < static_cast<int>(ev.size())) ev.resize(count);
  HalfplaneResult r;
  r.eigenvalues = ev;
  r.min_re = std::numeric_limits<double>::infinity();
  for (const auto& l : ev) r.min_re = std::min(r.min_re, l.real());
  return r;
}

}  // namespace platelab
