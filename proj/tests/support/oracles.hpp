#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/float128.hpp>
#include <boost/multiprecision/eigen.hpp>

namespace oracle {

using cplx = std::complex<double>;

/// Frozen reference values.
inline constexpr double kBeamBeta1 = 4.7300407448627040;
inline constexpr double kBeamBeta2 = 7.8532046240958376;
inline constexpr double kBeamBeta3 = 10.995607838001671;

using mp_real = boost::multiprecision::float128;
using mp_cplx = std::complex<mp_real>;

/// Roots of c[0] + c[1] z + ... + c[n] z^n as eigenvalues of the companion matrix in quad precision;
/// clusters of multiple roots are then resolved far below double precision.
inline std::vector<cplx> companion_roots(const std::vector<mp_cplx>& c) {
  using MMat = Eigen::Matrix<mp_cplx, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = static_cast<int>(c.size()) - 1;
  MMat C = MMat::Zero(n, n);
  for (int i = 1; i < n; ++i) C(i, i - 1) = mp_cplx(mp_real(1));
  for (int i = 0; i < n; ++i) C(i, n - 1) = -c[i] / c[n];
  Eigen::ComplexEigenSolver<MMat> es(C);
  std::vector<cplx> r;
  for (int i = 0; i < n; ++i) {
    const mp_cplx& z = es.eigenvalues()(i);
    r.emplace_back(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  }
  return r;
}

inline std::vector<mp_cplx> poly_mul(const std::vector<mp_cplx>& a, const std::vector<mp_cplx>& b) {
  std::vector<mp_cplx> r(a.size() + b.size() - 1, mp_cplx(mp_real(0)));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

/// Coefficients in xi_d of q^1 q^2 for the flat metric, one tangential variable and weight gradient
/// (dt, dn):  q^j = (xi_d + i tau dn)^2 + (xi' + i tau dt)^2 + (-1)^j sigma^2.
inline std::vector<mp_cplx> conjugated_quartic(double xi_t, double tau, double sigma, double dt, double dn) {
  const mp_real T(tau);
  const mp_cplx a(mp_real(0), T * mp_real(dn));
  const mp_cplx w(mp_real(xi_t), T * mp_real(dt));
  const mp_cplx r = w * w;
  auto factor = [&](int j) {
    const mp_real s2 = mp_real(sigma) * mp_real(sigma);
    const mp_cplx s = j == 1 ? mp_cplx(-s2) : mp_cplx(s2);
    return std::vector<mp_cplx>{a * a + r + s, mp_cplx(mp_real(2)) * a, mp_cplx(mp_real(1))};
  };
  return poly_mul(factor(1), factor(2));
}

/// Minimal distance matching of two root lists (4 entries, brute force over permutations).
inline double match_distance(std::vector<cplx> a, std::vector<cplx> b) {
  std::sort(b.begin(), b.end(), [](cplx x, cplx y) { return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag(); });
  double best = 1e300;
  do {
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    best = std::min(best, worst);
  } while (std::next_permutation(b.begin(), b.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  }));
  return best;
}

/// {f, g} = sum_i df/dxi_i dg/dx_i - df/dx_i dg/dxi_i by central differences
inline double fd_poisson_bracket(const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& f,
                                 const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& g,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& xi, double h = 1e-5) {
  double s = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x, ep = xi, em = xi;
    xp(i) += h;
    xm(i) -= h;
    ep(i) += h;
    em(i) -= h;
    const double fx = (f(xp, xi) - f(xm, xi)) / (2 * h), gx = (g(xp, xi) - g(xm, xi)) / (2 * h);
    const double fxi = (f(x, ep) - f(x, em)) / (2 * h), gxi = (g(x, ep) - g(x, em)) / (2 * h);
    s += fxi * gx - fx * gxi;
  }
  return s;
}

/// k-th root of cos(b) cosh(b) = 1, bracketed by sign change of cos(b) - 1/cosh(b)
inline double clamped_beam_beta(int k) {
  auto f = [](double b) { return std::cos(b) - 1.0 / std::cosh(b); };
  double lo = (k + 0.5) * M_PI - 0.5, hi = (k + 0.5) * M_PI + 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((f(lo) > 0) == (f(mid) > 0))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// eigenvalues of the square of the Dirichlet second-difference matrix
inline double hinged_discrete_eigenvalue(int k, int n, double length = 1.0) {
  const double h = length / n;
  const double s = std::sin(k * M_PI / (2.0 * n));
  return std::pow(4.0 * s * s / (h * h), 2);
}

/// 1 / smallest singular value, by a full SVD
inline double dense_resolvent_norm(const Eigen::MatrixXd& A, cplx z) {
  const int n = static_cast<int>(A.rows());
  Eigen::MatrixXcd M = -A.cast<cplx>();
  M.diagonal().array() += z;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  return 1.0 / svd.singularValues()(n - 1);
}

/// least-squares slope of log(err) against log(h)
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  const int n = static_cast<int>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace oracle
