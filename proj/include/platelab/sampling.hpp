#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace platelab {

/// Deterministic across standard libraries: only the raw mt19937_64 stream is used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed ^ 0x9E3779B97F4A7C15ULL) {}

  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal();
    return v;
  }
  Eigen::VectorXd unit_sphere(int n) {
    Eigen::VectorXd v;
    do {
      v = normal_vector(n);
    } while (v.norm() == 0.0);
    return v / v.norm();
  }
  Eigen::VectorXd unit_ball(int n) {
    return unit_sphere(n) * std::pow(uniform(), 1.0 / static_cast<double>(n));
  }
  std::uint64_t next() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace platelab
