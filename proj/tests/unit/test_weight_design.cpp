#include <doctest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "platelab/sampling.hpp"
#include "platelab/weight_design.hpp"

using namespace platelab;

namespace {

/// psi = 0.3 x + 0.5 y - 0.2 y^2 + 0.1 x y
FieldPtr test_psi() {
  return std::make_shared<PolynomialField>(
      2, std::vector<PolynomialField::Term>{{0.3, {1, 0}}, {0.5, {0, 1}}, {-0.2, {0, 2}}, {0.1, {1, 1}}});
}

Eigen::Vector2d closed_form_dphi(const Eigen::VectorXd& x, double gamma) {
  const double psi = 0.3 * x(0) + 0.5 * x(1) - 0.2 * x(1) * x(1) + 0.1 * x(0) * x(1);
  Eigen::Vector2d dpsi(0.3 + 0.1 * x(1), 0.5 - 0.4 * x(1) + 0.1 * x(0));
  return gamma * std::exp(gamma * psi) * dpsi;
}

}  // namespace

TEST_CASE("polynomial field jets") {
  auto f = PolynomialField::univariate({1.0, -2.0, 3.0});
  auto j = f->jet(Vec::Constant(1, 2.0));
  CHECK(j.value == doctest::Approx(9.0));
  CHECK(j.grad(0) == doctest::Approx(10.0));
  CHECK(j.hessian(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("field serialization round trip") {
  FieldPtr bump = std::make_shared<IntervalBumpField>(0.0, 1.0, 0.4);
  FieldPtr prod = std::make_shared<ProductField>(bump, bump);
  FieldPtr axis = std::make_shared<AxisField>(bump, 2, 1);
  Vec x(2);
  x << 0.3, 0.7;
  for (const FieldPtr& f : {prod, axis, test_psi()}) {
    auto g = field_from_json(f->to_json());
    CHECK(g->jet(x).value == doctest::Approx(f->jet(x).value).epsilon(1e-14));
    CHECK((g->jet(x).grad - f->jet(x).grad).norm() < 1e-12);
  }
  CHECK_THROWS_AS(field_from_json(nlohmann::json{{"kind", "spline"}}), std::invalid_argument);
}

TEST_CASE("interval bump vanishes at the ends with a single critical point") {
  IntervalBumpField f(0.0, 1.0, 0.4);
  CHECK(std::abs(f.jet(Vec::Constant(1, 0.0)).value) < 1e-12);
  CHECK(std::abs(f.jet(Vec::Constant(1, 1.0)).value) < 1e-12);
  CHECK(std::abs(f.jet(Vec::Constant(1, 0.4)).grad(0)) < 1e-12);
  CHECK(f.jet(Vec::Constant(1, 0.2)).grad(0) > 0.0);
  CHECK(f.jet(Vec::Constant(1, 0.8)).grad(0) < 0.0);
  const double h = 1e-5;
  for (double t : {0.1, 0.55, 0.9}) {
    const double fd = (f.jet(Vec::Constant(1, t + h)).value - f.jet(Vec::Constant(1, t - h)).value) / (2 * h);
    CHECK(fd == doctest::Approx(f.jet(Vec::Constant(1, t)).grad(0)).epsilon(1e-7));
  }
}

TEST_CASE("Poisson bracket of the conjugated symbols matches finite differences") {
  auto g = MetricField::euclidean(2);
  const double gamma = 1.7;
  WeightField wf{test_psi(), gamma};
  Rng rng(31);
  for (int k = 0; k < 40; ++k) {
    Vec x(2), xi(2);
    x << rng.uniform(0, 1), rng.uniform(0, 1);
    xi << rng.normal(), rng.normal();
    const double tau = rng.uniform(0.1, 2.0), sigma = rng.uniform(0.0, 2.0);
    for (int j : {1, 2}) {
      const double sgn = j == 1 ? -1.0 : 1.0;
      auto qs = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& e) {
        const auto d = closed_form_dphi(y, gamma);
        return e.squaredNorm() - tau * tau * d.squaredNorm() + sgn * sigma * sigma;
      };
      auto qa = [&](const Eigen::VectorXd& y, const Eigen::VectorXd& e) {
        return 2.0 * tau * e.dot(closed_form_dphi(y, gamma));
      };
      const auto [js, ja] = conjugated_symbol_jets(g, wf, x, xi, tau, sigma, j);
      CHECK(js.value == doctest::Approx(qs(x, xi)).epsilon(1e-12));
      CHECK(ja.value == doctest::Approx(qa(x, xi)).epsilon(1e-12));
      const double fd = oracle::fd_poisson_bracket(qs, qa, x, xi);
      CHECK(std::abs(poisson_bracket(js, ja) - fd) <= 1e-6 * (1.0 + std::abs(fd)));
    }
  }
}

TEST_CASE("bracket is antisymmetric") {
  SymbolJet f{1.0, Vec::Constant(2, 0.3), Vec::Constant(2, -1.0)};
  SymbolJet g{2.0, Vec::Constant(2, 1.5), Vec::Constant(2, 0.25)};
  CHECK(poisson_bracket(f, g) == doctest::Approx(-poisson_bracket(g, f)));
  CHECK(poisson_bracket(f, f) == doctest::Approx(0.0));
}

TEST_CASE("characteristic samples are zeros of the conjugated symbol") {
  auto g = MetricField::euclidean(1);
  WeightField wf{std::make_shared<IntervalBumpField>(0.0, 1.0, 0.5), 3.0};
  RegionGrid reg{Vec::Constant(1, 0.6), Vec::Constant(1, 0.95), 9};
  SubellipticityOptions opt;
  opt.tau0 = 0.05;
  // q_a = 0 forces xi = 0 in one dimension, where q_s^1 < 0
  CHECK(characteristic_samples(g, wf, 1, reg, 17, opt).empty());
  {
    auto s = characteristic_samples(g, wf, 2, reg, 17, opt);
    REQUIRE_FALSE(s.empty());
    for (const auto& b : s) {
      const double lam2 = b.tau * b.tau + b.xi.squaredNorm() + b.sigma * b.sigma;
      CHECK(std::abs(b.q_s) <= 1e-9 * lam2);
      CHECK(std::abs(b.q_a) <= 1e-9 * lam2);
    }
  }
}

TEST_CASE("gamma search and sub-ellipticity on the one-dimensional model") {
  auto g = MetricField::euclidean(1);
  FieldPtr psi = std::make_shared<IntervalBumpField>(0.0, 1.0, 0.5);
  RegionGrid reg{Vec::Constant(1, 0.6), Vec::Constant(1, 0.95), 17};
  SubellipticityOptions opt;
  opt.tau0 = 0.005;
  auto gs = gamma_search(g, psi, reg, opt);
  REQUIRE(gs.found);
  CHECK(std::isfinite(gs.gamma0));
  WeightField wf{psi, 2 * gs.gamma0};
  auto r2 = subellipticity_check(g, wf, 2, reg, opt);
  CHECK(r2.margin > 0.0);
  CHECK_FALSE(r2.vacuous);

  MuSearchOptions mo;
  mo.tau0 = opt.tau0;
  mo.recheck_samples = 2000;
  auto mu = mu_search(g, wf, 2, reg, mo);
  CHECK(mu.found);
  CHECK(mu.recheck_passed);
}

TEST_CASE("gamma search rejects a weight with a critical point") {
  auto g = MetricField::euclidean(1);
  FieldPtr psi = std::make_shared<IntervalBumpField>(0.0, 1.0, 0.6875);
  RegionGrid reg{Vec::Constant(1, 0.6), Vec::Constant(1, 0.95), 9};
  CHECK_THROWS_AS(gamma_search(g, psi, reg), std::domain_error);
}

TEST_CASE("region grids") {
  RegionGrid r{Vec::Zero(2), Vec::Ones(2), 3};
  CHECK(r.points().size() == 9);
  CHECK(r.refined().points_per_axis == 5);
  RegionGrid bad{Vec::Zero(1), Vec::Ones(1), 1};
  CHECK_THROWS_AS(bad.points(), std::invalid_argument);
}

TEST_CASE("global weight on an interval") {
  GlobalWeightReport rep;
  auto wf = build_global_weight(Domain::interval(0, 1), ExclusionSet::interval(0.4, 0.6), 1.0, &rep);
  CHECK(rep.boundary_max_abs_psi <= 1e-10);
  CHECK(rep.boundary_max_normal_derivative < 0.0);
  CHECK(rep.interior_min_psi > 0.0);
  CHECK(rep.min_grad_outside > 0.0);
  CHECK(wf.psi->jet(Vec::Constant(1, 0.5)).value > 0.0);
}

TEST_CASE("global weight on a rectangle") {
  GlobalWeightReport rep;
  build_global_weight(Domain::rectangle(0, 1, 0, 2), ExclusionSet::disc(0.5, 1.0, 0.2), 1.0, &rep, 61);
  CHECK(rep.boundary_max_abs_psi <= 1e-10);
  CHECK(rep.boundary_max_normal_derivative < 0.0);
  CHECK(rep.min_grad_outside > 0.0);
  CHECK_THROWS_AS(build_global_weight(Domain::interval(0, 1), ExclusionSet::interval(-0.1, 0.3)),
                  std::invalid_argument);
}
