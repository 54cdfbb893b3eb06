#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "platelab/plate_discrete.hpp"

using namespace platelab;

TEST_CASE("hinged spectrum equals the squared second-difference spectrum") {
  const int n = 64;
  auto op = assemble(Grid::interval(n), BcSpec::of("hinged"));
  auto sc = spectrum(op, 6);
  for (int k = 1; k <= 6; ++k)
    CHECK(sc.mu(k - 1) == doctest::Approx(oracle::hinged_discrete_eigenvalue(k, n)).epsilon(1e-10));
}

TEST_CASE("hinged beam converges at second order") {
  std::vector<double> h, err;
  for (int n : {50, 100, 200}) {
    auto sc = spectrum(assemble(Grid::interval(n), BcSpec::of("hinged")), 3);
    h.push_back(1.0 / n);
    err.push_back(std::abs(sc.mu(2) / std::pow(3 * M_PI, 4) - 1.0));
  }
  CHECK(oracle::observed_order(h, err) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("clamped beam against the characteristic equation") {
  CHECK(oracle::clamped_beam_beta(1) == doctest::Approx(oracle::kBeamBeta1).epsilon(1e-14));
  CHECK(oracle::clamped_beam_beta(2) == doctest::Approx(oracle::kBeamBeta2).epsilon(1e-14));
  CHECK(beam_clamped_beta(3) == doctest::Approx(oracle::kBeamBeta3).epsilon(1e-12));
  auto sc = spectrum(assemble(Grid::interval(200), BcSpec::of("clamped")), 2);
  CHECK(sc.mu(0) == doctest::Approx(std::pow(oracle::kBeamBeta1, 4)).epsilon(1e-3));
  CHECK(sc.mu(1) == doctest::Approx(std::pow(oracle::kBeamBeta2, 4)).epsilon(3e-3));
}

TEST_CASE("all catalog pairs are symmetric and nonnegative") {
  for (auto bc : all_bc_pairs()) {
    auto op = assemble(Grid::interval(60), BcSpec::of(bc_name(bc)));
    CAPTURE(bc_name(bc));
    CHECK(symmetry_residual(op) <= 1e-10);
    CHECK(check_symmetry(op) <= 1e-10);
    double scale = 0.0;
    for (int k = 0; k < op.matrix.outerSize(); ++k)
      for (SpMat::InnerIterator it(op.matrix, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    CHECK(min_rayleigh_quotient(op) >= -1e-8 * scale);
  }
}

TEST_CASE("kernel dimensions") {
  auto dim = [](const std::string& name) {
    return kernel_dimension(spectrum(assemble(Grid::interval(80), BcSpec::of(name))));
  };
  CHECK(dim("hinged") == 0);
  CHECK(dim("clamped") == 0);
  CHECK(dim("neumann_pair") == 1);
  CHECK(dim("ex2_dn2_dn3") == 2);
}

TEST_CASE("free beam kernel is spanned by affine functions") {
  auto op = assemble(Grid::interval(40), BcSpec::of("ex2"));
  auto ker = kernel(spectrum(op));
  REQUIRE(ker.size() == 2);
  for (auto f : {std::function<double(const Eigen::VectorXd&)>([](const Eigen::VectorXd&) { return 1.0; }),
                 std::function<double(const Eigen::VectorXd&)>([](const Eigen::VectorXd& x) { return x(0); })}) {
    const Eigen::VectorXd u = op.sample(f);
    CHECK((op.matrix * u).norm() <= 1e-6 * u.norm());
  }
}

TEST_CASE("rectangle hinged plate") {
  auto op = assemble(Grid::rectangle(24, 24), BcSpec::of("hinged"));
  CHECK(symmetry_residual(op) <= 1e-10);
  auto sc = spectrum(op, 3);
  CHECK(sc.mu(0) == doctest::Approx(4 * std::pow(M_PI, 4)).epsilon(0.02));
  CHECK(sc.mu(1) == doctest::Approx(25 * std::pow(M_PI, 4)).epsilon(0.05));
  CHECK(sc.mu(2) == doctest::Approx(sc.mu(1)).epsilon(1e-8));
  CHECK_THROWS_AS(assemble(Grid::rectangle(16, 16), BcSpec::of("ex3")), std::invalid_argument);
}

TEST_CASE("variable rigidity") {
  const int n = 100;
  auto g = Grid::interval(n);
  PlateCoefficients c;
  c.rigidity = Eigen::VectorXd::Constant(n + 1, 2.0);
  auto a = spectrum(assemble(g, BcSpec::of("clamped"), c), 1);
  auto b = spectrum(assemble(g, BcSpec::of("clamped")), 1);
  CHECK(a.mu(0) == doctest::Approx(2.0 * b.mu(0)).epsilon(1e-12));
  c.rigidity = Eigen::VectorXd::LinSpaced(n + 1, 1.0, 2.0);
  auto op = assemble(g, BcSpec::of("hinged"), c);
  CHECK(symmetry_residual(op) <= 1e-10);
  CHECK(min_rayleigh_quotient(op) > 0.0);
  CHECK_THROWS_AS(assemble(g, BcSpec::of("ex2"), c), std::invalid_argument);
  c.rigidity(3) = -1.0;
  CHECK_THROWS_AS(assemble(g, BcSpec::of("hinged"), c), std::invalid_argument);
}

TEST_CASE("Green formula residual converges at second order") {
  SmoothFn u = [](double x, int k) {
    const double s[4] = {std::sin(2 * x), 2 * std::cos(2 * x), -4 * std::sin(2 * x), -8 * std::cos(2 * x)};
    return s[k];
  };
  SmoothFn v = [](double x, int k) {
    const double e = std::exp(0.5 * x);
    return std::pow(0.5, k) * e;
  };
  std::vector<double> h, err;
  for (int n : {40, 80, 160}) {
    auto gc = green_form_check(n, 1.0, u, v);
    h.push_back(1.0 / n);
    err.push_back(std::abs(gc.discrete - gc.boundary_form));
  }
  CHECK(err.back() < 1e-3);
  CHECK(oracle::observed_order(h, err) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("disjoint union spectrum is the merged spectrum") {
  auto a = assemble(Grid::interval(30), BcSpec::of("hinged"));
  auto b = assemble(Grid::interval(30), BcSpec::of("clamped"));
  auto u = disjoint_union(a, b);
  auto su = spectrum(u, 2);
  CHECK(su.mu(0) == doctest::Approx(std::min(spectrum(a, 1).mu(0), spectrum(b, 1).mu(0))));
}

TEST_CASE("spectral norms") {
  auto op = assemble(Grid::interval(50), BcSpec::of("hinged"));
  auto sc = spectrum(op);
  CHECK(sc.complete());
  const Eigen::VectorXd u = sc.phi.col(0);
  CHECK(op.norm(u) == doctest::Approx(1.0));
  CHECK(sc.hkb_norm(u, 0.0) == doctest::Approx(1.0));
  CHECK(sc.hkb_norm(u, 2.0) == doctest::Approx(std::sqrt(1.0 + sc.mu(0))));
  bool warn = false;
  spectrum(op, 5).hkb_norm(Eigen::VectorXd::Ones(op.size()), 1.0, &warn);
  CHECK(warn);
}

TEST_CASE("grid validation and names") {
  CHECK_THROWS_AS(Grid::interval(4), std::invalid_argument);
  CHECK_THROWS_AS(Grid::interval(10, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(bc_from_name("simply"), std::invalid_argument);
  for (auto bc : all_bc_pairs()) CHECK(bc_from_name(bc_name(bc)) == bc);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("sampled profiles") {
  std::istringstream in("# x value\n0 1\n0.5, 3\n1 5\n");
  auto p = SampledProfile::parse(in, "mem");
  CHECK(p(0.25) == doctest::Approx(2.0));
  CHECK(p(2.0) == doctest::Approx(5.0));
  std::istringstream bad("0 1\n0 2\n");
  CHECK_THROWS_AS(SampledProfile::parse(bad, "mem"), std::invalid_argument);
}

TEST_CASE("operator column output") {
  auto op = assemble(Grid::interval(10), BcSpec::of("clamped"));
  auto sc = spectrum(op, 2);
  std::ostringstream os;
  write_operator_columns(os, op, &sc);
  const std::string s = os.str();
  CHECK(s.rfind("# platelab operator", 0) == 0);
  CHECK(s.find("triplets") != std::string::npos);
  CHECK(s.find("eigenvalues") != std::string::npos);
}
