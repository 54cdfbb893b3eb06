#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "oracles.hpp"
#include "platelab/sampling.hpp"
#include "platelab/stab_lab.hpp"

using namespace platelab;

namespace {

StateVector random_state(Rng& rng, int n) {
  StateVector Y;
  Y.y = rng.normal_vector(n);
  Y.v = rng.normal_vector(n);
  return Y;
}

double diff(const StateVector& a, const StateVector& b) { return (a.y - b.y).norm() + (a.v - b.v).norm(); }

StateVector add(const StateVector& a, const StateVector& b) {
  StateVector s = a;
  s.y += b.y;
  s.v += b.v;
  return s;
}

Generator free_beam(int n = 40) {
  auto op = assemble(Grid::interval(n), BcSpec::of("ex2"));
  return Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
}

}  // namespace

TEST_CASE("damping profiles") {
  auto op = assemble(Grid::interval(20), BcSpec::of("clamped"));
  CHECK(damping_profile(op, "zero").isZero());
  CHECK(damping_profile(op, "const:2.5").minCoeff() == 2.5);
  auto b = damping_profile(op, "bump:0.3:0.5:1.0");
  CHECK(b.maxCoeff() == doctest::Approx(1.0));
  CHECK(b.minCoeff() == 0.0);
  for (const char* bad : {"", "bump:0.5:0.3:1", "const:-1", "const:x", "box:0:1:0:1:1", "wave"})
    CHECK_THROWS_AS(damping_profile(op, bad), std::invalid_argument);
}

TEST_CASE("projector algebra on a beam with a two-dimensional kernel") {
  auto gen = free_beam();
  REQUIRE(gen.kernel_dim() == 2);
  Rng rng(41);
  for (int k = 0; k < 10; ++k) {
    auto Y = random_state(rng, gen.size());
    auto [pn, ph] = kernel_projection(Y, gen);
    CHECK(diff(add(pn, ph), Y) < 1e-10 * (Y.y.norm() + Y.v.norm()));
    auto [pnn, pnh] = kernel_projection(pn, gen);
    CHECK(diff(pnn, pn) < 1e-9 * (pn.y.norm() + 1.0));
    CHECK(pnh.y.norm() + pnh.v.norm() < 1e-9 * (pn.y.norm() + 1.0));
    for (double f : gen.kernel_forms(ph)) CHECK(std::abs(f) < 1e-9);
    for (double f : gen.kernel_forms(gen.apply(Y))) CHECK(std::abs(f) < 1e-6 * (1.0 + gen.apply(Y).y.norm()));
    CHECK(gen.apply(pn).y.norm() + gen.apply(pn).v.norm() < 1e-6 * (1.0 + pn.y.norm()));
  }
}

TEST_CASE("energy equals half the squared complement norm") {
  for (const char* bc : {"clamped", "ex2"}) {
    auto op = assemble(Grid::interval(40), BcSpec::of(bc));
    auto gen = Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
    Rng rng(42);
    auto Y = random_state(rng, gen.size());
    const double h = hdot_norm(Y, gen);
    CHECK(h * h == doctest::Approx(2.0 * energy(Y, op)).epsilon(1e-9));
  }
}

TEST_CASE("reduced coordinates represent the generator") {
  auto gen = free_beam();
  Rng rng(43);
  const Eigen::VectorXd z = rng.normal_vector(gen.reduced_dim());
  auto Y = gen.from_reduced(z);
  for (double f : gen.kernel_forms(Y)) CHECK(std::abs(f) < 1e-9);
  CHECK((gen.to_reduced(Y) - z).norm() < 1e-9 * z.norm());
  CHECK((gen.to_reduced(gen.apply(Y)) - gen.reduced() * z).norm() < 1e-8 * (gen.reduced() * z).norm());
}

TEST_CASE("undamped midpoint conserves energy") {
  auto op = assemble(Grid::interval(50), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "zero"));
  StateVector Y = StateVector::zero(op.size());
  Y.y = op.sample([](const Eigen::VectorXd& x) { return std::pow(x(0) * (1 - x(0)), 2); });
  auto r = simulate(Y, gen, 10.0, 0.01, 1);
  CHECK(r.steps == 1000);
  const double e0 = r.log.energy.front();
  for (double e : r.log.energy) CHECK(std::abs(e - e0) <= 1e-8 * e0);
}

TEST_CASE("single mode rotates at the midpoint frequency") {
  const int n = 40;
  auto op = assemble(Grid::interval(n), BcSpec::of("hinged"));
  auto gen = Generator::build(op, damping_profile(op, "zero"));
  const int k = 2;
  const double omega = std::sqrt(gen.scale().mu(k - 1));
  const double dt = 0.002;
  StateVector Y = StateVector::zero(op.size());
  Y.y = gen.scale().phi.col(k - 1);
  MidpointIntegrator integ(gen, dt);
  const int steps = 500;
  for (int s = 0; s < steps; ++s) Y = integ.step(Y);
  const double w = 2.0 * std::atan(omega * dt / 2.0) / dt;
  const Eigen::VectorXd expect = std::cos(w * steps * dt) * gen.scale().phi.col(k - 1);
  CHECK((Y.y - expect).norm() < 1e-8 * expect.norm() + 1e-8);
}

TEST_CASE("dissipation ledger closes at second order in dt") {
  auto op = assemble(Grid::interval(40), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
  StateVector Y = StateVector::zero(op.size());
  Y.y = op.sample([](const Eigen::VectorXd& x) { return std::pow(x(0) * (1 - x(0)), 2); });
  std::vector<double> dts, errs;
  for (double dt : {0.02, 0.01, 0.005}) {
    auto r = simulate(Y, gen, 2.0, dt, 1);
    CHECK(r.log.monotone());
    const double e0 = r.log.energy.front(), e1 = r.log.energy.back();
    CHECK(std::abs(e0 - e1 - r.dissipated) <= 1e-10 * e0);
    double integral = 0.0;
    StateVector Z = Y;
    MidpointIntegrator integ(gen, dt);
    auto rate = [&](const StateVector& S) { return op.cell_volume * S.v.dot(gen.alpha().cwiseProduct(S.v)); };
    double prev = rate(Z);
    for (size_t s = 0; s < r.steps; ++s) {
      Z = integ.step(Z);
      const double cur = rate(Z);
      integral += 0.5 * dt * (prev + cur);
      prev = cur;
    }
    dts.push_back(dt);
    errs.push_back(std::abs(e0 - e1 - integral) / e0);
  }
  CHECK(oracle::observed_order(dts, errs) == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("energy log round trip") {
  EnergyLog log;
  log.dt = 0.1;
  log.t = {0.0, 0.1, 0.2};
  log.energy = {1.0, 0.9, 0.85};
  log.dissipation = {0.0, 1.0, 0.5};
  log.metadata = {{"amp_A1", "2.5"}};
  std::ostringstream os;
  log.write_csv(os);
  std::istringstream in(os.str());
  auto back = EnergyLog::read_csv(in);
  CHECK(back.size() == 3);
  CHECK(back.energy[2] == 0.85);
  CHECK(back.dt == 0.1);
  CHECK(back.meta("amp_A1") == "2.5");
  CHECK(back.monotone());
  back.energy[2] = 0.95;
  CHECK_FALSE(back.monotone());
  std::istringstream bad("t,energy,dissipation\n0,abc,0\n");
  CHECK_THROWS(EnergyLog::read_csv(bad));
}

TEST_CASE("decay fit") {
  EnergyLog log;
  log.t = {0.0, 10.0};
  log.energy = {1.0, 0.5};
  log.dissipation = {0.0, 0.0};
  CHECK(decay_fit(log, 0, 2.0) == doctest::Approx(0.5));
  CHECK(decay_fit(log, 1, 1.0) == doctest::Approx(0.5 * std::pow(std::log(12.0), 4)));
  CHECK_THROWS_AS(decay_fit(log, 1, 0.0), std::invalid_argument);
}

TEST_CASE("resolvent norm agrees with a dense singular value oracle") {
  auto op = assemble(Grid::interval(20), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
  ResolventSolver solver(gen);
  for (cplx_t z : {cplx_t(0, 0), cplx_t(0, 7.5), cplx_t(0, 150), cplx_t(-0.3, 40)}) {
    const double ref = oracle::dense_resolvent_norm(gen.reduced(), z);
    double rc = 0.0;
    CHECK(solver.norm(z, &rc) == doctest::Approx(ref).epsilon(1e-8));
    CHECK(rc > 0.0);
    CHECK(resolvent_norm(gen, z) == doctest::Approx(ref).epsilon(1e-8));
  }
}

TEST_CASE("a priori bound in the left half-plane") {
  auto op = assemble(Grid::interval(30), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
  Rng rng(44);
  const Eigen::MatrixXd& A = gen.reduced();
  for (int k = 0; k < 50; ++k) {
    const cplx_t z(-rng.log_uniform(1e-3, 10.0), rng.normal() * 50);
    Eigen::VectorXcd U = rng.normal_vector(A.rows()).cast<cplx_t>() + cplx_t(0, 1) * rng.normal_vector(A.rows());
    const Eigen::VectorXcd r = z * U - A.cast<cplx_t>() * U;
    CHECK(r.norm() >= std::abs(z.real()) * U.norm() * (1 - 1e-12));
  }
}

TEST_CASE("half-plane spectrum and sweep") {
  auto op = assemble(Grid::interval(30), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "bump:0.3:0.5:1.0"));
  auto hp = halfplane_check(gen, 5);
  CHECK(hp.eigenvalues.size() == 5);
  CHECK(hp.min_re > 0.0);
  auto undamped = Generator::build(op, damping_profile(op, "zero"));
  CHECK(std::abs(halfplane_check(undamped).min_re) < 1e-6);

  auto grid = sigma_grid(0, 20, 0.5);
  CHECK(grid.size() == 41);
  auto s1 = resolvent_sweep(gen, grid, 1);
  auto s3 = resolvent_sweep(gen, grid, 3);
  CHECK(std::isfinite(s1.fitted_c));
  CHECK(s1.fitted_c == s3.fitted_c);
  for (size_t i = 0; i < grid.size(); ++i) {
    CHECK(s1.rows[i].norm == s3.rows[i].norm);
    CHECK(s1.rows[i].slack >= -1e-12);
  }
  std::ostringstream os;
  s1.write_csv(os);
  CHECK(os.str().find("sigma,norm,log_norm,slack,skipped,rcond") != std::string::npos);
  CHECK_THROWS_AS(sigma_grid(1, 0, 0.5), std::invalid_argument);
}

TEST_CASE("zero damping on a kernel is rejected") {
  auto op = assemble(Grid::interval(20), BcSpec::of("ex2"));
  CHECK_THROWS_AS(Generator::build(op, damping_profile(op, "zero")), std::invalid_argument);
}

TEST_CASE("thread count from the environment") {
  setenv("PLATELAB_THREADS", "3", 1);
  CHECK(thread_count_from_env() == 3);
  setenv("PLATELAB_THREADS", "zero", 1);
  CHECK_THROWS_AS(thread_count_from_env(), std::invalid_argument);
  unsetenv("PLATELAB_THREADS");
  CHECK(thread_count_from_env() >= 1);
}

TEST_CASE("simulation reports blow-up") {
  auto op = assemble(Grid::interval(20), BcSpec::of("clamped"));
  auto gen = Generator::build(op, damping_profile(op, "const:1"));
  StateVector Y = StateVector::zero(op.size());
  Y.y(3) = std::nan("");
  CHECK_THROWS_AS(simulate(Y, gen, 0.1, 0.01), std::runtime_error);
}
