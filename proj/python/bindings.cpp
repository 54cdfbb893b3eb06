#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "platelab/cli.hpp"
#include "platelab/ls_checker.hpp"
#include "platelab/plate_discrete.hpp"
#include "platelab/stab_lab.hpp"
#include "platelab/weight_design.hpp"

namespace py = pybind11;
using namespace platelab;

namespace {

TangentialPoint make_point(const std::vector<double>& xi, double tau, double sigma) {
  TangentialPoint p;
  p.x = Vec::Zero(static_cast<int>(xi.size()) + 1);
  p.xi_prime = Eigen::Map<const Vec>(xi.data(), static_cast<int>(xi.size()));
  p.tau = tau;
  p.sigma = sigma;
  return p;
}

WeightJet make_jet(const std::vector<double>& dt, double dn) {
  return WeightJet::simple(Eigen::Map<const Vec>(dt.data(), static_cast<int>(dt.size())), dn);
}

BoundaryPair make_pair(const std::string& name, py::object a) {
  const double value = a.is_none() ? catalog_default_parameter(name) : a.cast<double>();
  return catalog_bc(name, {value});
}

DiscretePlateOperator make_operator(const std::string& bc, int n, int ny, double length) {
  const Grid g = ny > 0 ? Grid::rectangle(n, ny, length, length) : Grid::interval(n, length);
  return assemble(g, BcSpec::of(bc));
}

StateVector smooth_initial(const DiscretePlateOperator& op) {
  StateVector Y = StateVector::zero(op.size());
  Y.y = op.sample([](const Eigen::VectorXd& x) {
    double v = 1.0;
    for (int i = 0; i < x.size(); ++i) v *= x(i) * x(i) * (1 - x(i)) * (1 - x(i));
    return v * (1 + x(0));
  });
  return Y;
}

}  // namespace

PYBIND11_MODULE(_platelab, m) {
  m.doc() = "Boundary-condition checks, plate discretization and damped plate dynamics";

  py::register_exception<NearSingularError>(m, "NearSingularError", PyExc_ArithmeticError);

  m.def("catalog_names", &catalog_names);

  m.def(
      "determinant",
      [](const std::string& name, py::object a, double omega) {
        const auto r = ls_unconjugated(make_pair(name, a), MetricField::euclidean(2), Vec::Zero(2),
                                       Vec::Constant(1, omega));
        return py::dict(py::arg("determinant") = *r.determinant, py::arg("verdict") = r.verdict,
                        py::arg("margin") = r.normalized_margin);
      },
      py::arg("name"), py::arg("a") = py::none(), py::arg("omega") = 1.0);

  m.def(
      "ls_conjugated",
      [](const std::string& name, std::vector<double> xi, double tau, double sigma, std::vector<double> dt,
         double dn, py::object a) {
        const auto bp = make_pair(name, a);
        const auto g = MetricField::euclidean(static_cast<int>(xi.size()) + 1);
        const auto p = make_point(xi, tau, sigma);
        const auto w = make_jet(dt, dn);
        const auto r = ls_conjugated(bp, g, w, p);
        return py::dict(py::arg("verdict") = r.verdict, py::arg("case") = to_string(r.case_tag),
                        py::arg("marginal") = r.marginal, py::arg("rank") = ls_rank_oracle(bp, g, w, p),
                        py::arg("positivity") = positivity_margin(bp, g, w, p));
      },
      py::arg("name"), py::arg("xi"), py::arg("tau"), py::arg("sigma"), py::arg("dt"), py::arg("dn") = 1.0,
      py::arg("a") = py::none());

  m.def(
      "quartic_roots",
      [](std::vector<double> xi, double tau, double sigma, std::vector<double> dt, double dn) {
        const auto q = quartic_roots(MetricField::euclidean(static_cast<int>(xi.size()) + 1),
                                     make_point(xi, tau, sigma), make_jet(dt, dn));
        return std::vector<cplx>(q.begin(), q.end());
      },
      py::arg("xi"), py::arg("tau"), py::arg("sigma"), py::arg("dt"), py::arg("dn") = 1.0);

  m.def(
      "classify",
      [](std::vector<double> xi, double tau, double sigma, std::vector<double> dt, double dn) {
        const auto rc = classify_roots(MetricField::euclidean(static_cast<int>(xi.size()) + 1),
                                       make_point(xi, tau, sigma), make_jet(dt, dn));
        return py::dict(py::arg("case") = to_string(rc.case_tag), py::arg("upper_roots") = rc.upper_roots,
                        py::arg("marginal") = rc.marginal);
      },
      py::arg("xi"), py::arg("tau"), py::arg("sigma"), py::arg("dt"), py::arg("dn") = 1.0);

  m.def(
      "gamma_search",
      [](double tau0, double lo, double hi, int points) {
        const FieldPtr psi = std::make_shared<IntervalBumpField>(0.0, 1.0, 0.5);
        RegionGrid reg{Vec::Constant(1, lo), Vec::Constant(1, hi), points};
        SubellipticityOptions opt;
        opt.tau0 = tau0;
        return gamma_search(MetricField::euclidean(1), psi, reg, opt).to_json().dump();
      },
      py::arg("tau0") = 0.005, py::arg("lo") = 0.6, py::arg("hi") = 0.95, py::arg("points") = 33,
      "JSON text of the gamma search on the one-dimensional model");

  m.def(
      "spectrum",
      [](const std::string& bc, int n, int count, int ny, double length) {
        return Eigen::VectorXd(spectrum(make_operator(bc, n, ny, length), count).mu);
      },
      py::arg("bc"), py::arg("n") = 100, py::arg("count") = 10, py::arg("ny") = 0, py::arg("length") = 1.0);

  m.def(
      "operator_matrix",
      [](const std::string& bc, int n) { return SpMat(make_operator(bc, n, 0, 1.0).matrix); },
      py::arg("bc"), py::arg("n") = 100);

  m.def(
      "symmetry_residual", [](const std::string& bc, int n) { return symmetry_residual(make_operator(bc, n, 0, 1.0)); },
      py::arg("bc"), py::arg("n") = 100);

  m.def(
      "simulate",
      [](const std::string& bc, int n, const std::string& alpha, double T, double dt, int log_stride) {
        const auto op = make_operator(bc, n, 0, 1.0);
        const auto gen = Generator::build(op, damping_profile(op, alpha));
        const auto Y0 = smooth_initial(op);
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = simulate(Y0, gen, T, dt, log_stride);
        }
        return py::dict(py::arg("t") = r.log.t, py::arg("energy") = r.log.energy,
                        py::arg("dissipation") = r.log.dissipation, py::arg("dissipated") = r.dissipated,
                        py::arg("monotone") = r.log.monotone(), py::arg("amp_A1") = power_amplitude(Y0, gen, 1));
      },
      py::arg("bc") = "clamped", py::arg("n") = 100, py::arg("alpha") = "bump:0.3:0.5:1.0", py::arg("T") = 10.0,
      py::arg("dt") = 0.01, py::arg("log_stride") = 1);

  m.def(
      "resolvent_sweep",
      [](const std::string& bc, int n, const std::string& alpha, double lo, double hi, double step, int threads) {
        const auto op = make_operator(bc, n, 0, 1.0);
        const auto gen = Generator::build(op, damping_profile(op, alpha));
        SweepResult s;
        double min_re;
        {
          py::gil_scoped_release release;
          s = resolvent_sweep(gen, sigma_grid(lo, hi, step), threads);
          min_re = halfplane_check(gen).min_re;
        }
        std::vector<double> sig, nrm;
        for (const auto& r : s.rows) {
          sig.push_back(r.sigma);
          nrm.push_back(r.norm);
        }
        return py::dict(py::arg("sigma") = sig, py::arg("norm") = nrm, py::arg("fitted_c") = s.fitted_c,
                        py::arg("min_re") = min_re);
      },
      py::arg("bc") = "clamped", py::arg("n") = 100, py::arg("alpha") = "bump:0.3:0.5:1.0", py::arg("lo") = 0.0,
      py::arg("hi") = 200.0, py::arg("step") = 0.5, py::arg("threads") = 0);

  m.def(
      "decay_fit",
      [](std::vector<double> t, std::vector<double> energy, int order, double amp) {
        EnergyLog log;
        log.t = std::move(t);
        log.energy = std::move(energy);
        log.dissipation.assign(log.t.size(), 0.0);
        if (log.energy.size() != log.t.size()) throw std::invalid_argument("t and energy differ in length");
        return decay_fit(log, order, amp);
      },
      py::arg("t"), py::arg("energy"), py::arg("order"), py::arg("amp"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "plate_lab");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "run a plate_lab subcommand in-process; returns (exit_code, stdout, stderr)");
}
