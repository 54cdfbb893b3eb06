#include "platelab/plate_discrete.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "platelab/sampling.hpp"

namespace platelab {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

BcPair bc_from_name(const std::string& name) {
  static const std::map<std::string, BcPair> table{
      {"hinged", BcPair::Hinged},        {"clamped", BcPair::Clamped},
      {"neumann_pair", BcPair::NeumannPair}, {"ex2_dn2_dn3", BcPair::Ex2},
      {"ex3_dn_dn3_A", BcPair::Ex3},     {"ex4_id_dn2_A", BcPair::Ex4},
      {"ex5_dn2A_dn3", BcPair::Ex5},     {"ex2", BcPair::Ex2},
      {"ex3", BcPair::Ex3},              {"ex4", BcPair::Ex4},
      {"ex5", BcPair::Ex5},              {"free", BcPair::Ex2}};
  const auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown boundary pair '" + name + "'");
  return it->second;
}

std::string bc_name(BcPair bc) {
  switch (bc) {
    case BcPair::Hinged: return "hinged";
    case BcPair::Clamped: return "clamped";
    case BcPair::NeumannPair: return "neumann_pair";
    case BcPair::Ex2: return "ex2_dn2_dn3";
    case BcPair::Ex3: return "ex3_dn_dn3_A";
    case BcPair::Ex4: return "ex4_id_dn2_A";
    case BcPair::Ex5: return "ex5_dn2A_dn3";
  }
  return "?";
}

std::vector<BcPair> all_bc_pairs() {
  return {BcPair::Hinged, BcPair::Clamped, BcPair::NeumannPair, BcPair::Ex2,
          BcPair::Ex3,    BcPair::Ex4,     BcPair::Ex5};
}

BcSpec BcSpec::of(const std::string& name) {
  BcSpec s;
  s.pair = bc_from_name(name);
  if (s.pair == BcPair::Ex3) s.a = -1.0;
  if (s.pair == BcPair::Ex4 || s.pair == BcPair::Ex5) s.a = 1.0;
  return s;
}

Grid Grid::interval(int n, double length) {
  Grid g;
  g.dim = 1;
  g.cells = {n};
  g.length = {length};
  g.validate();
  return g;
}

Grid Grid::rectangle(int nx, int ny, double lx, double ly) {
  Grid g;
  g.dim = 2;
  g.cells = {nx, ny};
  g.length = {lx, ly};
  g.validate();
  return g;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= h(a);
  return v;
}

void Grid::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  if (static_cast<int>(cells.size()) != dim || static_cast<int>(length.size()) != dim)
    throw std::invalid_argument("grid axis data does not match its dimension");
  for (int a = 0; a < dim; ++a) {
    if (cells[a] < 8) throw std::invalid_argument("grid too small: need at least 8 cells per axis");
    if (!(length[a] > 0.0)) throw std::invalid_argument("grid length must be positive");
  }
}

double DiscretePlateOperator::norm(const VectorXd& u) const { return std::sqrt(inner(u, u)); }

VectorXd DiscretePlateOperator::to_nodal(const VectorXd& u) const {
  return u.cwiseQuotient(weights.cwiseSqrt());
}

VectorXd DiscretePlateOperator::from_nodal(const VectorXd& u) const {
  return u.cwiseProduct(weights.cwiseSqrt());
}

VectorXd DiscretePlateOperator::sample(const std::function<double(const VectorXd&)>& f) const {
  VectorXd u(size());
  for (int i = 0; i < size(); ++i) u(i) = f(coords.row(i).transpose());
  return from_nodal(u);
}

namespace {

bool dirichlet_node(BcPair bc) {
  return bc == BcPair::Hinged || bc == BcPair::Clamped || bc == BcPair::Ex4;
}

/// u_{-1}, u_{-2} in terms of (u_0, u_1, u_2) at the left end; mirrored at the right end
std::array<std::array<double, 3>, 2> ghost_rule(const BcSpec& bc, double h) {
  const double a = bc.a;
  switch (bc.pair) {
    case BcPair::Hinged: return {{{0, -1, 0}, {0, 0, 0}}};
    case BcPair::Clamped: return {{{0, 1, 0}, {0, 0, 0}}};
    case BcPair::Ex4: {
      const double rho = (0.5 * a * h - 1.0) / (0.5 * a * h + 1.0);
      return {{{0, rho, 0}, {0, 0, 0}}};
    }
    case BcPair::NeumannPair: return {{{0, 1, 0}, {0, 0, 1}}};
    case BcPair::Ex2: return {{{2, -1, 0}, {4, -4, 1}}};
    case BcPair::Ex3: return {{{0, 1, 0}, {-2.0 * h * h * h * a, 0, 1}}};
    case BcPair::Ex5: {
      const double c = 1.0 / (1.0 + 0.5 * a * h);
      const double e = c * (1.0 - 0.5 * a * h);
      return {{{2.0 * c, -e, 0}, {4.0 * c, -2.0 - 2.0 * e, 1}}};
    }
  }
  throw std::logic_error("unhandled boundary pair");
}

struct Nodal1D {
  SpMat m;
  std::vector<int> nodes;
  VectorXd weights;
};

Nodal1D ghost_biharmonic_1d(const BcSpec& bc, int n, double h) {
  Nodal1D out;
  const bool dir = dirichlet_node(bc.pair);
  const int first = dir ? 1 : 0, last = dir ? n - 1 : n;
  for (int i = first; i <= last; ++i) out.nodes.push_back(i);
  const int N = static_cast<int>(out.nodes.size());
  out.weights = VectorXd::Ones(N);
  if (!dir) {
    out.weights(0) = 0.5;
    out.weights(N - 1) = 0.5;
  }
  const auto G = ghost_rule(bc, h);
  const double stencil[5] = {1, -4, 6, -4, 1};
  const double h4 = h * h * h * h;
  std::vector<Triplet> trip;
  auto add = [&](int row, int node, double c) {
    if (node < first || node > last) return;
    trip.emplace_back(row, node - first, c / h4);
  };
  for (int r = 0; r < N; ++r) {
    const int i = out.nodes[r];
    for (int s = -2; s <= 2; ++s) {
      const int j = i + s;
      const double c = stencil[s + 2];
      if (j >= 0 && j <= n) {
        add(r, j, c);
      } else if (j < 0) {
        const auto& row = G[-j - 1];
        for (int k = 0; k < 3; ++k) add(r, k, c * row[k]);
      } else {
        const auto& row = G[j - n - 1];
        for (int k = 0; k < 3; ++k) add(r, n - k, c * row[k]);
      }
    }
  }
  out.m.resize(N, N);
  out.m.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Nodal1D variable_rigidity_1d(const BcSpec& bc, int n, double h, const VectorXd& a) {
  if (bc.pair != BcPair::Hinged && bc.pair != BcPair::Clamped)
    throw std::invalid_argument("variable rigidity is supported for hinged and clamped pairs only");
  if (a.size() != n + 1) throw std::invalid_argument("rigidity must have one value per grid node");
  if (!(a.minCoeff() > 0.0)) throw std::invalid_argument("rigidity must be positive");
  Nodal1D out;
  for (int i = 1; i <= n - 1; ++i) out.nodes.push_back(i);
  const int N = n - 1;
  out.weights = VectorXd::Ones(N);
  const double ghost = bc.pair == BcPair::Hinged ? -1.0 : 1.0;
  std::vector<Triplet> trip;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    std::map<int, double> row;
    auto put = [&](int node, double c) {
      if (node >= 1 && node <= n - 1) row[node - 1] += c;
    };
    for (int s = -1; s <= 1; ++s) {
      const double c = (s == 0) ? -2.0 : 1.0;
      const int j = i + s;
      if (j < 0)
        put(1, c * ghost);
      else if (j > n)
        put(n - 1, c * ghost);
      else
        put(j, c);
    }
    for (const auto& [p, cp] : row)
      for (const auto& [q, cq] : row) trip.emplace_back(p, q, w * a(i) * cp * cq / (h * h * h * h));
  }
  out.m.resize(N, N);
  out.m.setFromTriplets(trip.begin(), trip.end());
  return out;
}

SpMat kron(const SpMat& A, const SpMat& B) {
  std::vector<Triplet> trip;
  for (int ka = 0; ka < A.outerSize(); ++ka)
    for (SpMat::InnerIterator ia(A, ka); ia; ++ia)
      for (int kb = 0; kb < B.outerSize(); ++kb)
        for (SpMat::InnerIterator ib(B, kb); ib; ++ib)
          trip.emplace_back(ia.row() * B.rows() + ib.row(), ia.col() * B.cols() + ib.col(),
                            ia.value() * ib.value());
  SpMat K(A.rows() * B.rows(), A.cols() * B.cols());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

SpMat identity(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat symmetrize_weights(const SpMat& M, const VectorXd& w) {
  const VectorXd s = w.cwiseSqrt();
  SpMat S = M;
  for (int k = 0; k < S.outerSize(); ++k)
    for (SpMat::InnerIterator it(S, k); it; ++it) it.valueRef() *= s(it.row()) / s(it.col());
  return S;
}

}  // namespace

SpMat dirichlet_second_difference(int n, double h) {
  std::vector<Triplet> trip;
  const int N = n - 1;
  for (int i = 0; i < N; ++i) {
    trip.emplace_back(i, i, -2.0 / (h * h));
    if (i > 0) trip.emplace_back(i, i - 1, 1.0 / (h * h));
    if (i + 1 < N) trip.emplace_back(i, i + 1, 1.0 / (h * h));
  }
  SpMat L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

SpMat neumann_second_difference(int n, double h) {
  std::vector<Triplet> trip;
  const int N = n + 1;
  for (int i = 0; i < N; ++i) {
    trip.emplace_back(i, i, -2.0 / (h * h));
    if (i == 0)
      trip.emplace_back(i, 1, 2.0 / (h * h));
    else if (i == n)
      trip.emplace_back(i, n - 1, 2.0 / (h * h));
    else {
      trip.emplace_back(i, i - 1, 1.0 / (h * h));
      trip.emplace_back(i, i + 1, 1.0 / (h * h));
    }
  }
  SpMat L(N, N);
  L.setFromTriplets(trip.begin(), trip.end());
  return L;
}

DiscretePlateOperator assemble(const Grid& grid, const BcSpec& bc, const PlateCoefficients& coef) {
  grid.validate();
  DiscretePlateOperator op;
  op.grid = grid;
  op.bc = bc;
  op.coefficients = coef;
  op.cell_volume = grid.cell_volume();

  if (grid.dim == 1) {
    const int n = grid.cells[0];
    const double h = grid.h(0);
    const Nodal1D nd = coef.rigidity.size() > 0 ? variable_rigidity_1d(bc, n, h, coef.rigidity)
                                                : ghost_biharmonic_1d(bc, n, h);
    op.nodal = nd.m;
    op.weights = nd.weights;
    op.coords.resize(static_cast<int>(nd.nodes.size()), 1);
    for (size_t k = 0; k < nd.nodes.size(); ++k) op.coords(static_cast<int>(k), 0) = nd.nodes[k] * h;
  } else {
    if (coef.rigidity.size() > 0) throw std::invalid_argument("variable rigidity is one-dimensional only");
    const double c1 = coef.axis_metric.size() > 0 ? coef.axis_metric[0] : 1.0;
    const double c2 = coef.axis_metric.size() > 1 ? coef.axis_metric[1] : 1.0;
    if (!(c1 > 0.0 && c2 > 0.0)) throw std::invalid_argument("metric coefficients must be positive");
    const int nx = grid.cells[0], ny = grid.cells[1];
    const double hx = grid.h(0), hy = grid.h(1);
    std::vector<int> xs, ys;
    VectorXd wx, wy;
    if (bc.pair == BcPair::Hinged || bc.pair == BcPair::Clamped) {
      const Nodal1D bx = ghost_biharmonic_1d(bc, nx, hx);
      const Nodal1D by = ghost_biharmonic_1d(bc, ny, hy);
      const SpMat Lx = dirichlet_second_difference(nx, hx);
      const SpMat Ly = dirichlet_second_difference(ny, hy);
      const SpMat Ix = identity(nx - 1), Iy = identity(ny - 1);
      op.nodal = c1 * c1 * kron(bx.m, Iy) + 2.0 * c1 * c2 * kron(Lx, Ly) + c2 * c2 * kron(Ix, by.m);
      xs = bx.nodes;
      ys = by.nodes;
      wx = bx.weights;
      wy = by.weights;
    } else if (bc.pair == BcPair::NeumannPair) {
      const SpMat Lx = neumann_second_difference(nx, hx);
      const SpMat Ly = neumann_second_difference(ny, hy);
      const SpMat L = c1 * kron(Lx, identity(ny + 1)) + c2 * kron(identity(nx + 1), Ly);
      op.nodal = L * L;
      for (int i = 0; i <= nx; ++i) xs.push_back(i);
      for (int i = 0; i <= ny; ++i) ys.push_back(i);
      wx = VectorXd::Ones(nx + 1);
      wy = VectorXd::Ones(ny + 1);
      wx(0) = wx(nx) = 0.5;
      wy(0) = wy(ny) = 0.5;
    } else {
      throw std::invalid_argument("rectangle supports hinged, clamped and neumann_pair only");
    }
    const int N = static_cast<int>(xs.size() * ys.size());
    op.weights.resize(N);
    op.coords.resize(N, 2);
    for (size_t a = 0; a < xs.size(); ++a)
      for (size_t b = 0; b < ys.size(); ++b) {
        const int k = static_cast<int>(a * ys.size() + b);
        op.weights(k) = wx(static_cast<int>(a)) * wy(static_cast<int>(b));
        op.coords(k, 0) = xs[a] * hx;
        op.coords(k, 1) = ys[b] * hy;
      }
  }
  op.nodal.makeCompressed();
  op.matrix = symmetrize_weights(op.nodal, op.weights);
  op.matrix.makeCompressed();
  return op;
}

DiscretePlateOperator disjoint_union(const DiscretePlateOperator& a, const DiscretePlateOperator& b) {
  if (std::abs(a.cell_volume - b.cell_volume) > 1e-14 * a.cell_volume || a.coords.cols() != b.coords.cols())
    throw std::invalid_argument("disjoint union needs matching grids");
  DiscretePlateOperator u = a;
  const int na = a.size(), nb = b.size();
  u.weights.resize(na + nb);
  u.weights << a.weights, b.weights;
  u.coords.resize(na + nb, a.coords.cols());
  u.coords << a.coords, b.coords;
  auto block = [&](const SpMat& A, const SpMat& B) {
    std::vector<Triplet> trip;
    for (int k = 0; k < A.outerSize(); ++k)
      for (SpMat::InnerIterator it(A, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < B.outerSize(); ++k)
      for (SpMat::InnerIterator it(B, k); it; ++it) trip.emplace_back(na + it.row(), na + it.col(), it.value());
    SpMat M(na + nb, na + nb);
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
  };
  u.nodal = block(a.nodal, b.nodal);
  u.matrix = block(a.matrix, b.matrix);
  return u;
}

double symmetry_residual(const DiscretePlateOperator& op) {
  const MatrixXd S(op.matrix);
  const double scale = S.cwiseAbs().maxCoeff();
  return (S - S.transpose()).cwiseAbs().maxCoeff() / scale;
}

double check_symmetry(const DiscretePlateOperator& op, int trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  double mnorm = 0.0;
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.matrix, k); it; ++it) mnorm = std::max(mnorm, std::abs(it.value()));
  mnorm *= 5.0;
  for (int t = 0; t < trials; ++t) {
    const VectorXd u = rng.normal_vector(op.size());
    const VectorXd v = rng.normal_vector(op.size());
    const double lhs = op.inner(op.matrix * u, v);
    const double rhs = op.inner(u, op.matrix * v);
    worst = std::max(worst, std::abs(lhs - rhs) / (op.norm(u) * op.norm(v) * mnorm));
  }
  return worst;
}

VectorXd SpectralScale::coefficients(const VectorXd& u) const {
  return cell_volume * (phi.transpose() * u);
}

double SpectralScale::hkb_norm(const VectorXd& u, double k, bool* truncation_warning) const {
  const VectorXd c = coefficients(u);
  double s = 0.0;
  for (int j = 0; j < c.size(); ++j) s += std::pow(1.0 + mu(j), 0.5 * k) * c(j) * c(j);
  const double total = cell_volume * u.squaredNorm();
  const double tail = std::max(0.0, total - c.squaredNorm());
  if (truncation_warning) *truncation_warning = !complete() && total > 0 && tail > 1e-10 * total;
  return std::sqrt(s);
}

SpectralScale spectrum(const DiscretePlateOperator& op, int count) {
  const int N = op.size();
  if (count < 0) count = N;
  if (count == 0 || count > N) throw std::invalid_argument("eigenpair count exceeds the matrix size");
  const MatrixXd S(op.matrix);
  const MatrixXd Ssym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Ssym);
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
  SpectralScale sc;
  sc.cell_volume = op.cell_volume;
  sc.full_size = N;
  sc.mu = es.eigenvalues().head(count);
  sc.phi = es.eigenvectors().leftCols(count) / std::sqrt(op.cell_volume);
  for (int j = 0; j < count; ++j) {
    int imax;
    sc.phi.col(j).cwiseAbs().maxCoeff(&imax);
    if (sc.phi(imax, j) < 0) sc.phi.col(j) *= -1.0;
  }
  return sc;
}

double min_rayleigh_quotient(const DiscretePlateOperator& op) {
  const MatrixXd S(op.matrix);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::vector<VectorXd> kernel(const SpectralScale& scale, double tol) {
  std::vector<VectorXd> out;
  const int n = scale.count();
  if (n == 0) return out;
  const double thresh = tol * scale.mu.cwiseAbs().maxCoeff();
  for (int j = 0; j < n; ++j)
    if (scale.mu(j) <= thresh) out.push_back(scale.phi.col(j));
  return out;
}

int kernel_dimension(const SpectralScale& scale, double tol) {
  return static_cast<int>(kernel(scale, tol).size());
}

GreenCheck green_form_check(int n, double length, const SmoothFn& u, const SmoothFn& v) {
  const double h = length / n;
  auto d4 = [&](const SmoothFn& f, int i) {
    const double x = i * h;
    return (f(x - 2 * h, 0) - 4 * f(x - h, 0) + 6 * f(x, 0) - 4 * f(x + h, 0) + f(x + 2 * h, 0)) /
           (h * h * h * h);
  };
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    const double x = i * h;
    s += w * h * (d4(u, i) * v(x, 0) - u(x, 0) * d4(v, i));
  }
  auto form = [&](double x, double sgn) {
    auto dn = [&](const SmoothFn& f, int k) { return std::pow(sgn, k) * f(x, k); };
    return dn(u, 3) * dn(v, 0) - dn(u, 2) * dn(v, 1) + dn(u, 1) * dn(v, 2) - dn(u, 0) * dn(v, 3);
  };
  GreenCheck gc;
  gc.discrete = s;
  gc.boundary_form = form(0.0, -1.0) + form(length, 1.0);
  return gc;
}

double beam_clamped_beta(int k) {
  if (k < 1) throw std::invalid_argument("mode index starts at 1");
  auto f = [](double b) { return std::cos(b) * std::cosh(b) - 1.0; };
  double lo = (k + 0.5) * M_PI - 0.3;
  double hi = (k + 0.5) * M_PI + 0.25;
  if (f(lo) * f(hi) > 0) throw std::runtime_error("beam characteristic root not bracketed");
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(lo) * f(mid) <= 0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double SampledProfile::operator()(double t) const {
  if (x.empty()) throw std::logic_error("empty sampled profile");
  if (t <= x.front()) return value.front();
  if (t >= x.back()) return value.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const size_t k = static_cast<size_t>(it - x.begin());
  const double s = (t - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - s) * value[k - 1] + s * value[k];
}

SampledProfile SampledProfile::parse(std::istream& in, const std::string& source) {
  SampledProfile p;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a)) continue;
    if (!(ls >> b))
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected 'x value'");
    if (!p.x.empty() && !(a > p.x.back()))
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": abscissae must increase");
    p.x.push_back(a);
    p.value.push_back(b);
  }
  if (p.x.empty()) throw std::invalid_argument(source + ": no samples");
  return p;
}

SampledProfile SampledProfile::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open profile file '" + path + "'");
  return parse(f, path);
}

void write_operator_columns(std::ostream& os, const DiscretePlateOperator& op, const SpectralScale* scale) {
  os << "# platelab operator\n";
  os << "# bc = " << bc_name(op.bc.pair) << "\n";
  os << "# bc_parameter = " << format_double(op.bc.a) << "\n";
  os << "# dim = " << op.grid.dim << "\n";
  os << "# unknowns = " << op.size() << "\n";
  os << "# cell_volume = " << format_double(op.cell_volume) << "\n";
  os << "# section nodes: index coord... weight\n";
  for (int i = 0; i < op.size(); ++i) {
    os << i;
    for (int a = 0; a < op.coords.cols(); ++a) os << ' ' << format_double(op.coords(i, a));
    os << ' ' << format_double(op.weights(i)) << "\n";
  }
  os << "# section triplets: row col value\n";
  for (int k = 0; k < op.matrix.outerSize(); ++k)
    for (SpMat::InnerIterator it(op.matrix, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << "\n";
  if (scale) {
    os << "# section eigenvalues: index mu\n";
    for (int j = 0; j < scale->count(); ++j) os << j << ' ' << format_double(scale->mu(j)) << "\n";
  }
}

}  // namespace platelab
