#include "cascade/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "cascade/error.hpp"

namespace cascade {

namespace {

using std::numbers::pi;

constexpr double kVacuumPopulation = 1e-12;
constexpr int kDefaultPhiPoints = 181;

std::vector<double> cell_widths(const std::vector<double>& v) {
  std::vector<double> w(v.size(), 0.0);
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const double h = 0.5 * (v[i + 1] - v[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

void check_ascending(const std::vector<double>& v, const char* name) {
  if (v.empty()) throw Error(ErrorCode::EmptyGrid, std::string(name) + " grid is empty");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw Error(ErrorCode::InvalidParameter, std::string(name) + " grid must be ascending");
}

void check_single_mode(const DensityMatrix& rho) {
  if (rho.dims().n_modes() != 1) throw Error(ErrorCode::DimensionMismatch, "expected a single-mode state");
}

// Same state with one extra empty level per mode, so that products of two
// ladder operators are exact on the original support.
DensityMatrix pad_one_level(const DensityMatrix& rho) {
  const FockDims& in = rho.dims();
  const FockDims out = in.enlarged(1);
  std::vector<Eigen::Index> map(in.total());
  for (std::size_t flat = 0; flat < in.total(); ++flat) {
    std::size_t rest = flat, target = 0;
    for (int m = in.n_modes() - 1; m >= 0; --m) {
      const auto d = static_cast<std::size_t>(in.dim(m));
      target += (rest % d) * out.stride(m);
      rest /= d;
    }
    map[flat] = static_cast<Eigen::Index>(target);
  }
  const auto n = static_cast<Eigen::Index>(out.total());
  DenseMatrix big = DenseMatrix::Zero(n, n);
  big(map, map) = rho.matrix();
  return DensityMatrix(out, big);
}

// Two-mode reduced state with the requested pair mapped to slots (0, 1).
DensityMatrix pair_state(const DensityMatrix& rho, std::pair<int, int> modes, bool& swapped) {
  if (modes.first == modes.second) throw Error(ErrorCode::SameMode, "witness needs two distinct modes");
  const int n = rho.dims().n_modes();
  for (int m : {modes.first, modes.second})
    if (m < 0 || m >= n) throw Error(ErrorCode::IndexOutOfRange, "mode " + std::to_string(m) + " out of range");
  swapped = modes.first > modes.second;
  if (n == 2) return rho;
  return partial_trace(rho, std::vector<int>{modes.first, modes.second});
}

double golden_section(const auto& f, double lo, double hi, int iterations) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double PhaseSpaceGrid::integral() const {
  const auto wx = cell_widths(x_values);
  const auto wp = cell_widths(p_values);
  double s = 0.0;
  for (std::size_t i = 0; i < wx.size(); ++i)
    for (std::size_t j = 0; j < wp.size(); ++j)
      s += values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * wx[i] * wp[j];
  return s;
}

double PhaseSpaceGrid::negative_volume() const {
  const auto wx = cell_widths(x_values);
  const auto wp = cell_widths(p_values);
  double s = 0.0;
  for (std::size_t i = 0; i < wx.size(); ++i)
    for (std::size_t j = 0; j < wp.size(); ++j)
      s += std::max(0.0, -values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) * wx[i] * wp[j];
  return s;
}

double PhaseSpaceGrid::min_value() const { return values.minCoeff(); }

std::vector<double> linspace(double lo, double hi, int count) {
  if (count < 1) throw Error(ErrorCode::EmptyGrid, "linspace needs at least one point");
  if (count == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return v;
}

double population(const DensityMatrix& rho, int mode) {
  return expect(rho, embed(number(rho.dims().dim(mode)), mode, rho.dims())).real();
}

double g2_from_rho(const DensityMatrix& rho, int mode) {
  (void)rho.dims().dim(mode);
  const DensityMatrix r = rho.dims().n_modes() == 1 ? rho : partial_trace(rho, mode);
  const int d = r.dims().dim(0);
  const DenseMatrix a = destroy(d).dense();
  const DenseMatrix ad = a.adjoint();
  const double n = (r.matrix() * ad * a).trace().real();
  if (n <= kVacuumPopulation) throw Error(ErrorCode::UndefinedG2, "g2 undefined: mode population is zero");
  const double pairs = (r.matrix() * ad * ad * a * a).trace().real();
  return std::max(0.0, pairs) / (n * n);
}

PhaseSpaceGrid wigner(const DensityMatrix& rho, const std::vector<double>& x_values,
                      const std::vector<double>& p_values) {
  check_single_mode(rho);
  check_ascending(x_values, "x");
  check_ascending(p_values, "p");

  double reach = 0.0;
  for (double x : x_values) reach = std::max(reach, std::abs(x));
  double reach_p = 0.0;
  for (double p : p_values) reach_p = std::max(reach_p, std::abs(p));
  reach = std::hypot(reach, reach_p);

  const int d = rho.dims().dim(0);
  const int work = d + static_cast<int>(std::ceil((reach + 5.0) * (reach + 5.0)));
  const DenseMatrix a = destroy(work).dense();
  const DenseMatrix ad = a.adjoint();

  // D(x) = exp(i x H_x) with H_x = -i (a^+ - a); D(i p) = exp(i p H_p) with H_p = a + a^+.
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig_x(cplx(0.0, -1.0) * (ad - a));
  const Eigen::SelfAdjointEigenSolver<DenseMatrix> eig_p(a + ad);
  auto exp_i = [](const Eigen::SelfAdjointEigenSolver<DenseMatrix>& es, double t) -> DenseMatrix {
    const Eigen::VectorXcd phases =
        (cplx(0.0, t) * es.eigenvalues().cast<cplx>()).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  };

  Eigen::VectorXcd parity(work);
  for (int n = 0; n < work; ++n) parity(n) = (n % 2 == 0) ? 1.0 : -1.0;

  // Only the first d rows of D(x) meet the support of rho.
  std::vector<DenseMatrix> rho_shifted;
  rho_shifted.reserve(x_values.size());
  for (double x : x_values) {
    const DenseMatrix dx = exp_i(eig_x, x);
    const auto top = dx.topRows(d);
    rho_shifted.push_back(top.adjoint() * rho.matrix() * top);
  }

  PhaseSpaceGrid grid;
  grid.x_values = x_values;
  grid.p_values = p_values;
  grid.convention = kWignerConvention;
  grid.values.resize(static_cast<Eigen::Index>(x_values.size()), static_cast<Eigen::Index>(p_values.size()));
  for (std::size_t j = 0; j < p_values.size(); ++j) {
    const DenseMatrix dp = exp_i(eig_p, p_values[j]);
    const DenseMatrix displaced_parity = dp * parity.asDiagonal() * dp.adjoint();
    for (std::size_t i = 0; i < x_values.size(); ++i) {
      const double tr = (rho_shifted[i].array() * displaced_parity.transpose().array()).sum().real();
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (2.0 / pi) * tr;
    }
  }
  return grid;
}

double fidelity_single_photon(const DensityMatrix& rho) {
  check_single_mode(rho);
  return std::clamp(rho.matrix()(1, 1).real(), 0.0, 1.0);
}

double quadrature_variance(const DensityMatrix& rho, int mode, double phi) {
  (void)rho.dims().dim(mode);
  const DensityMatrix r = pad_one_level(rho.dims().n_modes() == 1 ? rho : partial_trace(rho, mode));
  const FockOperator a = destroy(r.dims().dim(0));
  const FockOperator x = 0.5 * (std::polar(1.0, -phi) * a + std::polar(1.0, phi) * a.adjoint());
  const double mean = expect(r, x).real();
  return expect(r, x * x).real() - mean * mean;
}

namespace {

// `padded` is a two-mode state already extended by pad_one_level.
double padded_duan_variance(const DensityMatrix& padded, bool swapped, double phi) {
  const DensityMatrix& r = padded;
  const FockOperator a1 = mode_destroy(r.dims(), swapped ? 1 : 0);
  const FockOperator b = std::polar(1.0, phi) * mode_destroy(r.dims(), swapped ? 0 : 1);
  const FockOperator u = 0.5 * (a1 + a1.adjoint() + b + b.adjoint());
  const FockOperator v = cplx(0.0, -0.5) * (a1 - a1.adjoint() - b + b.adjoint());
  auto variance = [&](const FockOperator& q) {
    const double mean = expect(r, q).real();
    return expect(r, q * q).real() - mean * mean;
  };
  return variance(u) + variance(v);
}

}  // namespace

double duan_variance(const DensityMatrix& rho, std::pair<int, int> modes, double phi) {
  bool swapped = false;
  return padded_duan_variance(pad_one_level(pair_state(rho, modes, swapped)), swapped, phi);
}

double duan_moments(const DensityMatrix& rho, std::pair<int, int> modes, double phi) {
  bool swapped = false;
  const DensityMatrix r = pair_state(rho, modes, swapped);
  const FockOperator a1 = mode_destroy(r.dims(), swapped ? 1 : 0);
  const FockOperator a2 = mode_destroy(r.dims(), swapped ? 0 : 1);
  const cplx m1 = expect(r, a1);
  const cplx m2 = expect(r, a2);
  const double n1 = expect(r, a1.adjoint() * a1).real() - std::norm(m1);
  const double n2 = expect(r, a2.adjoint() * a2).real() - std::norm(m2);
  const cplx c = expect(r, a1 * a2) - m1 * m2;
  return 1.0 + n1 + n2 + 2.0 * (std::polar(1.0, phi) * c).real();
}

DuanScan duan_witness_from_rho(const DensityMatrix& rho, std::pair<int, int> modes, std::vector<double> phi_grid) {
  if (phi_grid.empty()) {
    phi_grid.resize(kDefaultPhiPoints);
    for (int i = 0; i < kDefaultPhiPoints; ++i) phi_grid[static_cast<std::size_t>(i)] = 2.0 * pi * i / kDefaultPhiPoints;
  }
  bool swapped = false;
  const DensityMatrix r = pair_state(rho, modes, swapped);
  const std::pair<int, int> local{swapped ? 1 : 0, swapped ? 0 : 1};
  const DensityMatrix padded = pad_one_level(r);

  DuanScan scan;
  scan.phi_values = phi_grid;
  auto evaluate = [&](double phi) {
    const double e = padded_duan_variance(padded, swapped, phi);
    scan.max_route_gap = std::max(scan.max_route_gap, std::abs(e - duan_moments(r, local, phi)));
    return e;
  };
  std::size_t best = 0;
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    scan.e_values.push_back(evaluate(phi_grid[i]));
    if (scan.e_values[i] < scan.e_values[best]) best = i;
  }

  double phi_min = phi_grid[best];
  double e_min = scan.e_values[best];
  if (phi_grid.size() > 1) {
    const double h = phi_grid.size() > 2 ? (phi_grid.back() - phi_grid.front()) / static_cast<double>(phi_grid.size() - 1)
                                         : std::abs(phi_grid[1] - phi_grid[0]);
    const double refined = golden_section(evaluate, phi_min - h, phi_min + h, 60);
    const double e_refined = evaluate(refined);
    if (e_refined < e_min) {
      e_min = e_refined;
      phi_min = refined;
    }
  }
  phi_min = std::fmod(phi_min, 2.0 * pi);
  if (phi_min < 0.0) phi_min += 2.0 * pi;
  scan.e_min = e_min;
  scan.phi_min = phi_min;
  scan.e_min_moments = duan_moments(r, local, phi_min);
  return scan;
}

}  // namespace cascade
