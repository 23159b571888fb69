#include "cascade/fluctuations.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "cascade/error.hpp"

namespace cascade {

namespace {

// Eigenvalues with |Re| below this fraction of the largest rate are treated as marginal.
constexpr double kHurwitzRelMargin = 1e-9;

void check_mode(const FluctuationModel& model, int mode) {
  if (mode < 0 || mode >= model.n_modes()) {
    throw Error(ErrorCode::IndexOutOfRange, "mode " + std::to_string(mode) + " out of range");
  }
}

void check_pair(const FluctuationModel& model, std::pair<int, int> modes) {
  check_mode(model, modes.first);
  check_mode(model, modes.second);
  if (modes.first == modes.second) throw Error(ErrorCode::SameMode, "witness needs two distinct modes");
}

}  // namespace

bool is_hurwitz(const Eigen::MatrixXd& A, double margin) {
  const Eigen::VectorXcd ev = A.eigenvalues();
  return (ev.real().array() < -margin).all();
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D) {
  if (A.rows() != A.cols() || D.rows() != A.rows() || D.cols() != A.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "lyapunov_solve: shape mismatch");
  }
  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  if (!is_hurwitz(A, kHurwitzRelMargin * scale)) {
    throw Error(ErrorCode::NoUniqueSolution, "drift matrix is not Hurwitz");
  }
  const auto n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // vec(A S + S A^T) = (I (x) A + A (x) I) vec(S)
  const Eigen::MatrixXd K = Eigen::kroneckerProduct(I, A) + Eigen::kroneckerProduct(A, I);
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(D.data(), n * n);
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (sigma + sigma.transpose());
}

FluctuationModel linearize(const ClassicalFixedPoint& point, const ChainParams& params) {
  const int n = static_cast<int>(point.amplitudes.size());
  if (n < 1 || point.populations.size() != point.amplitudes.size()) {
    throw Error(ErrorCode::InvalidParameter, "fixed point has no modes");
  }
  for (int m = 0; m < n; ++m) {
    if (!(point.populations[static_cast<std::size_t>(m)] > 0.0) || std::abs(point.amplitudes[static_cast<std::size_t>(m)]) == 0.0) {
      throw Error(ErrorCode::DegenerateExpansion,
                  "zero population in mode " + std::to_string(m) + ": polar expansion undefined");
    }
  }

  const double g = params.gamma;
  const double k = params.kerr;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int m = 0; m < n; ++m) {
    const double pop = point.populations[static_cast<std::size_t>(m)];
    const int i = intensity_index(m);
    const int th = phase_index(m);
    // Self block from linearising -(gamma + i delta) alpha - i k alpha^2 beta.
    A(i, i) = -g;
    A(i, th) = -(params.delta + k * pop);
    A(th, i) = params.delta + 3.0 * k * pop;
    A(th, th) = -g;
    // Kerr noise <dW_alpha^2> = -i k alpha^2, <dW_beta^2> = +i k beta^2 gives
    // zero diagonal and k/2 between i_m and theta_m in the scaled variables.
    D(i, th) = D(th, i) = 0.5 * k;

    if (m > 0) {
      // Upstream drive T S_{m-1}(1 + u_{m-1}) enters through c = T S_{m-1} / S_m.
      const std::complex<double> c = std::sqrt(params.link_eta(m - 1)) * g *
                                     point.amplitudes[static_cast<std::size_t>(m - 1)] /
                                     point.amplitudes[static_cast<std::size_t>(m)];
      const int ip = intensity_index(m - 1);
      const int thp = phase_index(m - 1);
      A(i, ip) = c.real();
      A(i, thp) = c.imag();
      A(th, ip) = -c.imag();
      A(th, thp) = c.real();
    }
  }

  const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
  if (!is_hurwitz(A, kHurwitzRelMargin * scale)) {
    throw Error(ErrorCode::UnstablePoint, "linearised drift is not Hurwitz at this fixed point");
  }
  FluctuationModel model{point, A, D, lyapunov_solve(A, D)};
  return model;
}

double g2_linearized(const FluctuationModel& model, int mode) {
  check_mode(model, mode);
  return 1.0 + 4.0 * model.covariance(intensity_index(mode), intensity_index(mode));
}

double g2_single_mode_analytic(double n1, double delta, double gamma, double kerr) {
  const double shift = delta + kerr * n1;
  const double denom = gamma * gamma + shift * (delta + 3.0 * kerr * n1);
  if (std::abs(denom) < 1e-12) throw Error(ErrorCode::SingularParameter, "denominator vanishes");
  return 1.0 - kerr * shift / denom;
}

double duan_witness_linearized(const FluctuationModel& model, std::pair<int, int> modes) {
  check_pair(model, modes);
  const auto& s = model.covariance;
  const int ia = intensity_index(modes.first), ta = phase_index(modes.first);
  const int ib = intensity_index(modes.second), tb = phase_index(modes.second);
  const double na = model.point.populations[static_cast<std::size_t>(modes.first)];
  const double nb = model.point.populations[static_cast<std::size_t>(modes.second)];
  const double x = s(ia, ib) - s(ta, tb);
  const double y = s(ia, tb) + s(ib, ta);
  return 1.0 + na * s(ia, ia) + nb * s(ib, ib) - 2.0 * std::sqrt(na * nb) * std::hypot(x, y);
}

double duan_witness_moments(const FluctuationModel& model, std::pair<int, int> modes) {
  check_pair(model, modes);
  const auto& s = model.covariance;
  const int ia = intensity_index(modes.first), ta = phase_index(modes.first);
  const int ib = intensity_index(modes.second), tb = phase_index(modes.second);
  const auto sa = model.point.amplitudes[static_cast<std::size_t>(modes.first)];
  const auto sb = model.point.amplitudes[static_cast<std::size_t>(modes.second)];
  // <delta beta delta alpha> = n <(i + i theta)(i - i theta)>
  const double n_a = std::norm(sa) * (s(ia, ia) + s(ta, ta));
  const double n_b = std::norm(sb) * (s(ib, ib) + s(tb, tb));
  // <u_a u_b> with u = i - i theta
  const std::complex<double> uu(s(ia, ib) - s(ta, tb), -(s(ia, tb) + s(ta, ib)));
  const std::complex<double> c = sa * sb * uu;
  return 1.0 + n_a + n_b - 2.0 * std::abs(c);
}

PhaseSpacePoint phase_space_point(double n_last, double delta, const ChainParams& params, int n_modes,
                                  std::optional<std::pair<int, int>> duan_pair) {
  PhaseSpacePoint pt;
  pt.n_last = n_last;
  pt.delta = delta;
  ChainParams p = params;
  p.delta = delta;
  try {
    double drive = 0.0;
    const auto fp = fixed_point_from_last_population(n_last, p, n_modes, &drive);
    pt.drive = drive;
    pt.populations = fp.populations;
    const auto model = linearize(fp, p);
    for (int m = 0; m < n_modes; ++m) pt.g2.push_back(g2_linearized(model, m));
    if (duan_pair) {
      pt.duan = duan_witness_linearized(model, *duan_pair);
      pt.duan_moments = duan_witness_moments(model, *duan_pair);
    }
  } catch (const Error& e) {
    pt.g2.clear();
    pt.duan.reset();
    pt.duan_moments.reset();
    pt.failure = std::string(to_string(e.code()));
  }
  return pt;
}

std::vector<PhaseSpacePoint> sweep_phase_space(const SweepRequest& request) {
  if (request.n_last_grid.empty() || request.delta_grid.empty()) {
    throw Error(ErrorCode::EmptyGrid, "sweep grids must be non-empty");
  }
  for (double n : request.n_last_grid)
    if (!(n >= 0.0)) throw Error(ErrorCode::InvalidParameter, "populations must be >= 0");
  ChainParams p = request.params;
  if (p.n_modes != request.n_modes) p = ChainParams::chain(request.n_modes, p.gamma, p.kerr, p.delta, p.drive);
  std::vector<PhaseSpacePoint> out;
  out.reserve(request.n_last_grid.size() * request.delta_grid.size());
  for (double n : request.n_last_grid)
    for (double d : request.delta_grid) out.push_back(phase_space_point(n, d, p, request.n_modes, request.duan_pair));
  return out;
}

}  // namespace cascade
