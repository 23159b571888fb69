#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cascade/meanfield.hpp"

namespace cascade {

/// Linearised fluctuations around a classical fixed point in the scaled polar
/// variables alpha_m = S_m (1 + i_m - i theta_m), beta_m = S_m^* (1 + i_m + i theta_m).
///
/// Basis ordering is [i_1, theta_1, i_2, theta_2, ...]; use `intensity_index`
/// and `phase_index` rather than open-coding offsets.
struct FluctuationModel {
  ClassicalFixedPoint point;
  Eigen::MatrixXd drift;
  Eigen::MatrixXd diffusion;
  Eigen::MatrixXd covariance;

  int n_modes() const { return static_cast<int>(point.amplitudes.size()); }
};

constexpr int intensity_index(int mode) { return 2 * mode; }
constexpr int phase_index(int mode) { return 2 * mode + 1; }

/// Drift and diffusion of the positive-P equations of the cascade Kerr chain,
/// linearised about `point`, with the Lyapunov covariance.
FluctuationModel linearize(const ClassicalFixedPoint& point, const ChainParams& params);

/// Solves A sigma + sigma A^T + D = 0 for Hurwitz A.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& A, const Eigen::MatrixXd& D);

bool is_hurwitz(const Eigen::MatrixXd& A, double margin = 0.0);

/// g2_m(0) ~ 1 + 4 <i_m^2>.
double g2_linearized(const FluctuationModel& model, int mode);

/// Closed form for the pumped mode:
/// 1 - k (delta + k n) / [gamma^2 + (delta + k n)(delta + 3 k n)].
double g2_single_mode_analytic(double n1, double delta, double gamma, double kerr);

/// Polar-variable form of the phase-minimised two-mode witness:
/// 1 + n_a <i_a^2> + n_b <i_b^2>
///   - 2 sqrt(n_a n_b) sqrt((<i_a i_b> - <theta_a theta_b>)^2 + (<i_a theta_b> + <i_b theta_a>)^2)
double duan_witness_linearized(const FluctuationModel& model, std::pair<int, int> modes);

/// Same witness from normally ordered moments built out of the same covariance:
/// 1 + N_a + N_b - 2 |C_ab| with N_m = <da_m^+ da_m> = n_m (<i_m^2> + <theta_m^2>)
/// and C_ab = <da_a da_b> = S_a S_b <u_a u_b>.
double duan_witness_moments(const FluctuationModel& model, std::pair<int, int> modes);

struct PhaseSpacePoint {
  double n_last = 0.0;
  double delta = 0.0;
  double drive = 0.0;
  std::vector<double> populations;
  /// Empty when the point failed; see `failure`.
  std::vector<double> g2;
  std::optional<double> duan;
  std::optional<double> duan_moments;
  std::string failure;

  bool ok() const { return failure.empty(); }
};

struct SweepRequest {
  std::vector<double> n_last_grid;
  std::vector<double> delta_grid;
  ChainParams params;
  int n_modes = 2;
  std::optional<std::pair<int, int>> duan_pair;
};

/// Row-major over (n_last, delta): index = i_n * delta_grid.size() + i_delta.
std::vector<PhaseSpacePoint> sweep_phase_space(const SweepRequest& request);

/// One grid point of the sweep.
PhaseSpacePoint phase_space_point(double n_last, double delta, const ChainParams& params, int n_modes,
                                  std::optional<std::pair<int, int>> duan_pair);

}  // namespace cascade
