#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cascade/fock.hpp"

namespace cascade {

/// W(x, p) sampled on a rectangular grid; values(i, j) belongs to (x_values[i], p_values[j]).
struct PhaseSpaceGrid {
  std::vector<double> x_values;
  std::vector<double> p_values;
  Eigen::MatrixXd values;
  std::string convention;

  /// Riemann sum of W with the grid's cell areas.
  double integral() const;
  /// Integral of the negative part, sum of max(-W, 0) dx dp.
  double negative_volume() const;
  double min_value() const;
};

inline constexpr const char* kWignerConvention =
    "W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^+], alpha = x + i p, P = parity, "
    "x = Re alpha, p = Im alpha, integral over dx dp = 1";

/// Evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, int count);

/// <a^+ a^+ a a> / <a^+ a>^2 of one mode.
double g2_from_rho(const DensityMatrix& rho, int mode);

/// <a^+ a> of one mode.
double population(const DensityMatrix& rho, int mode);

/// Wigner function of a single-mode state. Displacements are formed in a
/// working space larger than the state's truncation so that the grid edges
/// are not distorted by the cutoff.
PhaseSpaceGrid wigner(const DensityMatrix& rho, const std::vector<double>& x_values,
                      const std::vector<double>& p_values);

/// <1|rho|1> for a single-mode state.
double fidelity_single_photon(const DensityMatrix& rho);

/// Variance of x_phi = (a e^{-i phi} + a^+ e^{i phi}) / 2 for one mode.
double quadrature_variance(const DensityMatrix& rho, int mode, double phi);

struct DuanScan {
  double e_min = 0.0;
  double phi_min = 0.0;
  /// Moment-route value at phi_min.
  double e_min_moments = 0.0;
  /// Largest disagreement of the two routes over all evaluated phases.
  double max_route_gap = 0.0;
  std::vector<double> phi_values;
  std::vector<double> e_values;
};

/// V(x_1 + x_2) + V(p_1 - p_2) with mode b rotated by a_b -> a_b e^{i phi},
/// quadratures x = (a + a^+)/2, p = (a - a^+)/(2i).
double duan_variance(const DensityMatrix& rho, std::pair<int, int> modes, double phi);

/// 1 + <da_1^+ da_1> + <da_2^+ da_2> + 2 Re(e^{i phi} <da_1 da_2>), the same quantity
/// from fluctuation moments.
double duan_moments(const DensityMatrix& rho, std::pair<int, int> modes, double phi);

/// Minimum over phi of the witness: grid scan then golden-section refinement
/// around the best grid point. An empty grid uses 181 points over [0, 2 pi).
DuanScan duan_witness_from_rho(const DensityMatrix& rho, std::pair<int, int> modes,
                               std::vector<double> phi_grid = {});

}  // namespace cascade
