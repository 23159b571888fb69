#pragma once

#include <complex>
#include <vector>

#include "cascade/liouvillian.hpp"

namespace cascade {

/// One steady-state solution of a single mode's cubic, given its drive.
struct ModeBranch {
  std::complex<double> amplitude;
  double population = 0.0;
  bool stable = true;
};

/// Complex mean-field amplitudes S_1..S_N of the whole chain at steady state.
struct ClassicalFixedPoint {
  std::vector<std::complex<double>> amplitudes;
  std::vector<double> populations;
  std::vector<bool> stable;

  bool all_stable() const;
};

/// Branches of n [gamma^2 + (delta + kerr n)^2] = f^2 for the pumped mode,
/// lifted to S_1 = -i f / (gamma + i (delta + kerr n)).
std::vector<ModeBranch> solve_first_mode(double f, const ChainParams& params);

/// Branches of a mode driven by the upstream amplitude `s_prev`:
/// n [gamma^2 + (delta + kerr n)^2] = T^2 |s_prev|^2, S = T s_prev / (gamma + i (delta + kerr n)),
/// with T = sqrt(eta) gamma the link transfer rate (T = gamma for a perfect chain).
std::vector<ModeBranch> solve_next_mode(std::complex<double> s_prev, const ChainParams& params, int link = 0);

/// Populations [n_1, ..., n_N] that lead to `n_last` in the last mode,
/// walking upstream with n_{m-1} = (1 + (delta + kerr n_m)^2 / gamma^2) n_m.
std::vector<double> population_chain(double n_last, const ChainParams& params, int n_modes);

/// Fixed point with the given last-mode population, with the phase fixed by a
/// real non-negative drive on mode 1. Returns the drive through `drive_out`.
ClassicalFixedPoint fixed_point_from_last_population(double n_last, const ChainParams& params, int n_modes,
                                                     double* drive_out = nullptr);

/// All fixed points of the chain at drive f (every combination of branches).
std::vector<ClassicalFixedPoint> chain_fixed_points(double f, const ChainParams& params);

/// Residual of mode m's steady-state equation at the given amplitudes.
double steady_state_residual(const ClassicalFixedPoint& point, const ChainParams& params, double f, int mode);

struct BistabilityRow {
  double drive = 0.0;
  std::vector<ClassicalFixedPoint> branches;
};

std::vector<BistabilityRow> bistability_scan(const std::vector<double>& f_grid, const ChainParams& params);

/// Number of separate drive intervals in which `mode` has two or more distinct
/// populations among fully stable chain solutions.
int count_multistable_intervals(const std::vector<BistabilityRow>& table, int mode, double rel_tol = 1e-6);

/// Jumps seen by `mode` when the drive is ramped slowly upward through the
/// table: the lowest stable solution is followed by continuity, and a step whose
/// population change exceeds jump_rel * max(1, n) counts as a jump. The table
/// must be fine enough that continuous steps stay well below that threshold.
int count_jumps(const std::vector<BistabilityRow>& table, int mode, double jump_rel = 0.5);

}  // namespace cascade
