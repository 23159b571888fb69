#include "cascade/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "cascade/error.hpp"

namespace cascade {

namespace {

constexpr double kImagTol = 1e-9;

double link_transfer(const ChainParams& params, int link) {
  if (link < 0 || link + 1 >= params.n_modes) {
    // A lone mode (or a direct call outside a chain) is treated as perfectly coupled.
    return params.gamma;
  }
  return std::sqrt(params.link_eta(link)) * params.gamma;
}

// Real non-negative roots of n [gamma^2 + (delta + k n)^2] = drive_sq.
std::vector<double> population_roots(double drive_sq, double gamma, double delta, double k) {
  if (drive_sq <= 0.0) return {0.0};
  if (k == 0.0) return {drive_sq / (gamma * gamma + delta * delta)};

  // k^2 n^3 + 2 delta k n^2 + (gamma^2 + delta^2) n - drive_sq, made monic.
  const double c2 = 2.0 * delta / k;
  const double c1 = (gamma * gamma + delta * delta) / (k * k);
  const double c0 = -drive_sq / (k * k);
  Eigen::Matrix3d companion;
  companion << 0.0, 0.0, -c0,
               1.0, 0.0, -c1,
               0.0, 1.0, -c2;
  const Eigen::Vector3cd ev = companion.eigenvalues();

  auto poly = [&](double n) { return n * (gamma * gamma + (delta + k * n) * (delta + k * n)) - drive_sq; };
  auto dpoly = [&](double n) { return gamma * gamma + (delta + k * n) * (delta + 3.0 * k * n); };

  std::vector<double> roots;
  for (int i = 0; i < 3; ++i) {
    const double re = ev(i).real();
    if (std::abs(ev(i).imag()) > kImagTol * std::max(1.0, std::abs(re))) continue;
    double n = re;
    for (int it = 0; it < 50; ++it) {
      const double d = dpoly(n);
      if (d == 0.0) break;
      const double step = poly(n) / d;
      n -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(n))) break;
    }
    if (n < 0.0) continue;
    roots.push_back(n);
  }
  std::sort(roots.begin(), roots.end());
  // Coincident roots only occur at a fold; keep one representative.
  std::vector<double> unique;
  for (double n : roots)
    if (unique.empty() || std::abs(n - unique.back()) > 1e-9 * std::max(1.0, n)) unique.push_back(n);
  return unique;
}

bool branch_stable(double n, const ChainParams& p) {
  const double shift = p.delta + p.kerr * n;
  return p.gamma * p.gamma + shift * (p.delta + 3.0 * p.kerr * n) > 0.0;
}

}  // namespace

bool ClassicalFixedPoint::all_stable() const {
  return std::all_of(stable.begin(), stable.end(), [](bool s) { return s; });
}

std::vector<ModeBranch> solve_first_mode(double f, const ChainParams& params) {
  if (!(f >= 0.0)) throw Error(ErrorCode::InvalidParameter, "drive must be >= 0");
  std::vector<ModeBranch> out;
  for (double n : population_roots(f * f, params.gamma, params.delta, params.kerr)) {
    const std::complex<double> s = std::complex<double>(0.0, -f) /
                                   std::complex<double>(params.gamma, params.delta + params.kerr * n);
    out.push_back({s, n, branch_stable(n, params)});
  }
  return out;
}

std::vector<ModeBranch> solve_next_mode(std::complex<double> s_prev, const ChainParams& params, int link) {
  const double transfer = link_transfer(params, link);
  std::vector<ModeBranch> out;
  for (double n : population_roots(transfer * transfer * std::norm(s_prev), params.gamma, params.delta, params.kerr)) {
    const std::complex<double> s = transfer * s_prev / std::complex<double>(params.gamma, params.delta + params.kerr * n);
    out.push_back({s, n, branch_stable(n, params)});
  }
  return out;
}

std::vector<double> population_chain(double n_last, const ChainParams& params, int n_modes) {
  if (!(n_last >= 0.0)) throw Error(ErrorCode::InvalidParameter, "population must be >= 0");
  if (n_modes < 1) throw Error(ErrorCode::InvalidParameter, "n_modes must be >= 1");
  std::vector<double> n(static_cast<std::size_t>(n_modes));
  n.back() = n_last;
  for (int m = n_modes - 1; m > 0; --m) {
    const double transfer = link_transfer(params, m - 1);
    if (transfer == 0.0) throw Error(ErrorCode::InvalidParameter, "chain link with zero coupling");
    const double shift = params.delta + params.kerr * n[static_cast<std::size_t>(m)];
    n[static_cast<std::size_t>(m - 1)] =
        (params.gamma * params.gamma + shift * shift) / (transfer * transfer) * n[static_cast<std::size_t>(m)];
  }
  return n;
}

ClassicalFixedPoint fixed_point_from_last_population(double n_last, const ChainParams& params, int n_modes,
                                                     double* drive_out) {
  const auto n = population_chain(n_last, params, n_modes);
  ClassicalFixedPoint fp;
  const double shift1 = params.delta + params.kerr * n[0];
  const double f = std::sqrt(n[0] * (params.gamma * params.gamma + shift1 * shift1));
  if (drive_out) *drive_out = f;
  std::complex<double> s = std::complex<double>(0.0, -f) / std::complex<double>(params.gamma, shift1);
  for (int m = 0; m < n_modes; ++m) {
    if (m > 0) {
      const double shift = params.delta + params.kerr * n[static_cast<std::size_t>(m)];
      s = link_transfer(params, m - 1) * s / std::complex<double>(params.gamma, shift);
    }
    fp.amplitudes.push_back(s);
    fp.populations.push_back(n[static_cast<std::size_t>(m)]);
    fp.stable.push_back(branch_stable(n[static_cast<std::size_t>(m)], params));
  }
  return fp;
}

std::vector<ClassicalFixedPoint> chain_fixed_points(double f, const ChainParams& params) {
  std::vector<ClassicalFixedPoint> out;
  ClassicalFixedPoint partial;
  std::function<void(int)> extend = [&](int m) {
    if (m == params.n_modes) {
      out.push_back(partial);
      return;
    }
    const auto branches = m == 0 ? solve_first_mode(f, params)
                                 : solve_next_mode(partial.amplitudes.back(), params, m - 1);
    for (const auto& b : branches) {
      partial.amplitudes.push_back(b.amplitude);
      partial.populations.push_back(b.population);
      partial.stable.push_back(b.stable);
      extend(m + 1);
      partial.amplitudes.pop_back();
      partial.populations.pop_back();
      partial.stable.pop_back();
    }
  };
  extend(0);
  return out;
}

double steady_state_residual(const ClassicalFixedPoint& point, const ChainParams& params, double f, int mode) {
  const auto m = static_cast<std::size_t>(mode);
  if (mode < 0 || m >= point.amplitudes.size()) throw Error(ErrorCode::IndexOutOfRange, "mode out of range");
  const std::complex<double> s = point.amplitudes[m];
  const std::complex<double> lhs = std::complex<double>(params.gamma, params.delta + params.kerr * std::norm(s)) * s;
  const std::complex<double> rhs = mode == 0 ? std::complex<double>(0.0, -f)
                                             : link_transfer(params, mode - 1) * point.amplitudes[m - 1];
  return std::abs(lhs - rhs);
}

std::vector<BistabilityRow> bistability_scan(const std::vector<double>& f_grid, const ChainParams& params) {
  if (f_grid.empty()) throw Error(ErrorCode::EmptyGrid, "drive grid is empty");
  std::vector<BistabilityRow> table;
  table.reserve(f_grid.size());
  for (double f : f_grid) {
    if (!(f >= 0.0)) throw Error(ErrorCode::InvalidParameter, "drive grid must be non-negative");
    BistabilityRow row{f, chain_fixed_points(f, params)};
    // Order branches by populations so successive rows trace continuous curves.
    std::sort(row.branches.begin(), row.branches.end(),
              [](const ClassicalFixedPoint& a, const ClassicalFixedPoint& b) { return a.populations < b.populations; });
    table.push_back(std::move(row));
  }
  return table;
}

int count_multistable_intervals(const std::vector<BistabilityRow>& table, int mode, double rel_tol) {
  int folds = 0;
  bool inside = false;
  for (const auto& row : table) {
    std::vector<double> pops;
    for (const auto& b : row.branches) {
      if (!b.all_stable()) continue;
      if (mode < 0 || static_cast<std::size_t>(mode) >= b.populations.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "mode out of range");
      }
      pops.push_back(b.populations[static_cast<std::size_t>(mode)]);
    }
    std::sort(pops.begin(), pops.end());
    int distinct = pops.empty() ? 0 : 1;
    for (std::size_t i = 1; i < pops.size(); ++i)
      if (pops[i] - pops[i - 1] > rel_tol * std::max(1.0, pops[i])) ++distinct;
    const bool multi = distinct >= 2;
    if (multi && !inside) ++folds;
    inside = multi;
  }
  return folds;
}

int count_jumps(const std::vector<BistabilityRow>& table, int mode, double jump_rel) {
  const ClassicalFixedPoint* current = nullptr;
  int jumps = 0;
  for (const auto& row : table) {
    const ClassicalFixedPoint* next = nullptr;
    double best = 0.0;
    for (const auto& b : row.branches) {
      if (!b.all_stable()) continue;
      if (mode < 0 || static_cast<std::size_t>(mode) >= b.populations.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "mode out of range");
      }
      if (!current) {
        next = &b;  // branches are sorted, so the first stable one is the lowest
        break;
      }
      double dist = 0.0;
      for (std::size_t m = 0; m < b.populations.size(); ++m)
        dist += std::abs(b.populations[m] - current->populations[m]) / std::max(1.0, current->populations[m]);
      if (!next || dist < best) {
        next = &b;
        best = dist;
      }
    }
    if (!next) continue;
    if (current) {
      const auto m = static_cast<std::size_t>(mode);
      if (std::abs(next->populations[m] - current->populations[m]) > jump_rel * std::max(1.0, current->populations[m]))
        ++jumps;
    }
    current = next;
  }
  return jumps;
}

}  // namespace cascade
