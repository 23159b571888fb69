#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cascade/error.hpp"
#include "cascade/fluctuations.hpp"
#include "cascade/observables.hpp"

using namespace cascade;

namespace {

template <class F>
ErrorCode error_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Config;
}

FluctuationModel model_with_covariance(const Eigen::MatrixXd& sigma, std::vector<cplx> amps) {
  FluctuationModel m;
  for (const auto& s : amps) {
    m.point.amplitudes.push_back(s);
    m.point.populations.push_back(std::norm(s));
    m.point.stable.push_back(true);
  }
  m.covariance = sigma;
  m.drift = -Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  m.diffusion = -2.0 * sigma;
  return m;
}

}  // namespace

TEST_CASE("Lyapunov solver") {
  SUBCASE("worked examples") {
    const Eigen::MatrixXd s1 = lyapunov_solve(-Eigen::MatrixXd::Identity(2, 2), 2.0 * Eigen::MatrixXd::Identity(2, 2));
    CHECK((s1 - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-14);
    Eigen::MatrixXd a = Eigen::Vector2d(-1.0, -2.0).asDiagonal();
    const Eigen::MatrixXd s2 = lyapunov_solve(a, Eigen::MatrixXd::Identity(2, 2));
    CHECK(std::abs(s2(0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(s2(1, 1) - 0.25) < 1e-14);
    CHECK(std::abs(s2(0, 1)) < 1e-14);
  }
  SUBCASE("random Hurwitz instances") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g;
    for (int k = 0; k < 100; ++k) {
      const int n = 2 + k % 5;
      Eigen::MatrixXd a(n, n), gm(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          a(i, j) = g(rng);
          gm(i, j) = g(rng);
        }
      const double shift = a.eigenvalues().real().maxCoeff() + 0.1 + std::abs(g(rng));
      a -= shift * Eigen::MatrixXd::Identity(n, n);
      REQUIRE(is_hurwitz(a));
      const Eigen::MatrixXd d = gm * gm.transpose();
      const Eigen::MatrixXd s = lyapunov_solve(a, d);
      CHECK((a * s + s * a.transpose() + d).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("errors") {
    CHECK(error_code([] { lyapunov_solve(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2)); }) ==
          ErrorCode::NoUniqueSolution);
    CHECK(error_code([] { lyapunov_solve(-Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)); }) ==
          ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("Closed-form single-mode g2") {
  CHECK(g2_single_mode_analytic(0.7, 0.3, 0.2, 0.0) == 1.0);
  CHECK(std::abs(g2_single_mode_analytic(0.5, -0.1, 0.2, 0.2) - 1.0) < 1e-15);
  CHECK(g2_single_mode_analytic(0.1, 0.1, 0.2, 0.2) < 1.0);
  CHECK(g2_single_mode_analytic(0.1, -0.1, 0.2, 0.2) > 1.0);
  CHECK(error_code([] { g2_single_mode_analytic(1.0, -2.0, 1.0, 1.0); }) == ErrorCode::SingularParameter);
}

TEST_CASE("Single-mode linearisation reproduces the closed form") {
  const double gamma = 0.2, kerr = 0.2;
  int compared = 0;
  for (double n : linspace(0.01, 3.0, 40)) {
    for (double delta : linspace(-3.0 * gamma, 3.0 * gamma, 41)) {
      const auto p = ChainParams::chain(1, gamma, kerr, delta);
      const auto fp = fixed_point_from_last_population(n, p, 1);
      FluctuationModel model;
      try {
        model = linearize(fp, p);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnstablePoint);
        continue;
      }
      CHECK(std::abs(g2_linearized(model, 0) - g2_single_mode_analytic(n, delta, gamma, kerr)) < 1e-10);
      ++compared;
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("Covariance invariants") {
  const auto p = ChainParams::chain(3, 0.2, 0.2, 0.1);
  const auto fp = fixed_point_from_last_population(0.3, p, 3);
  const auto m = linearize(fp, p);
  CHECK(m.drift.rows() == 6);
  CHECK(is_hurwitz(m.drift));
  CHECK((m.diffusion - m.diffusion.transpose()).norm() < 1e-15);
  CHECK((m.covariance - m.covariance.transpose()).norm() < 1e-12);
  CHECK((m.drift * m.covariance + m.covariance * m.drift.transpose() + m.diffusion).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Linear chain has coherent statistics") {
  for (double delta : {-0.3, 0.0, 0.25}) {
    const auto p = ChainParams::chain(3, 0.2, 0.0, delta);
    const auto m = linearize(fixed_point_from_last_population(0.8, p, 3), p);
    CHECK(m.covariance.cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(g2_linearized(m, k) - 1.0) < 1e-12);
    CHECK(std::abs(duan_witness_linearized(m, {0, 1}) - 1.0) < 1e-12);
    CHECK(std::abs(duan_witness_moments(m, {1, 2}) - 1.0) < 1e-12);
  }
}

TEST_CASE("g2 and witness arithmetic") {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(4, 4);
  sigma(intensity_index(0), intensity_index(0)) = -0.05;
  const auto m = model_with_covariance(sigma, {cplx(1.0, 0.0), cplx(0.0, 1.0)});
  CHECK(std::abs(g2_linearized(m, 0) - 0.8) < 1e-15);
  CHECK(g2_linearized(m, 1) == 1.0);
  CHECK(error_code([&] { g2_linearized(m, 2); }) == ErrorCode::IndexOutOfRange);
  CHECK(error_code([&] { duan_witness_linearized(m, {1, 1}); }) == ErrorCode::SameMode);
  const auto zero = model_with_covariance(Eigen::MatrixXd::Zero(4, 4), {cplx(2.0, 0.0), cplx(0.5, 0.5)});
  CHECK(duan_witness_linearized(zero, {0, 1}) == 1.0);
}

TEST_CASE("Polar witness and operator-form witness differ by the phase variances") {
  const double gamma = 0.2;
  for (double kerr : {0.05, 0.2}) {
    for (double delta : {0.0, 0.1, 0.3}) {
      for (double n2 : {0.05, 0.4, 1.5}) {
        const auto p = ChainParams::chain(2, gamma, kerr, delta);
        const auto m = linearize(fixed_point_from_last_population(n2, p, 2), p);
        const auto& s = m.covariance;
        const auto& n = m.point.populations;
        const double gap = n[0] * s(phase_index(0), phase_index(0)) + n[1] * s(phase_index(1), phase_index(1));
        CHECK(std::abs(duan_witness_moments(m, {0, 1}) - duan_witness_linearized(m, {0, 1}) - gap) < 1e-10);
      }
    }
  }
}

TEST_CASE("Statistics depend on the populations, not the drive phase") {
  const auto p = ChainParams::chain(2, 0.2, 0.2, 0.1);
  const auto fp = fixed_point_from_last_population(0.5, p, 2);
  auto rotated = fp;
  for (auto& s : rotated.amplitudes) s *= std::polar(1.0, 1.234);
  const auto a = linearize(fp, p);
  const auto b = linearize(rotated, p);
  CHECK((a.covariance - b.covariance).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.drift - b.drift).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Degenerate and unstable expansions") {
  const auto p = ChainParams::chain(2, 0.2, 0.2, 0.0);
  CHECK(error_code([&] { linearize(fixed_point_from_last_population(0.0, p, 2), p); }) ==
        ErrorCode::DegenerateExpansion);
  const auto q = ChainParams::chain(1, 0.2, 0.2, -0.6);
  CHECK(error_code([&] { linearize(fixed_point_from_last_population(2.0, q, 1), q); }) == ErrorCode::UnstablePoint);
}

TEST_CASE("Phase-space sweep") {
  SweepRequest req;
  req.params = ChainParams::chain(2, 0.2, 0.2);
  req.n_modes = 2;
  req.n_last_grid = {0.0, 0.1, 0.5};
  req.delta_grid = {-0.6, 0.0, 0.2};
  req.duan_pair = std::pair{0, 1};
  const auto pts = sweep_phase_space(req);
  REQUIRE(pts.size() == 9);
  SUBCASE("row-major ordering") {
    CHECK(pts[4].n_last == 0.1);
    CHECK(pts[4].delta == 0.0);
    CHECK(pts[5].delta == 0.2);
  }
  SUBCASE("zero population yields missing entries with a reason") {
    for (int j = 0; j < 3; ++j) {
      CHECK_FALSE(pts[j].ok());
      CHECK(pts[j].failure == "degenerate-expansion");
      CHECK(pts[j].g2.empty());
      CHECK_FALSE(pts[j].duan.has_value());
    }
  }
  SUBCASE("successful points carry all observables") {
    for (int j = 3; j < 9; ++j) {
      if (!pts[j].ok()) {
        CHECK(pts[j].failure == "unstable-point");
        continue;
      }
      CHECK(pts[j].g2.size() == 2);
      CHECK(pts[j].duan.has_value());
      CHECK(pts[j].populations.size() == 2);
      CHECK(std::abs(pts[j].populations[1] - pts[j].n_last) < 1e-12);
    }
  }
  SUBCASE("errors") {
    SweepRequest bad = req;
    bad.delta_grid.clear();
    CHECK(error_code([&] { sweep_phase_space(bad); }) == ErrorCode::EmptyGrid);
    bad = req;
    bad.n_last_grid = {-0.1};
    CHECK(error_code([&] { sweep_phase_space(bad); }) == ErrorCode::InvalidParameter);
  }
}

TEST_CASE("Minimum location is invariant under a change of rate unit") {
  auto min_index = [](const std::vector<PhaseSpacePoint>& pts, int mode) {
    std::size_t best = 0;
    double v = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (pts[i].ok() && pts[i].g2[mode] < v) {
        v = pts[i].g2[mode];
        best = i;
      }
    return std::pair{best, v};
  };
  SweepRequest base;
  base.params = ChainParams::chain(2, 0.2, 0.2);
  base.n_modes = 2;
  base.n_last_grid = linspace(0.01, 2.0, 60);
  base.delta_grid = linspace(-0.2, 0.6, 41);
  SweepRequest scaled = base;
  const double c = 3.7;
  scaled.params = ChainParams::chain(2, 0.2 * c, 0.2 * c);
  for (auto& d : scaled.delta_grid) d *= c;
  const auto a = min_index(sweep_phase_space(base), 1);
  const auto b = min_index(sweep_phase_space(scaled), 1);
  CHECK(a.first == b.first);
  CHECK(std::abs(a.second - b.second) < 1e-10);
}

TEST_CASE("Kerr strength shifts the witness minimum along the drive axis only") {
  const double gamma = 0.2;
  const auto n_grid = linspace(0.001, 10.0, 20001);
  double previous_drive = 1e300;
  std::vector<double> minima;
  for (double kerr : {0.5 * gamma, gamma, 2.0 * gamma}) {
    const auto p = ChainParams::chain(2, gamma, kerr, 0.0);
    double best = 1e300, best_drive = 0.0;
    for (double n : n_grid) {
      const auto pt = phase_space_point(n, 0.0, p, 2, std::pair{0, 1});
      if (pt.ok() && *pt.duan < best) {
        best = *pt.duan;
        best_drive = pt.drive;
      }
    }
    minima.push_back(best);
    CHECK(best_drive < previous_drive);
    previous_drive = best_drive;
  }
  CHECK(minima[0] < 1.0);
  CHECK(std::abs(minima[1] - minima[0]) < 1e-3);
  CHECK(std::abs(minima[2] - minima[0]) < 1e-3);
}

TEST_CASE("Linearisation agrees with the full quantum state at weak nonlinearity") {
  const double gamma = 1.0, kerr = 0.05, delta = 0.3;
  const auto p = ChainParams::chain(2, gamma, kerr, delta);
  double drive = 0.0;
  const auto fp = fixed_point_from_last_population(0.5, p, 2, &drive);
  const auto model = linearize(fp, p);
  auto q = p;
  q.drive = drive;
  const FockDims dims = FockDims::uniform(2, 9);
  const auto rho = steady_state(build_cascade_liouvillian(q, dims));
  for (int m = 0; m < 2; ++m) {
    CHECK(std::abs(population(rho, m) - fp.populations[m]) < 0.02 * fp.populations[m]);
    CHECK(std::abs(g2_from_rho(rho, m) - g2_linearized(model, m)) < 0.01);
  }
  CHECK(std::abs(duan_witness_from_rho(rho, {0, 1}).e_min - duan_witness_moments(model, {0, 1})) < 0.01);
}
