#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cascade/error.hpp"
#include "cascade/observables.hpp"

using namespace cascade;

namespace {

constexpr double kPi = std::numbers::pi;

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

DensityMatrix thermal(int d, double x) {
  DenseMatrix rho = DenseMatrix::Zero(d, d);
  double z = 0.0;
  for (int n = 0; n < d; ++n) z += std::pow(x, n);
  for (int n = 0; n < d; ++n) rho(n, n) = std::pow(x, n) / z;
  return DensityMatrix(FockDims::uniform(1, d), rho);
}

// sqrt(1 - l^2) sum_n l^n e^{i n theta} |n, n>
DensityMatrix two_mode_squeezed(int d, double l, double theta) {
  const FockDims dims = FockDims::uniform(2, d);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(d * d);
  for (int n = 0; n < d; ++n) psi(n * d + n) = std::pow(l, n) * std::polar(1.0, n * theta);
  psi.normalize();
  return DensityMatrix::pure(dims, psi);
}

DensityMatrix random_state(const FockDims& dims, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  const auto n = static_cast<int>(dims.total());
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
  DenseMatrix rho = m * m.adjoint();
  rho /= rho.trace();
  return DensityMatrix(dims, rho);
}

double w_at(const DensityMatrix& rho, double x, double p) { return wigner(rho, {x}, {p}).values(0, 0); }

}  // namespace

TEST_CASE("g2 of reference states") {
  const FockDims one = FockDims::uniform(1, 4);
  CHECK(g2_from_rho(DensityMatrix::fock(one, {1}), 0) == 0.0);
  CHECK(std::abs(g2_from_rho(DensityMatrix::fock(one, {2}), 0) - 0.5) < 1e-14);
  CHECK(std::abs(g2_from_rho(DensityMatrix::coherent(30, cplx(0.8, -0.4)), 0) - 1.0) < 1e-10);
  CHECK(std::abs(g2_from_rho(thermal(30, 0.2), 0) - 2.0) < 1e-3);
  CHECK(error_code([&] { g2_from_rho(DensityMatrix::fock(one, {0}), 0); }) == ErrorCode::UndefinedG2);
  CHECK(error_code([&] { g2_from_rho(DensityMatrix::fock(one, {1}), 1); }) == ErrorCode::IndexOutOfRange);
  const auto two = DensityMatrix::product(DensityMatrix::fock(one, {0}), DensityMatrix::fock(one, {1}));
  CHECK(g2_from_rho(two, 1) == 0.0);
  CHECK(std::abs(population(two, 1) - 1.0) < 1e-15);
}

TEST_CASE("Wigner function") {
  SUBCASE("origin values") {
    const FockDims dims = FockDims::uniform(1, 4);
    CHECK(std::abs(w_at(DensityMatrix::fock(dims, {0}), 0.0, 0.0) - 2.0 / kPi) < 1e-12);
    CHECK(std::abs(w_at(DensityMatrix::fock(dims, {1}), 0.0, 0.0) + 2.0 / kPi) < 1e-12);
  }
  SUBCASE("Fock states follow the Laguerre form") {
    const FockDims dims = FockDims::uniform(1, 6);
    for (int n = 0; n < 5; ++n) {
      const auto rho = DensityMatrix::fock(dims, {n});
      for (double x : {-1.3, -0.4, 0.0, 0.7}) {
        for (double p : {-0.9, 0.2, 1.1}) {
          const double r2 = x * x + p * p;
          const double expected = 2.0 / kPi * (n % 2 ? -1.0 : 1.0) * std::exp(-2.0 * r2) * std::laguerre(n, 4.0 * r2);
          CHECK(std::abs(w_at(rho, x, p) - expected) < 1e-9);
        }
      }
    }
  }
  SUBCASE("coherent state is a displaced Gaussian") {
    const cplx alpha(0.6, -0.4);
    const auto rho = DensityMatrix::coherent(20, alpha);
    const auto grid = wigner(rho, linspace(-3.0, 3.0, 121), linspace(-3.0, 3.0, 121));
    Eigen::Index i = 0, j = 0;
    const double peak = grid.values.maxCoeff(&i, &j);
    CHECK(std::abs(peak - 2.0 / kPi) < 1e-3);
    CHECK(std::abs(grid.x_values[i] - alpha.real()) < 0.026);
    CHECK(std::abs(grid.p_values[j] - alpha.imag()) < 0.026);
    CHECK(std::abs(grid.integral() - 1.0) < 0.02);
    CHECK(grid.negative_volume() < 1e-8);
    CHECK(grid.convention == kWignerConvention);
  }
  SUBCASE("normalisation and negativity of a single photon") {
    const auto grid = wigner(DensityMatrix::fock(FockDims::uniform(1, 3), {1}), linspace(-3.5, 3.5, 101),
                             linspace(-3.5, 3.5, 101));
    CHECK(std::abs(grid.integral() - 1.0) < 0.02);
    CHECK(grid.negative_volume() > 0.05);
    CHECK(std::abs(grid.min_value() + 2.0 / kPi) < 1e-9);
  }
  SUBCASE("Fock-diagonal states are rotationally symmetric") {
    const auto rho = thermal(12, 0.4);
    for (double r : {0.3, 0.9, 1.6}) {
      const double ref = w_at(rho, r, 0.0);
      for (int k = 1; k < 12; ++k) {
        const double t = 2.0 * kPi * k / 12;
        CHECK(std::abs(w_at(rho, r * std::cos(t), r * std::sin(t)) - ref) < 1e-6);
      }
    }
  }
  SUBCASE("errors") {
    const auto rho = DensityMatrix::fock(FockDims::uniform(1, 3), {0});
    CHECK(error_code([&] { wigner(rho, {}, {0.0}); }) == ErrorCode::EmptyGrid);
    CHECK(error_code([&] { wigner(rho, {1.0, 0.0}, {0.0}); }) == ErrorCode::InvalidParameter);
    const auto two = DensityMatrix::fock(FockDims::uniform(2, 3), {0, 0});
    CHECK(error_code([&] { wigner(two, {0.0}, {0.0}); }) == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("Single-photon fidelity") {
  const FockDims dims = FockDims::uniform(1, 4);
  CHECK(fidelity_single_photon(DensityMatrix::fock(dims, {1})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fidelity_single_photon(DensityMatrix::fock(dims, {0})) == 0.0);
  CHECK(std::abs(fidelity_single_photon(DensityMatrix::coherent(30, 1.0)) - std::exp(-1.0)) < 1e-6);
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const double f = fidelity_single_photon(random_state(dims, rng));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("Quadrature variances") {
  const FockDims dims = FockDims::uniform(1, 4);
  for (double phi : {0.0, 0.7, 2.0}) {
    CHECK(std::abs(quadrature_variance(DensityMatrix::fock(dims, {0}), 0, phi) - 0.25) < 1e-14);
    CHECK(std::abs(quadrature_variance(DensityMatrix::coherent(25, cplx(0.5, 0.2)), 0, phi) - 0.25) < 1e-9);
    CHECK(std::abs(quadrature_variance(DensityMatrix::fock(dims, {1}), 0, phi) - 0.75) < 1e-14);
  }
}

TEST_CASE("Duan witness from density matrices") {
  SUBCASE("two-mode vacuum sits at one for every phase") {
    const auto rho = DensityMatrix::fock(FockDims::uniform(2, 3), {0, 0});
    for (double phi : linspace(0.0, 2.0 * kPi, 9)) {
      CHECK(std::abs(duan_variance(rho, {0, 1}, phi) - 1.0) < 1e-14);
      CHECK(std::abs(duan_moments(rho, {0, 1}, phi) - 1.0) < 1e-14);
    }
  }
  SUBCASE("coherent product state") {
    const int d = 16;
    const auto rho =
        DensityMatrix::product(DensityMatrix::coherent(d, cplx(0.4, 0.3)), DensityMatrix::coherent(d, cplx(-0.2, 0.5)));
    const auto scan = duan_witness_from_rho(rho, {0, 1});
    CHECK(std::abs(scan.e_min - 1.0) < 1e-8);
    CHECK(scan.max_route_gap < 1e-8);
  }
  SUBCASE("two-mode squeezed state is entangled") {
    const double l = 0.3;
    const double exact = (1.0 - l) / (1.0 + l);
    for (double theta : {0.0, 0.9, -2.1}) {
      const auto rho = two_mode_squeezed(20, l, theta);
      const auto scan = duan_witness_from_rho(rho, {0, 1});
      CHECK(std::abs(scan.e_min - exact) < 1e-8);
      CHECK(std::abs(scan.e_min_moments - exact) < 1e-8);
      CHECK(scan.max_route_gap < 1e-8);
      const double expected_phi = std::remainder(kPi - theta, 2.0 * kPi);
      CHECK(std::abs(std::remainder(scan.phi_min - expected_phi, 2.0 * kPi)) < 1e-6);
      CHECK(scan.phi_values.size() == 181);
      CHECK(scan.e_values.size() == 181);
    }
  }
  SUBCASE("routes agree on random mixed states") {
    std::mt19937_64 rng(21);
    const FockDims dims = FockDims::uniform(3, 3);
    for (int k = 0; k < 10; ++k) {
      const auto rho = random_state(dims, rng);
      for (double phi : {0.0, 1.0, 4.0}) {
        CHECK(std::abs(duan_variance(rho, {0, 2}, phi) - duan_moments(rho, {0, 2}, phi)) < 1e-8);
      }
    }
  }
  SUBCASE("errors") {
    const auto rho = DensityMatrix::fock(FockDims::uniform(2, 3), {0, 0});
    CHECK(error_code([&] { duan_witness_from_rho(rho, {1, 1}); }) == ErrorCode::SameMode);
    CHECK(error_code([&] { duan_witness_from_rho(rho, {0, 2}); }) == ErrorCode::IndexOutOfRange);
  }
}
