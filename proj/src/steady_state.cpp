#include <cmath>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include "cascade/error.hpp"
#include "cascade/liouvillian.hpp"

namespace cascade {

DensityMatrix steady_state(const SuperOperator& L, const SteadyStateOptions& opts) {
  const auto n = static_cast<Eigen::Index>(L.dims.total());
  const auto nn = n * n;
  if (L.matrix.rows() != nn || L.matrix.cols() != nn) {
    throw Error(ErrorCode::DimensionMismatch, "superoperator shape does not match dims");
  }

  // Row 0 of L (the equation for rho_00) is replaced by the trace constraint.
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(L.matrix.nonZeros() + n));
  for (int k = 0; k < L.matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(L.matrix, k); it; ++it)
      if (it.row() != 0) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(0, i * (n + 1), 1.0);
  SparseMatrix A(nn, nn);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(nn);
  b(0) = 1.0;
  auto residual = [&](const Eigen::VectorXcd& v) { return (L.matrix * v).cwiseAbs().maxCoeff(); };

  const bool direct = opts.method == SteadyStateMethod::Direct ||
                      (opts.method == SteadyStateMethod::Auto && nn <= opts.direct_max_size);
  Eigen::VectorXcd x;
  if (direct) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
      throw Error(ErrorCode::AmbiguousSteadyState,
                  "steady-state system is singular (degenerate steady states?): " + lu.lastErrorMessage());
    }
    x = lu.solve(b);
    if (!x.allFinite()) throw Error(ErrorCode::AmbiguousSteadyState, "steady-state solve produced non-finite values");
    for (int it = 0; it < opts.max_refinements && residual(x) > 0.1 * opts.residual_tol; ++it) {
      const Eigen::VectorXcd r = b - A * x;
      x += lu.solve(r);
    }
  } else {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<cplx>> solver;
    solver.preconditioner().setFillfactor(1);
    solver.preconditioner().setDroptol(1e-2);
    solver.setTolerance(1e-13);
    solver.setMaxIterations(opts.max_iterations);
    solver.compute(A);
    if (solver.info() != Eigen::Success) {
      throw Error(ErrorCode::AmbiguousSteadyState, "incomplete factorisation of the steady-state system failed");
    }
    x = solver.solve(b);
    if (!x.allFinite()) throw Error(ErrorCode::AmbiguousSteadyState, "steady-state solve produced non-finite values");
  }

  DenseMatrix rho = Eigen::Map<DenseMatrix>(x.data(), n, n);
  rho = hermitize_normalized(rho);
  const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), nn);
  const double res = residual(v);
  if (!(res < opts.residual_tol)) {
    throw Error(ErrorCode::NonConvergence, "steady-state residual " + std::to_string(res) + " exceeds tolerance");
  }
  return DensityMatrix(L.dims, std::move(rho));
}

}  // namespace cascade
