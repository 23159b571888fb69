#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "cascade/error.hpp"
#include "cascade/liouvillian.hpp"

namespace cascade {

namespace odeint = boost::numeric::odeint;

DensityMatrix evolve(const SuperOperator& L, const DensityMatrix& rho0, double t_final, double dt,
                     const EvolveOptions& opts) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidParameter, "dt must be > 0");
  if (!(t_final >= 0.0)) throw Error(ErrorCode::InvalidParameter, "t_final must be >= 0");
  if (!(rho0.dims() == L.dims)) throw Error(ErrorCode::DimensionMismatch, "rho0 and L act on different spaces");
  if (t_final == 0.0) return rho0;

  const auto n = static_cast<Eigen::Index>(L.dims.total());
  const auto nn = n * n;
  using State = std::vector<cplx>;
  State x(rho0.matrix().data(), rho0.matrix().data() + nn);

  auto rhs = [&](const State& in, State& out, double) {
    out.resize(in.size());
    Eigen::Map<const Eigen::VectorXcd> vin(in.data(), nn);
    Eigen::Map<Eigen::VectorXcd> vout(out.data(), nn);
    vout.noalias() = L.matrix * vin;
  };

  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(opts.abs_tol, opts.rel_tol);
  const cplx trace0 = rho0.matrix().trace();
  double t = 0.0;
  double h = std::min(dt, t_final);
  while (t < t_final) {
    const double t_next = std::min(t + dt, t_final);
    try {
      odeint::integrate_adaptive(stepper, rhs, x, t, t_next, std::min(h, t_next - t));
    } catch (const odeint::odeint_error& e) {
      throw Error(ErrorCode::StepSizeUnderflow, std::string("time integration failed: ") + e.what());
    }
    t = t_next;

    Eigen::Map<DenseMatrix> rho(x.data(), n, n);
    const DenseMatrix herm = 0.5 * (rho + rho.adjoint());
    rho = herm;
    const double drift = std::abs(rho.trace() - trace0);
    if (drift > opts.trace_drift_tol) {
      throw Error(ErrorCode::TraceDrift, "trace drifted by " + std::to_string(drift));
    }
  }
  Eigen::Map<DenseMatrix> rho(x.data(), n, n);
  return DensityMatrix(L.dims, hermitize_normalized(rho));
}

}  // namespace cascade
