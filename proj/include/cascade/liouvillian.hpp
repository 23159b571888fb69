#pragma once

#include <cstdint>
#include <vector>

#include "cascade/fock.hpp"

namespace cascade {

/// Physical description of an N-mode cascade chain of identical Kerr modes,
/// in the frame rotating at the pump frequency (all quantities in rate units).
///
/// Conventions fixed by the mean-field equations
///   dS_1/dt = -(gamma + i delta) S_1 - i kerr |S_1|^2 S_1 - i drive
///   dS_m/dt = -(gamma + i delta) S_m - i kerr |S_m|^2 S_m + sqrt(eta_{m-1,m}) gamma S_{m-1}
/// which the master equation reproduces exactly:
///   H = sum_m delta a_m^+ a_m + (kerr/2) a_m^+ a_m^+ a_m a_m + drive (a_1 + a_1^+)
///   each mode decays with amplitude rate gamma (collapse operator sqrt(2 gamma) a_m).
struct ChainParams {
  int n_modes = 1;
  double delta = 0.0;
  double gamma = 1.0;
  double kerr = 0.0;
  double drive = 0.0;
  /// Coupling efficiencies; only the first superdiagonal (m -> m+1) is used.
  Eigen::MatrixXd eta;

  /// Identical modes with perfect coupling along the chain.
  static ChainParams chain(int n_modes, double gamma, double kerr, double delta = 0.0, double drive = 0.0);

  double link_eta(int m) const { return eta(m, m + 1); }
  bool perfect_chain() const;
  void validate() const;
};

/// Linear map on column-stacked density matrices: vec(A rho B) = (B^T (x) A) vec(rho).
struct SuperOperator {
  FockDims dims;
  SparseMatrix matrix;

  DenseMatrix apply(const DenseMatrix& rho) const;
};

/// Completely-positive form of the cascade master equation:
///   L[rho] = -i[h_eff, rho] + sum_c (c rho c^+ - {c^+ c, rho}/2)
struct LindbladForm {
  FockOperator h_eff;
  std::vector<FockOperator> jumps;
};

FockOperator build_hamiltonian(const ChainParams& params, const FockDims& dims);
SuperOperator build_cascade_liouvillian(const ChainParams& params, const FockDims& dims);
LindbladForm lindblad_recast(const ChainParams& params, const FockDims& dims);
SuperOperator to_superoperator(const LindbladForm& lf);

/// Superoperator of a plain decay channel sqrt(rate) * a on every mode; used for tests
/// and as a building block.
SuperOperator decay_only(const FockDims& dims, double gamma);

enum class SteadyStateMethod { Auto, Direct, Iterative };

struct SteadyStateOptions {
  double residual_tol = 1e-8;
  int max_refinements = 5;
  /// Auto uses sparse LU up to this many unknowns and preconditioned BiCGSTAB above.
  SteadyStateMethod method = SteadyStateMethod::Auto;
  Eigen::Index direct_max_size = 20000;
  int max_iterations = 5000;
};

/// Null vector of L normalised to unit trace (trace row replaces row 0).
DensityMatrix steady_state(const SuperOperator& L, const SteadyStateOptions& opts = {});

struct EvolveOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double trace_drift_tol = 1e-8;
};

/// Integrates d rho/dt = L[rho] to t_final with an adaptive Dormand-Prince
/// stepper; the state is re-symmetrised every `dt`.
DensityMatrix evolve(const SuperOperator& L, const DensityMatrix& rho0, double t_final, double dt,
                     const EvolveOptions& opts = {});

struct McwfOptions {
  /// Fixed RK4 step for the non-Hermitian propagation.
  double step = 0.01;
  /// Jump times are located by step halving to this fraction of `step`.
  double jump_time_rel_tol = 1e-6;
  /// Times at which each trajectory is recorded; empty means {t_final}.
  std::vector<double> sample_times;
  /// Worker threads; 0 picks hardware concurrency.
  unsigned threads = 0;
};

/// Per-trajectory expectation values of the requested observables, averaged
/// over each trajectory's sample times.
struct McwfSamples {
  DensityMatrix rho;
  /// samples[o][t] = <psi_t|O_o|psi_t> averaged over sample times of trajectory t
  std::vector<std::vector<cplx>> samples;
  std::size_t jumps = 0;
};

DensityMatrix mcwf_run(const LindbladForm& lf, const Eigen::VectorXcd& psi0, double t_final, int n_traj,
                       std::uint64_t seed, const McwfOptions& opts = {});

McwfSamples mcwf_sample(const LindbladForm& lf, const Eigen::VectorXcd& psi0, double t_final, int n_traj,
                        std::uint64_t seed, const std::vector<FockOperator>& observables,
                        const McwfOptions& opts = {});

}  // namespace cascade
