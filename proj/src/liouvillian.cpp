#include "cascade/liouvillian.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "cascade/error.hpp"

namespace cascade {

namespace {

constexpr cplx kI{0.0, 1.0};

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

// vec(A rho) = (I (x) A) vec(rho)
SparseMatrix spre(const SparseMatrix& a) { return kron(sparse_identity(a.rows()), a); }
// vec(rho B) = (B^T (x) I) vec(rho)
SparseMatrix spost(const SparseMatrix& b) { return kron(SparseMatrix(b.transpose()), sparse_identity(b.rows())); }
// vec(A rho B) = (B^T (x) A) vec(rho)
SparseMatrix sprepost(const SparseMatrix& a, const SparseMatrix& b) {
  return kron(SparseMatrix(b.transpose()), a);
}

void require_dims(const ChainParams& params, const FockDims& dims) {
  params.validate();
  if (dims.n_modes() != params.n_modes) {
    throw Error(ErrorCode::DimensionMismatch, "FockDims has " + std::to_string(dims.n_modes()) +
                                                  " modes, params have " + std::to_string(params.n_modes));
  }
}

}  // namespace

// -------------------------------------------------------------- ChainParams

ChainParams ChainParams::chain(int n_modes, double gamma, double kerr, double delta, double drive) {
  ChainParams p;
  p.n_modes = n_modes;
  p.gamma = gamma;
  p.kerr = kerr;
  p.delta = delta;
  p.drive = drive;
  p.eta = Eigen::MatrixXd::Zero(std::max(n_modes, 1), std::max(n_modes, 1));
  for (int m = 0; m + 1 < n_modes; ++m) p.eta(m, m + 1) = 1.0;
  return p;
}

bool ChainParams::perfect_chain() const {
  for (int m = 0; m + 1 < n_modes; ++m)
    if (link_eta(m) != 1.0) return false;
  return true;
}

void ChainParams::validate() const {
  if (n_modes < 1) throw Error(ErrorCode::InvalidParameter, "n_modes must be >= 1");
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "gamma must be > 0");
  if (!(drive >= 0.0)) throw Error(ErrorCode::InvalidParameter, "drive must be >= 0");
  if (!std::isfinite(delta) || !std::isfinite(kerr)) throw Error(ErrorCode::InvalidParameter, "non-finite parameter");
  if (eta.rows() != n_modes || eta.cols() != n_modes) {
    throw Error(ErrorCode::InvalidParameter, "eta must be n_modes x n_modes");
  }
  if ((eta.array() < 0.0).any() || (eta.array() > 1.0).any()) {
    throw Error(ErrorCode::InvalidParameter, "coupling efficiencies must lie in [0, 1]");
  }
}

// ------------------------------------------------------------ SuperOperator

DenseMatrix SuperOperator::apply(const DenseMatrix& rho) const {
  const auto n = static_cast<Eigen::Index>(dims.total());
  if (rho.rows() != n || rho.cols() != n) throw Error(ErrorCode::DimensionMismatch, "apply: shape mismatch");
  const Eigen::Map<const Eigen::VectorXcd> v(rho.data(), n * n);
  Eigen::VectorXcd out = matrix * v;
  return Eigen::Map<DenseMatrix>(out.data(), n, n);
}

// ----------------------------------------------------------------- builders

FockOperator build_hamiltonian(const ChainParams& params, const FockDims& dims) {
  require_dims(params, dims);
  const auto n = static_cast<Eigen::Index>(dims.total());
  SparseMatrix h(n, n);
  for (int m = 0; m < params.n_modes; ++m) {
    const SparseMatrix a = mode_destroy(dims, m).matrix();
    const SparseMatrix ad = a.adjoint();
    const SparseMatrix num = ad * a;
    h += params.delta * num;
    h += (0.5 * params.kerr) * SparseMatrix(ad * ad * a * a);
    if (m == 0 && params.drive != 0.0) h += params.drive * SparseMatrix(a + ad);
  }
  h.prune(cplx(0.0), 0.0);
  return FockOperator(dims, std::move(h));
}

SuperOperator build_cascade_liouvillian(const ChainParams& params, const FockDims& dims) {
  require_dims(params, dims);
  const SparseMatrix h = build_hamiltonian(params, dims).matrix();
  SparseMatrix L = -kI * (spre(h) - spost(h));

  std::vector<SparseMatrix> a(static_cast<std::size_t>(params.n_modes));
  for (int m = 0; m < params.n_modes; ++m) a[static_cast<std::size_t>(m)] = mode_destroy(dims, m).matrix();

  for (const auto& am : a) {
    const SparseMatrix amd = am.adjoint();
    const SparseMatrix num = amd * am;
    // gamma (2 a rho a^+ - a^+ a rho - rho a^+ a)
    L += params.gamma * (2.0 * sprepost(am, amd) - spre(num) - spost(num));
  }

  // Cascade drive of mode m+1 by mode m:
  //   + sqrt(eta) gamma ([a_j^+, a_m rho] + [rho a_m^+, a_j]),  j = m + 1
  // The sign gives d<a_j>/dt = ... + sqrt(eta) gamma <a_m>.
  for (int m = 0; m + 1 < params.n_modes; ++m) {
    const double coupling = std::sqrt(params.link_eta(m)) * params.gamma;
    if (coupling == 0.0) continue;
    const SparseMatrix& am = a[static_cast<std::size_t>(m)];
    const SparseMatrix& aj = a[static_cast<std::size_t>(m + 1)];
    const SparseMatrix amd = am.adjoint();
    const SparseMatrix ajd = aj.adjoint();
    SparseMatrix term = spre(SparseMatrix(ajd * am)) - sprepost(am, ajd) + spost(SparseMatrix(amd * aj)) -
                        sprepost(aj, amd);
    L += coupling * term;
  }
  L.prune(cplx(0.0), 0.0);
  L.makeCompressed();
  return SuperOperator{dims, std::move(L)};
}

LindbladForm lindblad_recast(const ChainParams& params, const FockDims& dims) {
  require_dims(params, dims);
  if (!params.perfect_chain()) {
    throw Error(ErrorCode::UnsupportedConfiguration, "Lindblad recast requires eta = 1 on every chain link");
  }
  const int n = params.n_modes;
  std::vector<FockOperator> a;
  for (int m = 0; m < n; ++m) a.push_back(mode_destroy(dims, m));

  // Kossakowski matrix of the dissipative part: 2 gamma on the diagonal, -gamma
  // between chain neighbours. It is positive definite for every N
  // (eigenvalues 2 gamma (1 - cos(pi j / (N + 1)))).
  Eigen::MatrixXd kossakowski = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m < n; ++m) kossakowski(m, m) = 2.0 * params.gamma;
  for (int m = 0; m + 1 < n; ++m) kossakowski(m, m + 1) = kossakowski(m + 1, m) = -params.gamma;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kossakowski);
  LindbladForm lf{build_hamiltonian(params, dims), {}};
  for (int k = n - 1; k >= 0; --k) {
    const double lambda = es.eigenvalues()(k);
    if (lambda <= 1e-14 * params.gamma) continue;
    FockOperator c = a[0] * cplx(std::sqrt(lambda) * es.eigenvectors()(0, k));
    for (int m = 1; m < n; ++m) c = c + a[static_cast<std::size_t>(m)] * cplx(std::sqrt(lambda) * es.eigenvectors()(m, k));
    lf.jumps.push_back(std::move(c));
  }

  // Hermitian remainder that cancels the back-action of mode m+1 on mode m.
  for (int m = 0; m + 1 < n; ++m) {
    const auto& am = a[static_cast<std::size_t>(m)];
    const auto& aj = a[static_cast<std::size_t>(m + 1)];
    lf.h_eff = lf.h_eff + (aj.adjoint() * am - am.adjoint() * aj) * cplx(0.0, 0.5 * params.gamma);
  }
  return lf;
}

SuperOperator to_superoperator(const LindbladForm& lf) {
  const SparseMatrix& h = lf.h_eff.matrix();
  SparseMatrix L = -kI * (spre(h) - spost(h));
  for (const auto& jump : lf.jumps) {
    const SparseMatrix& c = jump.matrix();
    const SparseMatrix cd = c.adjoint();
    const SparseMatrix cdc = cd * c;
    L += sprepost(c, cd) - 0.5 * spre(cdc) - 0.5 * spost(cdc);
  }
  L.prune(cplx(0.0), 0.0);
  L.makeCompressed();
  return SuperOperator{lf.h_eff.dims(), std::move(L)};
}

SuperOperator decay_only(const FockDims& dims, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidParameter, "gamma must be > 0");
  LindbladForm lf{FockOperator(dims, SparseMatrix(static_cast<Eigen::Index>(dims.total()),
                                                  static_cast<Eigen::Index>(dims.total()))),
                  {}};
  for (int m = 0; m < dims.n_modes(); ++m) lf.jumps.push_back(mode_destroy(dims, m) * cplx(std::sqrt(gamma)));
  return to_superoperator(lf);
}

}  // namespace cascade
