#include "cascade/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "cascade/error.hpp"

namespace cascade {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidDimension: return "invalid-dimension";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::UnsupportedConfiguration: return "unsupported-configuration";
    case ErrorCode::AmbiguousSteadyState: return "ambiguous-steady-state";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::StepSizeUnderflow: return "step-size-underflow";
    case ErrorCode::TraceDrift: return "trace-drift";
    case ErrorCode::IntegratorFailure: return "integrator-failure";
    case ErrorCode::UndefinedG2: return "undefined-g2";
    case ErrorCode::SingularParameter: return "singular-parameter";
    case ErrorCode::DegenerateExpansion: return "degenerate-expansion";
    case ErrorCode::UnstablePoint: return "unstable-point";
    case ErrorCode::NoUniqueSolution: return "no-unique-solution";
    case ErrorCode::EmptyGrid: return "empty-grid";
    case ErrorCode::SameMode: return "same-mode";
    case ErrorCode::TruncationInconsistent: return "truncation-inconsistent";
    case ErrorCode::Config: return "config";
  }
  return "unknown";
}

// ---------------------------------------------------------------- FockDims

FockDims::FockDims(std::vector<int> per_mode) : per_mode_(std::move(per_mode)) {
  if (per_mode_.empty()) {
    throw Error(ErrorCode::InvalidDimension, "FockDims needs at least one mode");
  }
  for (int d : per_mode_) {
    if (d < 2) {
      throw Error(ErrorCode::InvalidDimension,
                  "truncation dimension must be >= 2, got " + std::to_string(d));
    }
    total_ *= static_cast<std::size_t>(d);
  }
}

FockDims FockDims::uniform(int n_modes, int d) {
  if (n_modes < 1) throw Error(ErrorCode::InvalidDimension, "need at least one mode");
  return FockDims(std::vector<int>(static_cast<std::size_t>(n_modes), d));
}

int FockDims::dim(int mode) const {
  if (mode < 0 || mode >= n_modes()) {
    throw Error(ErrorCode::IndexOutOfRange, "mode index " + std::to_string(mode) + " out of range");
  }
  return per_mode_[static_cast<std::size_t>(mode)];
}

std::size_t FockDims::stride(int mode) const {
  dim(mode);
  std::size_t s = 1;
  for (int m = n_modes() - 1; m > mode; --m) s *= static_cast<std::size_t>(per_mode_[m]);
  return s;
}

FockDims FockDims::enlarged(int extra) const {
  auto p = per_mode_;
  for (auto& d : p) d += extra;
  return FockDims(std::move(p));
}

// ------------------------------------------------------------ FockOperator

FockOperator::FockOperator(FockDims dims, SparseMatrix matrix)
    : dims_(std::move(dims)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(dims_.total());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "operator shape does not match FockDims");
  }
  matrix_.makeCompressed();
}

FockOperator FockOperator::from_dense(FockDims dims, const DenseMatrix& m) {
  return FockOperator(std::move(dims), m.sparseView(0.0, 0.0));
}

FockOperator FockOperator::identity(const FockDims& dims) {
  const auto n = static_cast<Eigen::Index>(dims.total());
  SparseMatrix id(n, n);
  id.setIdentity();
  return FockOperator(dims, std::move(id));
}

FockOperator FockOperator::adjoint() const {
  return FockOperator(dims_, SparseMatrix(matrix_.adjoint()));
}

namespace {
void require_same_dims(const FockDims& a, const FockDims& b) {
  if (!(a == b)) throw Error(ErrorCode::DimensionMismatch, "operators act on different spaces");
}
}  // namespace

FockOperator FockOperator::operator*(const FockOperator& rhs) const {
  require_same_dims(dims_, rhs.dims_);
  return FockOperator(dims_, SparseMatrix(matrix_ * rhs.matrix_));
}

FockOperator FockOperator::operator+(const FockOperator& rhs) const {
  require_same_dims(dims_, rhs.dims_);
  return FockOperator(dims_, SparseMatrix(matrix_ + rhs.matrix_));
}

FockOperator FockOperator::operator-(const FockOperator& rhs) const {
  require_same_dims(dims_, rhs.dims_);
  return FockOperator(dims_, SparseMatrix(matrix_ - rhs.matrix_));
}

FockOperator FockOperator::operator*(cplx s) const {
  return FockOperator(dims_, SparseMatrix(matrix_ * s));
}

// ----------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(FockDims dims, DenseMatrix matrix)
    : dims_(std::move(dims)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(dims_.total());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "density matrix shape does not match FockDims");
  }
  const double herm = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (herm > kHermitianTol) {
    throw Error(ErrorCode::InvalidParameter,
                "density matrix not Hermitian (deviation " + std::to_string(herm) + ")");
  }
  const cplx tr = matrix_.trace();
  if (std::abs(tr - 1.0) > kTraceTol) {
    throw Error(ErrorCode::InvalidParameter,
                "density matrix trace " + std::to_string(tr.real()) + " != 1");
  }
  if (min_eigenvalue() < -kPositivityTol) {
    throw Error(ErrorCode::InvalidParameter, "density matrix has negative eigenvalue");
  }
}

double DensityMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix DensityMatrix::pure(FockDims dims, const Eigen::VectorXcd& psi) {
  if (psi.size() != static_cast<Eigen::Index>(dims.total())) {
    throw Error(ErrorCode::DimensionMismatch, "state vector length does not match FockDims");
  }
  const double nrm = psi.norm();
  if (nrm == 0.0) throw Error(ErrorCode::InvalidParameter, "zero state vector");
  const Eigen::VectorXcd v = psi / nrm;
  DenseMatrix m = v * v.adjoint();
  return DensityMatrix(std::move(dims), hermitize_normalized(m));
}

DensityMatrix DensityMatrix::fock(FockDims dims, const std::vector<int>& occupation) {
  if (static_cast<int>(occupation.size()) != dims.n_modes()) {
    throw Error(ErrorCode::DimensionMismatch, "occupation list length != number of modes");
  }
  std::size_t idx = 0;
  for (int m = 0; m < dims.n_modes(); ++m) {
    const int n = occupation[static_cast<std::size_t>(m)];
    if (n < 0 || n >= dims.dim(m)) throw Error(ErrorCode::IndexOutOfRange, "Fock level outside truncation");
    idx += static_cast<std::size_t>(n) * dims.stride(m);
  }
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(dims.total()));
  psi(static_cast<Eigen::Index>(idx)) = 1.0;
  return pure(std::move(dims), psi);
}

Eigen::VectorXcd coherent_vector(int d, cplx alpha) {
  if (d < 2) throw Error(ErrorCode::InvalidDimension, "coherent state needs d >= 2");
  Eigen::VectorXcd psi(d);
  cplx term = 1.0;
  psi(0) = term;
  for (int n = 1; n < d; ++n) {
    term *= alpha / std::sqrt(static_cast<double>(n));
    psi(n) = term;
  }
  return psi / psi.norm();
}

DensityMatrix DensityMatrix::coherent(int d, cplx alpha) {
  return pure(FockDims({d}), coherent_vector(d, alpha));
}

DensityMatrix DensityMatrix::product(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> per = a.dims().per_mode();
  per.insert(per.end(), b.dims().per_mode().begin(), b.dims().per_mode().end());
  const auto na = a.matrix().rows();
  const auto nb = b.matrix().rows();
  DenseMatrix m(na * nb, na * nb);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < na; ++j) m.block(i * nb, j * nb, nb, nb) = a.matrix()(i, j) * b.matrix();
  return DensityMatrix(FockDims(std::move(per)), hermitize_normalized(m));
}

DenseMatrix hermitize_normalized(const DenseMatrix& m) {
  DenseMatrix h = 0.5 * (m + m.adjoint());
  const double tr = h.trace().real();
  if (tr == 0.0) throw Error(ErrorCode::InvalidParameter, "cannot normalize traceless matrix");
  return h / tr;
}

// ------------------------------------------------------------- operations

FockOperator destroy(int d) {
  if (d < 2) throw Error(ErrorCode::InvalidDimension, "destroy needs d >= 2, got " + std::to_string(d));
  SparseMatrix a(d, d);
  a.reserve(Eigen::VectorXi::Constant(d, 1));
  for (int n = 1; n < d; ++n) a.insert(n - 1, n) = std::sqrt(static_cast<double>(n));
  return FockOperator(FockDims({d}), std::move(a));
}

FockOperator number(int d) {
  const auto a = destroy(d);
  return a.adjoint() * a;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

FockOperator embed(const FockOperator& op, int mode, const FockDims& dims) {
  if (op.dims().n_modes() != 1) throw Error(ErrorCode::DimensionMismatch, "embed expects a single-mode operator");
  if (op.dims().dim(0) != dims.dim(mode)) {
    throw Error(ErrorCode::DimensionMismatch, "operator dimension does not match mode truncation");
  }
  const auto left = static_cast<Eigen::Index>(dims.total() / (dims.stride(mode) * static_cast<std::size_t>(dims.dim(mode))));
  const auto right = static_cast<Eigen::Index>(dims.stride(mode));
  SparseMatrix idl(left, left), idr(right, right);
  idl.setIdentity();
  idr.setIdentity();
  return FockOperator(dims, kron(kron(idl, op.matrix()), idr));
}

FockOperator mode_destroy(const FockDims& dims, int mode) {
  return embed(destroy(dims.dim(mode)), mode, dims);
}

cplx expect(const DensityMatrix& rho, const FockOperator& op) {
  if (!(rho.dims() == op.dims())) throw Error(ErrorCode::DimensionMismatch, "expect: dims differ");
  // Tr(rho A) = sum_{ij} rho_ji A_ij
  cplx acc = 0.0;
  const auto& a = op.matrix();
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) acc += rho.matrix()(it.col(), it.row()) * it.value();
  return acc;
}

cplx expect_dense(const DensityMatrix& rho, const DenseMatrix& op) {
  if (op.rows() != rho.matrix().rows() || op.cols() != rho.matrix().cols()) {
    throw Error(ErrorCode::DimensionMismatch, "expect: dims differ");
  }
  return (rho.matrix() * op).trace();
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  const auto& dims = rho.dims();
  const int d = dims.dim(keep);
  const std::size_t stride = dims.stride(keep);
  const std::size_t outer = dims.total() / (stride * static_cast<std::size_t>(d));
  DenseMatrix red = DenseMatrix::Zero(d, d);
  const auto& m = rho.matrix();
  for (std::size_t l = 0; l < outer; ++l)
    for (std::size_t r = 0; r < stride; ++r) {
      const std::size_t base = l * stride * static_cast<std::size_t>(d) + r;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          red(i, j) += m(static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride),
                         static_cast<Eigen::Index>(base + static_cast<std::size_t>(j) * stride));
    }
  return DensityMatrix(FockDims({d}), hermitize_normalized(red));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep) {
  const auto& dims = rho.dims();
  std::sort(keep.begin(), keep.end());
  if (keep.empty() || std::adjacent_find(keep.begin(), keep.end()) != keep.end()) {
    throw Error(ErrorCode::InvalidParameter, "partial_trace: kept modes must be distinct and non-empty");
  }
  std::vector<int> kept_dims;
  for (int m : keep) kept_dims.push_back(dims.dim(m));
  const FockDims out_dims(kept_dims);

  // Flat index -> (traced part, kept part); group basis states by traced part.
  const std::size_t total = dims.total();
  std::vector<std::vector<Eigen::Index>> groups;
  std::vector<std::size_t> traced_stride(static_cast<std::size_t>(dims.n_modes()), 0);
  std::size_t n_traced = 1;
  for (int m = dims.n_modes() - 1; m >= 0; --m) {
    if (std::find(keep.begin(), keep.end(), m) != keep.end()) continue;
    traced_stride[static_cast<std::size_t>(m)] = n_traced;
    n_traced *= static_cast<std::size_t>(dims.dim(m));
  }
  groups.assign(n_traced, std::vector<Eigen::Index>(out_dims.total(), 0));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t traced = 0, kept = 0, rest = flat;
    for (int m = dims.n_modes() - 1; m >= 0; --m) {
      const auto d = static_cast<std::size_t>(dims.dim(m));
      const std::size_t digit = rest % d;
      rest /= d;
      const auto it = std::find(keep.begin(), keep.end(), m);
      if (it == keep.end()) {
        traced += digit * traced_stride[static_cast<std::size_t>(m)];
      } else {
        kept += digit * out_dims.stride(static_cast<int>(it - keep.begin()));
      }
    }
    groups[traced][kept] = static_cast<Eigen::Index>(flat);
  }
  const auto n_out = static_cast<Eigen::Index>(out_dims.total());
  DenseMatrix red = DenseMatrix::Zero(n_out, n_out);
  for (const auto& idx : groups) red += rho.matrix()(idx, idx);
  return DensityMatrix(out_dims, hermitize_normalized(red));
}

}  // namespace cascade
