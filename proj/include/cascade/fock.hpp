#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace cascade {

using cplx = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
using DenseMatrix = Eigen::MatrixXcd;

/// Per-mode truncation of a multimode Fock space.
///
/// Mode 0 is the slowest-varying (leftmost) tensor factor: the basis state
/// |n_0, n_1, ..., n_{N-1}> sits at flat index
/// ((n_0 * d_1 + n_1) * d_2 + n_2) ... This ordering is used by every module.
class FockDims {
public:
  explicit FockDims(std::vector<int> per_mode);

  /// N identical modes of dimension d.
  static FockDims uniform(int n_modes, int d);

  const std::vector<int>& per_mode() const noexcept { return per_mode_; }
  int n_modes() const noexcept { return static_cast<int>(per_mode_.size()); }
  int dim(int mode) const;
  std::size_t total() const noexcept { return total_; }

  /// Stride of `mode` in the flat index.
  std::size_t stride(int mode) const;

  /// Same shape with every d_m increased by `extra`.
  FockDims enlarged(int extra) const;

  bool operator==(const FockDims& other) const noexcept { return per_mode_ == other.per_mode_; }

private:
  std::vector<int> per_mode_;
  std::size_t total_ = 1;
};

/// Operator on a truncated Fock space. Storage is always sparse; `dense()`
/// converts and `from_dense` round-trips exactly.
class FockOperator {
public:
  FockOperator(FockDims dims, SparseMatrix matrix);

  static FockOperator from_dense(FockDims dims, const DenseMatrix& m);
  static FockOperator identity(const FockDims& dims);

  const FockDims& dims() const noexcept { return dims_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

  FockOperator adjoint() const;

  FockOperator operator*(const FockOperator& rhs) const;
  FockOperator operator+(const FockOperator& rhs) const;
  FockOperator operator-(const FockOperator& rhs) const;
  FockOperator operator*(cplx s) const;
  friend FockOperator operator*(cplx s, const FockOperator& op) { return op * s; }

private:
  FockDims dims_;
  SparseMatrix matrix_;
};

/// Quantum state of the chain. Construction validates the density-matrix
/// invariants (Hermitian, unit trace, numerically positive).
class DensityMatrix {
public:
  static constexpr double kHermitianTol = 1e-10;
  static constexpr double kTraceTol = 1e-10;
  static constexpr double kPositivityTol = 1e-8;

  DensityMatrix(FockDims dims, DenseMatrix matrix);

  /// Pure state |psi><psi| (psi is normalized here).
  static DensityMatrix pure(FockDims dims, const Eigen::VectorXcd& psi);
  /// Fock state |n_0, ..., n_{N-1}>.
  static DensityMatrix fock(FockDims dims, const std::vector<int>& occupation);
  /// Single-mode coherent state, exponential series truncated at d and renormalized.
  static DensityMatrix coherent(int d, cplx alpha);
  /// Tensor product; `a` occupies the slower-varying slots.
  static DensityMatrix product(const DensityMatrix& a, const DensityMatrix& b);

  const FockDims& dims() const noexcept { return dims_; }
  const DenseMatrix& matrix() const noexcept { return matrix_; }

  /// Smallest eigenvalue of the Hermitian matrix.
  double min_eigenvalue() const;

private:
  FockDims dims_;
  DenseMatrix matrix_;
};

/// Coherent-state amplitudes truncated to d levels and renormalized.
Eigen::VectorXcd coherent_vector(int d, cplx alpha);

/// Single-mode annihilation operator on d levels.
FockOperator destroy(int d);
/// Single-mode number operator on d levels.
FockOperator number(int d);

/// identity (x) ... (x) op (x) ... (x) identity with `op` in slot `mode`.
FockOperator embed(const FockOperator& op, int mode, const FockDims& dims);

/// Annihilation operator of `mode` on the full space.
FockOperator mode_destroy(const FockDims& dims, int mode);

/// Tr(rho * op).
cplx expect(const DensityMatrix& rho, const FockOperator& op);
/// Dense-path equivalent of `expect`.
cplx expect_dense(const DensityMatrix& rho, const DenseMatrix& op);

/// Reduced state of a single mode.
DensityMatrix partial_trace(const DensityMatrix& rho, int keep);
/// Reduced state of several modes, kept in ascending mode order.
DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep);

/// Kronecker product of sparse matrices.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// Hermitian part of m, scaled to unit trace.
DenseMatrix hermitize_normalized(const DenseMatrix& m);

}  // namespace cascade
