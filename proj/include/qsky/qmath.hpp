#pragma once

// Dense complex linear algebra for the 2- and 4-dimensional Hilbert spaces
// used throughout the library. Free functions are templated on the Eigen
// expression type so they accept blocks, maps and fixed-size matrices alike.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <complex>
#include <compare>
#include <limits>
#include <string>
#include <vector>

#include "qsky/error.hpp"

namespace qsky {

using cplx = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector2c = Eigen::Vector2cd;
using Vector4c = Eigen::Vector4cd;

template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Two-qubit density operator on H_pol (photon A) ⊗ H_oam (photon B).
/// Basis order: |H l1>, |H l2>, |V l1>, |V l2>.
using DensityMatrix = Matrix4c;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kNegativeEigenTol = 1e-8;

inline Matrix2c pauli_x() { return (Matrix2c() << 0, 1, 1, 0).finished(); }
inline Matrix2c pauli_y() { return (Matrix2c() << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }
inline Matrix2c pauli_z() { return (Matrix2c() << 1, 0, 0, -1).finished(); }

template <typename Derived>
typename Derived::RealScalar hermiticity_error(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, double tol = kHermitianTol) {
  return m.rows() == m.cols() && hermiticity_error(m) <= tol;
}

template <typename Derived>
bool is_unitary(const Eigen::MatrixBase<Derived>& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) return false;
  using Plain = typename Derived::PlainObject;
  const Plain id = Plain::Identity(m.rows(), m.cols());
  return (m.adjoint() * m - id).cwiseAbs().maxCoeff() <= tol;
}

/// Kronecker product a ⊗ b with row-major block ordering: block (i, j) of the
/// result is a(i, j) * b. Fixed-size operands give a fixed-size result.
template <typename DerivedA, typename DerivedB>
auto tensor_product(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedA::Scalar,
                                                       typename DerivedB::Scalar>::ReturnType;
  constexpr int ra = DerivedA::RowsAtCompileTime, rb = DerivedB::RowsAtCompileTime;
  constexpr int ca = DerivedA::ColsAtCompileTime, cb = DerivedB::ColsAtCompileTime;
  constexpr int kRows = (ra == Eigen::Dynamic || rb == Eigen::Dynamic) ? Eigen::Dynamic : ra * rb;
  constexpr int kCols = (ca == Eigen::Dynamic || cb == Eigen::Dynamic) ? Eigen::Dynamic : ca * cb;
  Eigen::Matrix<Scalar, kRows, kCols> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename MatrixType>
struct HermitianEig {
  using RealVector = Eigen::Matrix<typename MatrixType::RealScalar, MatrixType::RowsAtCompileTime, 1>;
  RealVector values;   // descending
  MatrixType vectors;  // columns match `values`
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Throws Errc::NotHermitian when ‖m − m†‖_max exceeds 1e-10.
template <typename Derived>
HermitianEig<typename Derived::PlainObject> hermitian_eig(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  if (m.rows() != m.cols() || hermiticity_error(m) > kHermitianTol)
    throw Error(Errc::NotHermitian, "matrix is not Hermitian within 1e-10");
  const Plain sym = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Plain> solver(sym);
  HermitianEig<Plain> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in [−1e-8, 0) are clamped to zero, and eigenvalues below the
/// numerical-rank floor n·ε·max|λ| are dropped so pure states stay pure.
template <typename Derived>
typename Derived::PlainObject psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Plain = typename Derived::PlainObject;
  using Real = typename Derived::RealScalar;
  auto eig = hermitian_eig(m);
  const Real largest = eig.values.cwiseAbs().maxCoeff();
  const Real floor = static_cast<Real>(m.rows()) * std::numeric_limits<Real>::epsilon() * largest;
  auto roots = eig.values;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    const Real lam = eig.values(i);
    if (lam < -kNegativeEigenTol)
      throw Error(Errc::NotPSD, "eigenvalue " + std::to_string(lam) + " below -1e-8");
    roots(i) = lam <= floor ? Real(0) : std::sqrt(lam);
  }
  Plain out = eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
  return (out + out.adjoint()) / Real(2);
}

inline DensityMatrix pure_density(const Vector4c& psi) { return psi * psi.adjoint(); }

/// Generalised Gell-Mann basis in four dimensions: element 0 is I₄, elements
/// 1..15 are the traceless Hermitian generators with Tr(Γ_m Γ_n) = 2δ_mn.
/// Ordering: six symmetric, six antisymmetric, three diagonal.
const std::array<Matrix4c, 16>& gellmann_basis();

// ---------------------------------------------------------------------------
// Labelled kets

enum class Polarization : int { H = 0, V = 1 };

/// Basis label for a biphoton term: photon A polarisation and OAM, photon B OAM.
struct ModeLabel {
  Polarization pol = Polarization::H;
  int ell_a = 0;
  int ell_b = 0;

  friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

std::string to_string(const ModeLabel& label);

/// Sparse ket over labelled biphoton basis states. Duplicate labels are merged
/// on construction through `from_terms`.
class Ket {
 public:
  Ket() = default;
  Ket(std::vector<ModeLabel> labels, Eigen::VectorXcd amplitudes);

  struct Term {
    ModeLabel label;
    cplx amplitude;
  };
  static Ket from_terms(const std::vector<Term>& terms);

  Eigen::Index dim() const { return amplitudes_.size(); }
  const std::vector<ModeLabel>& labels() const { return labels_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }

  double norm() const { return amplitudes_.norm(); }
  void normalize();

  /// Amplitude for `label`, zero when the label is absent.
  cplx amplitude(const ModeLabel& label) const;

 private:
  std::vector<ModeLabel> labels_;
  Eigen::VectorXcd amplitudes_;
};

}  // namespace qsky
