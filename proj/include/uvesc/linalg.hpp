#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "uvesc/errors.hpp"

namespace uvesc {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// (A + Aᵀ) / 2.
template <typename Derived>
auto symmetric_part(const Eigen::MatrixBase<Derived>& a) {
  return (0.5 * (a + a.transpose())).eval();
}

/// ‖A − Aᵀ‖_F / ‖A‖_F, zero for the zero matrix.
template <typename Derived>
typename Derived::RealScalar relative_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  const Real norm = a.norm();
  if (norm == Real(0)) return Real(0);
  return (a - a.transpose()).norm() / norm;
}

/// Returns the symmetrized matrix if its relative asymmetry is at most `tol`;
/// throws DomainError otherwise.
template <typename Derived>
auto require_symmetric(const Eigen::MatrixBase<Derived>& a, typename Derived::RealScalar tol,
                       const std::string& what) {
  if (a.rows() != a.cols()) {
    throw DomainError(what + " must be square");
  }
  if (!a.allFinite()) {
    throw DomainError(what + " has non-finite entries");
  }
  if (relative_asymmetry(a) > tol) {
    throw DomainError(what + " is not symmetric");
  }
  return symmetric_part(a);
}

/// Ascending eigenvalues of the symmetric part of `a`.
template <typename Derived>
Vector<typename Derived::RealScalar> symmetric_eigenvalues(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  const Matrix<Real> sym = symmetric_part(a);
  Eigen::SelfAdjointEigenSolver<Matrix<Real>> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("symmetric eigensolver did not converge");
  }
  return solver.eigenvalues();
}

template <typename Derived>
typename Derived::RealScalar lambda_min(const Eigen::MatrixBase<Derived>& a) {
  return symmetric_eigenvalues(a).minCoeff();
}

template <typename Derived>
typename Derived::RealScalar lambda_max(const Eigen::MatrixBase<Derived>& a) {
  return symmetric_eigenvalues(a).maxCoeff();
}

/// Scale-invariant definiteness test: λmin > 1e-10 · λmax and λmax > 0.
template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& a) {
  using Real = typename Derived::RealScalar;
  if (a.size() == 0 || !a.allFinite()) return false;
  const auto eig = symmetric_eigenvalues(a);
  const Real top = eig.maxCoeff();
  return top > Real(0) && eig.minCoeff() > Real(1e-10) * top;
}

/// Spectral norm of the symmetric part.
template <typename Derived>
typename Derived::RealScalar symmetric_norm(const Eigen::MatrixBase<Derived>& a) {
  const auto eig = symmetric_eigenvalues(a);
  return std::max(std::abs(eig.minCoeff()), std::abs(eig.maxCoeff()));
}

}  // namespace uvesc
