#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uvesc/errors.hpp"
#include "uvesc/linalg.hpp"

namespace uvesc {

/// Convex hull co{H_1, ..., H_N} of symmetric positive definite n×n matrices
/// assumed to contain the unknown Hessian of the map.
///
/// Vertices with relative asymmetry up to 1e-12 are symmetrized on
/// construction; anything larger, or any vertex that is not positive definite,
/// is rejected with DomainError.
template <typename Scalar>
class HessianPolytope {
 public:
  using MatrixType = Matrix<Scalar>;

  static constexpr double kSymmetryTolerance = 1e-12;

  explicit HessianPolytope(std::vector<MatrixType> vertices) {
    if (vertices.empty()) {
      throw DomainError("polytope needs at least one vertex");
    }
    const auto n = vertices.front().rows();
    if (n < 1) {
      throw DomainError("polytope dimension must be positive");
    }
    vertices_.reserve(vertices.size());
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const std::string what = "vertex " + std::to_string(i + 1);
      if (vertices[i].rows() != n || vertices[i].cols() != n) {
        throw DomainError(what + " has inconsistent dimension");
      }
      MatrixType sym = require_symmetric(vertices[i], Scalar(kSymmetryTolerance), what);
      if (!is_positive_definite(sym)) {
        throw DomainError(what + " is not positive definite");
      }
      vertices_.push_back(std::move(sym));
    }
  }

  Eigen::Index dim() const { return vertices_.front().rows(); }
  std::size_t size() const { return vertices_.size(); }
  const std::vector<MatrixType>& vertices() const { return vertices_; }
  const MatrixType& vertex(std::size_t i) const { return vertices_.at(i); }

 private:
  std::vector<MatrixType> vertices_;
};

/// Point α of the unit simplex Λ.
template <typename Scalar>
class SimplexPoint {
 public:
  static constexpr double kSumTolerance = 1e-12;

  explicit SimplexPoint(Vector<Scalar> weights) : weights_(std::move(weights)) {
    if (weights_.size() == 0) {
      throw DomainError("simplex point needs at least one weight");
    }
    if (!weights_.allFinite() || (weights_.array() < Scalar(0)).any()) {
      throw DomainError("simplex weights must be finite and nonnegative");
    }
    if (std::abs(weights_.sum() - Scalar(1)) > Scalar(kSumTolerance)) {
      throw DomainError("simplex weights must sum to one");
    }
  }

  Eigen::Index size() const { return weights_.size(); }
  const Vector<Scalar>& weights() const { return weights_; }
  Scalar operator[](Eigen::Index i) const { return weights_[i]; }

 private:
  Vector<Scalar> weights_;
};

/// Two-vertex polytope {(1 − δ̄)H0, (1 + δ̄)H0}.
template <typename Derived>
HessianPolytope<typename Derived::Scalar> build_scaled_polytope(
    const Eigen::MatrixBase<Derived>& h0, typename Derived::Scalar delta_bar) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> center =
      require_symmetric(h0, Scalar(HessianPolytope<Scalar>::kSymmetryTolerance), "H0");
  if (!is_positive_definite(center)) {
    throw DomainError("H0 is not positive definite");
  }
  if (!(delta_bar > Scalar(0) && delta_bar < Scalar(1))) {
    throw DomainError("delta_bar must lie in (0, 1)");
  }
  return HessianPolytope<Scalar>({(Scalar(1) - delta_bar) * center, (Scalar(1) + delta_bar) * center});
}

/// H(α) = Σ αᵢ Hᵢ.
template <typename Scalar>
Matrix<Scalar> evaluate(const HessianPolytope<Scalar>& poly, const SimplexPoint<Scalar>& alpha) {
  if (static_cast<std::size_t>(alpha.size()) != poly.size()) {
    throw DomainError("simplex point length does not match the number of vertices");
  }
  Matrix<Scalar> h = Matrix<Scalar>::Zero(poly.dim(), poly.dim());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    h.noalias() += alpha[static_cast<Eigen::Index>(i)] * poly.vertex(i);
  }
  return h;
}

/// Uniform point on Λ_N from normalized i.i.d. exponentials. Uses the raw
/// 64-bit Mersenne Twister output so the stream does not depend on the
/// standard library's distribution implementations.
template <typename Scalar>
SimplexPoint<Scalar> sample_simplex(std::size_t n, std::mt19937_64& rng) {
  Vector<Scalar> w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    w[i] = static_cast<Scalar>(-std::log1p(-u));
  }
  const Scalar total = w.sum();
  if (total > Scalar(0)) {
    w /= total;
  } else {
    w.setConstant(Scalar(1) / static_cast<Scalar>(n));
  }
  // Push the rounding residue into the largest weight.
  Eigen::Index largest = 0;
  w.maxCoeff(&largest);
  w[largest] += Scalar(1) - w.sum();
  return SimplexPoint<Scalar>(std::move(w));
}

/// Deterministic random point of the polytope for a given seed.
template <typename Scalar>
std::pair<SimplexPoint<Scalar>, Matrix<Scalar>> sample_uniform(const HessianPolytope<Scalar>& poly,
                                                               std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SimplexPoint<Scalar> alpha = sample_simplex<Scalar>(poly.size(), rng);
  Matrix<Scalar> h = evaluate(poly, alpha);
  return {std::move(alpha), std::move(h)};
}

}  // namespace uvesc
