#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "uvesc/errors.hpp"
#include "uvesc/linalg.hpp"
#include "uvesc/polytope.hpp"
#include "uvesc/sense.hpp"

namespace uvesc {

struct BlockCheck {
  std::string label;
  Sense sense = Sense::kPositiveDefinite;
  /// λmin for (semi)definite blocks, λmax for negative definite ones.
  double worst_eigenvalue = 0.0;
  /// tol·‖B‖ the eigenvalue has to clear.
  double threshold = 0.0;
  /// Signed distance to the threshold; the block passes iff margin ≥ 0.
  double margin = 0.0;
  bool passed = false;
};

struct CertificateReport {
  std::vector<BlockCheck> blocks;

  bool passed() const {
    return !blocks.empty() &&
           std::all_of(blocks.begin(), blocks.end(), [](const BlockCheck& b) { return b.passed; });
  }

  double min_margin() const {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) worst = std::min(worst, b.margin);
    return worst;
  }

  void append(const CertificateReport& other) {
    blocks.insert(blocks.end(), other.blocks.begin(), other.blocks.end());
  }
};

inline constexpr double kDefaultVerifierTolerance = 1e-7;
inline constexpr double kVerifierAsymmetryGuard = 1e-10;

/// Eigenvalue check of one symmetric block against its sense.
template <typename Derived>
BlockCheck check_block(std::string label, const Eigen::MatrixBase<Derived>& block, Sense sense,
                       double tol = kDefaultVerifierTolerance) {
  if (block.rows() != block.cols()) {
    throw DomainError("block '" + label + "' is not square");
  }
  if (relative_asymmetry(block) > kVerifierAsymmetryGuard) {
    throw DomainError("block '" + label + "' is not symmetric");
  }
  BlockCheck check;
  check.label = std::move(label);
  check.sense = sense;
  if (!block.allFinite()) {
    check.worst_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    check.margin = -std::numeric_limits<double>::infinity();
    return check;
  }
  const auto eig = symmetric_eigenvalues(block);
  const double scale = std::max(std::abs(double(eig.minCoeff())), std::abs(double(eig.maxCoeff())));
  check.threshold = tol * scale;
  switch (sense) {
    case Sense::kPositiveDefinite:
      check.worst_eigenvalue = double(eig.minCoeff());
      check.margin = check.worst_eigenvalue - check.threshold;
      break;
    case Sense::kNegativeDefinite:
      check.worst_eigenvalue = double(eig.maxCoeff());
      check.margin = -check.worst_eigenvalue - check.threshold;
      break;
    case Sense::kPositiveSemidefinite:
      check.worst_eigenvalue = double(eig.minCoeff());
      check.margin = check.worst_eigenvalue + check.threshold;
      break;
  }
  // A zero block is neither definite nor informative.
  check.passed = check.margin >= 0.0 && (sense == Sense::kPositiveSemidefinite || scale > 0.0);
  return check;
}

/// Vertex condition of the gain synthesis:
///   [[H L + Lᵀ H + (μ/4) I + M,  Lᵀ H],
///    [H L,                        −μ I]]  ≺ 0.
template <typename Scalar>
Matrix<Scalar> vertex_block(const Matrix<Scalar>& h, const Matrix<Scalar>& m, const Matrix<Scalar>& l,
                                    Scalar mu) {
  const auto n = h.rows();
  const Matrix<Scalar> hl = h * l;
  Matrix<Scalar> block(2 * n, 2 * n);
  block.topLeftCorner(n, n) = hl + hl.transpose() + m;
  block.topLeftCorner(n, n).diagonal().array() += mu / Scalar(4);
  block.topRightCorner(n, n) = hl.transpose();
  block.bottomLeftCorner(n, n) = hl;
  block.bottomRightCorner(n, n) = -mu * Matrix<Scalar>::Identity(n, n);
  return symmetric_part(block);
}

/// (1/μ) Kᵀ Hᵀ H K + P H K + Kᵀ Hᵀ P + (μ/4) P² + Q, the Schur form of the
/// vertex condition after the congruence with diag(X⁻¹, I).
template <typename Scalar>
Matrix<Scalar> descent_matrix(const Matrix<Scalar>& k, const Matrix<Scalar>& p, const Matrix<Scalar>& q,
                              const Matrix<Scalar>& h, Scalar mu) {
  const Matrix<Scalar> hk = h * k;
  const Matrix<Scalar> phk = p * hk;
  Matrix<Scalar> d = hk.transpose() * hk / mu + phk + phk.transpose() + (mu / Scalar(4)) * p * p + q;
  return symmetric_part(d);
}

/// Evaluates X ≻ 0, M ≻ 0 and every vertex block at L = K·X. Back-substituting
/// L from K means a perturbed gain is checked as such.
template <typename Scalar>
CertificateReport check_certificate(const Matrix<Scalar>& x, const Matrix<Scalar>& m, const Matrix<Scalar>& k,
                                    const HessianPolytope<Scalar>& poly, Scalar mu,
                                    double tol = kDefaultVerifierTolerance) {
  const auto n = poly.dim();
  if (x.rows() != n || x.cols() != n || m.rows() != n || m.cols() != n || k.rows() != n || k.cols() != n) {
    throw DomainError("certificate dimensions do not match the polytope");
  }
  if (!(mu > Scalar(0))) {
    throw DomainError("mu must be positive");
  }
  CertificateReport report;
  report.blocks.push_back(check_block("X > 0", symmetric_part(x), Sense::kPositiveDefinite, tol));
  report.blocks.push_back(check_block("M > 0", symmetric_part(m), Sense::kPositiveDefinite, tol));
  const Matrix<Scalar> l = k * x;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    report.blocks.push_back(check_block("vertex " + std::to_string(i + 1),
                                        vertex_block<Scalar>(poly.vertex(i), m, l, mu),
                                        Sense::kNegativeDefinite, tol));
  }
  return report;
}

/// Reaching-time couplings of the minimum-ρ program:
/// [[φ I, I], [I, X]] ≽ 0 and [[M, X], [X, ρ I]] ≽ 0.
template <typename Scalar>
CertificateReport check_reaching_couplings(const Matrix<Scalar>& x, const Matrix<Scalar>& m, Scalar rho,
                                           Scalar varphi, double tol = kDefaultVerifierTolerance) {
  const auto n = x.rows();
  const Matrix<Scalar> eye = Matrix<Scalar>::Identity(n, n);
  Matrix<Scalar> phi_block(2 * n, 2 * n);
  phi_block << varphi * eye, eye, eye, x;
  Matrix<Scalar> rho_block(2 * n, 2 * n);
  rho_block << m, x, x, rho * eye;
  CertificateReport report;
  report.blocks.push_back(check_block("[[phi I, I], [I, X]] >= 0", symmetric_part(phi_block),
                                      Sense::kPositiveSemidefinite, tol));
  report.blocks.push_back(check_block("[[M, X], [X, rho I]] >= 0", symmetric_part(rho_block),
                                      Sense::kPositiveSemidefinite, tol));
  return report;
}

inline constexpr int kDefaultInteriorSamples = 50;
inline constexpr std::uint64_t kDefaultVerifierSeed = 0x5eed'cafe'f00dULL;

/// Descent inequality at every vertex and at `interior_samples` seeded points
/// H(α) of the polytope.
template <typename Scalar>
CertificateReport check_descent_condition(const Matrix<Scalar>& k, const Matrix<Scalar>& p,
                                          const Matrix<Scalar>& q, Scalar mu, const HessianPolytope<Scalar>& poly,
                                          double tol = kDefaultVerifierTolerance,
                                          int interior_samples = kDefaultInteriorSamples,
                                          std::uint64_t seed = kDefaultVerifierSeed) {
  const auto n = poly.dim();
  if (k.rows() != n || k.cols() != n || p.rows() != n || p.cols() != n || q.rows() != n || q.cols() != n) {
    throw DomainError("descent check dimensions do not match the polytope");
  }
  CertificateReport report;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    report.blocks.push_back(check_block("descent vertex " + std::to_string(i + 1),
                                        descent_matrix<Scalar>(k, p, q, poly.vertex(i), mu),
                                        Sense::kNegativeDefinite, tol));
  }
  std::mt19937_64 rng(seed);
  for (int s = 0; s < interior_samples; ++s) {
    const auto alpha = sample_simplex<Scalar>(poly.size(), rng);
    report.blocks.push_back(check_block("descent interior " + std::to_string(s + 1),
                                        descent_matrix<Scalar>(k, p, q, evaluate(poly, alpha), mu),
                                        Sense::kNegativeDefinite, tol));
  }
  return report;
}

/// Time derivative of V(g) = gᵀ P g / ‖g‖ along ġ = H K g / ‖g‖, at a unit g:
///   V̇ = gᵀ(P H K + Kᵀ Hᵀ P) g − (gᵀ P g)(gᵀ H K g).
template <typename Scalar>
Scalar lyapunov_rate(const Matrix<Scalar>& k, const Matrix<Scalar>& p, const Matrix<Scalar>& h,
                     const Vector<Scalar>& unit_g) {
  const Vector<Scalar> flow = h * (k * unit_g);
  return Scalar(2) * unit_g.dot(p * flow) - unit_g.dot(p * unit_g) * unit_g.dot(flow);
}

struct DecreaseReport {
  /// min over samples of −V̇; finite-time decrease holds when positive.
  double min_margin = 0.0;
  /// min over samples of −V̇ / (gᵀ Q g) when Q is supplied, else NaN.
  double min_ratio_to_q = std::numeric_limits<double>::quiet_NaN();
  VectorXd worst_direction;
  VectorXd worst_alpha;
  int samples = 0;
  bool passed() const { return min_margin > 0.0; }
};

/// Samples unit directions g and points H(α) (vertices included) and records
/// the smallest decrease rate −V̇ of the unit-vector Lyapunov function.
template <typename Scalar>
DecreaseReport check_finite_time_decrease(const Matrix<Scalar>& k, const Matrix<Scalar>& p,
                                          const HessianPolytope<Scalar>& poly, int samples,
                                          std::uint64_t seed = kDefaultVerifierSeed,
                                          const Matrix<Scalar>* q = nullptr) {
  if (samples < 100) {
    throw DomainError("finite-time decrease check needs at least 100 samples");
  }
  const auto n = poly.dim();
  if (k.rows() != n || k.cols() != n || p.rows() != n || p.cols() != n) {
    throw DomainError("decrease check dimensions do not match the polytope");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  DecreaseReport report;
  report.min_margin = std::numeric_limits<double>::infinity();
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vector<Scalar> g(n);
    do {
      for (Eigen::Index i = 0; i < n; ++i) g[i] = Scalar(normal(rng));
    } while (g.norm() == Scalar(0));
    g.normalize();
    // Cycle through the vertices first, then interior points.
    Vector<Scalar> alpha = Vector<Scalar>::Zero(static_cast<Eigen::Index>(poly.size()));
    if (static_cast<std::size_t>(s) < poly.size()) {
      alpha[s] = Scalar(1);
    } else {
      alpha = sample_simplex<Scalar>(poly.size(), rng).weights();
    }
    const Matrix<Scalar> h = evaluate(poly, SimplexPoint<Scalar>(alpha));
    const double margin = -double(lyapunov_rate<Scalar>(k, p, h, g));
    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.worst_direction = g.template cast<double>();
      report.worst_alpha = alpha.template cast<double>();
    }
    if (q != nullptr) {
      min_ratio = std::min(min_ratio, margin / double(g.dot(*q * g)));
    }
  }
  report.samples = samples;
  if (q != nullptr) report.min_ratio_to_q = min_ratio;
  return report;
}

}  // namespace uvesc
