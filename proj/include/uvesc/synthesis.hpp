#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvesc/linalg.hpp"
#include "uvesc/polytope.hpp"
#include "uvesc/sdp.hpp"
#include "uvesc/verifier.hpp"

namespace uvesc {

enum class Objective { kFeasibility, kMinimizeRho };

const char* to_string(Objective objective);

/// Flat indexing of the decision variables (X, M, L[, ρ]). X and M are
/// symmetric and stored by their upper triangle, L is a full n×n matrix
/// stored row-major.
class DecisionLayout {
 public:
  DecisionLayout(Eigen::Index n, bool with_rho);

  Eigen::Index dim() const { return n_; }
  int num_variables() const { return num_variables_; }
  bool has_rho() const { return rho_index_ >= 0; }

  int x_index(Eigen::Index i, Eigen::Index j) const { return x_offset_ + sym_index(i, j); }
  int m_index(Eigen::Index i, Eigen::Index j) const { return m_offset_ + sym_index(i, j); }
  int l_index(Eigen::Index i, Eigen::Index j) const { return l_offset_ + static_cast<int>(i * n_ + j); }
  int rho_index() const { return rho_index_; }

  MatrixXd x(const VectorXd& v) const { return unpack_symmetric(v, x_offset_); }
  MatrixXd m(const VectorXd& v) const { return unpack_symmetric(v, m_offset_); }
  MatrixXd l(const VectorXd& v) const;
  double rho(const VectorXd& v) const;

  VectorXd pack(const MatrixXd& x, const MatrixXd& m, const MatrixXd& l, double rho = 0.0) const;

  /// Basis of the symmetric variable (i, j): E_ij + E_ji, or E_ii on the diagonal.
  MatrixXd symmetric_basis(Eigen::Index i, Eigen::Index j) const;

 private:
  int sym_index(Eigen::Index i, Eigen::Index j) const;
  MatrixXd unpack_symmetric(const VectorXd& v, int offset) const;

  Eigen::Index n_;
  int x_offset_;
  int m_offset_;
  int l_offset_;
  int rho_index_;
  int num_variables_;
};

struct SynthesisProblem {
  HessianPolytope<double> polytope;
  double mu;
  double varphi;
  Objective objective = Objective::kMinimizeRho;

  /// Throws DomainError unless mu > 0 and varphi > 0.
  void validate() const;
};

struct AssembledProblem {
  DecisionLayout layout;
  std::vector<LmiBlock> blocks;
  /// Empty for feasibility.
  VectorXd objective;
  double epsilon_strict = 0.0;

  SdpProblem to_sdp() const { return {layout.num_variables(), blocks, objective}; }
};

/// ε_strict = 1e-6 · max(μ, max ‖Hᵢ‖₂).
double strictness_epsilon(const HessianPolytope<double>& poly, double mu);
double strictness_epsilon(std::span<const MatrixXd> vertices, double mu);

/// X ≻ 0, M ≻ 0 and one negative definite vertex block per Hᵢ.
AssembledProblem assemble_feasibility(const HessianPolytope<double>& poly, double mu);
/// Same blocks for a raw vertex list; the vertices are only required to be
/// symmetric, so sign-indefinite families can be posed.
AssembledProblem assemble_feasibility(std::span<const MatrixXd> vertices, double mu);

/// Feasibility blocks plus [[φI, I], [I, X]] ≽ 0 and [[M, X], [X, ρI]] ≽ 0,
/// minimizing ρ.
AssembledProblem assemble_min_rho(const HessianPolytope<double>& poly, double mu, double varphi);

/// K = L X⁻¹ via a Cholesky solve of X Kᵀ = Lᵀ.
MatrixXd recover_gain(const MatrixXd& x, const MatrixXd& l);

struct ReachingTime {
  double v0;     // gᵀ P g / ‖g‖
  double bound;  // V₀ / λmin(Q)
};

ReachingTime reaching_time_bound(const MatrixXd& p, const MatrixXd& q, const VectorXd& g0);

struct SynthesisResult {
  MatrixXd x;
  MatrixXd m;
  MatrixXd l;
  MatrixXd k;
  MatrixXd p;
  MatrixXd q;
  std::optional<double> rho;
  double mu = 0.0;
  double varphi = 0.0;
  Objective objective = Objective::kMinimizeRho;
  double epsilon_strict = 0.0;
  std::string solver_status;
  std::string backend;
  double solver_gap_bound = 0.0;
  int newton_steps = 0;
  /// Independent eigenvalue checks of the returned assignment.
  CertificateReport certificate;
};

/// Builds the blocks for the requested objective, runs the backend and
/// re-verifies the answer.
///
/// Throws Infeasible when the backend finds no strictly feasible point,
/// SolverFailure on numerical breakdown and ToleranceViolation when the
/// verifier rejects the returned assignment.
SynthesisResult solve(const SynthesisProblem& problem, SolverBackend& backend);

/// X ≻ 0, M ≻ 0 and the vertex blocks at the result's (X, M, K).
CertificateReport check_certificate(const SynthesisResult& result, const HessianPolytope<double>& poly,
                                    double mu, double tol = kDefaultVerifierTolerance);

struct MuSearchResult {
  double mu;
  SynthesisResult result;
  /// (μ, ρ) for every evaluated μ; ρ = +∞ where infeasible.
  std::vector<std::pair<double, double>> evaluations;
};

/// Golden-section search over log μ ∈ [mu_lo, mu_hi] for the smallest ρ.
MuSearchResult optimize_mu(const HessianPolytope<double>& poly, double varphi, SolverBackend& backend,
                           double mu_lo, double mu_hi, int iterations = 30);

/// Searches a certificate (X, M) for a fixed gain K, i.e. the vertex LMIs
/// with L = K X. Throws Infeasible when none exists.
SynthesisResult certify_gain(const MatrixXd& k, const HessianPolytope<double>& poly, double mu,
                             SolverBackend& backend);

}  // namespace uvesc
