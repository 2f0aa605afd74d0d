#pragma once

#include <string>
#include <utility>
#include <vector>

#include "uvesc/linalg.hpp"
#include "uvesc/sense.hpp"

namespace uvesc {

/// Affine symmetric-matrix constraint F(x) = F₀ + Σₖ xₖ Fₖ with a required
/// sense. Strict senses carry an explicit margin ε: F ≽ εI for positive
/// definite and F ≼ −εI for negative definite.
class LmiBlock {
 public:
  struct Term {
    int variable;
    MatrixXd coefficient;
  };

  LmiBlock(std::string label, MatrixXd constant, Sense sense, double strictness = 0.0);

  /// Adds `coefficient` to the multiplier of variable `variable`. The
  /// coefficient must be symmetric and match the block size.
  void add_term(int variable, MatrixXd coefficient);

  const std::string& label() const { return label_; }
  Eigen::Index size() const { return constant_.rows(); }
  Sense sense() const { return sense_; }
  double strictness() const { return strictness_; }
  const MatrixXd& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  /// F(x).
  MatrixXd evaluate(const VectorXd& x) const;

  /// The block rewritten as G(x) ≽ 0: F − εI, −F − εI or F.
  MatrixXd standard_form(const VectorXd& x) const;

  /// Sign applied to F in standard_form (+1 or −1).
  double orientation() const { return sense_ == Sense::kNegativeDefinite ? -1.0 : 1.0; }

 private:
  std::string label_;
  MatrixXd constant_;
  Sense sense_;
  double strictness_;
  std::vector<Term> terms_;
};

/// minimize cᵀx subject to every block. An empty objective means a pure
/// feasibility problem, for which the backend returns a maximum-margin point.
struct SdpProblem {
  int num_variables = 0;
  std::vector<LmiBlock> blocks;
  VectorXd objective;
};

enum class SdpStatus { kOptimal, kFeasible, kInfeasible, kFailure };

const char* to_string(SdpStatus status);

struct SdpSolution {
  SdpStatus status = SdpStatus::kFailure;
  VectorXd x;
  double objective = 0.0;
  /// Upper bound on cᵀx − p* (barrier degree / t at termination).
  double gap_bound = 0.0;
  /// min over blocks of λmin(G_j(x)), the slack beyond the strictness offsets.
  double feasibility_margin = 0.0;
  /// Backend's tolerance on the constraints it reports as satisfied.
  double tolerance = 0.0;
  int newton_steps = 0;
  std::string message;
};

struct BackendCapabilities {
  std::string name;
  bool linear_objective = false;
  bool strict_inequalities = false;
  int max_variables = 0;
};

/// Conic backend contract: affine symmetric-matrix constraints with
/// semidefinite sense and a linear objective. One solve at a time per
/// instance.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual BackendCapabilities capabilities() const = 0;
  virtual SdpSolution solve(const SdpProblem& problem) = 0;
};

struct BarrierOptions {
  /// Every variable is boxed to [−bound, bound] so phase I stays bounded.
  double variable_bound = 1e6;
  /// Relative stopping tolerance on the barrier gap bound.
  double gap_tolerance = 1e-9;
  double t_growth = 10.0;
  int max_newton_per_center = 200;
  int max_outer = 80;
};

/// Dense primal log-det barrier method (phase I to find a strictly feasible
/// point, phase II to follow the central path of the objective). Intended for
/// small problems: the Newton system is formed explicitly.
class BarrierSdpSolver final : public SolverBackend {
 public:
  BarrierSdpSolver() = default;
  explicit BarrierSdpSolver(BarrierOptions options) : options_(options) {}

  BackendCapabilities capabilities() const override;
  SdpSolution solve(const SdpProblem& problem) override;

  const BarrierOptions& options() const { return options_; }

 private:
  BarrierOptions options_;
};

}  // namespace uvesc
