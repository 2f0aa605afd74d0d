#include "uvesc/sdp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "uvesc/errors.hpp"

namespace uvesc {

LmiBlock::LmiBlock(std::string label, MatrixXd constant, Sense sense, double strictness)
    : label_(std::move(label)), constant_(std::move(constant)), sense_(sense), strictness_(strictness) {
  if (constant_.rows() != constant_.cols() || constant_.rows() == 0) {
    throw DomainError("LMI block '" + label_ + "' needs a non-empty square constant");
  }
  if (relative_asymmetry(constant_) > 1e-12) {
    throw DomainError("LMI block '" + label_ + "' has a non-symmetric constant");
  }
  if (strictness_ < 0.0 || (sense_ == Sense::kPositiveSemidefinite && strictness_ != 0.0)) {
    throw DomainError("LMI block '" + label_ + "' has an invalid strictness margin");
  }
}

void LmiBlock::add_term(int variable, MatrixXd coefficient) {
  if (variable < 0) {
    throw DomainError("LMI block '" + label_ + "': negative variable index");
  }
  if (coefficient.rows() != size() || coefficient.cols() != size()) {
    throw DomainError("LMI block '" + label_ + "': coefficient size mismatch");
  }
  if (relative_asymmetry(coefficient) > 1e-12) {
    throw DomainError("LMI block '" + label_ + "': non-symmetric coefficient");
  }
  for (auto& term : terms_) {
    if (term.variable == variable) {
      term.coefficient += coefficient;
      return;
    }
  }
  terms_.push_back({variable, std::move(coefficient)});
}

MatrixXd LmiBlock::evaluate(const VectorXd& x) const {
  MatrixXd value = constant_;
  for (const auto& term : terms_) {
    if (term.variable >= x.size()) {
      throw DomainError("LMI block '" + label_ + "': assignment is too short");
    }
    value.noalias() += x[term.variable] * term.coefficient;
  }
  return value;
}

MatrixXd LmiBlock::standard_form(const VectorXd& x) const {
  MatrixXd g = orientation() * evaluate(x);
  g.diagonal().array() -= strictness_;
  return g;
}

const char* to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kFeasible: return "feasible";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kFailure: return "failure";
  }
  return "unknown";
}

namespace {

// G(z) = C + Σ z_k A_k ≽ 0.
struct StandardBlock {
  MatrixXd constant;
  std::vector<std::pair<int, MatrixXd>> terms;
};

class BarrierProblem {
 public:
  BarrierProblem(std::vector<StandardBlock> blocks, int num_variables, int num_boxed, double bound)
      : blocks_(std::move(blocks)), num_variables_(num_variables), num_boxed_(num_boxed), bound_(bound) {}

  int num_variables() const { return num_variables_; }

  double degree() const {
    double nu = 2.0 * num_boxed_;
    for (const auto& b : blocks_) nu += static_cast<double>(b.constant.rows());
    return nu;
  }

  MatrixXd block_value(std::size_t j, const VectorXd& z) const {
    MatrixXd g = blocks_[j].constant;
    for (const auto& [k, a] : blocks_[j].terms) g.noalias() += z[k] * a;
    return g;
  }

  double min_eigenvalue(const VectorXd& z) const {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      worst = std::min(worst, lambda_min(block_value(j, z)));
    }
    return worst;
  }

  // −Σ log det G_j − Σ log(R ∓ z_k); nullopt outside the domain.
  std::optional<double> barrier(const VectorXd& z) const {
    double value = 0.0;
    for (int k = 0; k < num_boxed_; ++k) {
      const double lo = bound_ + z[k];
      const double hi = bound_ - z[k];
      if (!(lo > 0.0 && hi > 0.0)) return std::nullopt;
      value -= std::log(lo) + std::log(hi);
    }
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      Eigen::LLT<MatrixXd> llt(block_value(j, z));
      if (llt.info() != Eigen::Success) return std::nullopt;
      const auto diag = llt.matrixLLT().diagonal();
      if ((diag.array() <= 0.0).any() || !diag.allFinite()) return std::nullopt;
      value -= 2.0 * diag.array().log().sum();
    }
    if (!std::isfinite(value)) return std::nullopt;
    return value;
  }

  // Gradient and Hessian of the barrier (objective term added by the caller).
  bool derivatives(const VectorXd& z, VectorXd& grad, MatrixXd& hess) const {
    const int m = num_variables_;
    grad = VectorXd::Zero(m);
    hess = MatrixXd::Zero(m, m);
    for (int k = 0; k < num_boxed_; ++k) {
      const double lo = bound_ + z[k];
      const double hi = bound_ - z[k];
      grad[k] += 1.0 / hi - 1.0 / lo;
      hess(k, k) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
    std::vector<MatrixXd> scaled;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
      const MatrixXd g = block_value(j, z);
      Eigen::LLT<MatrixXd> llt(g);
      if (llt.info() != Eigen::Success) return false;
      const MatrixXd w = llt.solve(MatrixXd::Identity(g.rows(), g.cols()));
      const auto& terms = blocks_[j].terms;
      scaled.clear();
      scaled.reserve(terms.size());
      for (const auto& term : terms) scaled.push_back(w * term.second);
      for (std::size_t a = 0; a < terms.size(); ++a) {
        const int ka = terms[a].first;
        grad[ka] -= scaled[a].trace();
        for (std::size_t b = a; b < terms.size(); ++b) {
          const int kb = terms[b].first;
          const double v = scaled[a].cwiseProduct(scaled[b].transpose()).sum();
          hess(ka, kb) += v;
          if (ka != kb) hess(kb, ka) += v;
        }
      }
    }
    return grad.allFinite() && hess.allFinite();
  }

 private:
  std::vector<StandardBlock> blocks_;
  int num_variables_;
  int num_boxed_;
  double bound_;
};

enum class CenterStatus { kCentered, kStalled, kFailed };

// Damped Newton minimization of t·cᵀz + barrier(z) from a strictly feasible z.
CenterStatus center(const BarrierProblem& problem, const VectorXd& c, double t, VectorXd& z, int max_steps,
                    int& steps) {
  VectorXd grad;
  MatrixXd hess;
  for (int iter = 0; iter < max_steps; ++iter) {
    if (!problem.derivatives(z, grad, hess)) return CenterStatus::kFailed;
    grad += t * c;
    Eigen::LDLT<MatrixXd> ldlt(hess);
    VectorXd step = -ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      const double ridge = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
      MatrixXd damped = hess;
      damped.diagonal().array() += ridge;
      step = -damped.ldlt().solve(grad);
      if (!step.allFinite()) return CenterStatus::kFailed;
    }
    const double decrement = -grad.dot(step);
    ++steps;
    if (decrement < 0.0) return CenterStatus::kFailed;
    if (0.5 * decrement <= 1e-10) return CenterStatus::kCentered;

    const auto base = problem.barrier(z);
    if (!base) return CenterStatus::kFailed;
    const double slope = grad.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls, alpha *= 0.5) {
      const VectorXd trial = z + alpha * step;
      const auto value = problem.barrier(trial);
      if (!value) continue;
      const double change = t * alpha * c.dot(step) + (*value - *base);
      if (change <= 0.25 * alpha * slope) {
        z = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // Rounding floor of the merit function: accept the current point when the
      // Newton decrement is already small.
      return 0.5 * decrement <= 1e-6 ? CenterStatus::kCentered : CenterStatus::kStalled;
    }
  }
  return CenterStatus::kStalled;
}

}  // namespace

BackendCapabilities BarrierSdpSolver::capabilities() const {
  return {"dense-logdet-barrier", true, true, 400};
}

SdpSolution BarrierSdpSolver::solve(const SdpProblem& problem) {
  const int m = problem.num_variables;
  if (m <= 0 || m > capabilities().max_variables) {
    throw DomainError("barrier solver: unsupported number of variables");
  }
  if (problem.blocks.empty()) {
    throw DomainError("barrier solver: no constraint blocks");
  }
  const bool feasibility_only = problem.objective.size() == 0;
  if (!feasibility_only && problem.objective.size() != m) {
    throw DomainError("barrier solver: objective length mismatch");
  }

  SdpSolution solution;
  solution.tolerance = options_.gap_tolerance;

  // Phase I over (x, s): G_j(x) + s·I ≽ 0, minimize s.
  std::vector<StandardBlock> phase1_blocks;
  std::vector<StandardBlock> phase2_blocks;
  for (const auto& block : problem.blocks) {
    StandardBlock sb;
    const double o = block.orientation();
    sb.constant = o * block.constant();
    sb.constant.diagonal().array() -= block.strictness();
    for (const auto& term : block.terms()) {
      if (term.variable >= m) throw DomainError("barrier solver: variable index out of range");
      sb.terms.emplace_back(term.variable, o * term.coefficient);
    }
    phase2_blocks.push_back(sb);
    sb.terms.emplace_back(m, MatrixXd::Identity(sb.constant.rows(), sb.constant.cols()));
    phase1_blocks.push_back(std::move(sb));
  }
  const BarrierProblem phase1(std::move(phase1_blocks), m + 1, m, options_.variable_bound);
  const BarrierProblem phase2(std::move(phase2_blocks), m, m, options_.variable_bound);

  VectorXd z = VectorXd::Zero(m + 1);
  {
    VectorXd x0 = VectorXd::Zero(m + 1);
    x0[m] = 0.0;
    const double worst = phase1.min_eigenvalue(x0);
    z[m] = std::max(0.0, -worst) + 1.0;
  }
  VectorXd c1 = VectorXd::Zero(m + 1);
  c1[m] = 1.0;
  const double nu1 = phase1.degree();
  double t = 1.0 / std::max(1.0, std::abs(z[m]));
  bool found = false;
  bool certified_infeasible = false;
  for (int outer = 0; outer < options_.max_outer; ++outer) {
    const auto status = center(phase1, c1, t, z, options_.max_newton_per_center, solution.newton_steps);
    if (status == CenterStatus::kFailed) {
      solution.status = SdpStatus::kFailure;
      solution.message = "phase I: Newton step failed";
      return solution;
    }
    const double s = z[m];
    const double gap = nu1 / t;
    if (s < 0.0 && !feasibility_only) {
      found = true;
      break;
    }
    if (s - gap > 0.0) {
      certified_infeasible = true;
      break;
    }
    if (feasibility_only && gap <= options_.gap_tolerance * std::max(1.0, std::abs(s))) {
      found = s < 0.0;
      certified_infeasible = !found;
      break;
    }
    t *= options_.t_growth;
  }
  if (!found) {
    std::ostringstream msg;
    msg << "phase I: no strictly feasible point (best margin " << -z[m] << ")";
    solution.status = certified_infeasible || z[m] >= 0.0 ? SdpStatus::kInfeasible : SdpStatus::kFailure;
    solution.x = z.head(m);
    solution.feasibility_margin = -z[m];
    solution.message = msg.str();
    return solution;
  }

  VectorXd x = z.head(m);
  if (feasibility_only) {
    solution.status = SdpStatus::kFeasible;
    solution.x = x;
    solution.feasibility_margin = phase2.min_eigenvalue(x);
    solution.gap_bound = nu1 / t;
    solution.message = "maximum-margin feasible point";
    return solution;
  }

  // Phase II: central path of cᵀx.
  const VectorXd& c = problem.objective;
  const double nu = phase2.degree();
  t = 1.0;
  bool converged = false;
  for (int outer = 0; outer < options_.max_outer; ++outer) {
    const auto status = center(phase2, c, t, x, options_.max_newton_per_center, solution.newton_steps);
    if (status == CenterStatus::kFailed) {
      solution.status = SdpStatus::kFailure;
      solution.message = "phase II: Newton step failed";
      solution.x = x;
      return solution;
    }
    if (nu / t <= options_.gap_tolerance * std::max(1.0, std::abs(c.dot(x)))) {
      converged = true;
      break;
    }
    t *= options_.t_growth;
  }
  solution.x = x;
  solution.objective = c.dot(x);
  solution.gap_bound = nu / t;
  solution.feasibility_margin = phase2.min_eigenvalue(x);
  if (!converged) {
    solution.status = SdpStatus::kFailure;
    solution.message = "phase II: gap tolerance not reached";
    return solution;
  }
  solution.status = SdpStatus::kOptimal;
  solution.message = "optimal";
  return solution;
}

}  // namespace uvesc
