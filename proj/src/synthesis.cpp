#include "uvesc/synthesis.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "uvesc/errors.hpp"

namespace uvesc {

const char* to_string(Objective objective) {
  switch (objective) {
    case Objective::kFeasibility: return "feasibility";
    case Objective::kMinimizeRho: return "min_rho";
  }
  return "unknown";
}

DecisionLayout::DecisionLayout(Eigen::Index n, bool with_rho) : n_(n) {
  if (n < 1) throw DomainError("decision layout needs n >= 1");
  const int sym = static_cast<int>(n * (n + 1) / 2);
  x_offset_ = 0;
  m_offset_ = sym;
  l_offset_ = 2 * sym;
  num_variables_ = 2 * sym + static_cast<int>(n * n);
  rho_index_ = with_rho ? num_variables_++ : -1;
}

int DecisionLayout::sym_index(Eigen::Index i, Eigen::Index j) const {
  if (i > j) std::swap(i, j);
  // Row-major upper triangle.
  return static_cast<int>(i * n_ - i * (i - 1) / 2 + (j - i));
}

MatrixXd DecisionLayout::symmetric_basis(Eigen::Index i, Eigen::Index j) const {
  MatrixXd e = MatrixXd::Zero(n_, n_);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

MatrixXd DecisionLayout::unpack_symmetric(const VectorXd& v, int offset) const {
  MatrixXd out(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = i; j < n_; ++j) {
      out(i, j) = out(j, i) = v[offset + sym_index(i, j)];
    }
  }
  return out;
}

MatrixXd DecisionLayout::l(const VectorXd& v) const {
  MatrixXd out(n_, n_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = 0; j < n_; ++j) out(i, j) = v[l_index(i, j)];
  }
  return out;
}

double DecisionLayout::rho(const VectorXd& v) const {
  if (!has_rho()) throw DomainError("layout has no rho variable");
  return v[rho_index_];
}

VectorXd DecisionLayout::pack(const MatrixXd& x, const MatrixXd& m, const MatrixXd& l, double rho) const {
  VectorXd v = VectorXd::Zero(num_variables_);
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = i; j < n_; ++j) {
      v[x_index(i, j)] = 0.5 * (x(i, j) + x(j, i));
      v[m_index(i, j)] = 0.5 * (m(i, j) + m(j, i));
    }
    for (Eigen::Index j = 0; j < n_; ++j) v[l_index(i, j)] = l(i, j);
  }
  if (has_rho()) v[rho_index_] = rho;
  return v;
}

void SynthesisProblem::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("mu must be positive");
  if (!(varphi > 0.0) || !std::isfinite(varphi)) throw DomainError("varphi must be positive");
}

double strictness_epsilon(std::span<const MatrixXd> vertices, double mu) {
  double scale = mu;
  for (const auto& h : vertices) scale = std::max(scale, symmetric_norm(h));
  return 1e-6 * scale;
}

double strictness_epsilon(const HessianPolytope<double>& poly, double mu) {
  return strictness_epsilon(std::span<const MatrixXd>(poly.vertices()), mu);
}

namespace {

MatrixXd embed(const MatrixXd& top_left, const MatrixXd& top_right, const MatrixXd& bottom_right) {
  const auto n = top_left.rows();
  MatrixXd out(2 * n, 2 * n);
  out << top_left, top_right, top_right.transpose(), bottom_right;
  return out;
}

LmiBlock definite_block(const DecisionLayout& layout, bool for_x, double eps) {
  const auto n = layout.dim();
  LmiBlock block(for_x ? "X > 0" : "M > 0", MatrixXd::Zero(n, n), Sense::kPositiveDefinite, eps);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      block.add_term(for_x ? layout.x_index(i, j) : layout.m_index(i, j), layout.symmetric_basis(i, j));
    }
  }
  return block;
}

LmiBlock vertex_lmi(const DecisionLayout& layout, const MatrixXd& h, double mu, double eps, std::size_t index) {
  const auto n = layout.dim();
  const MatrixXd zero = MatrixXd::Zero(n, n);
  const MatrixXd eye = MatrixXd::Identity(n, n);
  LmiBlock block("vertex " + std::to_string(index + 1), embed(0.25 * mu * eye, zero, -mu * eye),
                 Sense::kNegativeDefinite, eps);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      block.add_term(layout.m_index(i, j), embed(layout.symmetric_basis(i, j), zero, zero));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // H E_ij has H's column i in column j.
      MatrixXd he = MatrixXd::Zero(n, n);
      he.col(j) = h.col(i);
      block.add_term(layout.l_index(i, j), embed(he + he.transpose(), he.transpose(), zero));
    }
  }
  return block;
}

void check_polytope_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError("mu must be positive");
}

}  // namespace

AssembledProblem assemble_feasibility(std::span<const MatrixXd> vertices, double mu) {
  check_polytope_mu(mu);
  if (vertices.empty()) throw DomainError("assemble_feasibility: no vertices");
  const auto n = vertices.front().rows();
  for (const auto& h : vertices) {
    if (h.rows() != n || h.cols() != n) throw DomainError("assemble_feasibility: vertex dimensions differ");
    require_symmetric(h, 1e-12, "vertex");
  }
  AssembledProblem out{DecisionLayout(n, false), {}, VectorXd(), strictness_epsilon(vertices, mu)};
  out.blocks.push_back(definite_block(out.layout, true, out.epsilon_strict));
  out.blocks.push_back(definite_block(out.layout, false, out.epsilon_strict));
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    out.blocks.push_back(vertex_lmi(out.layout, symmetric_part(vertices[i]), mu, out.epsilon_strict, i));
  }
  return out;
}

AssembledProblem assemble_feasibility(const HessianPolytope<double>& poly, double mu) {
  return assemble_feasibility(std::span<const MatrixXd>(poly.vertices()), mu);
}

AssembledProblem assemble_min_rho(const HessianPolytope<double>& poly, double mu, double varphi) {
  check_polytope_mu(mu);
  if (!(varphi > 0.0) || !std::isfinite(varphi)) throw DomainError("varphi must be positive");
  const auto n = poly.dim();
  AssembledProblem out{DecisionLayout(n, true), {}, VectorXd(), strictness_epsilon(poly, mu)};
  const AssembledProblem base = assemble_feasibility(poly, mu);
  // Same variable order for X, M, L; ρ is appended last.
  out.blocks = base.blocks;

  const MatrixXd zero = MatrixXd::Zero(n, n);
  const MatrixXd eye = MatrixXd::Identity(n, n);
  LmiBlock phi_block("[[phi I, I], [I, X]] >= 0", embed(varphi * eye, eye, zero), Sense::kPositiveSemidefinite);
  LmiBlock rho_block("[[M, X], [X, rho I]] >= 0", MatrixXd::Zero(2 * n, 2 * n), Sense::kPositiveSemidefinite);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const MatrixXd s = out.layout.symmetric_basis(i, j);
      phi_block.add_term(out.layout.x_index(i, j), embed(zero, zero, s));
      rho_block.add_term(out.layout.x_index(i, j), embed(zero, s, zero));
      rho_block.add_term(out.layout.m_index(i, j), embed(s, zero, zero));
    }
  }
  rho_block.add_term(out.layout.rho_index(), embed(zero, zero, eye));
  out.blocks.push_back(std::move(phi_block));
  out.blocks.push_back(std::move(rho_block));
  out.objective = VectorXd::Zero(out.layout.num_variables());
  out.objective[out.layout.rho_index()] = 1.0;
  return out;
}

MatrixXd recover_gain(const MatrixXd& x, const MatrixXd& l) {
  if (x.rows() != x.cols() || l.cols() != x.rows()) {
    throw DomainError("recover_gain: dimension mismatch");
  }
  const MatrixXd xs = symmetric_part(x);
  Eigen::LLT<MatrixXd> llt(xs);
  if (llt.info() != Eigen::Success || !is_positive_definite(xs)) {
    throw NumericalError("recover_gain: X is not positive definite to working precision");
  }
  // X Kᵀ = Lᵀ since X is symmetric.
  const MatrixXd k = llt.solve(l.transpose()).transpose();
  if (!k.allFinite()) throw NumericalError("recover_gain: non-finite gain");
  return k;
}

ReachingTime reaching_time_bound(const MatrixXd& p, const MatrixXd& q, const VectorXd& g0) {
  const double norm = g0.norm();
  if (!(norm > 0.0)) throw DomainError("reaching time bound needs a nonzero initial gradient");
  if (!is_positive_definite(p) || !is_positive_definite(q)) {
    throw DomainError("reaching time bound needs positive definite P and Q");
  }
  const double v0 = g0.dot(p * g0) / norm;
  return {v0, v0 / lambda_min(q)};
}

CertificateReport check_certificate(const SynthesisResult& result, const HessianPolytope<double>& poly, double mu,
                                    double tol) {
  return check_certificate<double>(result.x, result.m, result.k, poly, mu, tol);
}

namespace {

SynthesisResult finish_result(const MatrixXd& x, const MatrixXd& m, const MatrixXd& l, const SdpSolution& solution,
                              const HessianPolytope<double>& poly, double mu, SolverBackend& backend) {
  SynthesisResult result;
  result.x = symmetric_part(x);
  result.m = symmetric_part(m);
  result.l = l;
  result.mu = mu;
  result.solver_status = to_string(solution.status);
  result.backend = backend.capabilities().name;
  result.solver_gap_bound = solution.gap_bound;
  result.newton_steps = solution.newton_steps;
  if (!is_positive_definite(result.x)) {
    throw ToleranceViolation("backend returned an X that is not positive definite");
  }
  try {
    result.k = recover_gain(result.x, result.l);
  } catch (const NumericalError& e) {
    throw SolverFailure(e.what());
  }
  Eigen::LLT<MatrixXd> llt(result.x);
  result.p = symmetric_part(llt.solve(MatrixXd::Identity(x.rows(), x.cols())));
  result.q = symmetric_part(result.p * result.m * result.p);
  result.certificate = check_certificate<double>(result.x, result.m, result.k, poly, mu);
  return result;
}

std::string describe_failure(const CertificateReport& report) {
  std::ostringstream msg;
  msg << "verifier rejected the backend assignment:";
  for (const auto& b : report.blocks) {
    if (!b.passed) msg << " [" << b.label << ": worst eigenvalue " << b.worst_eigenvalue << "]";
  }
  return msg.str();
}

}  // namespace

SynthesisResult solve(const SynthesisProblem& problem, SolverBackend& backend) {
  problem.validate();
  const auto& poly = problem.polytope;
  AssembledProblem assembled = problem.objective == Objective::kMinimizeRho
                                   ? assemble_min_rho(poly, problem.mu, problem.varphi)
                                   : assemble_feasibility(poly, problem.mu);
  if (problem.objective == Objective::kFeasibility) {
    // K = L X⁻¹ has a free scale in X; pin it with X ≼ I.
    const auto n = poly.dim();
    LmiBlock normalization("X <= I (scale normalization)", MatrixXd::Identity(n, n), Sense::kPositiveSemidefinite);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        normalization.add_term(assembled.layout.x_index(i, j), -assembled.layout.symmetric_basis(i, j));
      }
    }
    assembled.blocks.push_back(std::move(normalization));
  }

  const SdpSolution solution = backend.solve(assembled.to_sdp());
  if (solution.status == SdpStatus::kInfeasible) {
    throw Infeasible("synthesis LMIs infeasible (" + solution.message + ")");
  }
  if (solution.status == SdpStatus::kFailure) {
    throw SolverFailure("SDP backend failure (" + solution.message + ")");
  }
  const auto& layout = assembled.layout;
  SynthesisResult result = finish_result(layout.x(solution.x), layout.m(solution.x), layout.l(solution.x), solution,
                                         poly, problem.mu, backend);
  result.varphi = problem.varphi;
  result.objective = problem.objective;
  result.epsilon_strict = assembled.epsilon_strict;
  if (layout.has_rho()) {
    result.rho = layout.rho(solution.x);
    result.certificate.append(check_reaching_couplings<double>(result.x, result.m, *result.rho, problem.varphi));
  }
  if (!result.certificate.passed()) {
    throw ToleranceViolation(describe_failure(result.certificate));
  }
  return result;
}

MuSearchResult optimize_mu(const HessianPolytope<double>& poly, double varphi, SolverBackend& backend, double mu_lo,
                           double mu_hi, int iterations) {
  if (!(mu_lo > 0.0) || !(mu_hi > mu_lo)) throw DomainError("mu search needs 0 < mu_lo < mu_hi");
  MuSearchResult out{0.0, {}, {}};
  double best = std::numeric_limits<double>::infinity();
  auto rho_at = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    double rho = std::numeric_limits<double>::infinity();
    try {
      SynthesisResult r = solve({poly, mu, varphi, Objective::kMinimizeRho}, backend);
      rho = *r.rho;
      if (rho < best) {
        best = rho;
        out.mu = mu;
        out.result = std::move(r);
      }
    } catch (const Infeasible&) {
    } catch (const ToleranceViolation&) {
    } catch (const SolverFailure&) {
    }
    out.evaluations.emplace_back(mu, rho);
    return rho;
  };
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(mu_lo);
  double b = std::log(mu_hi);
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = rho_at(c);
  double fd = rho_at(d);
  for (int it = 0; it < iterations; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = rho_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = rho_at(d);
    }
  }
  if (!std::isfinite(best)) throw Infeasible("no feasible mu in the search interval");
  return out;
}

SynthesisResult certify_gain(const MatrixXd& k, const HessianPolytope<double>& poly, double mu,
                             SolverBackend& backend) {
  check_polytope_mu(mu);
  const auto n = poly.dim();
  if (k.rows() != n || k.cols() != n || !k.allFinite()) {
    throw DomainError("gain dimension does not match the polytope");
  }
  // Variables: X (upper triangle) then M (upper triangle).
  const DecisionLayout layout(n, false);
  const int sym = static_cast<int>(n * (n + 1) / 2);
  const double eps = strictness_epsilon(poly, mu);
  const MatrixXd zero = MatrixXd::Zero(n, n);
  const MatrixXd eye = MatrixXd::Identity(n, n);

  SdpProblem sdp;
  sdp.num_variables = 2 * sym;
  LmiBlock xb("X > 0", zero, Sense::kPositiveDefinite, eps);
  LmiBlock mb("M > 0", zero, Sense::kPositiveDefinite, eps);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      xb.add_term(layout.x_index(i, j), layout.symmetric_basis(i, j));
      mb.add_term(layout.m_index(i, j), layout.symmetric_basis(i, j));
    }
  }
  sdp.blocks.push_back(std::move(xb));
  sdp.blocks.push_back(std::move(mb));
  for (std::size_t v = 0; v < poly.size(); ++v) {
    const MatrixXd hk = poly.vertex(v) * k;
    LmiBlock block("vertex " + std::to_string(v + 1), embed(0.25 * mu * eye, zero, -mu * eye),
                   Sense::kNegativeDefinite, eps);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const MatrixXd s = layout.symmetric_basis(i, j);
        const MatrixXd hks = hk * s;  // H L with L = K S
        block.add_term(layout.x_index(i, j), embed(hks + hks.transpose(), hks.transpose(), zero));
        block.add_term(layout.m_index(i, j), embed(s, zero, zero));
      }
    }
    sdp.blocks.push_back(std::move(block));
  }

  const SdpSolution solution = backend.solve(sdp);
  if (solution.status == SdpStatus::kInfeasible) {
    throw Infeasible("no certificate exists for the given gain (" + solution.message + ")");
  }
  if (solution.status == SdpStatus::kFailure) {
    throw SolverFailure("SDP backend failure (" + solution.message + ")");
  }
  const MatrixXd x = layout.x(solution.x);
  SynthesisResult result = finish_result(x, layout.m(solution.x), k * x, solution, poly, mu, backend);
  result.k = k;
  result.objective = Objective::kFeasibility;
  result.epsilon_strict = eps;
  if (!result.certificate.passed()) {
    throw ToleranceViolation(describe_failure(result.certificate));
  }
  return result;
}

}  // namespace uvesc
