#include "uvesc/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "uvesc/commands.hpp"
#include "uvesc/errors.hpp"
#include "uvesc/report.hpp"
#include "uvesc/sdp.hpp"
#include "uvesc/simulator.hpp"
#include "uvesc/synthesis.hpp"
#include "uvesc/verifier.hpp"

namespace uvesc {

namespace fs = std::filesystem;

bool CriterionResult::passed() const {
  if (checks.empty()) return false;
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return runtime_limit_s <= 0.0 || runtime_s < runtime_limit_s;
}

std::string CriterionResult::summary() const {
  std::ostringstream out;
  out << (passed() ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "):";
  out << std::setprecision(4);
  for (const auto& c : checks) {
    out << " " << c.name << " = " << c.value << " " << c.relation << " " << c.limit << (c.passed ? "" : " [x]") << ";";
  }
  out << " runtime " << std::setprecision(3) << runtime_s << " s";
  if (runtime_limit_s > 0.0) out << " < " << runtime_limit_s << " s" << (runtime_s < runtime_limit_s ? "" : " [x]");
  return out.str();
}

json CriterionResult::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) {
    cs.push_back({{"name", c.name},
                  {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                  {"relation", c.relation},
                  {"limit", c.limit},
                  {"passed", c.passed}});
  }
  return {{"id", id},          {"title", title},     {"passed", passed()}, {"runtime_s", runtime_s},
          {"runtime_limit_s", runtime_limit_s}, {"checks", cs}, {"details", details}};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

AcceptanceCheck at_most(std::string name, double value, double limit) {
  return {std::move(name), value, limit, "<=", value <= limit};
}
AcceptanceCheck below(std::string name, double value, double limit) {
  return {std::move(name), value, limit, "<", value < limit};
}
AcceptanceCheck at_least(std::string name, double value, double limit) {
  return {std::move(name), value, limit, ">=", value >= limit};
}
AcceptanceCheck above(std::string name, double value, double limit) {
  return {std::move(name), value, limit, ">", value > limit};
}
AcceptanceCheck equals(std::string name, double value, double expected) {
  return {std::move(name), value, expected, "==", value == expected};
}

SynthesisResult synthesize_example(const ExperimentConfig& cfg, const HessianPolytope<double>& poly) {
  BarrierSdpSolver backend;
  return solve({poly, cfg.synthesis.mu, cfg.synthesis.varphi, Objective::kMinimizeRho}, backend);
}

CriterionResult synthesis_reproduction(const ExperimentConfig& cfg) {
  CriterionResult res{1, "synthesis reproduction", {}, 0.0, 5.0, json::object()};
  const auto start = Clock::now();
  const auto stamp = Clock::now().time_since_epoch().count();
  const fs::path dir = fs::temp_directory_path() / ("uvesc_acceptance_" + std::to_string(stamp));
  const CommandResult run = cmd_synthesize(cfg, dir);
  res.runtime_s = seconds_since(start);
  res.checks.push_back(equals("synthesize exit code", run.exit_code, kExitOk));

  if (run.exit_code == kExitOk) {
    const HessianPolytope<double> poly = cfg.polytope.build();
    const MatrixXd k = matrix_from_json(run.report["synthesis"]["K"], "K");
    double worst_vertex_margin = std::numeric_limits<double>::infinity();
    for (const auto& b : run.report["certificate"]["blocks"]) {
      if (b["label"].get<std::string>().rfind("vertex", 0) == 0) {
        worst_vertex_margin = std::min(worst_vertex_margin, b["margin"].get<double>());
      }
    }
    res.checks.push_back(above("min vertex block margin", worst_vertex_margin, 0.0));
    double worst_sym = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const MatrixXd hk = poly.vertex(i) * k;
      worst_sym = std::max(worst_sym, lambda_max(MatrixXd(hk + hk.transpose())));
    }
    res.checks.push_back(below("max_i lambda_max(H_i K + K^T H_i)", worst_sym, 0.0));
    res.details["K"] = to_json(k);
    res.details["rho"] = run.report["synthesis"]["rho"];
  }

  const MatrixXd residual = *cfg.polytope.h0 * reference_gain() + 13.163 * MatrixXd::Identity(2, 2);
  const double inf_norm = residual.cwiseAbs().rowwise().sum().maxCoeff();
  res.checks.push_back(at_most("||H0 K_ref + 13.163 I||_inf", inf_norm, 0.02));
  std::error_code ec;
  fs::remove_all(dir, ec);
  return res;
}

CriterionResult average_convergence(const ExperimentConfig& cfg) {
  CriterionResult res{2, "average-system finite-time convergence", {}, 0.0, 5.0, json::object()};
  const auto start = Clock::now();
  const HessianPolytope<double> poly = cfg.polytope.build();
  const SynthesisResult r = synthesize_example(cfg, poly);
  const double rho = *r.rho;
  const double lq = lambda_min(r.q);

  AverageOptions opts;
  opts.dt = cfg.simulation.average_dt;
  opts.t_end = cfg.simulation.average_t_end;
  opts.eps_stop = cfg.simulation.eps_stop > 0.0 ? cfg.simulation.eps_stop : 10.0 * cfg.simulation.uv_epsilon;

  constexpr int kRuns = 20;
  int reached = 0;
  double worst_bound_slack = -std::numeric_limits<double>::infinity();  // reach − (bound + dt)
  double worst_rho_slack = -std::numeric_limits<double>::infinity();    // reach − (ρ + dt)
  double worst_v_increase = -std::numeric_limits<double>::infinity();   // relative to V0
  std::mt19937_64 rng(20240917);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> level(0.05, 1.0);
  json runs = json::array();
  for (int s = 0; s < kRuns; ++s) {
    VectorXd dir(poly.dim());
    for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = normal(rng);
    dir.normalize();
    // V(c·u) = c·uᵀPu for a unit u, so this g0 has V(g0) equal to the drawn level.
    const double v_target = level(rng);
    const VectorXd g0 = dir * (v_target / dir.dot(r.p * dir));
    const auto [alpha, h] = sample_uniform(poly, static_cast<std::uint64_t>(1000 + s));
    const AverageRun run = simulate_average(r.k, h, g0, opts);
    const ReachingTime rt = reaching_time_bound(r.p, r.q, g0);
    double v_prev = rt.v0;
    for (const auto& g : run.trace.g) {
      const double gn = g.norm();
      if (gn <= opts.eps_stop) break;
      const double v = g.dot(r.p * g) / gn;
      worst_v_increase = std::max(worst_v_increase, (v - v_prev) / rt.v0);
      v_prev = v;
    }
    if (run.reach_time) {
      ++reached;
      worst_bound_slack = std::max(worst_bound_slack, *run.reach_time - (rt.bound + opts.dt));
      worst_rho_slack = std::max(worst_rho_slack, *run.reach_time - (rho + opts.dt));
    }
    runs.push_back({{"v0", rt.v0},
                    {"bound", rt.bound},
                    {"reach_time", run.reach_time ? json(*run.reach_time) : json(nullptr)}});
  }
  res.runtime_s = seconds_since(start);
  res.checks.push_back(equals("runs reaching eps_stop", reached, kRuns));
  res.checks.push_back(at_most("max(reach - V0/lambda_min(Q) - dt)", worst_bound_slack, 0.0));
  res.checks.push_back(at_most("max(reach - rho - dt)", worst_rho_slack, 0.0));
  res.checks.push_back(at_most("max V increase between samples / V0", worst_v_increase, 1e-6));
  res.details = {{"rho", rho}, {"lambda_min_Q", lq}, {"eps_stop", opts.eps_stop}, {"dt", opts.dt}, {"runs", runs}};
  return res;
}

CriterionResult full_convergence(const ExperimentConfig& cfg) {
  CriterionResult res{3, "full-system convergence", {}, 0.0, 30.0, json::object()};
  const auto start = Clock::now();
  const HessianPolytope<double> poly = cfg.polytope.build();
  const SynthesisResult r = synthesize_example(cfg, poly);
  double worst_error = 0.0;
  double worst_output = 0.0;
  json seeds = json::array();
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    ExperimentConfig c = cfg;
    c.map.hessian.kind = HessianSelection::Kind::kSampled;
    c.map.hessian.seed = seed;
    c.simulation.record_stride = 1;
    const ResolvedMap rm = resolve_map(c, poly);
    const SimConfig sim = make_sim_config(c, rm.map, r.k);
    const Trace trace = simulate_full(sim);
    const double tail = 0.8 * sim.t_end;
    double err = 0.0;
    double out = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (trace.times[i] < tail) continue;
      err = std::max(err, (trace.theta_hat[i] - rm.map.theta_star).norm());
      out = std::max(out, std::abs(trace.y[i] - rm.map.q_star));
    }
    worst_error = std::max(worst_error, err);
    worst_output = std::max(worst_output, out);
    seeds.push_back({{"seed", seed}, {"alpha", to_json(*rm.alpha)}, {"tail_max_error", err}, {"tail_max_output_error", out}});
  }
  res.runtime_s = seconds_since(start);
  res.checks.push_back(at_most("max tail ||theta_hat - theta*||", worst_error, 0.3));
  res.checks.push_back(at_most("max tail |y - Q*|", worst_output, 1.5));
  res.details = {{"seeds", seeds}, {"K", to_json(r.k)}};
  return res;
}

CriterionResult averaging_order(const ExperimentConfig& cfg) {
  CriterionResult res{4, "averaging order", {}, 0.0, 0.0, json::object()};
  const auto start = Clock::now();
  const HessianPolytope<double> poly = cfg.polytope.build();
  const SynthesisResult r = synthesize_example(cfg, poly);
  ExperimentConfig c = cfg;
  c.map.hessian.kind = HessianSelection::Kind::kSampled;
  const ResolvedMap rm = resolve_map(c, poly);
  const SimConfig sim = make_sim_config(c, rm.map, r.k);
  const std::vector<double> omegas{c.dither.base_frequency, 2.0 * c.dither.base_frequency, 4.0 * c.dither.base_frequency};
  const std::vector<GapSample> gaps = averaging_gap(sim, omegas);
  res.runtime_s = seconds_since(start);
  json rows = json::array();
  for (const auto& g : gaps) rows.push_back({{"omega", g.omega}, {"sup_gap", g.sup_gap}, {"dt", g.dt}});
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    const double ratio = gaps[i].sup_gap / gaps[i - 1].sup_gap;
    std::ostringstream name;
    name << "gap(" << gaps[i].omega << ")/gap(" << gaps[i - 1].omega << ")";
    res.checks.push_back(at_most(name.str(), ratio, 0.67));
  }
  res.details = {{"gaps", rows}};
  return res;
}

CriterionResult dither_identities(const ExperimentConfig& cfg) {
  CriterionResult res{5, "dither identities", {}, 0.0, 1.0, json::object()};
  const auto start = Clock::now();
  const DitherConfig<double> d = cfg.dither.build();
  const auto cp = common_period(d);
  constexpr int kPoints = 4096;
  const double s_avg = signal_average([&](double t) { return perturbation(t, d); }, cp.period, kPoints).norm();
  const double m_avg = signal_average([&](double t) { return demodulation(t, d); }, cp.period, kPoints).norm();
  const double delta_avg = signal_average([&](double t) { return delta_matrix(t, d); }, cp.period, kPoints).norm();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> when(0.0, 100.0);
  double worst_identity = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = when(rng);
    const MatrixXd outer = demodulation(t, d) * perturbation(t, d).transpose();
    const MatrixXd diff = outer - MatrixXd::Identity(d.dim(), d.dim()) - delta_matrix(t, d);
    worst_identity = std::max(worst_identity, diff.norm());
  }
  res.runtime_s = seconds_since(start);
  res.checks.push_back(at_most("|avg S|", s_avg, 1e-8));
  res.checks.push_back(at_most("|avg M|", m_avg, 1e-8));
  res.checks.push_back(at_most("||avg Delta||_F", delta_avg, 1e-8));
  res.checks.push_back(at_most("max ||M S^T - I - Delta||_F", worst_identity, 1e-10));
  res.checks.push_back(at_most("|T - 2 pi / 10|", std::abs(cp.period - 2.0 * std::numbers::pi / 10.0), 1e-12));
  res.details = {{"period", cp.period}, {"quadrature_points", kPoints}};
  return res;
}

// Closed-form eigenvalues of the scalar vertex block [[2hℓ + μ/4 + m, hℓ], [hℓ, −μ]].
struct ScalarBlock {
  double lambda_max;
  double scale;
};

ScalarBlock scalar_block(double h, double l, double m, double mu) {
  const double a = 2.0 * h * l + 0.25 * mu + m;
  const double b = h * l;
  const double c = -mu;
  const double tr = a + c;
  const double det = a * c - b * b;
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double hi = 0.5 * tr + disc;
  const double lo = 0.5 * tr - disc;
  return {hi, std::max(std::abs(hi), std::abs(lo))};
}

bool oracle_feasible(const std::vector<double>& hs, double l, double m, double x, double mu) {
  if (!(x > 0.0) || !(m > 0.0)) return false;
  for (double h : hs) {
    if (!(scalar_block(h, l, m, mu).lambda_max < 0.0)) return false;
  }
  return true;
}

// Brute-force search for a feasible (ℓ, m) of a scalar polytope; x is free.
bool oracle_instance_feasible(const std::vector<double>& hs, double mu) {
  const double hmin = *std::min_element(hs.begin(), hs.end());
  for (int i = 1; i <= 4000; ++i) {
    const double l = -2.0 * mu / hmin * i / 4000.0;
    for (double frac : {1e-4, 1e-2, 0.1}) {
      if (oracle_feasible(hs, l, frac * mu, 1.0, mu)) return true;
    }
  }
  return false;
}

CriterionResult oracle_equivalence(const ExperimentConfig&) {
  CriterionResult res{6, "scalar oracle equivalence", {}, 0.0, 5.0, json::object()};
  const auto start = Clock::now();

  // Part 1: verifier against the closed-form oracle on a grid.
  const std::vector<double> hs{0.9, 1.1};
  const HessianPolytope<double> poly({MatrixXd::Constant(1, 1, hs[0]), MatrixXd::Constant(1, 1, hs[1])});
  long points = 0;
  long oracle_infeasible = 0;
  long accepted_infeasible = 0;
  long oracle_clear = 0;
  long rejected_clear = 0;
  for (int il = 0; il < 64; ++il) {
    const double l = -12.0 + 12.5 * il / 63.0;
    for (double m : {-0.5, 0.013, 0.11, 0.57, 1.3, 3.1}) {
      for (double x : {-1.0, 0.37, 1.0, 2.9}) {
        for (double mu : {0.33, 1.7, 4.0, 9.1, 23.0, 57.0, 131.0}) {
          ++points;
          const MatrixXd xm = MatrixXd::Constant(1, 1, x);
          const MatrixXd mm = MatrixXd::Constant(1, 1, m);
          const MatrixXd k = MatrixXd::Constant(1, 1, l / x);
          const bool verdict = check_certificate<double>(xm, mm, k, poly, mu).passed();
          const bool oracle = oracle_feasible(hs, l, m, x, mu);
          if (!oracle) {
            ++oracle_infeasible;
            accepted_infeasible += verdict ? 1 : 0;
            continue;
          }
          // Compare only where the oracle's margin clears the verifier tolerance comfortably.
          double margin = std::numeric_limits<double>::infinity();
          for (double h : hs) {
            const ScalarBlock b = scalar_block(h, l, m, mu);
            margin = std::min(margin, -b.lambda_max / b.scale);
          }
          if (margin > 1e-6) {
            ++oracle_clear;
            rejected_clear += verdict ? 0 : 1;
          }
        }
      }
    }
  }

  // Part 2: solver verdicts and returned assignments on scalar polytopes.
  long instances = 0;
  long verdict_mismatch = 0;
  long bad_assignments = 0;
  BarrierSdpSolver backend;
  json instance_log = json::array();
  for (double ratio : {1.0, 2.0, 5.0, 10.0, 12.0, 16.0, 20.0, 50.0}) {
    for (double mu : {0.5, 4.0, 32.0}) {
      ++instances;
      const std::vector<double> v{1.0, ratio};
      std::vector<MatrixXd> verts{MatrixXd::Constant(1, 1, v[0])};
      if (ratio != 1.0) verts.push_back(MatrixXd::Constant(1, 1, v[1]));
      const HessianPolytope<double> p(verts);
      const bool oracle = oracle_instance_feasible(v, mu);
      bool solver = false;
      try {
        const SynthesisResult r = solve({p, mu, 1.0, Objective::kFeasibility}, backend);
        solver = true;
        if (!oracle_feasible(v, r.l(0, 0), r.m(0, 0), r.x(0, 0), mu)) ++bad_assignments;
      } catch (const Infeasible&) {
      }
      if (solver != oracle) ++verdict_mismatch;
      instance_log.push_back({{"ratio", ratio}, {"mu", mu}, {"oracle", oracle}, {"solver", solver}});
    }
  }
  // A sign-indefinite pair has no certificate.
  const std::vector<MatrixXd> indefinite{MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, -1.0)};
  const SdpSolution sol = backend.solve(assemble_feasibility(std::span<const MatrixXd>(indefinite), 4.0).to_sdp());
  res.runtime_s = seconds_since(start);

  res.checks.push_back(at_least("grid points", static_cast<double>(points), 1e4));
  res.checks.push_back(equals("oracle-infeasible points accepted by verifier", accepted_infeasible, 0));
  res.checks.push_back(equals("oracle-feasible points rejected by verifier", rejected_clear, 0));
  res.checks.push_back(equals("solver returns violating the scalar block", bad_assignments, 0));
  res.checks.push_back(equals("solver/oracle feasibility mismatches", verdict_mismatch, 0));
  res.checks.push_back(equals("{1, -1} polytope reported infeasible", sol.status == SdpStatus::kInfeasible, 1));
  res.details = {{"grid_points", points},
                 {"oracle_infeasible_points", oracle_infeasible},
                 {"oracle_feasible_points_compared", oracle_clear},
                 {"instances", instance_log}};
  return res;
}

}  // namespace

CriterionResult run_criterion(int id, const ExperimentConfig& cfg) {
  switch (id) {
    case 1: return synthesis_reproduction(cfg);
    case 2: return average_convergence(cfg);
    case 3: return full_convergence(cfg);
    case 4: return averaging_order(cfg);
    case 5: return dither_identities(cfg);
    case 6: return oracle_equivalence(cfg);
  }
  throw DomainError("unknown acceptance criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_all_criteria(const ExperimentConfig& cfg) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    try {
      out.push_back(run_criterion(id, cfg));
    } catch (const std::exception& e) {
      CriterionResult failed{id, "criterion " + std::to_string(id), {}, 0.0, 0.0, {{"error", e.what()}}};
      out.push_back(std::move(failed));
    }
  }
  return out;
}

}  // namespace uvesc
