#include "uvesc/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "uvesc/acceptance.hpp"
#include "uvesc/errors.hpp"
#include "uvesc/report.hpp"
#include "uvesc/sdp.hpp"
#include "uvesc/simulator.hpp"
#include "uvesc/synthesis.hpp"
#include "uvesc/verifier.hpp"

namespace uvesc {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const json::exception*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kExitConfigError;
  }
  if (dynamic_cast<const Infeasible*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const ToleranceViolation*>(&e)) return kExitVerifierRejection;
  return kExitNumerical;
}

namespace {

constexpr int kDecreaseSamples = 1000;

const char* status_for(int code) {
  switch (code) {
    case kExitOk: return "ok";
    case kExitVerifyFailed: return "verification_failed";
    case kExitInfeasible: return "infeasible";
    case kExitVerifierRejection: return "verifier_rejection";
    case kExitConfigError: return "config_error";
    default: return "numerical_error";
  }
}

// Runs `body`, turning exceptions into exit codes, and writes the report.
template <typename Body>
CommandResult guarded(const std::string& command, const fs::path& report_path, Body&& body) {
  CommandResult res;
  res.report["header"] = report_header(command);
  try {
    body(res);
  } catch (const std::exception& e) {
    res.exit_code = exit_code_for(e);
    res.message = e.what();
    res.report["error"] = e.what();
  }
  res.report["status"] = status_for(res.exit_code);
  if (!report_path.empty()) {
    try {
      write_json_atomic(report_path, res.report);
    } catch (const std::exception& e) {
      if (res.exit_code == kExitOk) {
        res.exit_code = kExitConfigError;
        res.message = e.what();
      }
    }
  }
  return res;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

SynthesisResult synthesize(const ExperimentConfig& cfg, const HessianPolytope<double>& poly, SolverBackend& backend,
                           json* search_log = nullptr) {
  if (cfg.synthesis.mu_search) {
    const auto& s = *cfg.synthesis.mu_search;
    MuSearchResult found = optimize_mu(poly, cfg.synthesis.varphi, backend, s.lo, s.hi, s.iterations);
    if (search_log) {
      json evals = json::array();
      for (const auto& [mu, rho] : found.evaluations) {
        evals.push_back({{"mu", mu}, {"rho", std::isfinite(rho) ? json(rho) : json(nullptr)}});
      }
      *search_log = {{"lo", s.lo}, {"hi", s.hi}, {"best_mu", found.mu}, {"evaluations", evals}};
    }
    return std::move(found.result);
  }
  return solve({poly, cfg.synthesis.mu, cfg.synthesis.varphi, cfg.synthesis.objective}, backend);
}

struct Derived {
  MatrixXd p;
  MatrixXd q;
};

std::optional<Derived> derive_pq(const MatrixXd& x, const MatrixXd& m) {
  const MatrixXd xs = symmetric_part(x);
  if (!is_positive_definite(xs)) return std::nullopt;
  Eigen::LLT<MatrixXd> llt(xs);
  const MatrixXd p = symmetric_part(llt.solve(MatrixXd::Identity(x.rows(), x.cols())));
  return Derived{p, symmetric_part(p * symmetric_part(m) * p)};
}

// λmax(HᵢK + KᵀHᵢ) per vertex.
json vertex_symmetric_parts(const MatrixXd& k, const HessianPolytope<double>& poly) {
  json out = json::array();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const MatrixXd hk = poly.vertex(i) * k;
    out.push_back(lambda_max(MatrixXd(hk + hk.transpose())));
  }
  return out;
}

json reaching_time_json(const SynthesisResult& r, const VectorXd& g0) {
  json j{{"g0", to_json(g0)}};
  const ReachingTime rt = reaching_time_bound(r.p, r.q, g0);
  j["v0"] = rt.v0;
  j["bound"] = rt.bound;
  // V is homogeneous of degree one, so V(g0) = 1 gives 1/λmin(Q).
  j["unit_level_bound"] = 1.0 / lambda_min(r.q);
  if (r.rho) j["unit_level_bound_le_rho"] = 1.0 / lambda_min(r.q) <= *r.rho * (1.0 + 1e-9);
  return j;
}

struct GainSource {
  MatrixXd k;
  std::optional<Derived> pq;
  std::optional<double> rho;
  std::string origin;
};

MatrixXd require_square(const json& j, const std::string& what, Eigen::Index n) {
  MatrixXd m = matrix_from_json(j, what);
  if (m.rows() != n || m.cols() != n) throw ConfigError(what + " must be " + std::to_string(n) + "x" + std::to_string(n));
  return m;
}

GainSource load_gain(const ExperimentConfig& cfg, const HessianPolytope<double>& poly,
                     const std::optional<fs::path>& file) {
  const auto n = poly.dim();
  GainSource src;
  if (!file) {
    BarrierSdpSolver backend;
    SynthesisResult r = synthesize(cfg, poly, backend);
    src.k = r.k;
    src.pq = Derived{r.p, r.q};
    src.rho = r.rho;
    src.origin = "synthesized";
    return src;
  }
  const json j = read_json_file(*file);
  if (j.contains("synthesis")) {
    const json& s = j["synthesis"];
    if (!s.is_object() || !s.contains("K")) throw ConfigError(file->string() + ": synthesis.K missing");
    src.k = require_square(s["K"], "synthesis.K", n);
    if (s.contains("P") && s.contains("Q")) {
      src.pq = Derived{require_square(s["P"], "synthesis.P", n), require_square(s["Q"], "synthesis.Q", n)};
    }
    if (s.contains("rho") && s["rho"].is_number()) src.rho = s["rho"].get<double>();
  } else if (j.contains("K")) {
    src.k = require_square(j["K"], "K", n);
  } else {
    throw ConfigError(file->string() + " has neither K nor synthesis");
  }
  src.origin = file->string();
  return src;
}

double tail_max(const std::vector<double>& times, double from, const std::function<double(std::size_t)>& f) {
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= from) worst = std::max(worst, f(i));
  }
  return worst;
}

}  // namespace

CommandResult cmd_synthesize(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return guarded("synthesize", out_dir / "synthesis.json", [&](CommandResult& res) {
    const HessianPolytope<double> poly = cfg.polytope.build();
    BarrierSdpSolver backend;
    json search;
    const SynthesisResult r = synthesize(cfg, poly, backend, &search);
    res.report["synthesis"] = to_json(r);
    res.report["certificate"] = to_json(r.certificate);
    res.report["vertex_symmetric_part_lambda_max"] = vertex_symmetric_parts(r.k, poly);
    if (!search.is_null()) res.report["mu_search"] = search;

    const ResolvedMap rm = resolve_map(cfg, poly);
    const VectorXd g0 = rm.map.hessian * (cfg.simulation.theta0 - cfg.map.theta_star);
    if (g0.norm() > 0.0) res.report["reaching_time"] = reaching_time_json(r, g0);

    json gain{{"header", res.report["header"]}, {"K", to_json(r.k)}, {"mu", r.mu}};
    write_json_atomic(out_dir / "gain.json", gain);
    std::ostringstream msg;
    msg << "synthesize: ok, mu = " << r.mu;
    if (r.rho) msg << ", rho = " << *r.rho;
    msg << ", min verifier margin = " << r.certificate.min_margin();
    res.message = msg.str();
  });
}

CommandResult cmd_verify(const ExperimentConfig& cfg, const fs::path& input, const fs::path& out_dir) {
  return guarded("verify", out_dir / "verify.json", [&](CommandResult& res) {
    const HessianPolytope<double> poly = cfg.polytope.build();
    const auto n = poly.dim();
    const json j = read_json_file(input);
    res.report["input"] = input.string();

    CertificateReport cert;
    std::optional<Derived> pq;
    MatrixXd k;
    double mu = cfg.synthesis.mu;
    bool passed = false;
    if (j.contains("synthesis")) {
      const json& s = j["synthesis"];
      if (!s.is_object()) throw ConfigError("synthesis must be an object");
      const MatrixXd x = require_square(s.at("X"), "synthesis.X", n);
      const MatrixXd m = require_square(s.at("M"), "synthesis.M", n);
      k = require_square(s.at("K"), "synthesis.K", n);
      if (!s.at("mu").is_number()) throw ConfigError("synthesis.mu must be a number");
      mu = s["mu"].get<double>();
      if (!(mu > 0.0)) throw ConfigError("synthesis.mu must be positive");
      res.report["mode"] = "certificate";
      cert = check_certificate<double>(x, m, k, poly, mu);
      if (s.contains("rho") && s["rho"].is_number() && s.contains("varphi") && s["varphi"].is_number()) {
        cert.append(check_reaching_couplings<double>(x, m, s["rho"].get<double>(), s["varphi"].get<double>()));
      }
      pq = derive_pq(x, m);
      passed = cert.passed();
    } else if (j.contains("K")) {
      k = require_square(j["K"], "K", n);
      if (j.contains("mu")) {
        if (!j["mu"].is_number()) throw ConfigError("mu must be a number");
        mu = j["mu"].get<double>();
      }
      if (!(mu > 0.0)) throw ConfigError("a positive mu is needed to certify a bare gain");
      res.report["mode"] = "gain";
      BarrierSdpSolver backend;
      try {
        const SynthesisResult r = certify_gain(k, poly, mu, backend);
        cert = r.certificate;
        pq = Derived{r.p, r.q};
        res.report["certificate_variables"] = {{"X", to_json(r.x)}, {"M", to_json(r.m)}};
        passed = cert.passed();
      } catch (const Infeasible& e) {
        res.report["certificate_search"] = e.what();
      }
    } else {
      throw ConfigError(input.string() + " has neither K nor synthesis");
    }
    res.report["mu"] = mu;
    res.report["K"] = to_json(k);
    res.report["certificate"] = to_json(cert);
    res.report["vertex_symmetric_part_lambda_max"] = vertex_symmetric_parts(k, poly);
    if (pq) {
      const CertificateReport descent = check_descent_condition<double>(k, pq->p, pq->q, mu, poly);
      res.report["descent_condition"] = to_json(descent);
      passed = passed && descent.passed();
      const DecreaseReport decrease = check_finite_time_decrease<double>(k, pq->p, poly, kDecreaseSamples,
                                                                         kDefaultVerifierSeed, &pq->q);
      res.report["finite_time_decrease"] = to_json(decrease);
      passed = passed && decrease.passed();
    }
    res.report["passed"] = passed;
    if (!passed) res.exit_code = kExitVerifyFailed;
    std::ostringstream msg;
    msg << "verify: " << (passed ? "pass" : "fail");
    if (!cert.blocks.empty()) msg << ", min certificate margin = " << cert.min_margin();
    res.message = msg.str();
  });
}

CommandResult cmd_simulate(const ExperimentConfig& cfg_in, const SimulateOptions& options, const fs::path& out_dir) {
  const bool full = options.mode == SimulationMode::kFull;
  return guarded("simulate", out_dir / (full ? "simulate.json" : "average.json"), [&](CommandResult& res) {
    ExperimentConfig cfg = cfg_in;
    if (options.seed) cfg.map.hessian.seed = *options.seed;
    if (!(options.omega_scale > 0.0)) throw ConfigError("omega scale must be positive");
    const HessianPolytope<double> poly = cfg.polytope.build();
    const GainSource gain = load_gain(cfg, poly, options.gain_file);
    const ResolvedMap rm = resolve_map(cfg, poly);
    res.report["mode"] = full ? "full" : "average";
    res.report["gain"] = {{"K", to_json(gain.k)}, {"origin", gain.origin}};
    res.report["hessian"] = to_json(rm.map.hessian);
    if (rm.alpha) {
      res.report["alpha"] = to_json(*rm.alpha);
      res.report["seed"] = cfg.map.hessian.seed;
    }

    if (full) {
      const SimConfig sim = make_sim_config(cfg, rm.map, gain.k, options.omega_scale);
      const Trace trace = simulate_full(sim);
      std::ostringstream csv;
      write_trace_csv(csv, trace, cfg.dim());
      write_text_atomic(out_dir / "trace.csv", csv.str());
      json s{{"omega_scale", options.omega_scale},
             {"base_frequency", sim.dither.base_frequency()},
             {"dt", sim.dt},
             {"t_end", sim.t_end},
             {"samples", trace.size()},
             {"settle_band", cfg.simulation.settle_band}};
      if (!trace.empty()) {
        const VectorXd& ts = rm.map.theta_star;
        const double q = rm.map.q_star;
        s["final_error"] = (trace.theta_hat.back() - ts).norm();
        s["final_output_error"] = std::abs(trace.y.back() - q);
        const auto settle = measure_settling(trace.times, trace.theta_hat, ts, cfg.simulation.settle_band);
        s["settling_time"] = settle ? json(*settle) : json(nullptr);
        const double tail = 0.8 * sim.t_end;
        s["tail_start"] = tail;
        s["tail_max_error"] = tail_max(trace.times, tail, [&](std::size_t i) { return (trace.theta_hat[i] - ts).norm(); });
        s["tail_max_output_error"] = tail_max(trace.times, tail, [&](std::size_t i) { return std::abs(trace.y[i] - q); });
        s["settled"] = settle.has_value();
      }
      res.report["summary"] = s;
      res.message = "simulate: full run written to " + (out_dir / "trace.csv").string();
      return;
    }

    const VectorXd g0 = rm.map.hessian * (cfg.simulation.theta0 - cfg.map.theta_star);
    AverageOptions opts;
    opts.dt = cfg.simulation.average_dt;
    opts.t_end = cfg.simulation.average_t_end;
    opts.eps_stop = cfg.simulation.eps_stop > 0.0 ? cfg.simulation.eps_stop : 10.0 * cfg.simulation.uv_epsilon;
    const AverageRun run = simulate_average(gain.k, rm.map.hessian, g0, opts);
    std::ostringstream csv;
    csv << "tau";
    for (Eigen::Index i = 1; i <= g0.size(); ++i) csv << ",g_" << i;
    csv << '\n';
    csv.precision(17);
    for (std::size_t r = 0; r < run.trace.times.size(); ++r) {
      csv << run.trace.times[r];
      for (Eigen::Index i = 0; i < g0.size(); ++i) csv << ',' << run.trace.g[r][i];
      csv << '\n';
    }
    write_text_atomic(out_dir / "average.csv", csv.str());
    json s{{"time_scale", "tau with omega = 1 (t = tau / omega)"},
           {"g0", to_json(g0)},
           {"dt", opts.dt},
           {"t_end", opts.t_end},
           {"eps_stop", opts.eps_stop},
           {"reach_time", run.reach_time ? json(*run.reach_time) : json(nullptr)},
           {"final_norm", run.trace.g.back().norm()}};
    if (gain.pq) {
      const ReachingTime rt = reaching_time_bound(gain.pq->p, gain.pq->q, g0);
      s["v0"] = rt.v0;
      s["bound"] = rt.bound;
      s["bound_respected"] = run.reach_time.has_value() && *run.reach_time <= rt.bound + opts.dt;
    }
    if (gain.rho) s["rho"] = *gain.rho;
    res.report["summary"] = s;
    res.message = "simulate: average run written to " + (out_dir / "average.csv").string();
  });
}

CommandResult cmd_reproduce_example(const fs::path& out_dir, std::optional<std::uint64_t> seed) {
  return guarded("reproduce-paper", out_dir / "summary.json", [&](CommandResult& res) {
    ExperimentConfig cfg = parse_config(example_config_json());
    if (seed) cfg.map.hessian.seed = *seed;
    cfg.output_dir = out_dir;
    write_json_atomic(out_dir / "config.json", config_to_json(cfg));
    const HessianPolytope<double> poly = cfg.polytope.build();

    json stages = json::array();
    auto record = [&](const std::string& name, const CommandResult& r) {
      stages.push_back({{"stage", name}, {"exit_code", r.exit_code}, {"message", r.message}});
      if (r.exit_code != kExitOk && res.exit_code == kExitOk) res.exit_code = r.exit_code;
      return r.exit_code == kExitOk;
    };

    const bool synthesized = record("synthesize", cmd_synthesize(cfg, out_dir));
    if (synthesized) record("verify", cmd_verify(cfg, out_dir / "synthesis.json", out_dir));

    // The reference gain, checked by arithmetic and by a certificate search.
    record("reference_gain", guarded("reference-gain", out_dir / "reference_gain.json", [&](CommandResult& r) {
      const MatrixXd kp = reference_gain();
      const MatrixXd h0 = *cfg.polytope.h0;
      const MatrixXd prod = h0 * kp;
      const double diag = -0.5 * prod.trace();
      const MatrixXd residual = prod + 13.163 * MatrixXd::Identity(2, 2);
      r.report["K"] = to_json(kp);
      r.report["H0_K"] = to_json(prod);
      r.report["mean_diagonal_of_minus_H0_K"] = diag;
      r.report["residual_inf_norm"] = residual.cwiseAbs().rowwise().sum().maxCoeff();
      r.report["vertex_symmetric_part_lambda_max"] = vertex_symmetric_parts(kp, poly);
      BarrierSdpSolver backend;
      const SynthesisResult c = certify_gain(kp, poly, cfg.synthesis.mu, backend);
      r.report["certificate"] = to_json(c.certificate);
    }));

    if (synthesized) {
      const fs::path synthesis_file = out_dir / "synthesis.json";
      record("simulate_full", cmd_simulate(cfg, {SimulationMode::kFull, {}, 1.0, synthesis_file}, out_dir));
      record("simulate_average", cmd_simulate(cfg, {SimulationMode::kAverage, {}, 1.0, synthesis_file}, out_dir));
      record("averaging_sweep", guarded("averaging-sweep", out_dir / "averaging.json", [&](CommandResult& r) {
        const GainSource gain = load_gain(cfg, poly, synthesis_file);
        const ResolvedMap rm = resolve_map(cfg, poly);
        const SimConfig sim = make_sim_config(cfg, rm.map, gain.k);
        std::vector<double> omegas;
        for (double s : cfg.simulation.omega_scales) omegas.push_back(s * cfg.dither.base_frequency);
        json rows = json::array();
        for (const GapSample& g : averaging_gap(sim, omegas)) {
          rows.push_back({{"omega", g.omega}, {"sup_gap", g.sup_gap}, {"dt", g.dt}});
        }
        r.report["gaps"] = rows;
      }));
    }

    const auto start = std::chrono::steady_clock::now();
    const std::vector<CriterionResult> criteria = run_all_criteria(cfg);
    json matrix = json::array();
    std::string lines;
    int passed = 0;
    for (const auto& c : criteria) {
      matrix.push_back(c.to_json());
      lines += c.summary() + "\n";
      passed += c.passed() ? 1 : 0;
    }
    write_json_atomic(out_dir / "acceptance.json",
                      {{"header", report_header("acceptance")}, {"criteria", matrix}, {"passed", passed},
                       {"total", static_cast<int>(criteria.size())}});
    write_text_atomic(out_dir / "acceptance.txt", lines);
    res.report["acceptance_runtime_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.report["stages"] = stages;
    res.report["acceptance_passed"] = passed;
    res.report["acceptance_total"] = static_cast<int>(criteria.size());
    res.message = "reproduce-paper: bundle in " + out_dir.string() + ", acceptance " + std::to_string(passed) + "/" +
                  std::to_string(criteria.size()) + "\n" + lines;
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Unit-vector extremum seeking: LMI gain synthesis, certificate checks and closed-loop simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string input;
  std::string mode = "full";
  std::string gain_file;
  std::uint64_t seed = 0;
  double omega_scale = 1.0;

  auto* syn = app.add_subcommand("synthesize", "Solve the LMI program and write synthesis.json and gain.json");
  syn->add_option("--config", config_path, "Experiment config (JSON)")->required();
  syn->add_option("--out", out_dir, "Output directory (default: output.dir of the config)");

  auto* ver = app.add_subcommand("verify", "Check a gain.json or synthesis.json against the config polytope");
  ver->add_option("--config", config_path, "Experiment config (JSON)")->required();
  ver->add_option("input", input, "gain.json or synthesis.json")->required();
  ver->add_option("--out", out_dir, "Output directory");

  auto* sim = app.add_subcommand("simulate", "Simulate the full dithered loop or the average system");
  sim->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sim->add_option("--mode", mode, "full | average")->check(CLI::IsMember({"full", "average"}));
  auto* seed_opt = sim->add_option("--seed", seed, "Seed of the sampled Hessian (overrides the config)");
  sim->add_option("--omega-scale", omega_scale, "Multiplies the dither base frequency")->check(CLI::PositiveNumber);
  sim->add_option("--gain", gain_file, "gain.json or synthesis.json (default: synthesize from the config)");
  sim->add_option("--out", out_dir, "Output directory");

  auto* rep = app.add_subcommand("reproduce-paper", "Run the built-in numerical example end to end");
  auto* rep_seed = rep->add_option("--seed", seed, "Seed of the sampled Hessian");
  rep->add_option("--out", out_dir, "Bundle directory (default: example_bundle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfigError;
  }

  CommandResult res;
  try {
    if (rep->parsed()) {
      std::optional<std::uint64_t> s;
      if (rep_seed->count() > 0) s = seed;
      res = cmd_reproduce_example(out_dir.empty() ? fs::path("example_bundle") : fs::path(out_dir), s);
    } else {
      const ExperimentConfig cfg = load_config(config_path);
      const fs::path out = out_dir.empty() ? cfg.output_dir : fs::path(out_dir);
      if (syn->parsed()) {
        res = cmd_synthesize(cfg, out);
      } else if (ver->parsed()) {
        res = cmd_verify(cfg, input, out);
      } else {
        SimulateOptions opts;
        opts.mode = mode == "average" ? SimulationMode::kAverage : SimulationMode::kFull;
        if (seed_opt->count() > 0) opts.seed = seed;
        opts.omega_scale = omega_scale;
        if (!gain_file.empty()) opts.gain_file = gain_file;
        res = cmd_simulate(cfg, opts, out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  (res.exit_code == kExitOk ? std::cout : std::cerr) << res.message << "\n";
  return res.exit_code;
}

}  // namespace uvesc
