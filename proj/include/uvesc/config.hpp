#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvesc/dither.hpp"
#include "uvesc/polytope.hpp"
#include "uvesc/simulator.hpp"
#include "uvesc/synthesis.hpp"

namespace uvesc {

using json = nlohmann::json;

/// Either H0 with a relative spread, or an explicit vertex list.
struct PolytopeSpec {
  std::optional<MatrixXd> h0;
  double delta_bar = 0.0;
  std::vector<MatrixXd> vertices;

  HessianPolytope<double> build() const;
};

struct MuSearchSpec {
  double lo = 1.0;
  double hi = 1000.0;
  int iterations = 30;
};

struct SynthesisSpec {
  double mu = 0.0;
  double varphi = 0.0;
  Objective objective = Objective::kMinimizeRho;
  std::optional<MuSearchSpec> mu_search;
};

struct DitherSpec {
  VectorXd amplitudes;
  std::vector<int> multipliers;
  double base_frequency = 0.0;  // rad/s

  DitherConfig<double> build(double omega_scale = 1.0) const;
};

/// The simulated Hessian: an explicit matrix or a seeded draw from the polytope.
struct HessianSelection {
  enum class Kind { kSampled, kExplicit };
  Kind kind = Kind::kSampled;
  std::uint64_t seed = 0;
  MatrixXd matrix;
};

struct MapConfig {
  double q_star = 0.0;
  VectorXd theta_star;
  HessianSelection hessian;
};

struct SimulationSpec {
  VectorXd theta0;
  double t_end = 10.0;           // s
  double dt = 0.0;               // s; 0 selects the dither step limit
  double uv_epsilon = 1e-6;
  int record_stride = 1;
  Demodulator demodulator;
  double settle_band = 0.3;      // for ‖θ̂ − θ*‖
  double eps_stop = 0.0;         // 0 selects 10·uv_epsilon
  double average_dt = 1e-4;      // τ units
  double average_t_end = 10.0;   // τ units
  std::vector<double> omega_scales{1.0, 2.0, 4.0};
};

struct ExperimentConfig {
  PolytopeSpec polytope;
  SynthesisSpec synthesis;
  DitherSpec dither;
  MapConfig map;
  SimulationSpec simulation;
  std::filesystem::path output_dir = "out";

  /// Cross-section dimension checks. Throws ConfigError.
  void validate() const;
  Eigen::Index dim() const { return map.theta_star.size(); }
};

MatrixXd matrix_from_json(const json& j, const std::string& what);
VectorXd vector_from_json(const json& j, const std::string& what);
json to_json(const MatrixXd& m);
json to_json(const VectorXd& v);

/// Throws ConfigError with the offending field in the message.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
json config_to_json(const ExperimentConfig& cfg);

/// The numerical example shipped with the tool: H0 = [[100, 30], [30, 20]],
/// δ̄ = 0.1, φ = 0.4, μ = 32.9034, θ(0) = [2.5, 6], ω = 10 rad/s with
/// multipliers (1, 7), a = 0.1.
json example_config_json();

/// Reference gain for the example, four decimals.
MatrixXd reference_gain();

struct ResolvedMap {
  MapSpec map;
  std::optional<SimplexPoint<double>> alpha;
};

/// Builds the simulated map; sampled Hessians use the selection seed.
ResolvedMap resolve_map(const ExperimentConfig& cfg, const HessianPolytope<double>& poly);

SimConfig make_sim_config(const ExperimentConfig& cfg, const MapSpec& map, const MatrixXd& gain,
                          double omega_scale = 1.0);

}  // namespace uvesc
