#include "uvesc/config.hpp"

#include <fstream>

#include "uvesc/errors.hpp"

namespace uvesc {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& why) {
  throw ConfigError(what + ": " + why);
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) fail(what, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(what, "must be finite");
  return v;
}

double positive(const json& j, const std::string& what) {
  const double v = number(j, what);
  if (!(v > 0.0)) fail(what, "must be positive");
  return v;
}

int integer(const json& j, const std::string& what) {
  if (!j.is_number_integer()) fail(what, "expected an integer");
  return j.get<int>();
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) fail(where + "." + key, "missing");
  return *it;
}

template <typename Fn>
void optional_field(const json& j, const char* key, Fn&& fn) {
  if (auto it = j.find(key); it != j.end()) fn(*it);
}

}  // namespace

MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(what, "expected a non-empty row-major nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) fail(what, "expected a non-empty row-major nested array");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) fail(what, "ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number(row[static_cast<std::size_t>(c)], what + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(what, "expected a non-empty array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what + "[" + std::to_string(i) + "]");
  return v;
}

json to_json(const MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

HessianPolytope<double> PolytopeSpec::build() const {
  try {
    if (h0) return build_scaled_polytope(*h0, delta_bar);
    return HessianPolytope<double>(vertices);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("polytope: ") + e.what());
  }
}

DitherConfig<double> DitherSpec::build(double omega_scale) const {
  try {
    return DitherConfig<double>(amplitudes, multipliers, base_frequency * omega_scale);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("dither: ") + e.what());
  }
}

void ExperimentConfig::validate() const {
  const auto n = dim();
  if (n < 1) throw ConfigError("map.theta_star: empty");
  const HessianPolytope<double> poly = polytope.build();
  if (poly.dim() != n) throw ConfigError("polytope dimension does not match map.theta_star");
  if (dither.amplitudes.size() != n) throw ConfigError("dither dimension does not match map.theta_star");
  dither.build();
  if (simulation.theta0.size() != n) throw ConfigError("simulation.theta0 dimension does not match map.theta_star");
  if (map.hessian.kind == HessianSelection::Kind::kExplicit) {
    if (map.hessian.matrix.rows() != n || map.hessian.matrix.cols() != n) {
      throw ConfigError("map.hessian.explicit dimension does not match map.theta_star");
    }
  }
  if (!(synthesis.mu > 0.0) && !synthesis.mu_search) throw ConfigError("synthesis.mu must be positive");
  if (!(synthesis.varphi > 0.0)) throw ConfigError("synthesis.varphi must be positive");
  try {
    simulation.demodulator.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("simulation.") + e.what());
  }
  if (simulation.omega_scales.size() < 2) throw ConfigError("simulation.omega_scales needs at least two entries");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  try {
    const json& poly = field(j, "polytope", "config");
    if (poly.contains("H0")) {
      cfg.polytope.h0 = matrix_from_json(poly["H0"], "polytope.H0");
      cfg.polytope.delta_bar = number(field(poly, "delta_bar", "polytope"), "polytope.delta_bar");
    } else if (poly.contains("vertices")) {
      const json& vs = poly["vertices"];
      if (!vs.is_array() || vs.empty()) fail("polytope.vertices", "expected a non-empty list of matrices");
      for (std::size_t i = 0; i < vs.size(); ++i) {
        cfg.polytope.vertices.push_back(matrix_from_json(vs[i], "polytope.vertices[" + std::to_string(i) + "]"));
      }
    } else {
      fail("polytope", "needs H0 + delta_bar or vertices");
    }

    const json& syn = field(j, "synthesis", "config");
    cfg.synthesis.varphi = positive(field(syn, "varphi", "synthesis"), "synthesis.varphi");
    optional_field(syn, "mu", [&](const json& v) { cfg.synthesis.mu = positive(v, "synthesis.mu"); });
    optional_field(syn, "objective", [&](const json& v) {
      const std::string s = v.is_string() ? v.get<std::string>() : "";
      if (s == "min_rho") {
        cfg.synthesis.objective = Objective::kMinimizeRho;
      } else if (s == "feasibility") {
        cfg.synthesis.objective = Objective::kFeasibility;
      } else {
        fail("synthesis.objective", "expected \"min_rho\" or \"feasibility\"");
      }
    });
    optional_field(syn, "mu_search", [&](const json& v) {
      MuSearchSpec s;
      s.lo = positive(field(v, "lo", "synthesis.mu_search"), "synthesis.mu_search.lo");
      s.hi = positive(field(v, "hi", "synthesis.mu_search"), "synthesis.mu_search.hi");
      optional_field(v, "iterations", [&](const json& it) { s.iterations = integer(it, "synthesis.mu_search.iterations"); });
      if (!(s.hi > s.lo) || s.iterations < 1) fail("synthesis.mu_search", "needs lo < hi and iterations >= 1");
      cfg.synthesis.mu_search = s;
    });

    const json& dit = field(j, "dither", "config");
    cfg.dither.amplitudes = vector_from_json(field(dit, "amplitudes", "dither"), "dither.amplitudes");
    const json& mult = field(dit, "multipliers", "dither");
    if (!mult.is_array()) fail("dither.multipliers", "expected an array of integers");
    for (std::size_t i = 0; i < mult.size(); ++i) {
      cfg.dither.multipliers.push_back(integer(mult[i], "dither.multipliers[" + std::to_string(i) + "]"));
    }
    cfg.dither.base_frequency = positive(field(dit, "base_frequency", "dither"), "dither.base_frequency");

    const json& map = field(j, "map", "config");
    cfg.map.q_star = number(field(map, "q_star", "map"), "map.q_star");
    cfg.map.theta_star = vector_from_json(field(map, "theta_star", "map"), "map.theta_star");
    const json& hs = field(map, "hessian", "map");
    if (hs.contains("explicit")) {
      cfg.map.hessian.kind = HessianSelection::Kind::kExplicit;
      cfg.map.hessian.matrix = matrix_from_json(hs["explicit"], "map.hessian.explicit");
    } else if (hs.contains("sampled")) {
      cfg.map.hessian.kind = HessianSelection::Kind::kSampled;
      const json& seed = field(hs["sampled"], "seed", "map.hessian.sampled");
      if (!seed.is_number_unsigned()) fail("map.hessian.sampled.seed", "expected a non-negative integer");
      cfg.map.hessian.seed = seed.get<std::uint64_t>();
    } else {
      fail("map.hessian", "needs \"explicit\" or \"sampled\"");
    }

    const json& sim = field(j, "simulation", "config");
    auto& s = cfg.simulation;
    s.theta0 = vector_from_json(field(sim, "theta0", "simulation"), "simulation.theta0");
    optional_field(sim, "t_end", [&](const json& v) {
      s.t_end = number(v, "simulation.t_end");
      if (s.t_end < 0.0) fail("simulation.t_end", "must be >= 0");
    });
    optional_field(sim, "dt", [&](const json& v) {
      s.dt = number(v, "simulation.dt");
      if (s.dt < 0.0) fail("simulation.dt", "must be >= 0 (0 selects the dither limit)");
    });
    optional_field(sim, "uv_epsilon", [&](const json& v) { s.uv_epsilon = positive(v, "simulation.uv_epsilon"); });
    optional_field(sim, "record_stride", [&](const json& v) {
      s.record_stride = integer(v, "simulation.record_stride");
      if (s.record_stride < 1) fail("simulation.record_stride", "must be >= 1");
    });
    optional_field(sim, "demodulator", [&](const json& d) {
      optional_field(d, "highpass_ratio", [&](const json& v) { s.demodulator.highpass_ratio = number(v, "simulation.demodulator.highpass_ratio"); });
      optional_field(d, "lowpass_ratio", [&](const json& v) { s.demodulator.lowpass_ratio = number(v, "simulation.demodulator.lowpass_ratio"); });
      optional_field(d, "lowpass_order", [&](const json& v) { s.demodulator.lowpass_order = integer(v, "simulation.demodulator.lowpass_order"); });
    });
    optional_field(sim, "settle_band", [&](const json& v) { s.settle_band = positive(v, "simulation.settle_band"); });
    optional_field(sim, "eps_stop", [&](const json& v) { s.eps_stop = positive(v, "simulation.eps_stop"); });
    optional_field(sim, "average_dt", [&](const json& v) { s.average_dt = positive(v, "simulation.average_dt"); });
    optional_field(sim, "average_t_end", [&](const json& v) { s.average_t_end = positive(v, "simulation.average_t_end"); });
    optional_field(sim, "omega_scales", [&](const json& v) {
      const VectorXd scales = vector_from_json(v, "simulation.omega_scales");
      s.omega_scales.assign(scales.data(), scales.data() + scales.size());
      for (std::size_t i = 0; i < s.omega_scales.size(); ++i) {
        if (!(s.omega_scales[i] > 0.0) || (i > 0 && !(s.omega_scales[i] >= s.omega_scales[i - 1]))) {
          fail("simulation.omega_scales", "must be positive and non-decreasing");
        }
      }
    });

    optional_field(j, "output", [&](const json& o) {
      optional_field(o, "dir", [&](const json& v) {
        if (!v.is_string()) fail("output.dir", "expected a string");
        cfg.output_dir = v.get<std::string>();
      });
    });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.polytope.h0) {
    j["polytope"] = {{"H0", to_json(*cfg.polytope.h0)}, {"delta_bar", cfg.polytope.delta_bar}};
  } else {
    json vs = json::array();
    for (const auto& v : cfg.polytope.vertices) vs.push_back(to_json(v));
    j["polytope"] = {{"vertices", vs}};
  }
  j["synthesis"] = {{"varphi", cfg.synthesis.varphi}, {"objective", to_string(cfg.synthesis.objective)}};
  if (cfg.synthesis.mu > 0.0) j["synthesis"]["mu"] = cfg.synthesis.mu;
  if (cfg.synthesis.mu_search) {
    j["synthesis"]["mu_search"] = {{"lo", cfg.synthesis.mu_search->lo},
                                   {"hi", cfg.synthesis.mu_search->hi},
                                   {"iterations", cfg.synthesis.mu_search->iterations}};
  }
  j["dither"] = {{"amplitudes", to_json(cfg.dither.amplitudes)},
                 {"multipliers", cfg.dither.multipliers},
                 {"base_frequency", cfg.dither.base_frequency}};
  json hs;
  if (cfg.map.hessian.kind == HessianSelection::Kind::kExplicit) {
    hs["explicit"] = to_json(cfg.map.hessian.matrix);
  } else {
    hs["sampled"] = {{"seed", cfg.map.hessian.seed}};
  }
  j["map"] = {{"q_star", cfg.map.q_star}, {"theta_star", to_json(cfg.map.theta_star)}, {"hessian", hs}};
  const auto& s = cfg.simulation;
  j["simulation"] = {{"theta0", to_json(s.theta0)},
                     {"t_end", s.t_end},
                     {"dt", s.dt},
                     {"uv_epsilon", s.uv_epsilon},
                     {"record_stride", s.record_stride},
                     {"demodulator",
                      {{"highpass_ratio", s.demodulator.highpass_ratio},
                       {"lowpass_ratio", s.demodulator.lowpass_ratio},
                       {"lowpass_order", s.demodulator.lowpass_order}}},
                     {"settle_band", s.settle_band},
                     {"average_dt", s.average_dt},
                     {"average_t_end", s.average_t_end},
                     {"omega_scales", s.omega_scales}};
  if (s.eps_stop > 0.0) j["simulation"]["eps_stop"] = s.eps_stop;
  j["output"] = {{"dir", cfg.output_dir.string()}};
  return j;
}

json example_config_json() {
  return json::parse(R"({
    "polytope": {"H0": [[100, 30], [30, 20]], "delta_bar": 0.1},
    "synthesis": {"mu": 32.9034, "varphi": 0.4, "objective": "min_rho"},
    "dither": {"amplitudes": [0.1, 0.1], "multipliers": [1, 7], "base_frequency": 10},
    "map": {"q_star": 10, "theta_star": [2, 4], "hessian": {"sampled": {"seed": 1}}},
    "simulation": {
      "theta0": [2.5, 6],
      "t_end": 10,
      "dt": 0,
      "uv_epsilon": 1e-6,
      "record_stride": 10,
      "demodulator": {"highpass_ratio": 0.1, "lowpass_ratio": 0.4, "lowpass_order": 2},
      "settle_band": 0.3,
      "average_dt": 1e-4,
      "average_t_end": 10,
      "omega_scales": [1, 2, 4]
    },
    "output": {"dir": "example_bundle"}
  })");
}

MatrixXd reference_gain() {
  MatrixXd k(2, 2);
  k << -0.2393, 0.3589, 0.3589, -1.1965;
  return k;
}

ResolvedMap resolve_map(const ExperimentConfig& cfg, const HessianPolytope<double>& poly) {
  ResolvedMap out;
  out.map.q_star = cfg.map.q_star;
  out.map.theta_star = cfg.map.theta_star;
  if (cfg.map.hessian.kind == HessianSelection::Kind::kExplicit) {
    out.map.hessian = cfg.map.hessian.matrix;
  } else {
    auto [alpha, h] = sample_uniform(poly, cfg.map.hessian.seed);
    out.map.hessian = std::move(h);
    out.alpha = std::move(alpha);
  }
  try {
    out.map.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
  return out;
}

SimConfig make_sim_config(const ExperimentConfig& cfg, const MapSpec& map, const MatrixXd& gain, double omega_scale) {
  const DitherConfig<double> dither = cfg.dither.build(omega_scale);
  const double dt = cfg.simulation.dt > 0.0 ? cfg.simulation.dt : max_step(dither);
  return SimConfig{map,
                   dither,
                   gain,
                   cfg.simulation.theta0,
                   cfg.simulation.t_end,
                   dt,
                   cfg.simulation.uv_epsilon,
                   cfg.simulation.record_stride,
                   cfg.simulation.demodulator};
}

}  // namespace uvesc
