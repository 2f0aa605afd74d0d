#include "uvesc/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "uvesc/errors.hpp"

namespace uvesc {

namespace {

// NaN and infinities have no JSON spelling.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json report_header(const std::string& command) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return {{"tool", "uvesc"}, {"command", command}, {"generated_at", stamp}};
}

json to_json(const BlockCheck& check) {
  return {{"label", check.label},
          {"sense", to_string(check.sense)},
          {"worst_eigenvalue", check.worst_eigenvalue},
          {"threshold", check.threshold},
          {"margin", check.margin},
          {"passed", check.passed}};
}

json to_json(const CertificateReport& report) {
  json blocks = json::array();
  for (const auto& b : report.blocks) blocks.push_back(to_json(b));
  return {{"passed", report.passed()}, {"min_margin", finite_or_null(report.min_margin())}, {"blocks", blocks}};
}

json to_json(const DecreaseReport& report) {
  json j{{"passed", report.passed()},
         {"samples", report.samples},
         {"min_margin", finite_or_null(report.min_margin)},
         {"min_ratio_to_q", finite_or_null(report.min_ratio_to_q)}};
  if (report.worst_direction.size() > 0) j["worst_direction"] = to_json(report.worst_direction);
  if (report.worst_alpha.size() > 0) j["worst_alpha"] = to_json(report.worst_alpha);
  return j;
}

json to_json(const SynthesisResult& r) {
  json j{{"objective", to_string(r.objective)},
         {"mu", r.mu},
         {"varphi", r.varphi},
         {"rho", r.rho ? json(*r.rho) : json(nullptr)},
         {"epsilon_strict", r.epsilon_strict},
         {"solver",
          {{"backend", r.backend},
           {"status", r.solver_status},
           {"gap_bound", finite_or_null(r.solver_gap_bound)},
           {"newton_steps", r.newton_steps}}},
         {"X", to_json(r.x)},
         {"M", to_json(r.m)},
         {"L", to_json(r.l)},
         {"K", to_json(r.k)},
         {"P", to_json(r.p)},
         {"Q", to_json(r.q)}};
  return j;
}

json to_json(const SimplexPoint<double>& alpha) { return to_json(alpha.weights()); }

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

}  // namespace uvesc
