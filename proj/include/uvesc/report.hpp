#pragma once

#include <filesystem>
#include <string>

#include "uvesc/config.hpp"
#include "uvesc/synthesis.hpp"
#include "uvesc/verifier.hpp"

namespace uvesc {

/// The only non-deterministic part of a report.
json report_header(const std::string& command);

json to_json(const BlockCheck& check);
json to_json(const CertificateReport& report);
json to_json(const DecreaseReport& report);
json to_json(const SynthesisResult& result);
json to_json(const SimplexPoint<double>& alpha);

/// Writes to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const json& j);

}  // namespace uvesc
