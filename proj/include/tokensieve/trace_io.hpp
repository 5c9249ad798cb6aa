#pragma once

// On-disk formats.
//
// A trace bundle is a JSON manifest plus a binary payload of little-endian
// float32 arrays. Per group the payload holds, in order:
//   response probabilities  steps x D    float32
//   token features          V x d        float32
//   normalized times        V            float32
//   spatial slots           V            int32
//   attention               H x T x V    float32   (tensor mode)
//     or queries T x d then keys V x d   float32   (query_key mode)
// Chosen tokens and per-token frame indices are small and live in the
// manifest.

#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "tokensieve/bundle.hpp"
#include "tokensieve/scheduler.hpp"

namespace tokensieve {

/// Raised for malformed or inconsistent files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Writes `<manifest_path>` and a payload file next to it
/// (`<stem>.bin`). Throws FormatError if a trace violates an invariant.
void write_trace_bundle(const TraceBundle& bundle, const std::filesystem::path& manifest_path);

TraceBundle read_trace_bundle(const std::filesystem::path& manifest_path);

/// Payload path recorded by a manifest, resolved relative to it.
std::filesystem::path payload_path_for(const std::filesystem::path& manifest_path);

nlohmann::json selection_result_to_json(const SelectionResult& result);
SelectionResult selection_result_from_json(const nlohmann::json& doc);
void write_selection_result(const SelectionResult& result, const std::filesystem::path& path);
SelectionResult read_selection_result(const std::filesystem::path& path);

/// Pipeline configuration together with the keys that were explicitly set.
struct LoadedConfig {
  PipelineConfig config;
  std::set<std::string> keys;
};

/// Every accepted configuration key, in dotted form.
const std::vector<std::string>& config_keys();

/// Applies one dotted key. Throws std::invalid_argument for unknown keys or
/// ill-typed values.
void apply_config_value(PipelineConfig& config, const std::string& key, const nlohmann::json& value);

/// Accepts flat dotted keys ({"allocation.tau": 2}) or nested objects
/// ({"allocation": {"tau": 2}}). Unknown keys are rejected.
LoadedConfig config_from_json(const nlohmann::json& doc);
LoadedConfig read_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const PipelineConfig& config);

/// Reads a JSON document, wrapping I/O and parse failures in FormatError.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace tokensieve
