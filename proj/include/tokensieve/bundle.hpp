#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tokensieve/core.hpp"
#include "tokensieve/grouping.hpp"
#include "tokensieve/relevance.hpp"

namespace tokensieve {

inline constexpr int kBundleFormatVersion = 1;

/// Which attention representation the groups of a bundle carry.
enum class AttentionMode { tensor, query_key };

std::string to_string(AttentionMode mode);
AttentionMode attention_mode_from_string(const std::string& text);

struct PlantedToken {
  int group_id = 0;
  std::size_t token_index = 0;

  auto operator<=>(const PlantedToken&) const = default;
};

/// Bundle-level description. Per-group shapes and payload offsets are derived
/// from the traces when writing and checked against them when reading.
struct BundleManifest {
  int format_version = kBundleFormatVersion;
  std::int64_t n_frames = 0;
  std::int64_t max_frames_per_group = 0;
  GroupingStrategy strategy = GroupingStrategy::marginal;
  std::int64_t group_count = 0;
  std::size_t vocabulary_size = 0;
  std::size_t heads = 0;
  std::size_t feature_dim = 0;
  std::int64_t tokens_per_frame = 0;  // 0 when groups mix token densities
  AttentionMode attention_mode = AttentionMode::query_key;
  AttentionNormalization normalization = AttentionNormalization::visual_only;
  std::string layer_id;
  std::string rng_algorithm;
  std::vector<PlantedToken> planted;
  std::optional<std::string> ground_truth_answer;
  nlohmann::json scenario;  // opaque generator parameters

  bool operator==(const BundleManifest&) const = default;
};

struct TraceBundle {
  BundleManifest manifest;
  std::vector<GroupTrace> groups;  // ordered by group id

  bool operator==(const TraceBundle&) const = default;
};

}  // namespace tokensieve
