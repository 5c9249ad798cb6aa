#pragma once

// Synthetic trace generation for tests, benchmarks and the CLI.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tokensieve/bundle.hpp"
#include "tokensieve/core.hpp"

namespace tokensieve {

/// Counter-based generator: output n is splitmix64(key + n * golden).
/// Streams split off a parent by hashing (key, stream id), so per-group
/// generation does not depend on the order groups are produced in. Normal
/// deviates use Box-Muller rather than std::normal_distribution, whose
/// algorithm varies between standard libraries.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "splitmix64-counter/v1";

  explicit CounterRng(std::uint64_t seed) : key_(mix(seed)) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  CounterRng split(std::uint64_t stream) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  struct RawKey {};
  CounterRng(RawKey, std::uint64_t key) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Entropy (nats) of a distribution with one entry `peak` and the remaining
/// D - 1 entries equal.
double two_level_entropy(double peak, std::size_t vocabulary);

/// Peak probability whose two-level entropy equals `target` (bisection).
double solve_two_level_peak(double target_entropy, std::size_t vocabulary);

/// Response whose every step is a two-level distribution with the requested
/// entropy; the peak sits on a random vocabulary entry and the chosen token
/// is the greedy argmax.
GeneratedResponse gen_response(double target_entropy, std::size_t steps, std::size_t vocabulary,
                               std::uint64_t seed);

struct NeedleScenario {
  std::int64_t groups = 8;
  std::int64_t frames_per_group = 8;  // K
  std::int64_t n_frames = 0;          // 0: groups * frames_per_group
  GroupingStrategy strategy = GroupingStrategy::marginal;
  std::int64_t tokens_per_frame = 8;
  std::size_t feature_dim = 64;
  std::size_t heads = 4;
  std::size_t queries = 4;
  std::size_t vocabulary = 64;
  std::size_t response_steps = 16;
  std::set<int> needle_groups;
  std::int64_t needle_tokens_per_group = 4;
  double snr = 5.0;
  std::uint64_t seed = 0;
  double needle_entropy = 0.2;
  double background_entropy = 2.0;
  /// Standard deviation of background query-key logits.
  double logit_scale = 0.5;
  /// Weight of the shared needle direction in planted token features.
  double needle_coherence = 0.3;
  /// Share of feature variance carried by a per-slot scene process that
  /// drifts across frames; the rest is independent noise. Marginally every
  /// feature stays N(0, I).
  double scene_share = 0.8;
  /// Correlation of the scene process between adjacent frames.
  double scene_drift = 0.9;
  AttentionMode attention_mode = AttentionMode::query_key;
  std::vector<std::string> answer_labels = {"A", "B", "C", "D"};
  /// Index into answer_labels of the correct answer.
  std::size_t correct_answer = 0;

  /// Throws std::invalid_argument for inconsistent parameters.
  void validate() const;
};

nlohmann::json scenario_to_json(const NeedleScenario& scenario);
NeedleScenario scenario_from_json(const nlohmann::json& doc);

/// Builds a full bundle. All stored values are rounded to float32 so the
/// bundle round-trips through the payload format unchanged.
TraceBundle gen_needle_bundle(const NeedleScenario& scenario);

/// |selected ∩ planted| / |planted|. Throws if the manifest has no planted
/// tokens.
double recall_of_planted(const SelectionResult& result, const BundleManifest& manifest);

}  // namespace tokensieve
