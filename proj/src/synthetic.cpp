#include "tokensieve/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "tokensieve/relevance.hpp"

namespace tokensieve {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CounterRng

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next_u64() { return mix(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t CounterRng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("empty range");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

CounterRng CounterRng::split(std::uint64_t stream) const {
  return CounterRng(RawKey{}, mix(key_ ^ mix(stream ^ 0xD1B54A32D192ED03ULL)));
}

// ---------------------------------------------------------------------------
// Calibrated responses

double two_level_entropy(double peak, std::size_t vocabulary) {
  const double rest = (1.0 - peak) / static_cast<double>(vocabulary - 1);
  double h = 0.0;
  if (peak > 0.0) h -= peak * std::log(peak);
  if (rest > 0.0) h -= (1.0 - peak) * std::log(rest);
  return h;
}

double solve_two_level_peak(double target_entropy, std::size_t vocabulary) {
  if (vocabulary < 2) throw std::invalid_argument("vocabulary must have at least 2 entries");
  const double max_entropy = std::log(static_cast<double>(vocabulary));
  if (!(target_entropy >= 0.0 && target_entropy <= max_entropy + 1e-12)) {
    throw std::invalid_argument("target entropy " + std::to_string(target_entropy) +
                                " outside [0, ln D]");
  }
  // Entropy falls strictly from ln D at peak = 1/D to 0 at peak = 1.
  double lo = 1.0 / static_cast<double>(vocabulary);
  double hi = 1.0;
  if (target_entropy >= max_entropy) return lo;
  if (target_entropy <= 0.0) return hi;
  for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (two_level_entropy(mid, vocabulary) > target_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

GeneratedResponse gen_response(double target_entropy, std::size_t steps, std::size_t vocabulary,
                               std::uint64_t seed) {
  if (steps == 0) throw std::invalid_argument("a response needs at least one step");
  const double peak = solve_two_level_peak(target_entropy, vocabulary);
  const double rest = (1.0 - peak) / static_cast<double>(vocabulary - 1);
  CounterRng rng(seed);
  GeneratedResponse response;
  response.steps.resize(steps);
  for (auto& step : response.steps) {
    const std::size_t at = rng.below(vocabulary);
    step.distribution.probs.assign(vocabulary, rest);
    step.distribution.probs[at] = peak;
    step.chosen_token = argmax_token(step.distribution);
  }
  return response;
}

// ---------------------------------------------------------------------------
// Needle bundles

void NeedleScenario::validate() const {
  if (groups < 1) throw std::invalid_argument("groups must be at least 1");
  if (frames_per_group < 1) throw std::invalid_argument("frames per group must be at least 1");
  const std::int64_t n = n_frames == 0 ? groups * frames_per_group : n_frames;
  if (n < 1) throw std::invalid_argument("frame count must be at least 1");
  const auto plan = make_plan(strategy, n, frames_per_group);
  if (static_cast<std::int64_t>(plan.group_count()) != groups) {
    throw std::invalid_argument(std::to_string(n) + " frames in groups of at most " +
                                std::to_string(frames_per_group) + " give " +
                                std::to_string(plan.group_count()) + " groups, not " +
                                std::to_string(groups));
  }
  for (int g : needle_groups) {
    if (g < 0 || g >= groups) {
      throw std::invalid_argument("needle group " + std::to_string(g) + " out of range [0, " +
                                  std::to_string(groups) + ")");
    }
  }
  if (tokens_per_frame < 1) throw std::invalid_argument("tokens per frame must be at least 1");
  if (feature_dim == 0 || heads == 0 || feature_dim % heads != 0) {
    throw std::invalid_argument("feature dimension must be a positive multiple of the head count");
  }
  if (queries == 0) throw std::invalid_argument("at least one text query is required");
  if (response_steps == 0) throw std::invalid_argument("responses need at least one step");
  const double max_entropy = std::log(static_cast<double>(vocabulary));
  if (vocabulary < 2 || needle_entropy < 0.0 || background_entropy < 0.0 ||
      needle_entropy > max_entropy || background_entropy > max_entropy) {
    throw std::invalid_argument("target entropies must lie in [0, ln D]");
  }
  std::size_t smallest = plan.groups.front().size();
  for (const auto& g : plan.groups) smallest = std::min(smallest, g.size());
  if (needle_tokens_per_group < 0 ||
      needle_tokens_per_group > static_cast<std::int64_t>(smallest) * tokens_per_frame) {
    throw std::invalid_argument("needle tokens per group exceed the smallest group's token count");
  }
  if (!(scene_share >= 0.0 && scene_share <= 1.0) || !(scene_drift >= 0.0 && scene_drift <= 1.0)) {
    throw std::invalid_argument("scene share and drift must lie in [0, 1]");
  }
  if (!(snr >= 0.0) || !(logit_scale > 0.0) || !(needle_coherence >= 0.0)) {
    throw std::invalid_argument("snr and coherence must be non-negative, logit scale positive");
  }
  if (answer_labels.empty() || correct_answer >= answer_labels.size()) {
    throw std::invalid_argument("correct answer must index into the answer labels");
  }
}

json scenario_to_json(const NeedleScenario& s) {
  return {{"groups", s.groups},
          {"frames_per_group", s.frames_per_group},
          {"n_frames", s.n_frames},
          {"strategy", to_string(s.strategy)},
          {"tokens_per_frame", s.tokens_per_frame},
          {"feature_dim", s.feature_dim},
          {"heads", s.heads},
          {"queries", s.queries},
          {"vocabulary", s.vocabulary},
          {"response_steps", s.response_steps},
          {"needle_groups", s.needle_groups},
          {"needle_tokens_per_group", s.needle_tokens_per_group},
          {"snr", s.snr},
          {"seed", s.seed},
          {"needle_entropy", s.needle_entropy},
          {"background_entropy", s.background_entropy},
          {"logit_scale", s.logit_scale},
          {"needle_coherence", s.needle_coherence},
          {"scene_share", s.scene_share},
          {"scene_drift", s.scene_drift},
          {"attention_mode", to_string(s.attention_mode)},
          {"answer_labels", s.answer_labels},
          {"correct_answer", s.correct_answer}};
}

NeedleScenario scenario_from_json(const json& doc) {
  NeedleScenario s;
  s.groups = doc.at("groups").get<std::int64_t>();
  s.frames_per_group = doc.at("frames_per_group").get<std::int64_t>();
  s.n_frames = doc.at("n_frames").get<std::int64_t>();
  s.strategy = grouping_strategy_from_string(doc.at("strategy").get<std::string>());
  s.tokens_per_frame = doc.at("tokens_per_frame").get<std::int64_t>();
  s.feature_dim = doc.at("feature_dim").get<std::size_t>();
  s.heads = doc.at("heads").get<std::size_t>();
  s.queries = doc.at("queries").get<std::size_t>();
  s.vocabulary = doc.at("vocabulary").get<std::size_t>();
  s.response_steps = doc.at("response_steps").get<std::size_t>();
  s.needle_groups = doc.at("needle_groups").get<std::set<int>>();
  s.needle_tokens_per_group = doc.at("needle_tokens_per_group").get<std::int64_t>();
  s.snr = doc.at("snr").get<double>();
  s.seed = doc.at("seed").get<std::uint64_t>();
  s.needle_entropy = doc.at("needle_entropy").get<double>();
  s.background_entropy = doc.at("background_entropy").get<double>();
  s.logit_scale = doc.at("logit_scale").get<double>();
  s.needle_coherence = doc.at("needle_coherence").get<double>();
  s.scene_share = doc.at("scene_share").get<double>();
  s.scene_drift = doc.at("scene_drift").get<double>();
  s.attention_mode = attention_mode_from_string(doc.at("attention_mode").get<std::string>());
  s.answer_labels = doc.at("answer_labels").get<std::vector<std::string>>();
  s.correct_answer = doc.at("correct_answer").get<std::size_t>();
  return s;
}

namespace {

double f32(double x) { return static_cast<double>(static_cast<float>(x)); }

std::vector<double> gaussian(CounterRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

double normalize(std::span<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return n;
}

void quantize(std::vector<double>& v) {
  for (double& x : v) x = f32(x);
}

}  // namespace

TraceBundle gen_needle_bundle(const NeedleScenario& scenario) {
  scenario.validate();
  const std::int64_t n_frames =
      scenario.n_frames == 0 ? scenario.groups * scenario.frames_per_group : scenario.n_frames;
  const GroupingPlan plan = make_plan(scenario.strategy, n_frames, scenario.frames_per_group);
  const std::size_t dim = scenario.feature_dim;
  const std::size_t heads = scenario.heads;
  const std::size_t head_dim = dim / heads;
  const double s = scenario.logit_scale;

  CounterRng root(scenario.seed);
  CounterRng video = root.split(0);

  // Text queries: a shared prompt direction plus a little per-query noise.
  // Each head slice is scaled so background logits q.k / sqrt(d/H) have
  // standard deviation `logit_scale` for k ~ N(0, I).
  const auto prompt = gaussian(video, dim);
  Matrix queries(scenario.queries, dim);
  for (std::size_t t = 0; t < scenario.queries; ++t) {
    const auto noise = gaussian(video, dim);
    for (std::size_t c = 0; c < dim; ++c) queries(t, c) = prompt[c] + 0.25 * noise[c];
    for (std::size_t h = 0; h < heads; ++h) {
      std::span<double> slice(&queries(t, h * head_dim), head_dim);
      normalize(slice);
      for (double& x : slice) x = f32(x * s * std::sqrt(static_cast<double>(head_dim)));
    }
  }
  // Planted keys get beta_h * m_h added per head, m_h the unit mean query
  // direction; beta_h makes the mean logit gap exactly snr * logit_scale.
  Matrix key_shift(heads, head_dim);
  for (std::size_t h = 0; h < heads; ++h) {
    std::vector<double> mean(head_dim, 0.0);
    for (std::size_t t = 0; t < scenario.queries; ++t) {
      for (std::size_t c = 0; c < head_dim; ++c) mean[c] += queries(t, h * head_dim + c);
    }
    // When the queries cancel out, shift along the first one instead.
    const bool cancelled = normalize(mean) < 1e-9;
    const std::size_t used = cancelled ? 1 : scenario.queries;
    if (cancelled) {
      for (std::size_t c = 0; c < head_dim; ++c) mean[c] = queries(0, h * head_dim + c);
      normalize(mean);
    }
    double projection = 0.0;
    for (std::size_t t = 0; t < used; ++t) {
      for (std::size_t c = 0; c < head_dim; ++c) projection += queries(t, h * head_dim + c) * mean[c];
    }
    projection /= static_cast<double>(used);
    const double beta = scenario.snr * s * std::sqrt(static_cast<double>(head_dim)) / projection;
    for (std::size_t c = 0; c < head_dim; ++c) key_shift(h, c) = beta * mean[c];
  }
  auto needle_direction = gaussian(video, dim);
  normalize(needle_direction);
  const double coherence = scenario.needle_coherence * std::sqrt(static_cast<double>(dim));

  // scene[slot][frame]: stationary AR(1) over frames, N(0, I) marginals.
  const auto per_frame = static_cast<std::size_t>(scenario.tokens_per_frame);
  std::vector<Matrix> scene;
  if (scenario.scene_share > 0.0) {
    const double r = scenario.scene_drift;
    const double innovation = std::sqrt(1.0 - r * r);
    for (std::size_t slot = 0; slot < per_frame; ++slot) {
      Matrix walk(static_cast<std::size_t>(n_frames), dim);
      for (std::size_t c = 0; c < dim; ++c) walk(0, c) = video.normal();
      for (std::size_t f = 1; f < walk.rows; ++f) {
        for (std::size_t c = 0; c < dim; ++c) walk(f, c) = r * walk(f - 1, c) + innovation * video.normal();
      }
      scene.push_back(std::move(walk));
    }
  }
  const double scene_weight = std::sqrt(scenario.scene_share);
  const double noise_weight = std::sqrt(1.0 - scenario.scene_share);

  TraceBundle bundle;
  auto& m = bundle.manifest;
  m.n_frames = n_frames;
  m.max_frames_per_group = scenario.frames_per_group;
  m.strategy = scenario.strategy;
  m.group_count = scenario.groups;
  m.vocabulary_size = scenario.vocabulary;
  m.heads = heads;
  m.feature_dim = dim;
  m.tokens_per_frame = scenario.tokens_per_frame;
  m.attention_mode = scenario.attention_mode;
  m.normalization = AttentionNormalization::visual_only;
  m.layer_id = "synthetic";
  m.rng_algorithm = CounterRng::kAlgorithm;
  m.ground_truth_answer = scenario.answer_labels[scenario.correct_answer];
  m.scenario = scenario_to_json(scenario);

  for (std::int64_t g = 0; g < scenario.groups; ++g) {
    CounterRng rng = root.split(static_cast<std::uint64_t>(g) + 1);
    const bool needle = scenario.needle_groups.contains(static_cast<int>(g));
    const auto& frames = plan.groups[static_cast<std::size_t>(g)];

    GroupTrace trace;
    trace.group_id = static_cast<int>(g);
    trace.frame_indices = frames;
    trace.response = gen_response(needle ? scenario.needle_entropy : scenario.background_entropy,
                                  scenario.response_steps, scenario.vocabulary, rng.next_u64());
    for (auto& step : trace.response.steps) quantize(step.distribution.probs);

    const std::size_t token_count = frames.size() * per_frame;
    Matrix keys(token_count, dim);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      for (std::size_t slot = 0; slot < per_frame; ++slot) {
        TokenRecord tok;
        tok.feature = gaussian(rng, dim);
        if (!scene.empty()) {
          const auto frame_row = scene[slot].row(static_cast<std::size_t>(frames[f]));
          for (std::size_t c = 0; c < dim; ++c) {
            tok.feature[c] = scene_weight * frame_row[c] + noise_weight * tok.feature[c];
          }
        }
        tok.frame_index = frames[f];
        tok.normalized_time = f32(normalized_frame_time(frames[f], n_frames));
        tok.spatial_slot = static_cast<std::int32_t>(slot);
        trace.tokens.push_back(std::move(tok));
        const auto key = gaussian(rng, dim);
        std::copy(key.begin(), key.end(), keys.row(trace.tokens.size() - 1).begin());
      }
    }

    if (needle) {
      // Spread planted tokens round-robin over the group's frames, at random
      // distinct slots within each frame.
      std::vector<std::vector<std::size_t>> slots(frames.size());
      for (auto& perm : slots) {
        perm.resize(per_frame);
        for (std::size_t i = 0; i < per_frame; ++i) perm[i] = i;
        for (std::size_t i = per_frame; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
      }
      for (std::int64_t k = 0; k < scenario.needle_tokens_per_group; ++k) {
        const std::size_t f = static_cast<std::size_t>(k) % frames.size();
        const std::size_t slot = slots[f][static_cast<std::size_t>(k) / frames.size()];
        const std::size_t idx = f * per_frame + slot;
        auto& feature = trace.tokens[idx].feature;
        for (std::size_t c = 0; c < dim; ++c) feature[c] += coherence * needle_direction[c];
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t c = 0; c < head_dim; ++c) keys(idx, h * head_dim + c) += key_shift(h, c);
        }
        m.planted.push_back({static_cast<int>(g), idx});
      }
    }
    for (auto& tok : trace.tokens) quantize(tok.feature);
    quantize(keys.data);

    if (scenario.attention_mode == AttentionMode::tensor) {
      AttentionTensor attn = materialize_attention(queries, keys, heads);
      quantize(attn.weights);
      trace.attention = std::move(attn);
    } else {
      trace.attention = QueryKeyEmbeddings{queries, keys, heads};
    }
    trace.answer_label = needle ? scenario.answer_labels[scenario.correct_answer]
                                : scenario.answer_labels[rng.below(scenario.answer_labels.size())];
    bundle.groups.push_back(std::move(trace));
  }
  std::sort(m.planted.begin(), m.planted.end());
  return bundle;
}

double recall_of_planted(const SelectionResult& result, const BundleManifest& manifest) {
  if (manifest.planted.empty()) throw std::invalid_argument("bundle has no planted ground truth");
  const std::set<PlantedToken> planted(manifest.planted.begin(), manifest.planted.end());
  std::size_t hits = 0;
  for (const auto& s : result.selected) {
    if (planted.contains(PlantedToken{s.group_id, s.token_index})) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(planted.size());
}

}  // namespace tokensieve
