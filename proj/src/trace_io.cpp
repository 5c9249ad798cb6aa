#include "tokensieve/trace_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tokensieve {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(AttentionMode mode) {
  switch (mode) {
    case AttentionMode::tensor: return "tensor";
    case AttentionMode::query_key: return "query_key";
  }
  return "unknown";
}

AttentionMode attention_mode_from_string(const std::string& text) {
  if (text == "tensor") return AttentionMode::tensor;
  if (text == "query_key") return AttentionMode::query_key;
  throw std::invalid_argument("unknown attention mode '" + text + "'");
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const json& doc, const fs::path& path) {
  // Written beside the target and renamed, so readers never see half a file.
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << '\n';
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw FormatError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw FormatError("cannot write '" + path.string() + "': " + ec.message());
}

namespace {

// ---------------------------------------------------------------------------
// Little-endian payload encoding

class PayloadWriter {
 public:
  void f32(double value) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    u32(bits);
  }
  void i32(std::int32_t value) { u32(static_cast<std::uint32_t>(value)); }
  std::size_t size() const { return bytes_.size(); }
  const std::string& bytes() const { return bytes_; }

 private:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
  }
  std::string bytes_;
};

class PayloadReader {
 public:
  PayloadReader(const std::string& bytes, std::size_t offset, std::size_t length)
      : bytes_(bytes), pos_(offset), end_(offset + length) {}

  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  bool exhausted() const { return pos_ == end_; }

 private:
  std::uint32_t u32() {
    if (pos_ + 4 > end_) throw FormatError("payload read past the end of its block");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

std::string group_label(int group_id) { return "group " + std::to_string(group_id); }

std::size_t expected_group_bytes(std::size_t steps, std::size_t vocab, std::size_t tokens,
                                 std::size_t dim, std::size_t heads, std::size_t queries,
                                 AttentionMode mode) {
  std::size_t words = steps * vocab + tokens * dim + tokens + tokens;
  words += mode == AttentionMode::tensor ? heads * queries * tokens : queries * dim + tokens * dim;
  return words * 4;
}

std::size_t query_count(const GroupTrace& g) {
  if (const auto* t = std::get_if<AttentionTensor>(&g.attention)) return t->queries;
  return std::get<QueryKeyEmbeddings>(g.attention).queries.rows;
}

ValidationContext context_for(const BundleManifest& m) {
  return {m.n_frames, m.vocabulary_size, m.feature_dim};
}

[[noreturn]] void fail_group(int group_id, const std::string& what) {
  throw FormatError(group_label(group_id) + ": " + what);
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw FormatError(where + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename Fn>
auto parse_enum(Fn&& fn, const std::string& text, const std::string& where) {
  try {
    return fn(text);
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace

fs::path payload_path_for(const fs::path& manifest_path) {
  fs::path payload = manifest_path;
  payload.replace_extension(".bin");
  return payload;
}

void write_trace_bundle(const TraceBundle& bundle, const fs::path& manifest_path) {
  const auto& m = bundle.manifest;
  PayloadWriter payload;
  json groups = json::array();

  for (const auto& g : bundle.groups) {
    auto violations = validate_trace(g, context_for(m));
    if (!violations.empty()) {
      fail_group(g.group_id, violations.front().field + ": " + violations.front().message);
    }
    const bool tensor_mode = std::holds_alternative<AttentionTensor>(g.attention);
    if (tensor_mode != (m.attention_mode == AttentionMode::tensor)) {
      fail_group(g.group_id, "attention source does not match the manifest's attention mode");
    }
    const std::size_t heads = tensor_mode ? std::get<AttentionTensor>(g.attention).heads
                                          : std::get<QueryKeyEmbeddings>(g.attention).heads;
    if (heads != m.heads) fail_group(g.group_id, "head count differs from the manifest");

    const std::size_t offset = payload.size();
    for (const auto& step : g.response.steps) {
      for (double p : step.distribution.probs) payload.f32(p);
    }
    for (const auto& tok : g.tokens) {
      for (double x : tok.feature) payload.f32(x);
    }
    for (const auto& tok : g.tokens) payload.f32(tok.normalized_time);
    for (const auto& tok : g.tokens) payload.i32(tok.spatial_slot);
    if (tensor_mode) {
      for (double w : std::get<AttentionTensor>(g.attention).weights) payload.f32(w);
    } else {
      const auto& qk = std::get<QueryKeyEmbeddings>(g.attention);
      for (double x : qk.queries.data) payload.f32(x);
      for (double x : qk.keys.data) payload.f32(x);
    }

    json entry;
    entry["group_id"] = g.group_id;
    entry["frame_indices"] = g.frame_indices;
    entry["V"] = g.tokens.size();
    entry["T"] = query_count(g);
    entry["response_length"] = g.response.size();
    json chosen = json::array();
    for (const auto& step : g.response.steps) chosen.push_back(step.chosen_token);
    entry["chosen_tokens"] = chosen;
    json frames = json::array();
    for (const auto& tok : g.tokens) frames.push_back(tok.frame_index);
    entry["token_frame_indices"] = frames;
    entry["offset"] = offset;
    entry["length"] = payload.size() - offset;
    if (g.answer_label) entry["answer_label"] = *g.answer_label;
    groups.push_back(std::move(entry));
  }

  json doc;
  doc["format_version"] = m.format_version;
  doc["N_frames"] = m.n_frames;
  doc["K"] = m.max_frames_per_group;
  doc["grouping_strategy"] = to_string(m.strategy);
  doc["G"] = m.group_count;
  doc["D"] = m.vocabulary_size;
  doc["H"] = m.heads;
  doc["d"] = m.feature_dim;
  doc["tokens_per_frame"] = m.tokens_per_frame;
  doc["attention"] = {{"mode", to_string(m.attention_mode)},
                      {"normalization", to_string(m.normalization)},
                      {"layer_id", m.layer_id}};
  doc["rng_algorithm"] = m.rng_algorithm;
  json planted = json::array();
  for (const auto& p : m.planted) planted.push_back({p.group_id, p.token_index});
  doc["planted"] = planted;
  if (m.ground_truth_answer) doc["ground_truth_answer"] = *m.ground_truth_answer;
  doc["scenario"] = m.scenario;
  doc["payload"] = payload_path_for(manifest_path).filename().string();
  doc["payload_bytes"] = payload.size();
  doc["groups"] = std::move(groups);

  const fs::path payload_path = payload_path_for(manifest_path);
  {
    std::ofstream out(payload_path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + payload_path.string() + "'");
    out.write(payload.bytes().data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw FormatError("failed writing '" + payload_path.string() + "'");
  }
  write_json_file(doc, manifest_path);
}

namespace {

TraceBundle read_bundle_unchecked(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw FormatError("bundle manifest '" + manifest_path.string() + "' does not exist");
  }
  const json doc = read_json_file(manifest_path);
  const std::string where = "manifest '" + manifest_path.string() + "'";

  TraceBundle bundle;
  auto& m = bundle.manifest;
  m.format_version = required<int>(doc, "format_version", where);
  if (m.format_version != kBundleFormatVersion) {
    throw FormatError(where + ": unsupported format_version " + std::to_string(m.format_version) +
                      " (expected " + std::to_string(kBundleFormatVersion) + ")");
  }
  m.n_frames = required<std::int64_t>(doc, "N_frames", where);
  m.max_frames_per_group = required<std::int64_t>(doc, "K", where);
  m.strategy = parse_enum(grouping_strategy_from_string,
                          required<std::string>(doc, "grouping_strategy", where), where);
  m.group_count = required<std::int64_t>(doc, "G", where);
  m.vocabulary_size = required<std::size_t>(doc, "D", where);
  m.heads = required<std::size_t>(doc, "H", where);
  m.feature_dim = required<std::size_t>(doc, "d", where);
  m.tokens_per_frame = doc.value("tokens_per_frame", std::int64_t{0});
  const json attention = required<json>(doc, "attention", where);
  m.attention_mode = parse_enum(attention_mode_from_string,
                                required<std::string>(attention, "mode", where + " attention"), where);
  m.normalization = parse_enum(attention_normalization_from_string,
                               required<std::string>(attention, "normalization", where + " attention"),
                               where);
  m.layer_id = attention.value("layer_id", std::string{});
  m.rng_algorithm = doc.value("rng_algorithm", std::string{});
  if (doc.contains("planted")) {
    for (const auto& p : doc.at("planted")) {
      if (!p.is_array() || p.size() != 2) throw FormatError(where + ": malformed planted entry");
      m.planted.push_back({p[0].get<int>(), p[1].get<std::size_t>()});
    }
  }
  if (doc.contains("ground_truth_answer")) m.ground_truth_answer = doc.at("ground_truth_answer").get<std::string>();
  if (doc.contains("scenario")) m.scenario = doc.at("scenario");

  if (m.n_frames < 1 || m.max_frames_per_group < 1) {
    throw FormatError(where + ": N_frames and K must be positive");
  }
  if (m.vocabulary_size < 2) throw FormatError(where + ": vocabulary size D must be at least 2");
  if (m.heads < 1) throw FormatError(where + ": head count H must be at least 1");
  const GroupingPlan plan = make_plan(m.strategy, m.n_frames, m.max_frames_per_group);
  if (static_cast<std::int64_t>(plan.group_count()) != m.group_count) {
    throw FormatError(where + ": G=" + std::to_string(m.group_count) +
                      " does not match the grouping plan (" + std::to_string(plan.group_count()) + ")");
  }

  const fs::path payload_path =
      manifest_path.parent_path() / required<std::string>(doc, "payload", where);
  std::string payload;
  {
    std::ifstream in(payload_path, std::ios::binary);
    if (!in) throw FormatError("cannot open payload '" + payload_path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    payload = ss.str();
  }
  if (doc.contains("payload_bytes")) {
    const auto declared = required<std::size_t>(doc, "payload_bytes", where);
    if (declared != payload.size()) {
      throw FormatError("payload '" + payload_path.string() + "' has " + std::to_string(payload.size()) +
                        " bytes, manifest declares " + std::to_string(declared) +
                        (payload.size() < declared ? " (truncated)" : " (trailing data)"));
    }
  }

  const json groups = required<json>(doc, "groups", where);
  if (!groups.is_array() || static_cast<std::int64_t>(groups.size()) != m.group_count) {
    throw FormatError(where + ": expected " + std::to_string(m.group_count) + " group entries");
  }

  // Validate every block's bounds before materializing any array.
  struct Shape {
    int id;
    std::size_t v, t, steps, offset, length;
  };
  std::vector<Shape> shapes;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const json& e = groups[i];
    const std::string gw = where + " groups[" + std::to_string(i) + "]";
    Shape s{required<int>(e, "group_id", gw),      required<std::size_t>(e, "V", gw),
            required<std::size_t>(e, "T", gw),     required<std::size_t>(e, "response_length", gw),
            required<std::size_t>(e, "offset", gw), required<std::size_t>(e, "length", gw)};
    if (s.id != static_cast<int>(i)) {
      fail_group(s.id, "groups must be listed in id order (found at position " + std::to_string(i) + ")");
    }
    const std::size_t want = expected_group_bytes(s.steps, m.vocabulary_size, s.v, m.feature_dim,
                                                  m.heads, s.t, m.attention_mode);
    if (s.length != want) {
      fail_group(s.id, "declared block length " + std::to_string(s.length) + " bytes but V=" +
                           std::to_string(s.v) + ", T=" + std::to_string(s.t) + ", steps=" +
                           std::to_string(s.steps) + " need " + std::to_string(want));
    }
    if (s.offset > payload.size() || s.length > payload.size() - s.offset) {
      fail_group(s.id, "payload block [" + std::to_string(s.offset) + ", +" + std::to_string(s.length) +
                           ") exceeds payload size " + std::to_string(payload.size()));
    }
    shapes.push_back(s);
  }

  for (std::size_t i = 0; i < groups.size(); ++i) {
    const json& e = groups[i];
    const Shape& s = shapes[i];
    const std::string gw = where + " groups[" + std::to_string(i) + "]";
    GroupTrace g;
    g.group_id = s.id;
    g.frame_indices = required<std::vector<std::int64_t>>(e, "frame_indices", gw);
    if (g.frame_indices != plan.groups[i]) {
      fail_group(s.id, "frame_indices do not match the manifest's grouping plan");
    }
    const auto chosen = required<std::vector<std::int64_t>>(e, "chosen_tokens", gw);
    const auto token_frames = required<std::vector<std::int64_t>>(e, "token_frame_indices", gw);
    if (chosen.size() != s.steps) fail_group(s.id, "chosen_tokens length differs from response_length");
    if (token_frames.size() != s.v) {
      fail_group(s.id, "declared V=" + std::to_string(s.v) + " but " +
                           std::to_string(token_frames.size()) + " token records");
    }
    if (e.contains("answer_label")) g.answer_label = e.at("answer_label").get<std::string>();

    PayloadReader in(payload, s.offset, s.length);
    g.response.steps.resize(s.steps);
    for (std::size_t k = 0; k < s.steps; ++k) {
      auto& probs = g.response.steps[k].distribution.probs;
      probs.resize(m.vocabulary_size);
      for (auto& p : probs) {
        p = in.f32();
        if (!std::isfinite(p)) {
          fail_group(s.id, "non-finite probability in response step " + std::to_string(k));
        }
      }
      g.response.steps[k].chosen_token = chosen[k];
    }
    g.tokens.resize(s.v);
    for (std::size_t v = 0; v < s.v; ++v) {
      g.tokens[v].feature.resize(m.feature_dim);
      for (auto& x : g.tokens[v].feature) x = in.f32();
      g.tokens[v].frame_index = token_frames[v];
    }
    for (auto& tok : g.tokens) tok.normalized_time = in.f32();
    for (auto& tok : g.tokens) tok.spatial_slot = in.i32();
    if (m.attention_mode == AttentionMode::tensor) {
      AttentionTensor t(m.heads, s.t, s.v);
      for (auto& w : t.weights) w = in.f32();
      g.attention = std::move(t);
    } else {
      QueryKeyEmbeddings qk;
      qk.heads = m.heads;
      qk.queries = Matrix(s.t, m.feature_dim);
      qk.keys = Matrix(s.v, m.feature_dim);
      for (auto& x : qk.queries.data) x = in.f32();
      for (auto& x : qk.keys.data) x = in.f32();
      g.attention = std::move(qk);
    }
    if (!in.exhausted()) fail_group(s.id, "payload block has trailing bytes");

    const auto violations = validate_trace(g, context_for(m));
    if (!violations.empty()) {
      fail_group(s.id, violations.front().field + ": " + violations.front().message);
    }
    bundle.groups.push_back(std::move(g));
  }
  for (const auto& p : m.planted) {
    if (p.group_id < 0 || p.group_id >= static_cast<int>(bundle.groups.size()) ||
        p.token_index >= bundle.groups[static_cast<std::size_t>(p.group_id)].tokens.size()) {
      throw FormatError(where + ": planted token (" + std::to_string(p.group_id) + ", " +
                        std::to_string(p.token_index) + ") does not exist");
    }
  }
  return bundle;
}

}  // namespace

TraceBundle read_trace_bundle(const fs::path& manifest_path) {
  try {
    return read_bundle_unchecked(manifest_path);
  } catch (const json::exception& e) {
    throw FormatError("manifest '" + manifest_path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Selection results

json selection_result_to_json(const SelectionResult& result) {
  const auto& meta = result.metadata;
  auto keyed = [](const std::map<int, std::int64_t>& m) {
    json out = json::array();
    for (const auto& [g, b] : m) out.push_back({g, b});
    return out;
  };
  json selected = json::array();
  for (const auto& s : result.selected) {
    selected.push_back({{"group_id", s.group_id},
                        {"token_index", s.token_index},
                        {"frame_index", s.token.frame_index},
                        {"spatial_slot", s.token.spatial_slot},
                        {"normalized_time", s.token.normalized_time},
                        {"relevance", s.token.relevance},
                        {"feature", s.token.feature}});
  }
  return {{"format_version", kBundleFormatVersion},
          {"kind", "selection_result"},
          {"metadata",
           {{"budget_requested", meta.budget_requested},
            {"budget_used", meta.budget_used},
            {"budgets", keyed(meta.budgets)},
            {"overselected", keyed(meta.overselected)},
            {"groups_processed", meta.groups_processed},
            {"groups_total", meta.groups_total},
            {"pool_size", meta.pool_size},
            {"stop_reason", to_string(meta.stop_reason)}}},
          {"selected", selected}};
}

SelectionResult selection_result_from_json(const json& doc) {
  const std::string where = "selection result";
  const int version = required<int>(doc, "format_version", where);
  if (version != kBundleFormatVersion) {
    throw FormatError(where + ": unsupported format_version " + std::to_string(version) +
                      " (expected " + std::to_string(kBundleFormatVersion) + ")");
  }
  if (doc.value("kind", std::string{}) != "selection_result") {
    throw FormatError(where + ": document kind is not 'selection_result'");
  }
  SelectionResult r;
  const json meta = required<json>(doc, "metadata", where);
  auto keyed = [&](const char* key) {
    std::map<int, std::int64_t> out;
    for (const auto& pair : required<json>(meta, key, where)) {
      if (!pair.is_array() || pair.size() != 2) throw FormatError(where + ": malformed '" + key + "'");
      out[pair[0].get<int>()] = pair[1].get<std::int64_t>();
    }
    return out;
  };
  auto& m = r.metadata;
  m.budget_requested = required<std::int64_t>(meta, "budget_requested", where);
  m.budget_used = required<std::int64_t>(meta, "budget_used", where);
  m.budgets = keyed("budgets");
  m.overselected = keyed("overselected");
  m.groups_processed = required<std::vector<int>>(meta, "groups_processed", where);
  m.groups_total = required<std::size_t>(meta, "groups_total", where);
  m.pool_size = required<std::size_t>(meta, "pool_size", where);
  m.stop_reason = parse_enum(stop_reason_from_string, required<std::string>(meta, "stop_reason", where), where);

  for (const auto& s : required<json>(doc, "selected", where)) {
    const std::string sw = where + " token";
    SelectedToken t;
    t.group_id = required<int>(s, "group_id", sw);
    t.token_index = required<std::size_t>(s, "token_index", sw);
    t.token.frame_index = required<std::int64_t>(s, "frame_index", sw);
    t.token.spatial_slot = required<std::int32_t>(s, "spatial_slot", sw);
    t.token.normalized_time = required<double>(s, "normalized_time", sw);
    t.token.relevance = required<double>(s, "relevance", sw);
    t.token.feature = required<std::vector<double>>(s, "feature", sw);
    r.selected.push_back(std::move(t));
  }
  if (auto v = validate_selection(r); !v.empty()) {
    throw FormatError(where + ": " + v.front().field + ": " + v.front().message);
  }
  return r;
}

void write_selection_result(const SelectionResult& result, const fs::path& path) {
  write_json_file(selection_result_to_json(result), path);
}

SelectionResult read_selection_result(const fs::path& path) {
  try {
    return selection_result_from_json(read_json_file(path));
  } catch (const json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Configuration

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "certainty.measure",        "certainty.bottom_fraction",  "grouping.strategy",
      "grouping.max_frames_per_group", "allocation.tau",        "allocation.budget_tokens",
      "allocation.budget_frames", "allocation.overselect_rate", "redundancy.sigma",
      "redundancy.enabled",       "scheduler.entropy_threshold", "scheduler.group_threshold",
      "scheduler.early_stopping"};
  return keys;
}

void apply_config_value(PipelineConfig& c, const std::string& key, const json& value) {
  try {
    if (key == "certainty.measure") {
      c.certainty.measure = certainty_measure_from_string(value.get<std::string>());
    } else if (key == "certainty.bottom_fraction") {
      c.certainty.bottom_fraction = value.get<double>();
    } else if (key == "grouping.strategy") {
      c.grouping.strategy = grouping_strategy_from_string(value.get<std::string>());
    } else if (key == "grouping.max_frames_per_group") {
      c.grouping.max_frames_per_group = value.get<std::int64_t>();
    } else if (key == "allocation.tau") {
      c.allocation.tau = value.get<double>();
    } else if (key == "allocation.budget_tokens") {
      c.allocation.budget_tokens = value.get<std::int64_t>();
    } else if (key == "allocation.budget_frames") {
      c.allocation.budget_frames = value.get<std::int64_t>();
    } else if (key == "allocation.overselect_rate") {
      c.allocation.overselect_rate = value.get<double>();
    } else if (key == "redundancy.sigma") {
      c.redundancy.sigma = value.get<double>();
    } else if (key == "redundancy.enabled") {
      c.redundancy.enabled = value.get<bool>();
    } else if (key == "scheduler.entropy_threshold") {
      c.entropy_threshold = value.get<double>();
    } else if (key == "scheduler.group_threshold") {
      c.group_threshold = value.get<int>();
    } else if (key == "scheduler.early_stopping") {
      c.early_stopping = value.get<bool>();
    } else {
      throw std::invalid_argument("unknown configuration key '" + key + "'");
    }
  } catch (const json::exception&) {
    throw std::invalid_argument("configuration key '" + key + "' has an ill-typed value " + value.dump());
  }
}

namespace {

void flatten(const json& node, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (const auto& [k, v] : node.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      out.emplace_back(key, v);
    }
  }
}

}  // namespace

LoadedConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  std::vector<std::pair<std::string, json>> entries;
  flatten(doc, "", entries);
  LoadedConfig loaded;
  for (const auto& [key, value] : entries) {
    if (!loaded.keys.insert(key).second) {
      throw std::invalid_argument("configuration key '" + key + "' given twice");
    }
    apply_config_value(loaded.config, key, value);
  }
  loaded.config.validate();
  return loaded;
}

LoadedConfig read_config(const fs::path& path) {
  const json doc = read_json_file(path);
  try {
    return config_from_json(doc);
  } catch (const std::invalid_argument& e) {
    throw FormatError("config '" + path.string() + "': " + e.what());
  }
}

json config_to_json(const PipelineConfig& c) {
  json out = {{"certainty.measure", to_string(c.certainty.measure)},
              {"certainty.bottom_fraction", c.certainty.bottom_fraction},
              {"grouping.strategy", to_string(c.grouping.strategy)},
              {"grouping.max_frames_per_group", c.grouping.max_frames_per_group},
              {"allocation.tau", c.allocation.tau},
              {"allocation.overselect_rate", c.allocation.overselect_rate},
              {"redundancy.sigma", c.redundancy.sigma},
              {"redundancy.enabled", c.redundancy.enabled},
              {"scheduler.entropy_threshold", c.entropy_threshold},
              {"scheduler.group_threshold", c.group_threshold},
              {"scheduler.early_stopping", c.early_stopping}};
  if (c.allocation.budget_tokens) out["allocation.budget_tokens"] = *c.allocation.budget_tokens;
  if (c.allocation.budget_frames) out["allocation.budget_frames"] = *c.allocation.budget_frames;
  return out;
}

}  // namespace tokensieve
