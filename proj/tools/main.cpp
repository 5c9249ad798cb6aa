// tokensieve command-line tool.
//
//   tokensieve select BUNDLE [-o RESULT] [--config FILE] [--<config.key> VALUE ...]
//   tokensieve simulate -o BUNDLE [scenario flags]
//   tokensieve entropy BUNDLE [--measure M] [-o TABLE]
//   tokensieve order --groups G
//   tokensieve bench [BUNDLE ...] [--sweep NAME | --grid FILE] [--metric M] [--voting]
//   tokensieve validate BUNDLE [--result FILE]
//
// Summaries go to stdout as JSON; errors go to stderr with a nonzero exit.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tokensieve/bench.hpp"
#include "tokensieve/certainty.hpp"
#include "tokensieve/grouping.hpp"
#include "tokensieve/scheduler.hpp"
#include "tokensieve/synthetic.hpp"
#include "tokensieve/trace_io.hpp"

using namespace tokensieve;
using nlohmann::json;

namespace {

constexpr std::int64_t kCliDefaultBudget = 64;

// Bad flag values and combinations; reported with exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --config plus one string option per config key. Flags win over the file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool early_stop = false;

  void attach(CLI::App* cmd, bool with_grouping) {
    cmd->add_option("--config", config_path, "JSON config file (flat dotted or nested keys)");
    for (const auto& key : config_keys()) {
      if (!with_grouping && key.rfind("grouping.", 0) == 0) continue;
      cmd->add_option("--" + key, values[key], "override " + key);
    }
    cmd->add_flag("--early-stop", early_stop, "same as --scheduler.early_stopping true");
  }

  LoadedConfig load(CLI::App* cmd) const {
    LoadedConfig loaded;
    if (!config_path.empty()) loaded = read_config(config_path);
    for (const auto& [key, text] : values) {
      if (cmd->count("--" + key) == 0) continue;
      // Numbers and booleans parse as JSON; anything else is a string.
      json value = json::parse(text, nullptr, false);
      if (value.is_discarded() || value.is_object() || value.is_array()) value = text;
      try {
        apply_config_value(loaded.config, key, value);
      } catch (const std::invalid_argument& e) {
        throw UsageError("--" + key + ": " + e.what());
      }
      loaded.keys.insert(key);
    }
    if (early_stop) {
      loaded.config.early_stopping = true;
      loaded.keys.insert("scheduler.early_stopping");
    }
    if (!loaded.config.allocation.budget_tokens && !loaded.config.allocation.budget_frames) {
      loaded.config.allocation.budget_tokens = kCliDefaultBudget;
    }
    try {
      loaded.config.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return loaded;
  }
};

json int_map(const std::map<int, std::int64_t>& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

void print(const json& doc) { std::cout << doc.dump(2) << '\n'; }

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError(flag + ": '" + item + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// select

struct SelectArgs {
  std::string bundle;
  std::string output = "selection.json";
  std::string traversal;
  ConfigFlags config;
};

int run_select(const SelectArgs& a, CLI::App* cmd) {
  const auto loaded = a.config.load(cmd);
  const auto bundle = read_trace_bundle(a.bundle);
  std::optional<std::vector<int>> traversal;
  if (!a.traversal.empty()) traversal = parse_int_list(a.traversal, "--traversal");
  const auto result = run_pipeline(bundle, loaded.config, traversal);
  write_selection_result(result, a.output);

  const auto& m = result.metadata;
  json summary{
      {"output", a.output},
      {"groups_processed", m.groups_processed},
      {"groups_total", m.groups_total},
      {"stop_reason", to_string(m.stop_reason)},
      {"budget_requested", m.budget_requested},
      {"budget_used", m.budget_used},
      {"budgets", int_map(m.budgets)},
      {"overselected", int_map(m.overselected)},
      {"pool_size", m.pool_size},
      {"token_count", result.selected.size()},
  };
  if (!bundle.manifest.planted.empty()) summary["recall"] = recall_of_planted(result, bundle.manifest);
  print(summary);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string output;
  std::string needles;
  std::string labels;
  std::string strategy = "marginal";
  std::string attention = "query_key";
  NeedleScenario scenario;
};

int run_simulate(SimulateArgs a) {
  auto& s = a.scenario;
  try {
    s.strategy = grouping_strategy_from_string(a.strategy);
    s.attention_mode = attention_mode_from_string(a.attention);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  s.needle_groups.clear();
  for (int g : parse_int_list(a.needles, "--needles")) s.needle_groups.insert(g);
  if (!a.labels.empty()) {
    s.answer_labels.clear();
    std::stringstream ss(a.labels);
    std::string item;
    while (std::getline(ss, item, ',')) s.answer_labels.push_back(item);
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto bundle = gen_needle_bundle(s);
  write_trace_bundle(bundle, a.output);
  print({
      {"output", a.output},
      {"payload", payload_path_for(a.output).string()},
      {"groups", bundle.groups.size()},
      {"n_frames", bundle.manifest.n_frames},
      {"needle_groups", std::vector<int>(s.needle_groups.begin(), s.needle_groups.end())},
      {"planted_tokens", bundle.manifest.planted.size()},
      {"seed", s.seed},
      {"rng", bundle.manifest.rng_algorithm},
  });
  return 0;
}

// ---------------------------------------------------------------------------
// entropy

struct EntropyArgs {
  std::string bundle;
  std::vector<std::string> measures;
  double bottom_fraction = kDefaultBottomFraction;
  std::string output;
  bool table = false;
};

int run_entropy(const EntropyArgs& a) {
  std::vector<CertaintyMeasure> measures;
  try {
    for (const auto& m : a.measures) measures.push_back(certainty_measure_from_string(m));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (measures.empty()) measures.push_back(CertaintyMeasure::entropy);
  if (!(a.bottom_fraction > 0.0 && a.bottom_fraction <= 1.0)) {
    throw UsageError("--certainty.bottom_fraction must lie in (0, 1]");
  }
  const auto bundle = read_trace_bundle(a.bundle);

  json rows = json::array();
  for (const auto& g : bundle.groups) {
    if (g.response.empty()) throw FormatError("group " + std::to_string(g.group_id) + ": empty response");
    const auto h = response_certainty(g.response, CertaintyMeasure::entropy, a.bottom_fraction);
    json row{{"group_id", g.group_id},
             {"steps", g.response.size()},
             {"bottom_set", bottom_set_size(g.response.size(), a.bottom_fraction)},
             {"mean_bottom_entropy", *h.mean_bottom_entropy}};
    for (auto m : measures) row[to_string(m)] = response_certainty(g.response, m, a.bottom_fraction).value;
    if (g.answer_label) row["answer"] = *g.answer_label;
    rows.push_back(std::move(row));
  }
  json doc{{"bundle", a.bundle},
           {"D", bundle.manifest.vocabulary_size},
           {"bottom_fraction", a.bottom_fraction},
           {"rows", rows}};
  if (!a.output.empty()) write_json_file(doc, a.output);

  if (a.table) {
    std::cout << "group  steps  mean_bottom_entropy";
    for (auto m : measures) std::cout << "  " << to_string(m);
    std::cout << '\n';
    for (const auto& r : rows) {
      std::cout << r["group_id"].get<int>() << "  " << r["steps"].get<std::size_t>() << "  "
                << r["mean_bottom_entropy"].get<double>();
      for (auto m : measures) std::cout << "  " << r[to_string(m)].get<double>();
      std::cout << '\n';
    }
  } else {
    print(doc);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::vector<std::string> bundles;
  std::size_t seeds = 5;
  std::string sweep;
  std::string grid;
  std::string metric = "recall";
  bool voting = false;
  std::string output;
  ConfigFlags config;
};

// Needle bundles used when no bundle paths are given.
std::vector<TraceBundle> default_bundles(std::size_t seeds) {
  std::vector<TraceBundle> out;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    NeedleScenario s;
    s.groups = 16;
    s.needle_groups = {0, 8, 4, 12};
    s.needle_tokens_per_group = 8;
    s.seed = seed;
    out.push_back(gen_needle_bundle(s));
  }
  return out;
}

int run_bench(const BenchArgs& a, CLI::App* cmd) {
  const auto loaded = a.config.load(cmd);
  AblationMetric metric;
  try {
    metric = ablation_metric_from_string(a.metric);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!a.sweep.empty() && !a.grid.empty()) throw UsageError("--sweep and --grid are exclusive");

  ParameterGrid grid;
  if (a.sweep == "removal_rate") {
    grid = removal_rate_grid();
  } else if (a.sweep == "early_stop") {
    grid = early_stop_grid();
  } else if (a.sweep == "components") {
    json cells = json::array();
    for (const auto& [name, cell] : component_presets()) cells.push_back(cell);
    grid = ParameterGrid::from_json(cells);
  } else if (!a.sweep.empty()) {
    throw UsageError("unknown sweep '" + a.sweep + "' (removal_rate, early_stop, components)");
  } else if (!a.grid.empty()) {
    try {
      grid = ParameterGrid::from_json(read_json_file(a.grid));
    } catch (const std::invalid_argument& e) {
      throw UsageError(a.grid + ": " + e.what());
    }
  }

  std::vector<TraceBundle> bundles;
  for (const auto& p : a.bundles) bundles.push_back(read_trace_bundle(p));
  if (bundles.empty()) bundles = default_bundles(a.seeds);

  json doc{{"metric", to_string(metric)},
           {"rows", ablation_to_json(run_ablation(grid, bundles, metric, loaded.config))}};
  if (a.voting) {
    json v = json::object();
    for (const auto& row : compare_voting(bundles, loaded.config)) {
      v[row.method] = std::isnan(row.accuracy) ? json(nullptr) : json(row.accuracy);
    }
    doc["voting"] = v;
  }
  if (!a.output.empty()) write_json_file(doc, a.output);
  print(doc);
  return 0;
}

// ---------------------------------------------------------------------------
// validate

int run_validate(const std::string& bundle_path, const std::string& result_path) {
  const auto bundle = read_trace_bundle(bundle_path);
  ValidationContext ctx{bundle.manifest.n_frames, bundle.manifest.vocabulary_size, bundle.manifest.feature_dim};
  json violations = json::array();
  for (const auto& g : bundle.groups) {
    for (const auto& v : validate_trace(g, ctx)) {
      violations.push_back({{"group_id", g.group_id}, {"field", v.field}, {"message", v.message}});
    }
  }
  json doc{{"bundle", bundle_path}, {"groups", bundle.groups.size()}};
  if (!result_path.empty()) {
    const auto result = read_selection_result(result_path);
    for (const auto& v : validate_selection(result)) {
      violations.push_back({{"result", result_path}, {"field", v.field}, {"message", v.message}});
    }
    doc["result"] = result_path;
  }
  doc["violations"] = violations;
  doc["valid"] = violations.empty();
  print(doc);
  return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certainty-driven visual token selection over recorded traces"};
  app.require_subcommand(1);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "select tokens from a trace bundle");
  select->add_option("bundle", sel.bundle, "bundle manifest (.json)")->required();
  select->add_option("-o,--output", sel.output, "selection result file")->capture_default_str();
  select->add_option("--traversal", sel.traversal, "comma-separated group visiting order");
  sel.config.attach(select, false);

  SimulateArgs sim;
  auto& sc = sim.scenario;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic needle bundle");
  simulate->add_option("-o,--output", sim.output, "bundle manifest to write (.json)")->required();
  simulate->add_option("--groups", sc.groups, "number of frame groups")->capture_default_str();
  simulate->add_option("--grouping.max_frames_per_group,--frames-per-group", sc.frames_per_group,
                       "frames per group (K)")->capture_default_str();
  simulate->add_option("--grouping.strategy,--strategy", sim.strategy, "marginal, continuous or chunk")
      ->capture_default_str();
  simulate->add_option("--frames", sc.n_frames, "total frames (0: groups x K)")->capture_default_str();
  simulate->add_option("--tokens-per-frame", sc.tokens_per_frame)->capture_default_str();
  simulate->add_option("--feature-dim", sc.feature_dim)->capture_default_str();
  simulate->add_option("--heads", sc.heads)->capture_default_str();
  simulate->add_option("--queries", sc.queries)->capture_default_str();
  simulate->add_option("--vocabulary", sc.vocabulary)->capture_default_str();
  simulate->add_option("--steps", sc.response_steps, "response length")->capture_default_str();
  simulate->add_option("--needles", sim.needles, "comma-separated needle group ids");
  simulate->add_option("--needle-tokens", sc.needle_tokens_per_group, "planted tokens per needle group")
      ->capture_default_str();
  simulate->add_option("--snr", sc.snr, "needle logit gap in background standard deviations")
      ->capture_default_str();
  simulate->add_option("--needle-entropy", sc.needle_entropy)->capture_default_str();
  simulate->add_option("--background-entropy", sc.background_entropy)->capture_default_str();
  simulate->add_option("--coherence", sc.needle_coherence)->capture_default_str();
  simulate->add_option("--scene-share", sc.scene_share)->capture_default_str();
  simulate->add_option("--scene-drift", sc.scene_drift)->capture_default_str();
  simulate->add_option("--attention", sim.attention, "query_key or tensor")->capture_default_str();
  simulate->add_option("--labels", sim.labels, "comma-separated answer labels");
  simulate->add_option("--answer", sc.correct_answer, "index of the correct label")->capture_default_str();
  simulate->add_option("--seed", sc.seed)->capture_default_str();

  EntropyArgs ent;
  auto* entropy = app.add_subcommand("entropy", "per-group response certainty table");
  entropy->add_option("bundle", ent.bundle, "bundle manifest (.json)")->required();
  entropy->add_option("--measure,--certainty.measure", ent.measures, "entropy, confidence or kl_uniform")
      ->expected(1, 3);
  entropy->add_option("--certainty.bottom_fraction", ent.bottom_fraction)->capture_default_str();
  entropy->add_option("-o,--output", ent.output, "also write the table as JSON");
  entropy->add_flag("--table", ent.table, "print a plain text table instead of JSON");

  std::int64_t order_groups = 0;
  auto* order = app.add_subcommand("order", "print the max-margin group visiting order");
  order->add_option("--groups", order_groups, "group count G")->required()->check(CLI::Range(std::int64_t{1}, std::int64_t{1} << 20));

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "ablation sweeps and voting comparison");
  bench_cmd->add_option("bundles", bench.bundles, "bundle manifests (default: synthetic needle bundles)");
  bench_cmd->add_option("--seeds", bench.seeds, "synthetic bundles when none are given")->capture_default_str();
  bench_cmd->add_option("--sweep", bench.sweep, "removal_rate, early_stop or components");
  bench_cmd->add_option("--grid", bench.grid, "grid file: {key: [values]} or [{key: value}, ...]");
  bench_cmd->add_option("--metric", bench.metric, "recall, processed_groups or runtime")->capture_default_str();
  bench_cmd->add_flag("--voting", bench.voting, "add the voting comparison");
  bench_cmd->add_option("-o,--output", bench.output, "also write the report as JSON");
  bench.config.attach(bench_cmd, false);

  std::string validate_bundle, validate_result;
  auto* validate = app.add_subcommand("validate", "check a bundle (and optionally a result) for violations");
  validate->add_option("bundle", validate_bundle, "bundle manifest (.json)")->required();
  validate->add_option("--result", validate_result, "selection result to check as well");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*select) return run_select(sel, select);
    if (*simulate) return run_simulate(sim);
    if (*entropy) return run_entropy(ent);
    if (*order) {
      const auto o = max_margin_order(order_groups);
      for (std::size_t i = 0; i < o.size(); ++i) std::cout << (i ? " " : "") << o[i];
      std::cout << '\n';
      return 0;
    }
    if (*bench_cmd) return run_bench(bench, bench_cmd);
    if (*validate) return run_validate(validate_bundle, validate_result);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
