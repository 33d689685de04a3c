// rct: command line front end for data preparation, baselines, co-training,
// ablations and reports.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rct/cotrain.h"
#include "rct/data_ingest.h"
#include "rct/run_artifacts.h"
#include "rct/run_config.h"
#include "rct/synthetic.h"

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string data;
  std::string manifest;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "runs/latest";
  std::string scheme;
  std::string optimizer;
  std::optional<double> lambda;
  std::optional<std::size_t> max_iterations;
};

void add_common(CLI::App* cmd, CommonOptions& o, bool needs_data = true) {
  auto* data = cmd->add_option("-d,--data", o.data, "CSV dataset");
  if (needs_data) data->required();
  cmd->add_option("-m,--manifest", o.manifest,
                  "key=value manifest (default: <data> with .manifest extension)");
  cmd->add_option("-c,--config", o.config, "JSON run configuration");
  cmd->add_option("-s,--seed", o.seed, "master seed");
  cmd->add_option("-o,--out", o.out, "output directory");
  cmd->add_option("--scheme", o.scheme, "iterative | single_pass");
  cmd->add_option("--optimizer", o.optimizer, "ppo | reinforce");
  cmd->add_option("--lambda", o.lambda, "task-reward weight in the hybrid reward");
  cmd->add_option("--max-iterations", o.max_iterations, "outer iteration cap");
}

rct::CoTrainConfig build_config(const CommonOptions& o) {
  rct::CoTrainConfig c;
  if (!o.config.empty()) c = rct::load_config(o.config);
  if (o.seed) c = rct::with_seed(c, *o.seed);
  if (!o.scheme.empty()) c.scheme = rct::parse_scheme(o.scheme);
  if (!o.optimizer.empty()) c.algorithm = rct::parse_algorithm(o.optimizer);
  if (o.lambda) c.reward.lambda = *o.lambda;
  if (o.max_iterations) c.max_outer_iterations = *o.max_iterations;
  c.validate();
  return c;
}

rct::TabularDataset load_dataset(const CommonOptions& o) {
  fs::path manifest = o.manifest;
  if (manifest.empty()) {
    manifest = fs::path(o.data).replace_extension(".manifest");
    if (!fs::exists(manifest)) manifest.clear();
  }
  const auto options = manifest.empty() ? rct::LoadOptions{} : rct::load_manifest(manifest);
  return rct::load_csv(o.data, options);
}

void print_trace_row(const rct::IterationRecord& r) {
  fmt::print("iter {:>2}  llm val {:.4f} test {:.4f}  rf val {:.4f} test {:.4f}  reward {:+.4f}"
             "  {:.1f}s\n",
             r.iteration, r.llm_val_auc, r.llm_test_auc, r.rf_val_auc, r.rf_test_auc,
             r.mean_ppo_reward, r.seconds);
  std::fflush(stdout);
}

int run_ingest(const CommonOptions& o) {
  const auto config = build_config(o);
  const auto raw = load_dataset(o);
  rct::ProvenanceAudit audit;
  const auto data = rct::prepare_data(raw, config, &audit);
  const fs::path out = o.out;
  fs::create_directories(out);

  std::string split = "source_row,split,label\n";
  for (const auto* s : {&data.train, &data.validation, &data.test}) {
    for (const auto& r : s->rows.rows) {
      split += fmt::format("{},{},{}\n", r.source_row, rct::to_string(r.tag), r.label);
    }
  }
  rct::write_text(out / "split.csv", split);

  std::string schema = "name,kind,label,unit,categories\n";
  for (const auto& f : data.encoder.schema().features) {
    std::string cats;
    for (const auto& c : f.categories) cats += (cats.empty() ? "" : "|") + c;
    schema += fmt::format("{},{},{},{},{}\n", f.name, rct::to_string(f.kind), f.display_label,
                          f.unit, cats);
  }
  rct::write_text(out / "schema.csv", schema);

  std::string cards;
  for (const auto& c : data.train.cards) cards += fmt::format("# row {}\n{}\n\n", c.source_row, c.text);
  rct::write_text(out / "cards_train.txt", cards);
  data.vocab.save(out / "vocab.txt");

  fmt::print("rows {} -> train {} / validation {} / test {}\n", raw.size(),
             data.train.labels.size(), data.validation.labels.size(), data.test.labels.size());
  fmt::print("features {} (encoded width {}), removed {}\n", data.encoder.schema().size(),
             data.encoder.width(), data.removed_features.size());
  fmt::print("vocabulary {} tokens, max_len {}\n", data.vocab.size(), data.max_len);
  return 0;
}

int run_baseline(const CommonOptions& o) {
  const auto config = build_config(o);
  const auto data = rct::prepare_data(load_dataset(o), config);
  const auto b = rct::run_baselines(data, config);
  rct::write_baseline_directory(o.out, data, config, b);
  fmt::print("rf baseline   val {:.4f} test {:.4f}\n", b.rf.validation_auc, b.rf.test_auc);
  fmt::print("llm baseline  val {:.4f} test {:.4f}\n", b.llm.validation_auc, b.llm.test_auc);
  std::cout << rct::read_text(fs::path(o.out) / "metrics_report.txt");
  return 0;
}

int run_cotrain(const CommonOptions& o) {
  const auto config = build_config(o);
  rct::ProvenanceAudit audit;
  const auto data = rct::prepare_data(load_dataset(o), config, &audit);
  const fs::path out = o.out;
  fs::create_directories(out);
  rct::write_text(out / "config.json", rct::config_to_json(config));

  rct::RunHooks hooks;
  hooks.on_iteration = [&](const rct::CoTrainResult& partial) {
    rct::write_trace(out / "trace.csv", partial.trace);
    rct::write_timing(out / "timing.csv", partial.trace);
    print_trace_row(partial.trace.back());
  };
  const auto result = rct::run_experiment(data, config, &audit, hooks);
  rct::write_run_directory(out, data, config, result, &audit);
  fmt::print("stopped at iteration {} ({}); best llm iteration {}, best rf iteration {}\n",
             result.cotrain.stop_iteration, result.cotrain.stop_reason,
             result.cotrain.best_policy_iteration, result.cotrain.best_forest_iteration);
  std::cout << rct::read_text(out / "metrics_report.txt");
  return 0;
}

rct::AblationGrid parse_grid(const std::vector<std::string>& axes, bool standard) {
  rct::AblationGrid grid = standard ? rct::AblationGrid::standard() : rct::AblationGrid{};
  for (const auto& axis : axes) {
    const auto eq = axis.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--axis", "expected name=v1,v2");
    const auto name = axis.substr(0, eq);
    std::vector<std::string> values;
    std::string item;
    for (char ch : axis.substr(eq + 1) + ",") {
      if (ch == ',') {
        if (!item.empty()) values.push_back(item);
        item.clear();
      } else {
        item += ch;
      }
    }
    if (name == "scheme") {
      grid.schemes.clear();
      for (const auto& v : values) grid.schemes.push_back(rct::parse_scheme(v));
    } else if (name == "optimizer") {
      grid.algorithms.clear();
      for (const auto& v : values) grid.algorithms.push_back(rct::parse_algorithm(v));
    } else if (name == "reward") {
      grid.rewards = values;
      for (const auto& v : values) rct::lambda_for_reward_mode(v);
    } else if (name == "entropy") {
      grid.entropy.clear();
      for (const auto& v : values) grid.entropy.push_back(std::stod(v));
    } else if (name == "pca_k") {
      grid.pca_k.clear();
      for (const auto& v : values) grid.pca_k.push_back(std::stoul(v));
    } else {
      throw CLI::ValidationError("--axis", "unknown axis '" + name + "'");
    }
  }
  return grid;
}

int run_ablate(const CommonOptions& o, const std::vector<std::string>& axes, bool standard) {
  const auto config = build_config(o);
  const auto data = rct::prepare_data(load_dataset(o), config);
  const auto grid = parse_grid(axes, standard);
  const auto rows = rct::run_ablation_grid(data, config, grid);
  const fs::path out = o.out;
  fs::create_directories(out);
  rct::write_text(out / "config.json", rct::config_to_json(config));
  const auto report = rct::format_ablation_report(rows);
  rct::write_text(out / "ablation_report.csv", report);
  std::cout << report;
  return 0;
}

int run_report(const std::string& run_dir, std::optional<double> target_recall) {
  const fs::path dir = run_dir;
  double target = 0.80;
  if (target_recall) {
    target = *target_recall;
  } else if (fs::exists(dir / "config.json")) {
    target = rct::load_config(dir / "config.json").target_recall;
  }
  const auto table = rct::read_scores(dir / "scores.csv");
  rct::write_report_files(dir, table, target);
  std::cout << rct::read_text(dir / "metrics_report.txt");
  return 0;
}

int run_synth(const std::string& out, std::size_t rows, double rate, std::uint64_t seed) {
  rct::SyntheticConfig cfg;
  cfg.n_rows = rows;
  cfg.positive_rate = rate;
  cfg.seed = seed;
  const auto ds = rct::make_synthetic_cohort(cfg);
  const fs::path dir = out;
  rct::write_text(dir / "synthetic.csv", rct::synthetic_csv(ds));
  rct::write_text(dir / "synthetic.manifest", rct::synthetic_manifest());
  fmt::print("wrote {} rows ({} positive) to {}\n", ds.size(), ds.count_label(1),
             (dir / "synthetic.csv").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reciprocal co-training of a text policy and a random forest"};
  app.require_subcommand(1);

  CommonOptions ingest_opts, baseline_opts, cotrain_opts, ablate_opts;
  auto* ingest = app.add_subcommand("ingest", "split, encode and tokenize a dataset");
  add_common(ingest, ingest_opts);
  auto* baseline = app.add_subcommand("baseline", "train the standalone forest and policy");
  add_common(baseline, baseline_opts);
  auto* cotrain = app.add_subcommand("cotrain", "run alternating co-training");
  add_common(cotrain, cotrain_opts);

  auto* ablate = app.add_subcommand("ablate", "run an ablation grid against a base config");
  add_common(ablate, ablate_opts);
  std::vector<std::string> axes;
  bool standard = false;
  ablate->add_option("--axis", axes,
                     "axis=v1,v2 with axis in scheme|optimizer|reward|entropy|pca_k");
  ablate->add_flag("--standard", standard, "use the full standard grid");

  auto* report = app.add_subcommand("report", "rebuild metrics report and curves of a run");
  std::string report_dir;
  std::optional<double> report_target;
  report->add_option("run_dir", report_dir, "run directory")->required();
  report->add_option("--target-recall", report_target, "recall to calibrate thresholds to");

  auto* synth = app.add_subcommand("synth", "write the synthetic relapse cohort");
  std::string synth_out = "data";
  std::size_t synth_rows = 2000;
  double synth_rate = 0.36;
  std::uint64_t synth_seed = 0;
  synth->add_option("-o,--out", synth_out, "output directory");
  synth->add_option("--rows", synth_rows, "row count");
  synth->add_option("--positive-rate", synth_rate, "fraction of positive rows");
  synth->add_option("-s,--seed", synth_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return run_ingest(ingest_opts);
    if (*baseline) return run_baseline(baseline_opts);
    if (*cotrain) return run_cotrain(cotrain_opts);
    if (*ablate) return run_ablate(ablate_opts, axes, standard);
    if (*report) return run_report(report_dir, report_target);
    if (*synth) return run_synth(synth_out, synth_rows, synth_rate, synth_seed);
  } catch (const std::exception& e) {
    fmt::print(stderr, "rct: {}\n", e.what());
    return 1;
  }
  return 0;
}
