#include "rct/run_artifacts.h"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "rct/csv.h"
#include "rct/run_config.h"

namespace rct {
namespace {

namespace fs = std::filesystem;

const std::map<std::string, std::string>& display_names() {
  static const std::map<std::string, std::string> names = {
      {"rf_baseline", "RF Baseline"},
      {"llm_baseline", "LLM Baseline"},
      {"rct_rf", "RCT - RF"},
      {"rct_llm", "RCT - LLM"}};
  return names;
}

std::string baseline_of(const std::string& model) {
  if (model == "rct_rf") return "rf_baseline";
  if (model == "rct_llm") return "llm_baseline";
  return {};
}

std::string delta_text(const std::optional<double>& d) {
  return d ? fmt::format("{:+.4f}", *d) : std::string();
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ScoreTable::add(std::string model, const ModelScores& scores) {
  if (scores.validation.size() != validation_labels.size() ||
      scores.test.size() != test_labels.size()) {
    throw std::invalid_argument("score table: row count mismatch for " + model);
  }
  models.push_back(std::move(model));
  validation.push_back(scores.validation);
  test.push_back(scores.test);
}

ScoreTable make_score_table(const PreparedData& data, const BaselineResult& baselines) {
  ScoreTable t;
  for (const auto& r : data.validation.rows.rows) t.validation_rows.push_back(r.source_row);
  for (const auto& r : data.test.rows.rows) t.test_rows.push_back(r.source_row);
  t.validation_labels = data.validation.labels;
  t.test_labels = data.test.labels;
  t.add("rf_baseline", baselines.rf);
  t.add("llm_baseline", baselines.llm);
  return t;
}

ScoreTable make_score_table(const PreparedData& data, const ExperimentResult& result) {
  ScoreTable t = make_score_table(data, result.baselines);
  t.add("rct_rf", result.cotrain.best_forest_scores);
  t.add("rct_llm", result.cotrain.best_policy_scores);
  return t;
}

void write_scores(const fs::path& path, const ScoreTable& table) {
  std::ostringstream out;
  csv::Row header = {"split", "source_row", "label"};
  header.insert(header.end(), table.models.begin(), table.models.end());
  csv::write_row(out, header);
  auto emit = [&](std::string_view split, const std::vector<std::size_t>& rows,
                  const std::vector<int>& labels,
                  const std::vector<std::vector<double>>& scores) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      csv::Row row = {std::string(split), std::to_string(rows[i]), std::to_string(labels[i])};
      for (const auto& column : scores) row.push_back(fmt::format("{}", column[i]));
      csv::write_row(out, row);
    }
  };
  emit("validation", table.validation_rows, table.validation_labels, table.validation);
  emit("test", table.test_rows, table.test_labels, table.test);
  write_text(path, out.str());
}

ScoreTable read_scores(const fs::path& path) {
  const auto rows = csv::parse(read_text(path));
  if (rows.empty() || rows[0].size() < 4 || rows[0][0] != "split") {
    throw std::runtime_error(path.string() + ": not a score table");
  }
  ScoreTable t;
  t.models.assign(rows[0].begin() + 3, rows[0].end());
  t.validation.resize(t.models.size());
  t.test.resize(t.models.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != rows[0].size()) {
      throw std::runtime_error(path.string() + ": ragged row " + std::to_string(i));
    }
    const bool is_test = r[0] == "test";
    if (!is_test && r[0] != "validation") {
      throw std::runtime_error(path.string() + ": unknown split '" + r[0] + "'");
    }
    (is_test ? t.test_rows : t.validation_rows).push_back(std::stoul(r[1]));
    (is_test ? t.test_labels : t.validation_labels).push_back(std::stoi(r[2]));
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      (is_test ? t.test : t.validation)[m].push_back(std::stod(r[3 + m]));
    }
  }
  return t;
}

std::vector<ModelReport> report_from_scores(const ScoreTable& table, double target_recall) {
  std::vector<ModelReport> out;
  std::map<std::string, std::size_t> index;
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    const ScoredSet val(table.validation[m], table.validation_labels);
    const ScoredSet test(table.test[m], table.test_labels);
    ModelReport r;
    r.model = table.models[m];
    const auto it = display_names().find(r.model);
    r.display_name = it == display_names().end() ? r.model : it->second;
    const double threshold = calibrate_threshold(val, target_recall);
    r.validation_recall = operating_point(val, threshold).recall;
    r.test_point = operating_point(test, threshold);
    r.roc_auc = roc_auc(test);
    r.pr_auc = pr_auc(test);
    index[r.model] = out.size();
    out.push_back(r);
  }
  for (auto& r : out) {
    const auto base = index.find(baseline_of(r.model));
    if (base == index.end()) continue;
    r.roc_auc_delta = r.roc_auc - out[base->second].roc_auc;
    r.pr_auc_delta = r.pr_auc - out[base->second].pr_auc;
  }
  return out;
}

std::string format_metrics_report(std::span<const ModelReport> rows, const ScoreTable& table,
                                  double target_recall) {
  std::size_t val_pos = 0, test_pos = 0;
  for (int y : table.validation_labels) val_pos += y == 1;
  for (int y : table.test_labels) test_pos += y == 1;
  std::string out;
  out += "# rct metrics report\n";
  out += fmt::format("# target_recall {:.2f}; thresholds calibrated on validation\n",
                     target_recall);
  out += fmt::format("# validation rows {} (positive {}), test rows {} (positive {})\n",
                     table.validation_labels.size(), val_pos, table.test_labels.size(),
                     test_pos);
  out += "model,accuracy,recall,specificity,precision,f1,roc_auc,pr_auc,roc_auc_delta,"
         "pr_auc_delta,threshold,validation_recall\n";
  for (const auto& r : rows) {
    const auto& p = r.test_point;
    out += fmt::format("{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{},{},{:.6f},{:.4f}\n",
                       r.display_name, p.accuracy, p.recall, p.specificity, p.precision, p.f1,
                       r.roc_auc, r.pr_auc, delta_text(r.roc_auc_delta),
                       delta_text(r.pr_auc_delta), p.threshold, r.validation_recall);
  }
  return out;
}

void write_report_files(const fs::path& dir, const ScoreTable& table, double target_recall) {
  const auto rows = report_from_scores(table, target_recall);
  write_text(dir / "metrics_report.txt", format_metrics_report(rows, table, target_recall));
  fs::create_directories(dir / "curves");
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    emit_curves(ScoredSet(table.test[m], table.test_labels), dir / "curves", table.models[m]);
  }
}

std::string format_trace(std::span<const IterationRecord> trace) {
  std::string out =
      "iteration,llm_val_auc,rf_val_auc,llm_test_auc,rf_test_auc,mean_ppo_reward,"
      "forest_frozen,policy_frozen\n";
  for (const auto& r : trace) {
    out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{},{}\n", r.iteration,
                       r.llm_val_auc, r.rf_val_auc, r.llm_test_auc, r.rf_test_auc,
                       r.mean_ppo_reward, r.forest_frozen_during_policy_phase ? 1 : 0,
                       r.policy_frozen_during_forest_phase ? 1 : 0);
  }
  return out;
}

void write_trace(const fs::path& path, std::span<const IterationRecord> trace) {
  write_text(path, format_trace(trace));
}

void write_timing(const fs::path& path, std::span<const IterationRecord> trace) {
  std::string out = "iteration,seconds\n";
  for (const auto& r : trace) out += fmt::format("{},{:.3f}\n", r.iteration, r.seconds);
  write_text(path, out);
}

void write_ppo_log(const fs::path& path, std::span<const PPORoundLog> log) {
  std::string out =
      "iteration,round,mean_reward,mean_ratio,clip_fraction,entropy,policy_loss,value_loss,"
      "total_loss\n";
  for (const auto& e : log) {
    const auto& s = e.stats;
    out += fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", e.iteration,
                       e.round, s.mean_reward, s.mean_ratio, s.clip_fraction, s.entropy,
                       s.policy_loss, s.value_loss, s.total_loss);
  }
  write_text(path, out);
}

void write_baseline_directory(const fs::path& dir, const PreparedData& data,
                              const CoTrainConfig& config, const BaselineResult& baselines) {
  fs::create_directories(dir / "checkpoints");
  write_text(dir / "config.json", config_to_json(config));
  data.vocab.save(dir / "checkpoints" / "vocab.txt");
  baselines.policy.save(dir / "checkpoints" / "policy_baseline.ckpt");
  baselines.forest.save(dir / "checkpoints" / "forest_baseline.txt");
  const auto table = make_score_table(data, baselines);
  write_scores(dir / "scores.csv", table);
  write_report_files(dir, table, config.target_recall);
}

void write_run_directory(const fs::path& dir, const PreparedData& data,
                         const CoTrainConfig& config, const ExperimentResult& result,
                         const ProvenanceAudit* audit) {
  write_baseline_directory(dir, data, config, result.baselines);
  const auto& c = result.cotrain;
  c.best_policy.save(dir / "checkpoints" / "policy_best.ckpt");
  c.best_forest.save(dir / "checkpoints" / "forest_best.txt");
  c.best_forest_embedder.save(dir / "checkpoints" / "forest_embedder.ckpt");
  if (c.best_forest_pca) {
    c.best_forest_pca->save(dir / "checkpoints" / "pca_best.txt");
    write_text(dir / "checkpoints" / "forest_columns.txt",
               augment(data.train.features.values.topRows(1),
                       Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(
                                                    c.best_forest_pca->output_dim())),
                       data.train.features.column_names)
                   .serialize_columns());
  }
  write_trace(dir / "trace.csv", c.trace);
  write_timing(dir / "timing.csv", c.trace);
  write_ppo_log(dir / "ppo_log.csv", c.ppo_log);
  const auto table = make_score_table(data, result);
  write_scores(dir / "scores.csv", table);
  write_report_files(dir, table, config.target_recall);

  std::string summary;
  summary += fmt::format("stop_iteration = {}\n", c.stop_iteration);
  summary += fmt::format("stop_reason = {}\n", c.stop_reason);
  summary += fmt::format("best_policy_iteration = {}\n", c.best_policy_iteration);
  summary += fmt::format("best_forest_iteration = {}\n", c.best_forest_iteration);
  summary += fmt::format("rows.train = {}\nrows.validation = {}\nrows.test = {}\n",
                         data.train.labels.size(), data.validation.labels.size(),
                         data.test.labels.size());
  std::string removed;
  for (const auto& f : data.removed_features) removed += (removed.empty() ? "" : ", ") + f;
  summary += fmt::format("removed_features = {}\n", removed);
  if (audit) {
    for (const auto& [stage, counts] : audit->stages()) {
      summary += fmt::format("rows_seen.{} = train {} validation {} test {}\n", stage,
                             counts[1], counts[2], counts[3]);
    }
  }
  write_text(dir / "summary.txt", summary);
}

std::string format_ablation_report(std::span<const AblationRow> rows) {
  std::string out = "component,variant,llm_test_auc,llm_delta,rf_test_auc,rf_delta,stop_iteration\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{:.4f},{:+.4f},{:.4f},{:+.4f},{}\n", r.component,
                       r.is_base ? r.variant + " (base)" : r.variant, r.llm_test_auc,
                       r.llm_delta, r.rf_test_auc, r.rf_delta, r.stop_iteration);
  }
  return out;
}

}  // namespace rct
