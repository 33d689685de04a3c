#ifndef RCT_RUN_ARTIFACTS_H_
#define RCT_RUN_ARTIFACTS_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rct/cotrain.h"
#include "rct/metrics.h"

namespace rct {

// Validation and test scores of several models over the same rows.
struct ScoreTable {
  std::vector<std::string> models;  // column stems, e.g. "rf_baseline"
  std::vector<std::size_t> validation_rows, test_rows;
  std::vector<int> validation_labels, test_labels;
  std::vector<std::vector<double>> validation, test;  // [model][row]

  void add(std::string model, const ModelScores& scores);
};

ScoreTable make_score_table(const PreparedData& data, const ExperimentResult& result);
ScoreTable make_score_table(const PreparedData& data, const BaselineResult& baselines);

// Columns: split,source_row,label,<model>... with round-trip score text.
void write_scores(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_scores(const std::filesystem::path& path);

struct ModelReport {
  std::string model;
  std::string display_name;
  OperatingPoint test_point;
  double validation_recall = 0.0;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  // Against the matching baseline, for co-trained models.
  std::optional<double> roc_auc_delta;
  std::optional<double> pr_auc_delta;
};

// Threshold calibrated per model on validation scores, applied to test.
std::vector<ModelReport> report_from_scores(const ScoreTable& table, double target_recall);
std::string format_metrics_report(std::span<const ModelReport> rows, const ScoreTable& table,
                                  double target_recall);
// metrics_report.txt plus curves/<model>_{roc,pr}.csv under `dir`.
void write_report_files(const std::filesystem::path& dir, const ScoreTable& table,
                        double target_recall);

// iteration,llm_val_auc,rf_val_auc,llm_test_auc,rf_test_auc,mean_ppo_reward,
// forest_frozen,policy_frozen
std::string format_trace(std::span<const IterationRecord> trace);
void write_trace(const std::filesystem::path& path, std::span<const IterationRecord> trace);
void write_timing(const std::filesystem::path& path, std::span<const IterationRecord> trace);
void write_ppo_log(const std::filesystem::path& path, std::span<const PPORoundLog> log);

void write_baseline_directory(const std::filesystem::path& dir, const PreparedData& data,
                              const CoTrainConfig& config, const BaselineResult& baselines);
void write_run_directory(const std::filesystem::path& dir, const PreparedData& data,
                         const CoTrainConfig& config, const ExperimentResult& result,
                         const ProvenanceAudit* audit = nullptr);

std::string format_ablation_report(std::span<const AblationRow> rows);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace rct

#endif  // RCT_RUN_ARTIFACTS_H_
