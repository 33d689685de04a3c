#ifndef RCT_METRICS_H_
#define RCT_METRICS_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rct {

// Scores paired with binary labels.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;

  ScoredSet() = default;
  ScoredSet(std::vector<double> s, std::vector<int> y);

  std::size_t size() const { return scores.size(); }
  std::size_t positives() const;
  std::size_t negatives() const { return size() - positives(); }
};

struct OperatingPoint {
  double threshold = 0.0;
  double accuracy = 0.0;
  double recall = 0.0;
  double specificity = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
};

// Mann-Whitney statistic P(s+ > s-) + P(s+ = s-) / 2 via average ranks.
double roc_auc(const ScoredSet& s);

// Average precision: sum over distinct thresholds (descending) of
// (R_i - R_{i-1}) * P_i, ties handled as one block.
double pr_auc(const ScoredSet& s);

// Largest threshold whose recall on `validation` is at least target_recall,
// with the rule "predict positive iff score >= threshold".
double calibrate_threshold(const ScoredSet& validation, double target_recall = 0.80);

OperatingPoint operating_point(const ScoredSet& test, double threshold);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// (fpr, tpr) from (0, 0) at threshold +inf through every distinct score.
std::vector<CurvePoint> roc_curve(const ScoredSet& s);
// (recall, precision) at every distinct score, descending threshold.
std::vector<CurvePoint> pr_curve(const ScoredSet& s);

// Writes <stem>_roc.csv and <stem>_pr.csv under `dir`.
void emit_curves(const ScoredSet& test, const std::filesystem::path& dir,
                 const std::string& stem);

}  // namespace rct

#endif  // RCT_METRICS_H_
