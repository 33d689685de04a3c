#include "rct/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace rct {
namespace {

std::vector<std::size_t> order_descending(const ScoredSet& s) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  return idx;
}

// Cumulative (tp, fp) at the end of each tie block in descending score order.
struct Block {
  double threshold;
  std::size_t tp;
  std::size_t fp;
};

std::vector<Block> blocks(const ScoredSet& s) {
  const auto idx = order_descending(s);
  std::vector<Block> out;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    (s.labels[idx[i]] == 1 ? tp : fp) += 1;
    if (i + 1 == idx.size() || s.scores[idx[i + 1]] != s.scores[idx[i]]) {
      out.push_back({s.scores[idx[i]], tp, fp});
    }
  }
  return out;
}

}  // namespace

ScoredSet::ScoredSet(std::vector<double> s, std::vector<int> y)
    : scores(std::move(s)), labels(std::move(y)) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("ScoredSet: scores and labels differ in length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("ScoredSet: non-binary label");
  }
  for (double v : scores) {
    if (std::isnan(v)) throw std::invalid_argument("ScoredSet: NaN score");
  }
}

std::size_t ScoredSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

double roc_auc(const ScoredSet& s) {
  const std::size_t pos = s.positives();
  const std::size_t neg = s.negatives();
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_auc needs both classes");
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  // Twice the rank sum keeps tied average ranks integral.
  std::size_t twice_rank_sum = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && s.scores[idx[j + 1]] == s.scores[idx[i]]) ++j;
    const std::size_t twice_avg_rank = (i + 1) + (j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (s.labels[idx[k]] == 1) twice_rank_sum += twice_avg_rank;
    }
    i = j + 1;
  }
  const double u = static_cast<double>(twice_rank_sum) / 2.0 -
                   static_cast<double>(pos) * static_cast<double>(pos + 1) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(const ScoredSet& s) {
  const std::size_t pos = s.positives();
  if (pos == 0) throw std::invalid_argument("pr_auc needs at least one positive");
  double area = 0.0;
  double prev_recall = 0.0;
  for (const auto& b : blocks(s)) {
    const double recall = static_cast<double>(b.tp) / static_cast<double>(pos);
    const double precision = static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

double calibrate_threshold(const ScoredSet& validation, double target_recall) {
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw std::invalid_argument("target recall must lie in (0, 1]");
  }
  std::vector<double> pos_scores;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (validation.labels[i] == 1) pos_scores.push_back(validation.scores[i]);
  }
  if (pos_scores.empty()) {
    throw std::invalid_argument("calibrate_threshold needs at least one positive");
  }
  std::sort(pos_scores.begin(), pos_scores.end(), std::greater<>());
  const double needed = std::ceil(target_recall * static_cast<double>(pos_scores.size()) - 1e-9);
  const auto m = std::clamp<std::size_t>(static_cast<std::size_t>(needed), 1, pos_scores.size());
  return pos_scores[m - 1];
}

OperatingPoint operating_point(const ScoredSet& test, double threshold) {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const bool predicted = test.scores[i] >= threshold;
    if (test.labels[i] == 1) {
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  OperatingPoint op;
  op.threshold = threshold;
  op.accuracy = ratio(tp + tn, test.size());
  op.recall = ratio(tp, tp + fn);
  op.specificity = ratio(tn, tn + fp);
  op.precision = ratio(tp, tp + fp);
  op.f1 = (op.precision + op.recall) > 0.0
              ? 2.0 * op.precision * op.recall / (op.precision + op.recall)
              : 0.0;
  return op;
}

std::vector<CurvePoint> roc_curve(const ScoredSet& s) {
  const double pos = static_cast<double>(s.positives());
  const double neg = static_cast<double>(s.negatives());
  if (pos == 0 || neg == 0) throw std::invalid_argument("roc_curve needs both classes");
  std::vector<CurvePoint> out;
  out.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  for (const auto& b : blocks(s)) {
    out.push_back({b.threshold, static_cast<double>(b.fp) / neg, static_cast<double>(b.tp) / pos});
  }
  return out;
}

std::vector<CurvePoint> pr_curve(const ScoredSet& s) {
  const double pos = static_cast<double>(s.positives());
  if (pos == 0) throw std::invalid_argument("pr_curve needs at least one positive");
  std::vector<CurvePoint> out;
  for (const auto& b : blocks(s)) {
    out.push_back({b.threshold, static_cast<double>(b.tp) / pos,
                   static_cast<double>(b.tp) / static_cast<double>(b.tp + b.fp)});
  }
  return out;
}

void emit_curves(const ScoredSet& test, const std::filesystem::path& dir,
                 const std::string& stem) {
  auto write = [&](const std::filesystem::path& path, const char* header,
                   const std::vector<CurvePoint>& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << '\n';
    for (const auto& p : points) {
      out << fmt::format("{},{},{}\n", p.threshold, p.x, p.y);
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
  };
  std::filesystem::create_directories(dir);
  write(dir / (stem + "_roc.csv"), "threshold,fpr,tpr", roc_curve(test));
  write(dir / (stem + "_pr.csv"), "threshold,recall,precision", pr_curve(test));
}

}  // namespace rct
