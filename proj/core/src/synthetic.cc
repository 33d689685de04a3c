#include "rct/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rct/csv.h"
#include "rct/rng.h"

namespace rct {
namespace {

struct Column {
  const char* name;
  FeatureKind kind;
  const char* label;
  const char* unit;
};

constexpr Column kColumns[] = {
    {"age", FeatureKind::kContinuous, "Age", "years"},
    {"sex", FeatureKind::kCategorical, "Sex", ""},
    {"disease_duration", FeatureKind::kContinuous, "Disease duration", "years"},
    {"onset_type", FeatureKind::kCategorical, "Onset type", ""},
    {"edss", FeatureKind::kContinuous, "EDSS score", ""},
    {"relapses_prior_2y", FeatureKind::kContinuous, "Relapses in prior 2 years", ""},
    {"treatment", FeatureKind::kCategorical, "Treatment", ""},
    {"treatment_years", FeatureKind::kContinuous, "Years on treatment", "years"},
    {"new_t2_lesions", FeatureKind::kContinuous, "New T2 lesions", ""},
    {"gd_enhancing", FeatureKind::kCategorical, "Gadolinium enhancing lesion", ""},
    {"vitamin_d", FeatureKind::kContinuous, "Vitamin D", "ng/mL"},
    {"smoking", FeatureKind::kCategorical, "Smoking", ""},
    {"bmi", FeatureKind::kContinuous, "BMI", "kg/m2"},
    {"nfl", FeatureKind::kContinuous, "Serum neurofilament light", "pg/mL"},
};

double round_to(double v, double step) { return std::round(v / step) * step; }

const std::string& pick(const std::vector<std::string>& options,
                        const std::vector<double>& weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < options.size(); ++i) {
    u -= weights[i];
    if (u < 0.0) return options[i];
  }
  return options.back();
}

}  // namespace

TabularDataset make_synthetic_cohort(const SyntheticConfig& config) {
  if (config.n_rows < 10) throw std::invalid_argument("synthetic cohort needs >= 10 rows");
  if (!(config.positive_rate > 0.0 && config.positive_rate < 1.0)) {
    throw std::invalid_argument("positive rate must lie in (0, 1)");
  }
  TabularDataset ds;
  for (const auto& c : kColumns) {
    FeatureSpec spec;
    spec.name = c.name;
    spec.kind = c.kind;
    spec.display_label = c.label;
    spec.unit = c.unit;
    ds.schema.features.push_back(spec);
  }
  static const std::vector<std::string> kSex = {"F", "M"};
  static const std::vector<std::string> kOnset = {"relapsing", "progressive"};
  static const std::vector<std::string> kTreatment = {"none", "interferon", "glatiramer",
                                                      "fingolimod", "natalizumab", "ocrelizumab"};
  static const std::vector<std::string> kYesNo = {"no", "yes"};
  static const std::vector<std::string> kSmoking = {"never", "former", "current"};

  Rng rng(config.seed);
  std::vector<double> risk(config.n_rows);
  for (std::size_t i = 0; i < config.n_rows; ++i) {
    Record r;
    r.source_row = i;
    const double age = std::clamp(38.0 + 11.0 * rng.normal(), 18.0, 75.0);
    const auto& sex = pick(kSex, {0.7, 0.3}, rng);
    const double duration = std::clamp(std::exp(1.8 + 0.7 * rng.normal()), 0.2, 40.0);
    const auto& onset = pick(kOnset, {0.85, 0.15}, rng);
    const double edss =
        std::clamp(round_to(1.5 + 0.08 * duration + 1.2 * rng.normal(), 0.5), 0.0, 9.5);
    double relapses = 0.0;
    for (int k = 0; k < 4; ++k) relapses += rng.uniform() < 0.18 ? 1.0 : 0.0;
    const auto& treatment = pick(kTreatment, {0.2, 0.2, 0.15, 0.15, 0.15, 0.15}, rng);
    const double treatment_years =
        treatment == "none" ? 0.0 : round_to(std::min(duration, 0.5 + 4.0 * rng.uniform()), 0.1);
    const double lesions = std::floor(std::exp(0.6 + 0.8 * rng.normal()) - 0.5);
    const double lesion_count = std::max(0.0, lesions);
    const bool gd = rng.uniform() < 0.12 + 0.06 * std::min(lesion_count, 4.0);
    const double vitamin_d = std::clamp(28.0 + 9.0 * rng.normal(), 5.0, 80.0);
    const auto& smoking = pick(kSmoking, {0.55, 0.25, 0.20}, rng);
    const double bmi = std::clamp(26.0 + 4.5 * rng.normal(), 16.0, 48.0);
    const double nfl = std::exp(2.2 + 0.15 * lesion_count + 0.35 * rng.normal());

    double efficacy = 0.0;
    if (treatment == "interferon" || treatment == "glatiramer") efficacy = 0.3;
    if (treatment == "fingolimod") efficacy = 0.5;
    if (treatment == "natalizumab" || treatment == "ocrelizumab") efficacy = 0.8;
    risk[i] = -0.03 * (age - 38.0) + (sex == "F" ? 0.15 : 0.0) +
              (onset == "relapsing" ? 0.3 : -0.2) + 0.45 * relapses - efficacy +
              0.12 * std::min(lesion_count, 8.0) + (gd ? 0.5 : 0.0) -
              0.015 * (vitamin_d - 28.0) + (smoking == "current" ? 0.25 : 0.0) +
              0.4 * (std::log(nfl) - 2.2) + 0.05 * (edss - 2.0);

    // Missingness typical of registry extracts.
    auto maybe = [&](double v, double p_missing, double step) -> Value {
      if (rng.uniform() < p_missing) return std::monostate{};
      return round_to(v, step);
    };
    r.values = {round_to(age, 1.0),
                sex,
                round_to(duration, 0.1),
                onset,
                edss,
                relapses,
                treatment,
                treatment_years,
                lesion_count,
                rng.uniform() < 0.1 ? Value(std::monostate{}) : Value(gd ? kYesNo[1] : kYesNo[0]),
                maybe(vitamin_d, 0.25, 0.1),
                rng.uniform() < 0.05 ? Value(std::monostate{}) : Value(smoking),
                maybe(bmi, 0.08, 0.1),
                maybe(nfl, 0.35, 0.1)};
    r.label = 0;
    ds.rows.push_back(std::move(r));
  }

  // Positive class: the top quantile of risk plus logistic noise.
  std::vector<double> noisy(config.n_rows);
  for (std::size_t i = 0; i < config.n_rows; ++i) {
    const double u = std::clamp(rng.uniform(), 1e-12, 1.0 - 1e-12);
    noisy[i] = risk[i] + config.noise_scale * std::log(u / (1.0 - u));
  }
  std::vector<std::size_t> order(config.n_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return noisy[a] > noisy[b]; });
  const auto n_pos = static_cast<std::size_t>(
      std::llround(config.positive_rate * static_cast<double>(config.n_rows)));
  for (std::size_t i = 0; i < n_pos; ++i) ds.rows[order[i]].label = 1;

  for (auto& spec : ds.schema.features) {
    if (spec.kind == FeatureKind::kCategorical) {
      if (spec.name == "sex") spec.categories = kSex;
      if (spec.name == "onset_type") spec.categories = kOnset;
      if (spec.name == "treatment") spec.categories = kTreatment;
      if (spec.name == "gd_enhancing") spec.categories = kYesNo;
      if (spec.name == "smoking") spec.categories = kSmoking;
      std::sort(spec.categories.begin(), spec.categories.end());
    }
  }
  ds.validate();
  return ds;
}

std::string synthetic_csv(const TabularDataset& ds) {
  std::ostringstream out;
  std::vector<std::string> cells;
  for (const auto& f : ds.schema.features) cells.push_back(f.name);
  cells.push_back("relapse");
  csv::write_row(out, cells);
  for (const auto& r : ds.rows) {
    cells.clear();
    for (const auto& v : r.values) {
      if (is_missing(v)) {
        cells.emplace_back();
      } else if (const auto* d = std::get_if<double>(&v)) {
        cells.push_back(format_card_number(*d));
      } else {
        cells.push_back(std::get<std::string>(v));
      }
    }
    cells.push_back(std::to_string(r.label));
    csv::write_row(out, cells);
  }
  return out.str();
}

std::string synthetic_manifest() {
  std::ostringstream out;
  out << "# synthetic relapse cohort\nlabel = relapse\n";
  for (const auto& c : kColumns) {
    out << "feature." << c.name << ".kind = "
        << (c.kind == FeatureKind::kCategorical ? "categorical" : "continuous") << "\n";
    out << "feature." << c.name << ".label = " << c.label << "\n";
    if (*c.unit != '\0') out << "feature." << c.name << ".unit = " << c.unit << "\n";
  }
  return out.str();
}

}  // namespace rct
