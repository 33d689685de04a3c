#ifndef RCT_DATA_INGEST_H_
#define RCT_DATA_INGEST_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace rct {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureKind { kCategorical, kContinuous };

std::string_view to_string(FeatureKind kind);

// Which partition a record was assigned to. Every fitting routine that must
// only see training rows checks these tags (see require_training_rows).
enum class SplitTag : std::uint8_t { kUnassigned, kTrain, kValidation, kTest };

std::string_view to_string(SplitTag tag);

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kContinuous;
  // Ordered categories; categorical features only.
  std::vector<std::string> categories;
  // Text used on patient cards, e.g. "Age" with unit "years".
  std::string display_label;
  std::string unit;
};

struct FeatureSchema {
  std::vector<FeatureSpec> features;

  std::size_t size() const { return features.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  // Throws DataError on duplicate or empty names.
  void validate() const;
};

// Missing cells hold std::monostate; continuous cells hold double and
// categorical cells hold the raw string.
using Value = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Value& v) {
  return std::holds_alternative<std::monostate>(v);
}

struct Record {
  std::vector<Value> values;
  int label = 0;
  std::size_t source_row = 0;
  SplitTag tag = SplitTag::kUnassigned;
};

struct TabularDataset {
  FeatureSchema schema;
  std::vector<Record> rows;

  std::size_t size() const { return rows.size(); }
  std::size_t count_label(int label) const;
  std::vector<int> labels() const;
  TabularDataset subset(std::span<const std::size_t> indices) const;
  // Every record has one slot per feature and a binary label.
  void validate() const;
};

// Throws DataError unless every row carries the kTrain tag. Called by every
// routine that fits state (vocabulary, encoder statistics, PCA, forests,
// reward batches).
void require_training_rows(const TabularDataset& ds, std::string_view who);
void require_training_tags(std::span<const SplitTag> tags,
                           std::string_view who);

struct FeatureOverride {
  std::optional<FeatureKind> kind;
  std::optional<std::string> display_label;
  std::optional<std::string> unit;
};

struct LoadOptions {
  std::string label_column = "label";
  // When set, this label string maps to 1 and every other value to 0.
  // Otherwise labels must parse as 0 or 1.
  std::optional<std::string> positive_label;
  // Marks a column categorical when it has non-numeric values or at most
  // this many distinct non-missing values.
  std::size_t cardinality_cap = 10;
  bool auto_infer = true;
  // Used when auto_infer is false; column names must match the header.
  std::optional<FeatureSchema> schema;
  std::vector<std::string> ignore_columns;
  std::map<std::string, FeatureOverride> overrides;
};

// Parses a key-value manifest:
//   label = malignant
//   positive_label = M
//   cardinality_cap = 10
//   ignore = id, other
//   feature.<column>.kind = categorical | continuous
//   feature.<column>.label = Display Label
//   feature.<column>.unit = years
// Lines starting with '#' are comments.
LoadOptions parse_manifest(std::string_view text);
LoadOptions load_manifest(const std::filesystem::path& path);

TabularDataset parse_csv_dataset(std::string_view text,
                                 const LoadOptions& options);
TabularDataset load_csv(const std::filesystem::path& path,
                        const LoadOptions& options);

// Category lists rebuilt from the given (training) rows only.
FeatureSchema fit_schema(const TabularDataset& train);
// Replaces the schema of `ds`; feature names must line up.
TabularDataset with_schema(TabularDataset ds, const FeatureSchema& schema);

struct SparseFeatureFilter {
  std::vector<std::size_t> kept;  // indices into the original schema
  std::vector<std::string> removed;
  TabularDataset apply(const TabularDataset& ds) const;
};

// Removes features whose missing fraction strictly exceeds `threshold`,
// measured on `train` only.
SparseFeatureFilter fit_sparse_filter(const TabularDataset& train,
                                      double threshold = 0.5);
TabularDataset drop_sparse_features(const TabularDataset& ds,
                                    double threshold = 0.5);

struct EncodedMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> column_names;
};

// One-hot encoding for the forest. Categorical features expand to one
// indicator per training category plus an "unknown" indicator for values
// never seen in training; a missing categorical is an all-zero block.
// Continuous features pass through unscaled with missing values replaced by
// the training median.
class OneHotEncoder {
 public:
  static OneHotEncoder fit(const TabularDataset& train);

  EncodedMatrix transform(const TabularDataset& ds) const;
  std::vector<double> transform_record(const Record& record) const;

  // Inverse of the categorical block of `feature` for an encoded row:
  // the category string, "unknown" for the unknown bucket, or nullopt when
  // the block is all zero.
  std::optional<std::string> decode_category(std::span<const double> row,
                                             std::size_t feature) const;

  const std::vector<std::string>& column_names() const { return names_; }
  std::size_t width() const { return names_.size(); }
  const FeatureSchema& schema() const { return schema_; }
  double median(std::size_t feature) const { return medians_.at(feature); }

 private:
  FeatureSchema schema_;
  std::vector<double> medians_;
  std::vector<std::size_t> offsets_;
  std::vector<std::string> names_;
};

inline constexpr std::string_view kUnknownCategory = "unknown";

std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds,
                                                double train_fraction,
                                                std::uint64_t seed);

std::pair<TabularDataset, TabularDataset> carve_validation(
    const TabularDataset& train, double fraction, std::uint64_t seed);

struct PatientCard {
  std::string text;
  std::size_t source_row = 0;
};

// Continuous values use the shortest round-trip decimal form with at least
// one fractional digit, so 34.2 prints as "34.2" and 5 as "5.0".
std::string format_card_number(double value);

PatientCard to_patient_card(const Record& record, const FeatureSchema& schema);
std::vector<PatientCard> to_patient_cards(const TabularDataset& ds);

}  // namespace rct

#endif  // RCT_DATA_INGEST_H_
