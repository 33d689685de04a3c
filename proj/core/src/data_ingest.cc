#include "rct/data_ingest.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "rct/csv.h"
#include "rct/rng.h"

namespace rct {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

bool is_missing_token(std::string_view s) {
  return s.empty() || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" ||
         s == "?" || s == "NULL" || s == "null";
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Numeric strings sort by value, everything else lexicographically after.
bool category_less(const std::string& a, const std::string& b) {
  const auto na = parse_number(a);
  const auto nb = parse_number(b);
  if (na && nb) return *na < *nb || (*na == *nb && a < b);
  if (na != nb) return na.has_value();
  return a < b;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece =
        trim(s.substr(start, comma == std::string_view::npos ? s.npos
                                                             : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::kCategorical ? "categorical" : "continuous";
}

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kValidation: return "validation";
    case SplitTag::kTest: return "test";
    case SplitTag::kUnassigned: break;
  }
  return "unassigned";
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

void FeatureSchema::validate() const {
  std::set<std::string_view> seen;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("feature with empty name");
    if (!seen.insert(f.name).second) {
      throw DataError("duplicate feature name '" + f.name + "'");
    }
  }
}

std::size_t TabularDataset::count_label(int label) const {
  return static_cast<std::size_t>(std::count_if(
      rows.begin(), rows.end(), [label](const Record& r) { return r.label == label; }));
}

std::vector<int> TabularDataset::labels() const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.label);
  return out;
}

TabularDataset TabularDataset::subset(std::span<const std::size_t> indices) const {
  TabularDataset out;
  out.schema = schema;
  out.rows.reserve(indices.size());
  for (auto i : indices) out.rows.push_back(rows.at(i));
  return out;
}

void TabularDataset::validate() const {
  schema.validate();
  for (const auto& r : rows) {
    if (r.values.size() != schema.size()) {
      throw DataError("record " + std::to_string(r.source_row) + " has " +
                      std::to_string(r.values.size()) + " values, schema has " +
                      std::to_string(schema.size()));
    }
    if (r.label != 0 && r.label != 1) {
      throw DataError("record " + std::to_string(r.source_row) +
                      " has non-binary label");
    }
  }
}

void require_training_rows(const TabularDataset& ds, std::string_view who) {
  for (const auto& r : ds.rows) {
    if (r.tag != SplitTag::kTrain) {
      throw DataError(std::string(who) + ": received a " +
                      std::string(to_string(r.tag)) + " row (source row " +
                      std::to_string(r.source_row) + ")");
    }
  }
}

void require_training_tags(std::span<const SplitTag> tags, std::string_view who) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != SplitTag::kTrain) {
      throw DataError(std::string(who) + ": received a " +
                      std::string(to_string(tags[i])) + " row at position " +
                      std::to_string(i));
    }
  }
}

LoadOptions parse_manifest(std::string_view text) {
  LoadOptions options;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw DataError("manifest line " + std::to_string(line_no) +
                      ": expected key = value");
    }
    const auto key = trim(std::string_view(content).substr(0, eq));
    const auto value = trim(std::string_view(content).substr(eq + 1));
    if (key == "label") {
      options.label_column = value;
    } else if (key == "positive_label") {
      options.positive_label = value;
    } else if (key == "cardinality_cap") {
      const auto n = parse_number(value);
      if (!n || *n < 0) throw DataError("manifest: bad cardinality_cap");
      options.cardinality_cap = static_cast<std::size_t>(*n);
    } else if (key == "ignore") {
      for (auto& c : split_list(value)) options.ignore_columns.push_back(c);
    } else if (key.rfind("feature.", 0) == 0) {
      const auto dot = key.rfind('.');
      if (dot <= 8) throw DataError("manifest: malformed key '" + key + "'");
      const auto column = key.substr(8, dot - 8);
      const auto field = key.substr(dot + 1);
      auto& ov = options.overrides[column];
      if (field == "kind") {
        if (value == "categorical") {
          ov.kind = FeatureKind::kCategorical;
        } else if (value == "continuous") {
          ov.kind = FeatureKind::kContinuous;
        } else {
          throw DataError("manifest: unknown kind '" + value + "'");
        }
      } else if (field == "label") {
        ov.display_label = value;
      } else if (field == "unit") {
        ov.unit = value;
      } else {
        throw DataError("manifest: unknown feature field '" + field + "'");
      }
    } else {
      throw DataError("manifest: unknown key '" + key + "'");
    }
  }
  return options;
}

LoadOptions load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str());
}

TabularDataset parse_csv_dataset(std::string_view text, const LoadOptions& options) {
  const auto table = csv::parse(text);
  if (table.empty()) throw DataError("empty CSV input");
  const auto& header = table.front();
  if (table.size() < 2) throw DataError("CSV has a header but no data rows");

  std::optional<std::size_t> label_col;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = trim(header[c]);
    if (name == options.label_column) {
      label_col = c;
    } else if (std::find(options.ignore_columns.begin(),
                         options.ignore_columns.end(),
                         name) == options.ignore_columns.end()) {
      feature_cols.push_back(c);
    }
  }
  if (!label_col) {
    throw DataError("label column '" + options.label_column + "' not found");
  }
  if (feature_cols.empty()) throw DataError("CSV has no feature columns");

  const std::size_t n = table.size() - 1;
  TabularDataset ds;

  // Decide kinds.
  for (auto c : feature_cols) {
    FeatureSpec spec;
    spec.name = trim(header[c]);
    spec.display_label = spec.name;
    if (!options.auto_infer) {
      if (!options.schema) throw DataError("no schema given and auto_infer off");
      const auto idx = options.schema->index_of(spec.name);
      if (!idx) throw DataError("column '" + spec.name + "' not in schema");
      spec = options.schema->features[*idx];
    } else {
      bool all_numeric = true;
      std::set<std::string> distinct;
      for (std::size_t r = 1; r <= n; ++r) {
        const auto& row = table[r];
        if (c >= row.size()) continue;
        const auto cell = trim(row[c]);
        if (is_missing_token(cell)) continue;
        if (!parse_number(cell)) all_numeric = false;
        if (distinct.size() <= options.cardinality_cap) distinct.insert(cell);
      }
      spec.kind = (!all_numeric || distinct.size() <= options.cardinality_cap)
                      ? FeatureKind::kCategorical
                      : FeatureKind::kContinuous;
    }
    if (auto it = options.overrides.find(spec.name); it != options.overrides.end()) {
      if (it->second.kind) spec.kind = *it->second.kind;
      if (it->second.display_label) spec.display_label = *it->second.display_label;
      if (it->second.unit) spec.unit = *it->second.unit;
    }
    ds.schema.features.push_back(std::move(spec));
  }
  ds.schema.validate();

  ds.rows.reserve(n);
  std::vector<std::set<std::string>> observed(feature_cols.size());
  for (std::size_t r = 1; r <= n; ++r) {
    const auto& row = table[r];
    if (row.size() != header.size()) {
      throw DataError("CSV row " + std::to_string(r) + " has " +
                      std::to_string(row.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    Record rec;
    rec.source_row = r - 1;
    const auto label_text = trim(row[*label_col]);
    if (options.positive_label) {
      if (is_missing_token(label_text)) {
        throw DataError("missing label in row " + std::to_string(r));
      }
      rec.label = label_text == *options.positive_label ? 1 : 0;
    } else {
      const auto v = parse_number(label_text);
      if (!v || (*v != 0.0 && *v != 1.0)) {
        throw DataError("non-binary label '" + label_text + "' in row " +
                        std::to_string(r));
      }
      rec.label = static_cast<int>(*v);
    }
    rec.values.reserve(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto cell = trim(row[feature_cols[j]]);
      const auto& spec = ds.schema.features[j];
      if (is_missing_token(cell)) {
        rec.values.emplace_back(std::monostate{});
      } else if (spec.kind == FeatureKind::kContinuous) {
        const auto v = parse_number(cell);
        if (!v) {
          throw DataError("non-numeric value '" + cell + "' in continuous column '" +
                          spec.name + "'");
        }
        rec.values.emplace_back(*v);
      } else {
        observed[j].insert(cell);
        rec.values.emplace_back(cell);
      }
    }
    ds.rows.push_back(std::move(rec));
  }
  for (std::size_t j = 0; j < feature_cols.size(); ++j) {
    auto& spec = ds.schema.features[j];
    if (spec.kind != FeatureKind::kCategorical || !spec.categories.empty()) continue;
    spec.categories.assign(observed[j].begin(), observed[j].end());
    std::sort(spec.categories.begin(), spec.categories.end(), category_less);
  }
  return ds;
}

TabularDataset load_csv(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv_dataset(buffer.str(), options);
}

FeatureSchema fit_schema(const TabularDataset& train) {
  FeatureSchema schema = train.schema;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto& spec = schema.features[j];
    if (spec.kind != FeatureKind::kCategorical) continue;
    std::set<std::string> seen;
    for (const auto& r : train.rows) {
      if (const auto* s = std::get_if<std::string>(&r.values[j])) seen.insert(*s);
    }
    spec.categories.assign(seen.begin(), seen.end());
    std::sort(spec.categories.begin(), spec.categories.end(), category_less);
  }
  return schema;
}

TabularDataset with_schema(TabularDataset ds, const FeatureSchema& schema) {
  if (ds.schema.size() != schema.size()) {
    throw DataError("with_schema: feature count mismatch");
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (ds.schema.features[j].name != schema.features[j].name) {
      throw DataError("with_schema: feature '" + schema.features[j].name +
                      "' out of order");
    }
  }
  ds.schema = schema;
  return ds;
}

TabularDataset SparseFeatureFilter::apply(const TabularDataset& ds) const {
  TabularDataset out;
  for (auto j : kept) out.schema.features.push_back(ds.schema.features.at(j));
  out.rows.reserve(ds.rows.size());
  for (const auto& r : ds.rows) {
    Record rec;
    rec.label = r.label;
    rec.source_row = r.source_row;
    rec.tag = r.tag;
    rec.values.reserve(kept.size());
    for (auto j : kept) rec.values.push_back(r.values.at(j));
    out.rows.push_back(std::move(rec));
  }
  return out;
}

SparseFeatureFilter fit_sparse_filter(const TabularDataset& train, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw DataError("sparse threshold must lie in (0, 1]");
  }
  if (train.rows.empty()) throw DataError("cannot fit sparse filter on no rows");
  SparseFeatureFilter filter;
  const double n = static_cast<double>(train.size());
  for (std::size_t j = 0; j < train.schema.size(); ++j) {
    std::size_t missing = 0;
    for (const auto& r : train.rows) missing += is_missing(r.values[j]) ? 1 : 0;
    if (static_cast<double>(missing) / n > threshold) {
      filter.removed.push_back(train.schema.features[j].name);
    } else {
      filter.kept.push_back(j);
    }
  }
  if (filter.kept.empty()) {
    throw DataError("every feature exceeds the missing-value threshold");
  }
  return filter;
}

TabularDataset drop_sparse_features(const TabularDataset& ds, double threshold) {
  return fit_sparse_filter(ds, threshold).apply(ds);
}

OneHotEncoder OneHotEncoder::fit(const TabularDataset& train) {
  OneHotEncoder enc;
  enc.schema_ = fit_schema(train);
  enc.medians_.assign(enc.schema_.size(), 0.0);
  for (std::size_t j = 0; j < enc.schema_.size(); ++j) {
    const auto& spec = enc.schema_.features[j];
    enc.offsets_.push_back(enc.names_.size());
    if (spec.kind == FeatureKind::kContinuous) {
      std::vector<double> present;
      for (const auto& r : train.rows) {
        if (const auto* v = std::get_if<double>(&r.values[j])) present.push_back(*v);
      }
      if (!present.empty()) {
        std::sort(present.begin(), present.end());
        const auto m = present.size();
        enc.medians_[j] = m % 2 ? present[m / 2]
                                : 0.5 * (present[m / 2 - 1] + present[m / 2]);
      }
      enc.names_.push_back(spec.name);
    } else {
      for (const auto& c : spec.categories) enc.names_.push_back(spec.name + "=" + c);
      enc.names_.push_back(spec.name + "=" + std::string(kUnknownCategory));
    }
  }
  return enc;
}

std::vector<double> OneHotEncoder::transform_record(const Record& record) const {
  if (record.values.size() != schema_.size()) {
    throw DataError("record width does not match encoder schema");
  }
  std::vector<double> out(names_.size(), 0.0);
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    const auto& spec = schema_.features[j];
    const auto& value = record.values[j];
    const auto base = offsets_[j];
    if (spec.kind == FeatureKind::kContinuous) {
      if (const auto* v = std::get_if<double>(&value)) {
        out[base] = *v;
      } else if (const auto* s = std::get_if<std::string>(&value)) {
        const auto parsed = parse_number(*s);
        out[base] = parsed ? *parsed : medians_[j];
      } else {
        out[base] = medians_[j];
      }
      continue;
    }
    const std::string* s = std::get_if<std::string>(&value);
    std::string converted;
    if (const auto* v = std::get_if<double>(&value)) {
      converted = format_card_number(*v);
      s = &converted;
    }
    if (s == nullptr) continue;  // missing: all-zero block
    const auto it = std::find(spec.categories.begin(), spec.categories.end(), *s);
    const auto slot = it == spec.categories.end()
                          ? spec.categories.size()
                          : static_cast<std::size_t>(it - spec.categories.begin());
    out[base + slot] = 1.0;
  }
  return out;
}

EncodedMatrix OneHotEncoder::transform(const TabularDataset& ds) const {
  EncodedMatrix m;
  m.column_names = names_;
  m.values.resize(static_cast<Eigen::Index>(ds.size()),
                  static_cast<Eigen::Index>(names_.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = transform_record(ds.rows[i]);
    for (std::size_t c = 0; c < row.size(); ++c) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  return m;
}

std::optional<std::string> OneHotEncoder::decode_category(
    std::span<const double> row, std::size_t feature) const {
  const auto& spec = schema_.features.at(feature);
  if (spec.kind != FeatureKind::kCategorical) {
    throw DataError("decode_category: '" + spec.name + "' is continuous");
  }
  const auto base = offsets_[feature];
  for (std::size_t k = 0; k <= spec.categories.size(); ++k) {
    if (row[base + k] == 1.0) {
      return k < spec.categories.size() ? spec.categories[k]
                                        : std::string(kUnknownCategory);
    }
  }
  return std::nullopt;
}

namespace {

std::pair<TabularDataset, TabularDataset> stratified_partition(
    const TabularDataset& ds, double first_fraction, std::uint64_t seed,
    SplitTag first_tag, SplitTag second_tag) {
  if (!(first_fraction > 0.0 && first_fraction < 1.0)) {
    throw DataError("split fraction must lie in (0, 1)");
  }
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.rows[i].label)].push_back(i);
  }
  const double second_fraction = 1.0 - first_fraction;
  const auto total_second = static_cast<std::size_t>(
      std::llround(second_fraction * static_cast<double>(ds.size())));

  // Largest-remainder allocation so the per-class counts add up to the
  // rounded total.
  std::array<std::size_t, 2> take{};
  std::array<double, 2> remainder{};
  std::size_t allocated = 0;
  for (int c = 0; c < 2; ++c) {
    const double exact = second_fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(take[c]);
    allocated += take[c];
  }
  while (allocated < total_second) {
    const int c = remainder[1] > remainder[0] ? 1 : 0;
    if (take[c] < by_class[c].size()) {
      ++take[c];
    } else {
      ++take[1 - c];
    }
    remainder[c] = -1.0;
    ++allocated;
  }

  std::vector<std::size_t> first_idx;
  std::vector<std::size_t> second_idx;
  for (int c = 0; c < 2; ++c) {
    auto idx = by_class[c];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(std::span<std::size_t>(idx));
    if (take[c] == 0 || take[c] >= idx.size()) {
      throw DataError("class " + std::to_string(c) +
                      " would be absent from one side of the split");
    }
    second_idx.insert(second_idx.end(), idx.begin(), idx.begin() + take[c]);
    first_idx.insert(first_idx.end(), idx.begin() + take[c], idx.end());
  }
  std::sort(first_idx.begin(), first_idx.end());
  std::sort(second_idx.begin(), second_idx.end());

  auto first = ds.subset(first_idx);
  auto second = ds.subset(second_idx);
  for (auto& r : first.rows) r.tag = first_tag;
  for (auto& r : second.rows) r.tag = second_tag;
  return {std::move(first), std::move(second)};
}

}  // namespace

std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds,
                                                double train_fraction,
                                                std::uint64_t seed) {
  return stratified_partition(ds, train_fraction, seed, SplitTag::kTrain,
                              SplitTag::kTest);
}

std::pair<TabularDataset, TabularDataset> carve_validation(
    const TabularDataset& train, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("validation fraction must lie in (0, 1)");
  }
  return stratified_partition(train, 1.0 - fraction, derive_seed(seed, 0x7a1),
                              SplitTag::kTrain, SplitTag::kValidation);
}

std::string format_card_number(double value) {
  if (value == 0.0) return "0.0";  // also folds -0.0
  std::array<char, 400> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value,
                                       std::chars_format::fixed);
  if (ec != std::errc()) throw DataError("cannot format number");
  std::string out(buf.data(), ptr);
  if (out.find('.') == std::string::npos) out += ".0";
  return out;
}

PatientCard to_patient_card(const Record& record, const FeatureSchema& schema) {
  PatientCard card;
  card.source_row = record.source_row;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& spec = schema.features[j];
    if (j > 0) card.text.push_back('\n');
    card.text += spec.display_label.empty() ? spec.name : spec.display_label;
    card.text += ": ";
    const auto& value = record.values.at(j);
    if (is_missing(value)) {
      card.text += "Unknown";
      continue;
    }
    if (const auto* v = std::get_if<double>(&value)) {
      card.text += format_card_number(*v);
    } else {
      card.text += std::get<std::string>(value);
    }
    if (!spec.unit.empty()) {
      card.text.push_back(' ');
      card.text += spec.unit;
    }
  }
  return card;
}

std::vector<PatientCard> to_patient_cards(const TabularDataset& ds) {
  std::vector<PatientCard> cards;
  cards.reserve(ds.size());
  for (const auto& r : ds.rows) cards.push_back(to_patient_card(r, ds.schema));
  return cards;
}

}  // namespace rct
