#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plcguard/telemetry.hpp"
#include "plcguard/types.hpp"

namespace plcguard::dataset {

struct LabeledRow {
  telemetry::Observation observation;
  std::optional<Label> label;
};

struct LabeledDataset {
  std::vector<LabeledRow> rows;

  std::map<Label, std::size_t> label_counts() const;
  bool fully_labeled() const;
  std::vector<telemetry::FeatureVector> features() const;
  /// Throws std::invalid_argument if any row is unlabeled.
  std::vector<Label> labels() const;
  /// Subset with the given label predicate.
  template <typename Pred>
  LabeledDataset filter(Pred pred) const {
    LabeledDataset out;
    for (const auto& r : rows)
      if (pred(r)) out.rows.push_back(r);
    return out;
  }
  void append(const LabeledDataset& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Feature CSV: timestamp_us,peer,<14 features>[,label]
void write_feature_csv(std::ostream& out, const LabeledDataset& data, bool with_label);
void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& data, bool with_label);

/// Columns are matched by header name; throws std::runtime_error when a
/// feature column is missing or a row is malformed.
LabeledDataset read_feature_csv(std::istream& in);
LabeledDataset read_feature_csv(const std::filesystem::path& path);

std::string csv_header(bool with_label);

}  // namespace plcguard::dataset
