#include "plcguard/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plcguard::dataset {

using telemetry::kFeatureCount;
using telemetry::kFeatureNames;

std::map<Label, std::size_t> LabeledDataset::label_counts() const {
  std::map<Label, std::size_t> counts;
  for (const auto& r : rows)
    if (r.label) ++counts[*r.label];
  return counts;
}

bool LabeledDataset::fully_labeled() const {
  for (const auto& r : rows)
    if (!r.label) return false;
  return true;
}

std::vector<telemetry::FeatureVector> LabeledDataset::features() const {
  std::vector<telemetry::FeatureVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.observation.features);
  return out;
}

std::vector<Label> LabeledDataset::labels() const {
  std::vector<Label> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (!r.label) throw std::invalid_argument("dataset has unlabeled rows");
    out.push_back(*r.label);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf, end);
}

std::string csv_header(bool with_label) {
  std::string h = "timestamp_us,peer";
  for (auto name : kFeatureNames) {
    h += ',';
    h += name;
  }
  if (with_label) h += ",label";
  return h;
}

void write_feature_csv(std::ostream& out, const LabeledDataset& data, bool with_label) {
  out << csv_header(with_label) << '\n';
  for (const auto& r : data.rows) {
    out << r.observation.timestamp_us << ',' << r.observation.peer.to_string();
    for (double v : r.observation.features.values) out << ',' << format_double(v);
    if (with_label) out << ',' << (r.label ? to_string(*r.label) : std::string_view{});
    out << '\n';
  }
}

void write_feature_csv(const std::filesystem::path& path, const LabeledDataset& data, bool with_label) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_feature_csv(out, data, with_label);
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::size_t line_no) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size())
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

LabeledDataset read_feature_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("feature CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto ts_col = find("timestamp_us");
  const auto peer_col = find("peer");
  if (!ts_col || !peer_col) throw std::runtime_error("feature CSV lacks timestamp_us/peer columns");
  std::array<std::size_t, kFeatureCount> cols{};
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    auto c = find(kFeatureNames[f]);
    if (!c) throw std::runtime_error("feature CSV lacks column '" + std::string(kFeatureNames[f]) + "'");
    cols[f] = *c;
  }
  const auto label_col = find("label");

  LabeledDataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size())
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " fields, got " + std::to_string(fields.size()));
    LabeledRow row;
    row.observation.timestamp_us = parse_number<std::int64_t>(fields[*ts_col], line_no);
    row.observation.peer = MacAddress::parse(fields[*peer_col]);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      row.observation.features.values[f] = parse_number<double>(fields[cols[f]], line_no);
    if (label_col && !fields[*label_col].empty()) row.label = label_from_string(fields[*label_col]);
    data.rows.push_back(row);
  }
  return data;
}

LabeledDataset read_feature_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_feature_csv(in);
}

}  // namespace plcguard::dataset
