#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cli/commands.hpp"
#include "plcguard/dataset.hpp"
#include "plcguard/lof.hpp"
#include "plcguard/models.hpp"
#include "plcguard/simlab/corpus.hpp"

namespace plcguard::cli {

using nlohmann::json;

namespace {

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width(header_.size());
    auto widen = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) width[i] = std::max(width[i], r[i].size());
    };
    widen(header_);
    for (const auto& r : rows_) widen(r);
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < width.size(); ++i) {
        const std::string cell = i < r.size() ? r[i] : "";
        // first column left-aligned, numbers right-aligned
        if (i == 0) out << cell << std::string(width[i] - cell.size(), ' ');
        else out << "  " << std::string(width[i] - cell.size(), ' ') << cell;
      }
      out << '\n';
    };
    line(header_);
    std::size_t total = 0;
    for (auto w : width) total += w + 2;
    out << std::string(total - 2, '-') << '\n';
    for (const auto& r : rows_) line(r);
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split_csv(line));
  return rows;
}

std::string render_bench(const std::vector<std::vector<std::string>>& rows) {
  // function -> config -> (mean, std, median)
  std::map<std::string, std::map<std::string, std::array<double, 3>>> by_fn;
  std::vector<std::string> order;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 5) throw std::runtime_error("bench CSV: short row");
    if (!by_fn.count(r[0])) order.push_back(r[0]);
    by_fn[r[0]][r[1]] = {std::stod(r[2]), std::stod(r[3]), std::stod(r[4])};
  }
  Table t({"function", "mean w/o", "std w/o", "median w/o", "mean with", "std with", "median with", "overhead"});
  auto get = [](const std::map<std::string, std::array<double, 3>>& m, const char* c, int i) {
    auto it = m.find(c);
    return it == m.end() ? std::nan("") : it->second[static_cast<std::size_t>(i)];
  };
  for (const auto& fn : order) {
    const auto& m = by_fn[fn];
    t.add({fn, fixed(get(m, "without_ids", 0), 1), fixed(get(m, "without_ids", 1), 1),
           fixed(get(m, "without_ids", 2), 1), fixed(get(m, "with_ids", 0), 1), fixed(get(m, "with_ids", 1), 1),
           fixed(get(m, "with_ids", 2), 1), fixed(get(m, "with_ids", 2) - get(m, "without_ids", 2), 1)});
  }
  return "response time (us)\n" + t.render();
}

std::string render_flood(const std::vector<std::vector<std::string>>& rows) {
  struct Acc {
    std::vector<double> block, allowed;
    std::size_t failed = 0;
  };
  std::map<std::uint64_t, Acc> by_setting;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() < 4) throw std::runtime_error("flood CSV: short row");
    auto& a = by_setting[std::stoull(r[0])];
    a.allowed.push_back(std::stod(r[2]));
    if (r[3].empty()) ++a.failed;
    else a.block.push_back(std::stod(r[3]));
  }
  Table t({"setting", "runs", "failed", "median allowed", "median block ms", "min block ms", "max block ms"});
  auto median = [](std::vector<double> v) { return v.empty() ? std::nan("") : detect::quantile(std::move(v), 0.5); };
  for (const auto& [setting, a] : by_setting) {
    const auto [lo, hi] = a.block.empty() ? std::pair{std::nan(""), std::nan("")}
                                          : std::pair{*std::min_element(a.block.begin(), a.block.end()),
                                                      *std::max_element(a.block.begin(), a.block.end())};
    t.add({std::to_string(setting), std::to_string(a.allowed.size()), std::to_string(a.failed),
           fixed(median(a.allowed), 1), fixed(median(a.block), 2), fixed(lo, 2), fixed(hi, 2)});
  }
  return t.render();
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return "(empty)\n";
  Table t(rows.front());
  for (std::size_t i = 1; i < rows.size(); ++i) t.add(rows[i]);
  return t.render();
}

std::string render_metrics(const json& m) {
  Table t({"metric", "value"});
  for (const char* k : {"tp", "tn", "fp", "fn"}) t.add({k, std::to_string(m.at(k).get<std::uint64_t>())});
  for (const char* k : {"accuracy", "precision", "recall", "specificity", "f1", "mcc"})
    t.add({k, fixed(m.at(k).get<double>(), 5)});
  return t.render();
}

std::string render_confusion(const json& cm) {
  std::vector<std::string> header{"truth \\ predicted"};
  for (const auto& c : cm.at("classes")) header.push_back(c.get<std::string>());
  Table t(header);
  const auto& counts = cm.at("counts");
  for (std::size_t r = 0; r < counts.size(); ++r) {
    std::vector<std::string> row{cm.at("classes")[r].get<std::string>()};
    for (const auto& v : counts[r]) row.push_back(std::to_string(v.get<std::uint64_t>()));
    t.add(row);
  }
  return t.render() + "accuracy " + fixed(cm.at("accuracy").get<double>(), 5) + ", macro accuracy " +
         fixed(cm.at("macro_accuracy").get<double>(), 5) + "\n";
}

std::string render_train(const json& doc) {
  std::ostringstream out;
  out << "k = " << doc.at("k").get<std::size_t>() << ", threshold = " << fixed(doc.at("threshold").get<double>(), 4)
      << ", benign rows = " << doc.at("benign_rows").get<std::size_t>()
      << ", labeled rows = " << doc.at("labeled_rows").get<std::size_t>() << "\n\n";
  Table t({"configuration", "features", "train accuracy", "test accuracy", "test macro accuracy"});
  for (const auto& a : doc.at("ablation"))
    t.add({a.at("configuration").get<std::string>(), std::to_string(a.at("features").size()),
           fixed(a.at("train_accuracy").get<double>(), 5), fixed(a.at("test_accuracy").get<double>(), 5),
           fixed(a.at("test_macro_accuracy").get<double>(), 5)});
  out << t.render() << "\nselected features:";
  for (const auto& f : doc.at("rfe_kept")) out << ' ' << f.get<std::string>();
  out << "\n\nhold-out confusion\n" << render_confusion(doc.at("holdout"));
  return out.str();
}

std::string render_json(const fs::path& path) {
  const auto doc = json::parse(read_text_file(path));
  if (doc.is_object() && doc.contains("ablation")) return render_train(doc);
  if (doc.is_object() && doc.contains("stage1"))
    return "stage 1 (anomaly detection)\n" + render_metrics(doc.at("stage1")) +
           "\nstage 2 (attack classification)\n" + render_confusion(doc.at("stage2"));
  if (doc.is_object() && doc.contains("tp")) return render_metrics(doc);
  if (doc.is_object() && doc.contains("command")) {
    const auto m = RunManifest::from_json(doc);
    Table t({"output", "sha256"});
    for (const auto& [p, h] : m.hashes) t.add({p, h});
    return m.command + " (" + fixed(m.wall_clock_s, 2) + " s)\n" + t.render();
  }
  return doc.dump(2) + "\n";
}

}  // namespace

std::string render_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("no such artifact: " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".json") return render_json(path);
  if (ext != ".csv") return read_text_file(path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  if (header.rfind("timestamp_us,", 0) == 0) {
    const auto data = dataset::read_feature_csv(path);
    return simlab::summary_table({{path.stem().string(), &data}});
  }
  const auto rows = read_csv_rows(path);
  if (header.rfind("function,config,", 0) == 0) return render_bench(rows);
  if (header.rfind("setting,repetition,", 0) == 0) return render_flood(rows);
  return render_rows(rows);
}

}  // namespace plcguard::cli
