#include "plcguard/models.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace plcguard {

using nlohmann::json;
using telemetry::kFeatureCount;
using telemetry::kFeatureNames;

detect::Point2 DetectionModels::embed(const telemetry::FeatureVector& v) const {
  const auto normalized = preprocess::apply_minmax(v, pipeline.minmax);
  const auto p = preprocess::project(normalized, pipeline.pca);
  if (p.size() < 2) throw std::logic_error("embed: PCA model has fewer than 2 components");
  return {p[0], p[1]};
}

std::vector<double> DetectionModels::classifier_row(const telemetry::FeatureVector& v) const {
  const auto normalized = preprocess::apply_minmax(v, pipeline.minmax_labeled);
  std::vector<double> row;
  row.reserve(forest.feature_names.size());
  for (const auto& name : forest.feature_names) {
    auto idx = telemetry::feature_index(name);
    if (!idx) throw std::invalid_argument("classifier_row: unknown feature '" + name + "'");
    row.push_back(normalized[*idx]);
  }
  return row;
}

namespace {

json bounds_to_json(const preprocess::MinMaxBounds& b) {
  json arr = json::array();
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    arr.push_back({{"feature", kFeatureNames[f]}, {"min", b.bounds[f].min}, {"max", b.bounds[f].max}});
  return arr;
}

preprocess::MinMaxBounds bounds_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() != kFeatureCount)
    throw std::runtime_error("min-max bounds must list exactly 14 features");
  preprocess::MinMaxBounds b;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    const auto& e = arr[f];
    if (e.at("feature").get<std::string>() != kFeatureNames[f])
      throw std::runtime_error("min-max bounds: feature order mismatch at '" + e.at("feature").get<std::string>() + "'");
    b.bounds[f] = {e.at("min").get<double>(), e.at("max").get<double>()};
    if (b.bounds[f].max < b.bounds[f].min) throw std::runtime_error("min-max bounds: max < min");
  }
  return b;
}

json baselines_json(const BaselineSet& baselines) {
  json arr = json::array();
  for (const auto& [mac, h] : baselines)
    arr.push_back({{"peer", mac.to_string()}, {"bin_edges", h.bin_edges}, {"probabilities", h.probabilities}});
  return arr;
}

BaselineSet baselines_parse(const json& arr) {
  BaselineSet out;
  for (const auto& e : arr) {
    telemetry::BaselineHistogram h;
    h.peer = MacAddress::parse(e.at("peer").get<std::string>());
    const auto edges = e.at("bin_edges").get<std::vector<double>>();
    const auto probs = e.at("probabilities").get<std::vector<double>>();
    if (edges.size() != h.bin_edges.size() || probs.size() != h.probabilities.size())
      throw std::runtime_error("baseline for " + h.peer.to_string() + " has wrong bin count");
    std::copy(edges.begin(), edges.end(), h.bin_edges.begin());
    std::copy(probs.begin(), probs.end(), h.probabilities.begin());
    out.emplace(h.peer, h);
  }
  return out;
}

json lof_json(const detect::LofModel& m) {
  json pts = json::array();
  for (const auto& p : m.points()) pts.push_back({p[0], p[1]});
  return {{"k", m.k()}, {"threshold", m.threshold()}, {"points", pts}, {"k_distance", m.k_distance()},
          {"lrd", m.lrd()}};
}

detect::LofModel lof_parse(const json& j) {
  std::vector<detect::Point2> pts;
  for (const auto& p : j.at("points")) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return detect::LofModel::restore(std::move(pts), j.at("k").get<std::size_t>(), j.at("threshold").get<double>(),
                                   j.at("k_distance").get<std::vector<double>>(),
                                   j.at("lrd").get<std::vector<double>>());
}

json forest_json(const detect::ForestModel& f) {
  json classes = json::array();
  for (auto c : f.classes) classes.push_back(to_string(c));
  json trees = json::array();
  for (const auto& t : f.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         votes = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      votes.push_back(n.votes);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right},
                     {"votes", votes}});
  }
  return {{"seed", f.seed},       {"feature_names", f.feature_names}, {"classes", classes},
          {"importances", f.importances}, {"oob_error", f.oob_error}, {"trees", trees}};
}

detect::ForestModel forest_parse(const json& j) {
  detect::ForestModel f;
  f.seed = j.at("seed").get<std::uint64_t>();
  f.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  for (const auto& c : j.at("classes")) f.classes.push_back(label_from_string(c.get<std::string>()));
  f.importances = j.at("importances").get<std::vector<double>>();
  f.oob_error = j.at("oob_error").get<double>();
  for (const auto& t : j.at("trees")) {
    detect::DecisionTree tree;
    const auto& feature = t.at("feature");
    const std::size_t n = feature.size();
    for (std::size_t i = 0; i < n; ++i) {
      detect::TreeNode node;
      node.feature = feature.at(i).get<std::int32_t>();
      node.threshold = t.at("threshold").at(i).get<double>();
      node.left = t.at("left").at(i).get<std::int32_t>();
      node.right = t.at("right").at(i).get<std::int32_t>();
      node.votes = t.at("votes").at(i).get<std::vector<std::uint32_t>>();
      const auto limit = static_cast<std::int32_t>(n);
      if (node.feature >= 0) {
        if (static_cast<std::size_t>(node.feature) >= f.feature_names.size() || node.left <= 0 ||
            node.right <= 0 || node.left >= limit || node.right >= limit)
          throw std::runtime_error("forest: malformed split node");
      } else if (node.votes.size() != f.classes.size()) {
        throw std::runtime_error("forest: leaf vote count does not match class count");
      }
      tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty()) throw std::runtime_error("forest: empty tree");
    f.trees.push_back(std::move(tree));
  }
  return f;
}

}  // namespace

std::string baselines_to_json(const BaselineSet& baselines) { return baselines_json(baselines).dump(1); }

BaselineSet baselines_from_json(const std::string& text) { return baselines_parse(json::parse(text)); }

std::string models_to_json(const DetectionModels& m) {
  const auto& p = m.pipeline;
  json doc;
  doc["format"] = "plcguard-models/1";
  doc["feature_names"] = kFeatureNames;
  doc["minmax"] = bounds_to_json(p.minmax);
  doc["pca"] = {{"mean", p.pca.mean},
                {"components", p.pca.components},
                {"evr", p.pca.explained_variance_ratio},
                {"eigenvalues", p.pca.eigenvalues}};
  doc["corr_kept"] = p.selection.kept_after_correlation;
  doc["rfe_kept"] = p.selection.kept_after_rfe;
  doc["rfe_trace"] = p.selection.rfe_accuracy_trace;
  doc["minmax_labeled"] = bounds_to_json(p.minmax_labeled);
  doc["baselines"] = baselines_json(p.baselines);
  doc["lof"] = lof_json(m.lof);
  doc["forest"] = forest_json(m.forest);
  return doc.dump();
}

DetectionModels models_from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.value("format", "") != "plcguard-models/1") throw std::runtime_error("unsupported models format");
  DetectionModels m;
  auto& p = m.pipeline;
  p.minmax = bounds_from_json(doc.at("minmax"));
  const auto& pca = doc.at("pca");
  p.pca.mean = pca.at("mean").get<std::vector<double>>();
  p.pca.components = pca.at("components").get<std::vector<std::vector<double>>>();
  p.pca.explained_variance_ratio = pca.at("evr").get<std::vector<double>>();
  p.pca.eigenvalues = pca.at("eigenvalues").get<std::vector<double>>();
  if (p.pca.mean.size() != kFeatureCount || p.pca.components.size() < 2)
    throw std::runtime_error("pca: expected 14-d mean and at least two components");
  for (const auto& c : p.pca.components)
    if (c.size() != kFeatureCount) throw std::runtime_error("pca: component arity mismatch");
  p.selection.kept_after_correlation = doc.at("corr_kept").get<std::vector<std::string>>();
  p.selection.kept_after_rfe = doc.at("rfe_kept").get<std::vector<std::string>>();
  p.selection.rfe_accuracy_trace = doc.value("rfe_trace", std::vector<double>{});
  p.minmax_labeled = bounds_from_json(doc.at("minmax_labeled"));
  p.baselines = baselines_parse(doc.at("baselines"));
  m.lof = lof_parse(doc.at("lof"));
  m.forest = forest_parse(doc.at("forest"));
  for (const auto& name : m.forest.feature_names)
    if (!telemetry::feature_index(name)) throw std::runtime_error("forest uses unknown feature '" + name + "'");
  return m;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void save_models(const std::filesystem::path& path, const DetectionModels& models) {
  write_text_file(path, models_to_json(models));
}

DetectionModels load_models(const std::filesystem::path& path) { return models_from_json(read_text_file(path)); }

}  // namespace plcguard
