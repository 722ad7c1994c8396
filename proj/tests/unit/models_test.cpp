#include <gtest/gtest.h>

#include <limits>
#include <sstream>

#include "fixtures.hpp"
#include "plcguard/dataset.hpp"
#include "plcguard/models.hpp"
#include "plcguard/rng.hpp"

using namespace plcguard;

TEST(Types, LabelParsing) {
  for (auto l : kAllLabels) {
    EXPECT_EQ(parse_label(to_string(l)), l);
  }
  EXPECT_EQ(parse_label("ex7"), Label::Ex7);
  EXPECT_EQ(parse_label("EX7"), Label::Ex7);
  EXPECT_EQ(parse_label("normal"), Label::Normal);
  EXPECT_FALSE(parse_label("EX-5"));
  EXPECT_THROW(label_from_string("attack"), std::invalid_argument);
}

TEST(Types, AddressText) {
  EXPECT_EQ(Ipv4Address::parse("192.168.1.20").to_string(), "192.168.1.20");
  EXPECT_EQ(MacAddress::parse("02:00:0A:00:00:09").to_string(), "02:00:0a:00:00:09");
  EXPECT_EQ(pseudo_mac(Ipv4Address::parse("10.0.0.9")).to_string(), "02:00:0a:00:00:09");
  EXPECT_THROW(Ipv4Address::parse("1.2.3"), std::invalid_argument);
  EXPECT_THROW(Ipv4Address::parse("1.2.3.256"), std::invalid_argument);
  EXPECT_THROW(MacAddress::parse("02:00:0a:00:00"), std::invalid_argument);
}

TEST(Dataset, FormatDoubleRoundTrips) {
  SplitRng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(uniform_real(rng, -1, 1), int(uniform_int(rng, -40, 40)));
    EXPECT_EQ(std::stod(dataset::format_double(v)), v);
  }
  EXPECT_EQ(dataset::format_double(0.5), "0.5");
  EXPECT_EQ(dataset::format_double(3), "3");
}

TEST(Dataset, CsvRoundTripIsExact) {
  const auto& d = fixtures::trained().corpus.train;
  std::stringstream s;
  dataset::write_feature_csv(s, d, true);
  const auto back = dataset::read_feature_csv(s);
  ASSERT_EQ(back.rows.size(), d.rows.size());
  for (std::size_t i = 0; i < d.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].label, d.rows[i].label);
    EXPECT_EQ(back.rows[i].observation.peer, d.rows[i].observation.peer);
    EXPECT_EQ(back.rows[i].observation.timestamp_us, d.rows[i].observation.timestamp_us);
    EXPECT_EQ(back.rows[i].observation.features.values, d.rows[i].observation.features.values);
  }
}

TEST(Dataset, UnlabeledCsvAndErrors) {
  const auto& d = fixtures::trained().corpus.baseline;
  std::stringstream s;
  dataset::write_feature_csv(s, d, false);
  const auto back = dataset::read_feature_csv(s);
  EXPECT_FALSE(back.fully_labeled());
  EXPECT_THROW(back.labels(), std::invalid_argument);

  std::istringstream missing("timestamp_us,peer,n_peers\n1,02:00:00:00:00:01,1\n");
  EXPECT_THROW(dataset::read_feature_csv(missing), std::runtime_error);
  std::istringstream ragged(dataset::csv_header(true) + "\n1,02:00:00:00:00:01,1,2\n");
  EXPECT_THROW(dataset::read_feature_csv(ragged), std::runtime_error);
}

TEST(Models, JsonRoundTripScoresIdentically) {
  const auto& t = fixtures::trained();
  const auto back = models_from_json(models_to_json(*t.models));
  EXPECT_EQ(models_to_json(back), models_to_json(*t.models));
  EXPECT_EQ(back.lof.k(), t.models->lof.k());
  EXPECT_EQ(back.lof.threshold(), t.models->lof.threshold());
  for (std::size_t i = 0; i < t.corpus.external.rows.size(); i += 11) {
    const auto& f = t.corpus.external.rows[i].observation.features;
    const auto p = t.models->embed(f);
    EXPECT_EQ(back.embed(f), p);
    EXPECT_EQ(back.lof.score(p), t.models->lof.score(p));
    EXPECT_EQ(detect::classify(back.forest, back.classifier_row(f)).vote_fractions,
              detect::classify(t.models->forest, t.models->classifier_row(f)).vote_fractions);
  }
}

TEST(Models, BaselinesJsonRoundTrip) {
  const auto& b = fixtures::trained().corpus.baselines;
  const auto back = baselines_from_json(baselines_to_json(b));
  ASSERT_EQ(back.size(), b.size());
  for (const auto& [mac, h] : b) {
    EXPECT_EQ(back.at(mac).probabilities, h.probabilities);
    EXPECT_EQ(back.at(mac).bin_edges, h.bin_edges);
  }
  EXPECT_THROW(models_from_json("{}"), std::exception);
}

TEST(Training, InvariantsOfFittedModels) {
  const auto& r = fixtures::trained().result;
  const auto& m = r.models;
  EXPECT_GE(m.lof.threshold(), 1.1);
  EXPECT_GE(m.lof.k(), 5u);
  EXPECT_LE(m.lof.k(), 24u);
  EXPECT_EQ(m.forest.trees.size(), 200u);
  for (double l : m.lof.lrd()) {
    EXPECT_GT(l, 0.0);
    EXPECT_TRUE(std::isfinite(l));
  }
  const auto& sel = m.pipeline.selection;
  EXPECT_FALSE(sel.kept_after_rfe.empty());
  for (const auto& f : sel.kept_after_rfe)
    EXPECT_NE(std::find(sel.kept_after_correlation.begin(), sel.kept_after_correlation.end(), f),
              sel.kept_after_correlation.end());
  EXPECT_EQ(m.forest.feature_names, sel.kept_after_rfe);
  ASSERT_EQ(r.ablation.size(), 4u);
  EXPECT_EQ(r.tuning.sweep.size(), 20u);
  const auto& pca = m.pipeline.pca;
  for (std::size_t i = 1; i < pca.explained_variance_ratio.size(); ++i)
    EXPECT_LE(pca.explained_variance_ratio[i], pca.explained_variance_ratio[i - 1]);
}
