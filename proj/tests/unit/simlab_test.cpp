#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "plcguard/dataset.hpp"
#include "plcguard/lof.hpp"
#include "plcguard/simlab/bench.hpp"
#include "plcguard/simlab/corpus.hpp"
#include "plcguard/simlab/flood.hpp"
#include "plcguard/simlab/modbus.hpp"
#include "plcguard/simlab/scenario.hpp"
#include "plcguard/simlab/stub_controller.hpp"

using namespace plcguard;
using namespace plcguard::simlab;
using telemetry::Feature;

namespace {

std::vector<double> column(const dataset::LabeledDataset& d, Label l, Feature f) {
  std::vector<double> v;
  for (const auto& r : d.rows)
    if (r.label == l) v.push_back(r.observation.features[f]);
  return v;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size()));
}

ScenarioSpec spec_for(Label kind, std::uint64_t seed = 3) {
  ScenarioSpec s;
  s.kind = kind;
  s.duration_s = 10;
  s.rng_seed = seed;
  return s;
}

}  // namespace

TEST(RegisterMapTest, CoilWriteThenRead) {
  RegisterMap map;
  const auto ack = map.handle(write_single_coil(9, 17, true));
  EXPECT_EQ(ack, write_single_coil(9, 17, true));
  const auto resp = map.handle(read_request(10, 1, 16, 4));
  ASSERT_EQ(resp.size(), 10u);
  EXPECT_EQ(resp[7], 1);
  EXPECT_EQ(resp[8], 1);
  EXPECT_EQ(resp[9], 0b0010);
}

TEST(RegisterMapTest, RegisterWritesAndLengthField) {
  RegisterMap map;
  const std::vector<std::uint16_t> values{0x1234, 0xBEEF, 7};
  map.handle(write_multiple_registers(1, 200, values));
  const auto resp = map.handle(read_request(2, 3, 200, 3));
  const auto h = parse_mbap(resp);
  ASSERT_TRUE(h);
  EXPECT_EQ(h->transaction, 2);
  EXPECT_EQ(std::size_t(h->length), resp.size() - 6);
  ASSERT_EQ(resp.size(), 6u + 1 + 1 + 1 + 6);
  EXPECT_EQ(resp[8], 6);
  EXPECT_EQ(resp[9], 0x12);
  EXPECT_EQ(resp[10], 0x34);
  EXPECT_EQ(resp[11], 0xBE);
  EXPECT_EQ(resp[13], 0);
  EXPECT_EQ(resp[14], 7);
}

TEST(RegisterMapTest, ExceptionCodes) {
  RegisterMap map;
  const std::uint8_t pdu[] = {0x2B, 0x0E, 0x01, 0x00};
  auto resp = map.handle(frame_pdu(5, 1, pdu));
  ASSERT_EQ(resp.size(), 9u);
  EXPECT_EQ(resp[7], 0xAB);
  EXPECT_EQ(resp[8], 0x01);
  resp = map.handle(read_request(6, 3, RegisterMap::kSize - 1, 2));
  EXPECT_EQ(resp[8], 0x02);
  resp = map.handle(read_request(7, 3, 0, 0));
  EXPECT_EQ(resp[8], 0x03);
}

TEST(StubControllerTest, AnswersOverTcp) {
  StubController stub;
  stub.start();
  auto sock = net::connect_tcp({"127.0.0.1", stub.port()});
  for (std::uint8_t fc : kBenchFunctions) {
    BenignRequestSource src(fc, 5);
    src.next();
    const auto req = src.next();
    sock.write_all(req);
    const auto resp = read_frame([&](std::span<std::uint8_t> b) { return sock.read_exact(b); });
    ASSERT_TRUE(resp);
    EXPECT_EQ((*resp)[0], req[0]);
    EXPECT_EQ((*resp)[1], req[1]);
    EXPECT_EQ((*resp)[7], fc) << function_name(fc);
  }
  EXPECT_EQ(stub.requests(), kBenchFunctions.size());
}

TEST(Generator, BenignSessionOpensWithStatusRead) {
  for (std::uint8_t fc : kBenchFunctions) {
    BenignRequestSource src(fc, 1);
    EXPECT_TRUE(src.opening());
    EXPECT_EQ(src.next()[7], 3);
    EXPECT_FALSE(src.opening());
    EXPECT_EQ(src.next()[7], fc);
  }
}

TEST(Generator, DeterministicPerSeed) {
  for (auto kind : kAllLabels) {
    const auto a = gen_traffic(spec_for(kind)), b = gen_traffic(spec_for(kind));
    std::ostringstream sa, sb, sc;
    write_trace(sa, a);
    write_trace(sb, b);
    write_trace(sc, gen_traffic(spec_for(kind, 4)));
    EXPECT_EQ(sa.str(), sb.str()) << to_string(kind);
    EXPECT_NE(sa.str(), sc.str()) << to_string(kind);
  }
}

TEST(Generator, TraceIsSortedAndLabelled) {
  for (auto kind : kAllLabels) {
    const auto t = gen_traffic(spec_for(kind));
    ASSERT_FALSE(t.empty());
    std::size_t attack = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) {
        EXPECT_LE(t[i - 1].meta.timestamp_us, t[i].meta.timestamp_us);
      }
      EXPECT_TRUE(t[i].label == Label::Normal || t[i].label == kind);
      EXPECT_EQ(t[i].meta.payload_len_bytes, t[i].payload.size());
      EXPECT_EQ(t[i].meta.frame_len_bytes, t[i].payload.size() + kWireOverheadBytes);
      attack += t[i].label != Label::Normal;
    }
    EXPECT_EQ(attack > 0, kind != Label::Normal) << to_string(kind);
  }
}

TEST(Generator, TraceJsonRoundTrip) {
  const auto t = gen_traffic(spec_for(Label::Ex4));
  std::stringstream s;
  write_trace(s, t);
  const auto back = read_trace(s);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].payload, t[i].payload);
    EXPECT_EQ(back[i].label, t[i].label);
    EXPECT_EQ(back[i].meta.src_ip, t[i].meta.src_ip);
    EXPECT_EQ(back[i].meta.src_mac, t[i].meta.src_mac);
    EXPECT_EQ(back[i].meta.timestamp_us, t[i].meta.timestamp_us);
  }
}

TEST(Generator, Ex7SizeBoundsAndFixedSize) {
  auto s = spec_for(Label::Ex7);
  s.packet_size_bytes = 700;
  for (const auto& r : gen_traffic(s))
    if (r.label == Label::Ex7) {
      EXPECT_EQ(r.payload.size(), 700u);
    }
  s.packet_size_bytes = 0;
  for (const auto& r : gen_traffic(s))
    if (r.label == Label::Ex7) {
      EXPECT_GE(r.payload.size(), 200u);
      EXPECT_LE(r.payload.size(), 2000u);
    }
  s.packet_size_bytes = 100;
  EXPECT_THROW(gen_traffic(s), std::invalid_argument);
  s.duration_s = 0;
  EXPECT_THROW(gen_traffic(s), std::invalid_argument);
}

TEST(Generator, AttackPacketCountIsExact) {
  auto s = spec_for(Label::Ex2);
  s.attack_packets = 321;
  std::size_t n = 0;
  for (const auto& r : gen_traffic(s)) n += r.label == Label::Ex2;
  EXPECT_EQ(n, 321u);
}

TEST(Scenario, FloodRaisesMeanFlowHundredfold) {
  const auto& base = fixtures::trained().corpus;
  const auto d = make_dataset({gen_traffic(spec_for(Label::Ex7))}, base.baselines);
  const double benign = detect::quantile(column(d, Label::Normal, Feature::MeanFlow), 0.5);
  const auto attack = column(d, Label::Ex7, Feature::MeanFlow);
  EXPECT_GE(detect::quantile(attack, 0.5), 100 * benign);
}

TEST(Scenario, EavesdropperShowsSeveralClientsPerMac) {
  const auto& base = fixtures::trained().corpus;
  const auto d = make_dataset({gen_traffic(spec_for(Label::Ex4))}, base.baselines);
  for (double v : column(d, Label::Ex4, Feature::ClientsPerMac)) {
    EXPECT_GE(v, 2.0);
  }
  for (double v : column(d, Label::Normal, Feature::ClientsPerMac)) {
    EXPECT_EQ(v, 1.0);
  }
}

TEST(Corpus, AllSevenLabelsPresent) {
  const auto& c = fixtures::trained().corpus;
  for (const auto* d : {&c.train, &c.external}) {
    const auto counts = d->label_counts();
    for (auto l : kAllLabels) {
      EXPECT_GT(counts.count(l) ? counts.at(l) : 0, 0u) << to_string(l);
    }
    std::size_t total = 0;
    for (const auto& [l, n] : counts) total += n;
    EXPECT_EQ(total, d->rows.size());
  }
  const auto base = c.baseline.label_counts();
  EXPECT_EQ(base.size(), 1u);
  EXPECT_TRUE(base.count(Label::Normal));
}

TEST(Corpus, ScaledShapeFollowsReference) {
  const auto& c = fixtures::trained().corpus;
  const auto counts = c.train.label_counts();
  for (const auto& [l, n] : kReferenceShapes[1].attacks) {
    const double want = 0.05 * double(n);
    EXPECT_NEAR(double(counts.at(l)), want, std::max(2.0, 0.05 * want)) << to_string(l);
  }
}

TEST(Corpus, CsvIsByteIdenticalAcrossBuilds) {
  CorpusConfig cc;
  cc.scale = 0.01;
  cc.seed = 8;
  const auto a = build_corpus(cc), b = build_corpus(cc);
  for (auto pick : {&Corpus::baseline, &Corpus::train, &Corpus::external}) {
    std::ostringstream sa, sb;
    dataset::write_feature_csv(sa, a.*pick, true);
    dataset::write_feature_csv(sb, b.*pick, true);
    EXPECT_EQ(sa.str(), sb.str());
  }
  cc.seed = 9;
  std::ostringstream sa, sc;
  dataset::write_feature_csv(sa, a.train, true);
  dataset::write_feature_csv(sc, build_corpus(cc).train, true);
  EXPECT_NE(sa.str(), sc.str());
}

// Each attack moves at least one of the features its generator targets by
// three benign standard deviations.
TEST(ScenarioProperty, AttacksShiftTheirSignatureFeatures) {
  const std::map<Label, std::vector<Feature>> signature{
      {Label::Ex1, {Feature::PacketSize, Feature::ScaledSize, Feature::InterArrival}},
      {Label::Ex2, {Feature::MeanFlow, Feature::InterArrival, Feature::ScaledInterArrival}},
      {Label::Ex3, {Feature::PacketSize, Feature::MeanFlow, Feature::ScaledSize}},
      {Label::Ex4, {Feature::ClientsPerMac}},
      {Label::Ex6, {Feature::SourcePorts, Feature::MeanFlow}},
      {Label::Ex7, {Feature::MeanFlow, Feature::SourcePorts, Feature::PacketSize}},
  };
  const auto& d = fixtures::trained().corpus.train;
  for (const auto& [label, features] : signature) {
    double best = 0;
    for (auto f : features) {
      const auto benign = column(d, Label::Normal, f);
      const double sd = std::max(stddev(benign), 1e-9);
      best = std::max(best, std::abs(mean(column(d, label, f)) - mean(benign)) / sd);
    }
    EXPECT_GE(best, 3.0) << to_string(label);
  }
}

TEST(Bench, ReportShape) {
  BenchConfig bc;
  bc.cycles = 20;
  const auto r = bench_latency(fixtures::trained().models, bc);
  EXPECT_TRUE(r.valid) << (r.errors.empty() ? "" : r.errors.front());
  ASSERT_EQ(r.rows.size(), 16u);
  for (std::uint8_t fc : kBenchFunctions)
    for (auto cfg : {kWithIds, kWithoutIds}) {
      const auto* row = r.find(fc, cfg);
      ASSERT_NE(row, nullptr);
      // The untimed opening read only shows up here when it was lost.
      EXPECT_GE(row->samples + row->lost, bc.cycles);
      EXPECT_LE(row->samples + row->lost, bc.cycles + 1);
      EXPECT_LE(row->median_us, *std::max_element(r.samples.at(std::string(cfg)).at(fc).begin(),
                                                  r.samples.at(std::string(cfg)).at(fc).end()));
      EXPECT_GT(row->median_us, 0);
      EXPECT_GE(row->std_us, 0);
    }
  std::istringstream csv(r.to_csv());
  std::string line;
  std::size_t n = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, "function,config,mean_us,std_us,median_us");
  while (std::getline(csv, line)) ++n;
  EXPECT_EQ(n, 16u);
  EXPECT_THROW(bench_latency(nullptr, bc), std::invalid_argument);
}

TEST(Flood, SmallSweepShape) {
  FloodConfig fc;
  fc.sizes = {200, 2000};
  fc.size_sweep_threads = 20;
  fc.thread_counts = {10, 40};
  fc.repetitions = 2;
  fc.timeout = std::chrono::milliseconds(5000);
  const auto r = flood_experiment(fixtures::trained().models, fc);
  ASSERT_EQ(r.size_sweep.size(), 4u);
  ASSERT_EQ(r.thread_sweep.size(), 4u);
  EXPECT_EQ(r.failures(), 0u);
  for (const auto* runs : {&r.size_sweep, &r.thread_sweep})
    for (const auto& run : *runs) {
      EXPECT_GT(run.block_time_ms, 0.0);
      EXPECT_GT(run.sent, 0u);
    }
  const auto csv = FloodReport::to_csv(r.size_sweep);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "setting,repetition,allowed_requests,block_time_ms");
  EXPECT_FALSE(std::isnan(median_block_time_ms(r.size_sweep, 200)));
  EXPECT_TRUE(std::isnan(median_block_time_ms(r.size_sweep, 999)));
  EXPECT_THROW(flood_once(fixtures::trained().models, 100, 1, fc), std::invalid_argument);
}
