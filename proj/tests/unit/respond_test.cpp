#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "plcguard/respond.hpp"
#include "plcguard/rng.hpp"

using namespace plcguard;
using namespace plcguard::respond;

namespace {

const Ipv4Address kAttacker = Ipv4Address::parse("10.0.0.9");
const MacAddress kMac = MacAddress::parse("02:00:0a:00:00:09");

class FailingBackend : public BlockBackend {
 public:
  void block(Ipv4Address) override { throw std::runtime_error("firewall unavailable"); }
  bool is_blocked(Ipv4Address) const override { return false; }
  std::size_t size() const override { return 0; }
};

}  // namespace

TEST(Policy, DefaultsBlockAllButEx4) {
  const auto p = ResponsePolicy::defaults();
  for (auto l : kAttackLabels) {
    const auto& a = p.resolve(l);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0], l == Label::Ex4 ? ActionKind::LogOnly : ActionKind::BlockSource) << to_string(l);
  }
}

TEST(Policy, FromJsonOverridesNamedLabels) {
  const auto p = ResponsePolicy::from_json(R"({"EX-7": ["log"], "ex4": ["block", "log"], "default": ["log"]})");
  EXPECT_EQ(p.resolve(Label::Ex7), std::vector{ActionKind::LogOnly});
  EXPECT_EQ(p.resolve(Label::Ex4), (std::vector{ActionKind::BlockSource, ActionKind::LogOnly}));
  EXPECT_EQ(p.resolve(Label::Ex1), std::vector{ActionKind::BlockSource});
  EXPECT_THROW(ResponsePolicy::from_json(R"({"Normal": ["block"]})"), std::invalid_argument);
  EXPECT_THROW(ResponsePolicy::from_json(R"({"EX-9": ["block"]})"), std::invalid_argument);
  EXPECT_THROW(ResponsePolicy::from_json("[1]"), std::invalid_argument);
  const auto round = ResponsePolicy::from_json(p.to_json());
  for (auto l : kAttackLabels) {
    EXPECT_EQ(round.resolve(l), p.resolve(l));
  }
}

TEST(Policy, EveryLabelResolves) {
  ResponsePolicy empty;
  empty.rules.clear();
  for (const auto& p : {ResponsePolicy::defaults(), empty, ResponsePolicy::from_json("{}")})
    for (auto l : kAttackLabels) {
      EXPECT_FALSE(p.resolve(l).empty());
    }
}

TEST(Responder, Ex7BlocksSource) {
  MemoryBlocklist bl;
  IncidentResponder r(ResponsePolicy::defaults(), bl);
  const auto rec = r.handle_incident(Label::Ex7, kAttacker, kMac, 100);
  EXPECT_TRUE(bl.is_blocked(kAttacker));
  ASSERT_TRUE(rec.block_installed_ts_us);
  EXPECT_GE(*rec.block_installed_ts_us, rec.ts_us);
  EXPECT_EQ(rec.actions_taken, std::vector<std::string>{"block"});
}

TEST(Responder, Ex4OnlyLogs) {
  MemoryBlocklist bl;
  IncidentResponder r(ResponsePolicy::defaults(), bl);
  const auto rec = r.handle_incident(Label::Ex4, kAttacker, kMac);
  EXPECT_FALSE(bl.is_blocked(kAttacker));
  EXPECT_EQ(bl.size(), 0u);
  EXPECT_FALSE(rec.block_installed_ts_us);
  EXPECT_EQ(rec.actions_taken, std::vector<std::string>{"log"});
}

TEST(Responder, RepeatedIncidentsAreIdempotent) {
  MemoryBlocklist bl;
  IncidentResponder r(ResponsePolicy::defaults(), bl);
  for (int i = 0; i < 25; ++i) r.handle_incident(Label::Ex7, kAttacker, kMac);
  r.handle_incident(Label::Ex1, kAttacker, kMac);
  EXPECT_EQ(bl.size(), 1u);
  const auto recs = r.records();
  ASSERT_EQ(recs.size(), 26u);
  EXPECT_FALSE(recs[0].duplicate);
  for (std::size_t i = 1; i < 25; ++i) {
    EXPECT_TRUE(recs[i].duplicate);
    EXPECT_TRUE(recs[i].actions_taken.empty());
  }
  EXPECT_EQ(recs[25].actions_taken, std::vector<std::string>{"block:existing"});
}

TEST(Responder, BackendFailureIsRecorded) {
  FailingBackend fb;
  IncidentResponder r(ResponsePolicy::defaults(), fb);
  const auto rec = r.handle_incident(Label::Ex2, kAttacker, kMac);
  EXPECT_TRUE(rec.action_failed);
  EXPECT_NE(rec.error.find("firewall"), std::string::npos);
  EXPECT_FALSE(rec.block_installed_ts_us);
}

TEST(Responder, CommandBackendRunsTemplate) {
  const auto marker = std::filesystem::temp_directory_path() / "plcguard_block_marker";
  std::filesystem::remove(marker);
  CommandBackend ok("echo {ip} > " + marker.string());
  EXPECT_EQ(ok.render(kAttacker), "echo 10.0.0.9 > " + marker.string());
  IncidentResponder r(ResponsePolicy::defaults(), ok);
  EXPECT_FALSE(r.handle_incident(Label::Ex7, kAttacker, kMac).action_failed);
  EXPECT_TRUE(ok.is_blocked(kAttacker));
  std::ifstream in(marker);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "10.0.0.9");
  std::filesystem::remove(marker);

  CommandBackend bad("false {ip}");
  IncidentResponder r2(ResponsePolicy::defaults(), bad);
  const auto rec = r2.handle_incident(Label::Ex7, kAttacker, kMac);
  EXPECT_TRUE(rec.action_failed);
  EXPECT_FALSE(bad.is_blocked(kAttacker));
  EXPECT_THROW(CommandBackend("iptables -A INPUT -j DROP"), std::invalid_argument);
}

TEST(Responder, IncidentLogIsJsonLines) {
  const auto path = std::filesystem::temp_directory_path() / "plcguard_incidents.jsonl";
  std::filesystem::remove(path);
  {
    MemoryBlocklist bl;
    IncidentResponder r(ResponsePolicy::defaults(), bl, path);
    r.handle_incident(Label::Ex7, kAttacker, kMac, 7);
    r.handle_incident(Label::Ex4, Ipv4Address::parse("10.0.0.10"), kMac, 8);
  }
  std::ifstream in(path);
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) rows.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["label"], "EX-7");
  EXPECT_EQ(rows[0]["src_ip"], "10.0.0.9");
  EXPECT_TRUE(rows[1]["block_installed_ts_us"].is_null());
  std::filesystem::remove(path);
}

TEST(Blocklist, BlockedAddressOnly) {
  MemoryBlocklist bl;
  EXPECT_FALSE(bl.is_blocked(kAttacker));
  block_source(kAttacker, bl);
  EXPECT_TRUE(bl.is_blocked(kAttacker));
  SplitRng rng(4);
  for (int i = 0; i < 1000; ++i) {
    Ipv4Address other{static_cast<std::uint32_t>(rng())};
    if (other == kAttacker) continue;
    EXPECT_FALSE(bl.is_blocked(other));
  }
}

TEST(Blocklist, ConcurrentReadersAndWriters) {
  MemoryBlocklist bl;
  std::vector<std::thread> threads;
  for (int w = 0; w < 4; ++w)
    threads.emplace_back([&, w] {
      for (std::uint32_t i = 0; i < 500; ++i) bl.block(Ipv4Address{std::uint32_t(w) << 16 | i});
    });
  for (int r = 0; r < 4; ++r)
    threads.emplace_back([&] {
      for (std::uint32_t i = 0; i < 5000; ++i) (void)bl.is_blocked(Ipv4Address{i});
    });
  for (auto& t : threads) t.join();
  EXPECT_EQ(bl.size(), 2000u);
}

TEST(AsyncResponderTest, DeduplicatesAndFlushes) {
  MemoryBlocklist bl;
  IncidentResponder r(ResponsePolicy::defaults(), bl);
  AsyncResponder async(r);
  EXPECT_TRUE(async.submit(Label::Ex7, kAttacker, kMac, 1));
  EXPECT_FALSE(async.submit(Label::Ex7, kAttacker, kMac, 2));
  EXPECT_TRUE(async.submit(Label::Ex4, kAttacker, kMac, 3));
  async.flush();
  EXPECT_TRUE(bl.is_blocked(kAttacker));
  EXPECT_EQ(r.records().size(), 2u);
  async.stop();
  EXPECT_FALSE(async.submit(Label::Ex1, kAttacker, kMac, 4));
}
