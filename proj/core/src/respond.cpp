#include "plcguard/respond.hpp"

#include <cstdlib>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <stdexcept>

namespace plcguard::respond {

using nlohmann::json;

std::string_view to_string(ActionKind a) { return a == ActionKind::BlockSource ? "block" : "log"; }

namespace {

ActionKind parse_action(const std::string& s) {
  if (s == "block" || s == "BlockSource") return ActionKind::BlockSource;
  if (s == "log" || s == "LogOnly") return ActionKind::LogOnly;
  throw std::invalid_argument("unknown response action '" + s + "'");
}

std::vector<ActionKind> parse_actions(const json& j) {
  if (j.is_string()) return {parse_action(j.get<std::string>())};
  std::vector<ActionKind> out;
  for (const auto& a : j) out.push_back(parse_action(a.get<std::string>()));
  if (out.empty()) throw std::invalid_argument("empty action list in policy");
  return out;
}

}  // namespace

ResponsePolicy ResponsePolicy::defaults() {
  ResponsePolicy p;
  for (auto l : kAttackLabels) p.rules[l] = {ActionKind::BlockSource};
  p.rules[Label::Ex4] = {ActionKind::LogOnly};
  return p;
}

ResponsePolicy ResponsePolicy::from_json(const std::string& text) {
  const json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("policy must be a JSON object");
  ResponsePolicy p = defaults();
  for (const auto& [key, value] : doc.items()) {
    if (key == "default") {
      p.default_action = parse_actions(value);
      continue;
    }
    const auto label = parse_label(key);
    if (!label || !is_attack(*label)) throw std::invalid_argument("policy key '" + key + "' is not an attack label");
    p.rules[*label] = parse_actions(value);
  }
  return p;
}

std::string ResponsePolicy::to_json() const {
  json doc;
  auto names = [](const std::vector<ActionKind>& v) {
    json a = json::array();
    for (auto k : v) a.push_back(respond::to_string(k));
    return a;
  };
  for (const auto& [label, actions] : rules) doc[std::string(plcguard::to_string(label))] = names(actions);
  doc["default"] = names(default_action);
  return doc.dump(2);
}

const std::vector<ActionKind>& ResponsePolicy::resolve(Label l) const {
  auto it = rules.find(l);
  if (it != rules.end() && !it->second.empty()) return it->second;
  return default_action;
}

void MemoryBlocklist::block(Ipv4Address ip) {
  std::unique_lock lock(mutex_);
  blocked_.insert(ip);
}

bool MemoryBlocklist::is_blocked(Ipv4Address ip) const {
  std::shared_lock lock(mutex_);
  return blocked_.contains(ip);
}

std::size_t MemoryBlocklist::size() const {
  std::shared_lock lock(mutex_);
  return blocked_.size();
}

CommandBackend::CommandBackend(std::string command_template) : template_(std::move(command_template)) {
  if (template_.find("{ip}") == std::string::npos)
    throw std::invalid_argument("block command template must contain {ip}");
}

std::string CommandBackend::render(Ipv4Address ip) const {
  std::string out = template_;
  const std::string text = ip.to_string();
  for (auto pos = out.find("{ip}"); pos != std::string::npos; pos = out.find("{ip}", pos + text.size()))
    out.replace(pos, 4, text);
  return out;
}

void CommandBackend::block(Ipv4Address ip) {
  const std::string cmd = render(ip);
  const int rc = std::system(cmd.c_str());
  if (rc != 0) throw std::runtime_error("block command failed (status " + std::to_string(rc) + "): " + cmd);
  mirror_.block(ip);
}

std::int64_t block_source(Ipv4Address ip, BlockBackend& backend) {
  backend.block(ip);
  return monotonic_us();
}

std::string to_json_line(const IncidentRecord& r) {
  json j = {{"ts_us", r.ts_us},
            {"label", r.label ? json(plcguard::to_string(*r.label)) : json(nullptr)},
            {"src_ip", r.src_ip.to_string()},
            {"src_mac", r.src_mac.to_string()},
            {"actions_taken", r.actions_taken},
            {"block_installed_ts_us", r.block_installed_ts_us ? json(*r.block_installed_ts_us) : json(nullptr)},
            {"duplicate", r.duplicate},
            {"action_failed", r.action_failed}};
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

IncidentResponder::IncidentResponder(ResponsePolicy policy, BlockBackend& backend,
                                     std::optional<std::filesystem::path> incident_log)
    : policy_(std::move(policy)), backend_(backend) {
  if (incident_log) {
    log_.open(*incident_log, std::ios::app);
    if (!log_) throw std::runtime_error("cannot open incident log " + incident_log->string());
  }
}

IncidentRecord IncidentResponder::handle_incident(Label label, Ipv4Address src_ip, const MacAddress& src_mac,
                                                  std::int64_t ts_us) {
  IncidentRecord rec;
  rec.ts_us = ts_us;
  rec.label = label;
  rec.src_ip = src_ip;
  rec.src_mac = src_mac;
  std::lock_guard lock(mutex_);
  if (!handled_.insert({src_ip, label}).second) {
    rec.duplicate = true;
    append(rec);
    return rec;
  }
  for (auto action : policy_.resolve(label)) {
    if (action == ActionKind::LogOnly) {
      rec.actions_taken.emplace_back("log");
      spdlog::warn("incident {} from {} ({})", plcguard::to_string(label), src_ip.to_string(), src_mac.to_string());
      continue;
    }
    if (backend_.is_blocked(src_ip)) {
      rec.actions_taken.emplace_back("block:existing");
      continue;
    }
    try {
      const auto installed = block_source(src_ip, backend_);
      rec.block_installed_ts_us = std::max(installed, ts_us);
      rec.actions_taken.emplace_back("block");
      spdlog::warn("blocked {} after {}", src_ip.to_string(), plcguard::to_string(label));
    } catch (const std::exception& e) {
      rec.action_failed = true;
      rec.error = e.what();
      spdlog::error("incident response failed for {}: {}", src_ip.to_string(), e.what());
    }
  }
  append(rec);
  return rec;
}

void IncidentResponder::log_event(const IncidentRecord& record) {
  std::lock_guard lock(mutex_);
  append(record);
}

void IncidentResponder::append(const IncidentRecord& r) {
  records_.push_back(r);
  if (log_.is_open()) log_ << to_json_line(r) << '\n' << std::flush;
}

std::vector<IncidentRecord> IncidentResponder::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

AsyncResponder::AsyncResponder(IncidentResponder& responder) : responder_(responder) {
  worker_ = std::thread([this] { run(); });
}

AsyncResponder::~AsyncResponder() { stop(); }

bool AsyncResponder::submit(Label label, Ipv4Address ip, const MacAddress& mac, std::int64_t ts_us) {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ || !submitted_.insert({ip, label}).second) return false;
    queue_.push_back({label, ip, mac, ts_us});
  }
  cv_.notify_one();
  return true;
}

void AsyncResponder::flush() {
  std::unique_lock lock(mutex_);
  idle_cv_.wait(lock, [&] { return queue_.empty() && !busy_; });
}

void AsyncResponder::stop() {
  {
    std::lock_guard lock(mutex_);
    if (stopping_ && !worker_.joinable()) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void AsyncResponder::run() {
  std::unique_lock lock(mutex_);
  while (true) {
    cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) {
      if (stopping_) break;
      continue;
    }
    Job job = queue_.front();
    queue_.pop_front();
    busy_ = true;
    lock.unlock();
    responder_.handle_incident(job.label, job.ip, job.mac, job.ts_us);
    lock.lock();
    busy_ = false;
    if (queue_.empty()) idle_cv_.notify_all();
  }
  idle_cv_.notify_all();
}

}  // namespace plcguard::respond
