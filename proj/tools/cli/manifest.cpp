#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <memory>
#include <stdexcept>

#include "plcguard/models.hpp"

namespace plcguard::cli {

using nlohmann::json;

namespace {

struct Digest {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: digest init failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw std::runtime_error("sha256: update failed");
  }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) throw std::runtime_error("sha256: final failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += kHex[md[i] >> 4];
      out += kHex[md[i] & 0xF];
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> data) {
  Digest d;
  d.update(data.data(), data.size());
  return d.hex();
}

std::string sha256_hex(std::string_view text) {
  Digest d;
  d.update(text.data(), text.size());
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

void RunManifest::hash_outputs() {
  hashes.clear();
  for (const auto& p : outputs) {
    if (std::filesystem::is_directory(p)) continue;
    hashes[p.string()] = sha256_file(p);
  }
}

json RunManifest::to_json() const {
  json in = json::array(), out = json::array();
  for (const auto& p : inputs) in.push_back(p.string());
  for (const auto& p : outputs) out.push_back(p.string());
  return {{"command", command}, {"config", config},           {"seeds", seeds},  {"inputs", in},
          {"outputs", out},     {"wall_clock_s", wall_clock_s}, {"hashes", hashes},
          {"exit_status", exit_status}, {"error", error}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = j.value("config", json::object());
  m.seeds = j.value("seeds", std::map<std::string, std::uint64_t>{});
  for (const auto& p : j.value("inputs", std::vector<std::string>{})) m.inputs.emplace_back(p);
  for (const auto& p : j.value("outputs", std::vector<std::string>{})) m.outputs.emplace_back(p);
  m.wall_clock_s = j.value("wall_clock_s", 0.0);
  m.hashes = j.value("hashes", std::map<std::string, std::string>{});
  m.exit_status = j.value("exit_status", 0);
  m.error = j.value("error", std::string{});
  return m;
}

void RunManifest::write(const std::filesystem::path& path) const { write_text_file(path, to_json().dump(2) + "\n"); }

std::vector<std::string> RunManifest::verify() const {
  std::vector<std::string> bad;
  for (const auto& [path, hash] : hashes)
    if (!std::filesystem::exists(path) || sha256_file(path) != hash) bad.push_back(path);
  return bad;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& out) {
  if (std::filesystem::is_directory(out)) return out / "manifest.json";
  return std::filesystem::path(out.string() + ".manifest.json");
}

}  // namespace plcguard::cli
