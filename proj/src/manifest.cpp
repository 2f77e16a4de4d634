#include "vrh/manifest.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>

#include <boost/version.hpp>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "vrh/simd.hpp"

namespace vrh {

namespace {

std::string to_hex(const unsigned char* d, unsigned n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(2 * n, '0');
  for (unsigned i = 0; i < n; ++i) {
    s[2 * i] = digits[d[i] >> 4];
    s[2 * i + 1] = digits[d[i] & 15];
  }
  return s;
}

struct Sha256 {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};
  Sha256() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  }
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx.get(), p, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    return to_hex(md, len);
  }
};

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string version_string() {
  std::ostringstream s;
  s << "vrh 1.0.0; " << __VERSION__ << "; boost " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000
    << "; " << OpenSSL_version(OPENSSL_VERSION) << "; kernels " << simd::isa_name(simd::active().isa);
  return s.str();
}

void RunManifest::set_config(const nlohmann::json& canonical) {
  config = canonical;
  nlohmann::json hashed = canonical;
  hashed.erase("workers");
  config_hash = sha256_hex(hashed.dump());
}

void RunManifest::add_output(const std::string& dir, const std::string& relative) {
  const std::string full = (std::filesystem::path(dir) / relative).string();
  outputs.push_back({relative, file_sha256(full), std::filesystem::file_size(full)});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["config"] = config;
  j["master_seed"] = master_seed;
  j["workers"] = workers;
  nlohmann::json s = nlohmann::json::array();
  for (const auto& [label, seed] : seeds) s.push_back({{"replica", label}, {"seed", seed}});
  j["seeds"] = s;
  nlohmann::json o = nlohmann::json::array();
  for (const auto& out : outputs) o.push_back({{"path", out.path}, {"sha256", out.sha256}, {"bytes", out.bytes}});
  j["outputs"] = o;
  j["warnings"] = warnings;
  j["versions"] = version_string();
  j["wall_seconds"] = wall_seconds;
  if (!extra.empty()) j["extra"] = extra;
  return j;
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json().dump(2) << '\n';
}

}  // namespace vrh
