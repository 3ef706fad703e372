#include "racs/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace racs {

hash256 sha256(const uint8_t* data, size_t len) {
  hash256 out{};
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
      out_len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

hash256 sha256(const std::vector<uint8_t>& data) {
  return sha256(data.data(), data.size());
}

static const char* kHexDigits = "0123456789abcdef";

std::string to_hex(const uint8_t* data, size_t len) {
  std::string s;
  s.reserve(len * 2);
  for (size_t i = 0; i < len; ++i) {
    s.push_back(kHexDigits[data[i] >> 4]);
    s.push_back(kHexDigits[data[i] & 0xf]);
  }
  return s;
}

std::string to_hex(const hash256& h) { return to_hex(h.data(), h.size()); }

static int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void from_hex(const std::string& hex, uint8_t* out, size_t out_len) {
  if (hex.size() != out_len * 2) {
    throw std::invalid_argument("hex string has wrong length");
  }
  for (size_t i = 0; i < out_len; ++i) {
    int hi = hex_val(hex[2 * i]);
    int lo = hex_val(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("bad hex digit");
    out[i] = static_cast<uint8_t>((hi << 4) | lo);
  }
}

uint64_t fnv1a64(const uint8_t* data, size_t len) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace racs
