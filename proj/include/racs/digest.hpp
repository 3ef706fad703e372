#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace racs {

using hash256 = std::array<uint8_t, 32>;

// One-shot SHA-256 (OpenSSL EVP underneath).
hash256 sha256(const uint8_t* data, size_t len);
hash256 sha256(const std::vector<uint8_t>& data);

std::string to_hex(const uint8_t* data, size_t len);
std::string to_hex(const hash256& h);

// Parses exactly 2*out_len hex chars; throws std::invalid_argument otherwise.
void from_hex(const std::string& hex, uint8_t* out, size_t out_len);

// FNV-1a, used where a cheap non-cryptographic content checksum is enough
// (batch content hashes, KV digests). Not used for block identity.
uint64_t fnv1a64(const uint8_t* data, size_t len);
uint64_t fnv1a64(const std::string& s);

// 64-bit finalizer with good avalanche; combines fnv words into KV pair hashes.
uint64_t splitmix64(uint64_t x);

}  // namespace racs
