#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "racs/digest.hpp"

namespace racs::wire {

// Canonical serialization used for every message and block on the simulated
// network and for content-derived block ids. Fixed integer widths, little
// endian, u32 length prefixes on variable fields. Encoding a value twice
// yields identical bytes; decode(encode(x)) == x.

class decode_error : public std::runtime_error {
 public:
  explicit decode_error(const std::string& what) : std::runtime_error(what) {}
};

class writer {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }

  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }

  void i8(int8_t v) { buf_.push_back(static_cast<uint8_t>(v)); }

  void bytes(const uint8_t* data, size_t len) {
    if (len > UINT32_MAX) throw std::length_error("field too large");
    u32(static_cast<uint32_t>(len));
    buf_.insert(buf_.end(), data, data + len);
  }

  void bytes(const std::vector<uint8_t>& v) { bytes(v.data(), v.size()); }

  void str(const std::string& s) {
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  void hash(const hash256& h) { buf_.insert(buf_.end(), h.begin(), h.end()); }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  std::vector<uint8_t> buf_;
};

class reader {
 public:
  reader(const uint8_t* data, size_t len) : p_(data), end_(data + len) {}
  explicit reader(const std::vector<uint8_t>& v) : reader(v.data(), v.size()) {}

  uint8_t u8() {
    need(1);
    return *p_++;
  }

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(*p_++) << (8 * i);
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(*p_++) << (8 * i);
    return v;
  }

  int8_t i8() { return static_cast<int8_t>(u8()); }

  std::vector<uint8_t> bytes() {
    uint32_t len = u32();
    need(len);
    std::vector<uint8_t> out(p_, p_ + len);
    p_ += len;
    return out;
  }

  std::string str() {
    uint32_t len = u32();
    need(len);
    std::string out(reinterpret_cast<const char*>(p_), len);
    p_ += len;
    return out;
  }

  hash256 hash() {
    need(32);
    hash256 h;
    std::memcpy(h.data(), p_, 32);
    p_ += 32;
    return h;
  }

  bool done() const { return p_ == end_; }

  // Call after decoding a full message; trailing garbage is a framing bug.
  void expect_done() const {
    if (!done()) throw decode_error("trailing bytes after message");
  }

 private:
  void need(size_t n) const {
    if (static_cast<size_t>(end_ - p_) < n) throw decode_error("truncated input");
  }

  const uint8_t* p_;
  const uint8_t* end_;
};

}  // namespace racs::wire
