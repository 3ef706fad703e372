#pragma once

#include <map>
#include <optional>
#include <string>

#include "racs/command.hpp"

namespace racs {

// Deterministic KV state machine. The digest is an order-independent sum
// over (key, value) pairs, updated incrementally, so two stores are equal
// iff their digests are equal (modulo 64-bit collisions).
class kv_store {
 public:
  struct result {
    bool ok = true;
    std::optional<std::string> value;  // set for get hits
  };

  result apply(const command& c);

  std::optional<std::string> get(const std::string& key) const;
  uint64_t digest() const { return digest_; }
  size_t size() const { return map_.size(); }

 private:
  static uint64_t pair_hash(const std::string& k, const std::string& v);

  std::map<std::string, std::string> map_;
  uint64_t digest_ = 0;
};

}  // namespace racs
