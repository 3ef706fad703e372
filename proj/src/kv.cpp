#include "racs/kv.hpp"

#include "racs/digest.hpp"

namespace racs {

uint64_t kv_store::pair_hash(const std::string& k, const std::string& v) {
  uint64_t hk = fnv1a64(k);
  uint64_t hv = fnv1a64(v);
  return splitmix64(hk ^ (hv << 32 | hv >> 32));
}

kv_store::result kv_store::apply(const command& c) {
  result r;
  if (c.op == cmd_op::get) {
    auto it = map_.find(c.key);
    if (it != map_.end()) r.value = it->second;
    return r;
  }
  auto it = map_.find(c.key);
  if (it != map_.end()) {
    digest_ -= pair_hash(c.key, it->second);
    it->second = c.value;
  } else {
    it = map_.emplace(c.key, c.value).first;
  }
  digest_ += pair_hash(c.key, c.value);
  return r;
}

std::optional<std::string> kv_store::get(const std::string& key) const {
  auto it = map_.find(key);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

}  // namespace racs
