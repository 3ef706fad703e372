#include "racs/coin.hpp"

#include <stdexcept>

#include "racs/digest.hpp"
#include "racs/wire.hpp"

namespace racs {

common_coin::common_coin(const seed_t& seed, uint32_t n) : seed_(seed), n_(n) {
  if (n == 0) throw std::invalid_argument("coin needs n >= 1");
}

common_coin common_coin::from_hex(const std::string& seed_hex, uint32_t n) {
  seed_t seed;
  ::racs::from_hex(seed_hex, seed.data(), seed.size());
  return common_coin(seed, n);
}

replica_id common_coin::flip(view_t view) const {
  // PRF(seed, view): sha256 over seed || LE64(view). The seed prefix keys the
  // hash; the view is encoded at fixed width so distinct views never collide.
  wire::writer w;
  for (uint8_t b : seed_) w.u8(b);
  w.u64(view);
  hash256 h = sha256(w.data());
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i) x |= static_cast<uint64_t>(h[i]) << (8 * i);
  return static_cast<replica_id>(x % n_);
}

}  // namespace racs
