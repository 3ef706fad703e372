#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

#include "racs/command.hpp"

namespace racs {

// Shared-seed common coin. flip(v) maps a view number to a replica index via
// a keyed cryptographic hash of the fixed-width view encoding, so replicas
// holding the same seed agree on every flip without communicating, and the
// output sequence is uniform and uncorrelated across views.
class common_coin {
 public:
  using seed_t = std::array<uint8_t, 32>;

  common_coin(const seed_t& seed, uint32_t n);

  // Seed given as exactly 64 hex chars; throws std::invalid_argument.
  static common_coin from_hex(const std::string& seed_hex, uint32_t n);

  replica_id flip(view_t view) const;

  uint32_t n() const { return n_; }

 private:
  seed_t seed_;
  uint32_t n_;
};

// Injection point for the consensus core; tests substitute scripted coins.
using coin_fn = std::function<replica_id(view_t)>;

}  // namespace racs
