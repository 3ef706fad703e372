#pragma once

#include <optional>

#include "racs/command.hpp"
#include "racs/config.hpp"
#include "racs/rng.hpp"

namespace racs {

// Open-loop Poisson command source. Arrivals land on replicas round-robin;
// each command is a put with an 8-byte random key, sized so that
// logical_size(cmd) == command_bytes.
class workload_gen {
 public:
  struct arrival {
    double at_ms = 0;
    replica_id to = 0;
    command cmd;
  };

  workload_gen(const sim_config::workload_t& w, uint32_t n, uint64_t seed,
               double until_ms);

  std::optional<arrival> next();

 private:
  sim_config::workload_t w_;
  uint32_t n_;
  double stop_ms_;
  double t_;
  uint64_t count_ = 0;
  prng rng_;
};

}  // namespace racs
