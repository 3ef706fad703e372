#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "racs/config.hpp"

namespace racs {

struct sweep_row {
  std::string config;
  uint64_t seed = 0;
  double throughput = 0;
  double p50 = 0;
  double p99 = 0;
  double async_commit_fraction = 0;
  uint64_t msg_count = 0;
  uint64_t commands = 0;
  uint64_t blocks = 0;
  uint64_t async_phases = 0;
  uint64_t view_count = 0;
  bool safe = true;
  std::string stop;  // "horizon", "drained", or "error: ..."
};

// Runs every (config, seed) pair, config-major. A run that throws records an
// error row and the sweep continues. jobs > 1 distributes runs over worker
// threads; row order is independent of scheduling.
std::vector<sweep_row> run_sweep(const std::vector<sim_config>& cfgs,
                                 const std::vector<uint64_t>& seeds,
                                 unsigned jobs);

// Per-run rows, then mean and stddev rows per config over its clean runs.
void write_sweep_csv(std::ostream& out, const std::vector<sweep_row>& rows);

}  // namespace racs
