#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "racs/config.hpp"
#include "racs/metrics.hpp"
#include "racs/safety.hpp"
#include "racs/simnet.hpp"

namespace racs {

struct run_result {
  sim_config cfg;
  sim::stop_reason stop = sim::stop_reason::horizon;
  std::optional<safety_violation> violation;
  std::vector<std::vector<chain_entry>> chains;  // executed chain per replica
  std::vector<uint64_t> final_digests;
  std::vector<bool> crashed;
  metrics met;
  sim::net::stats_t net_stats;
  double duration_ms = 0;
  double drained_at = -1;               // set when the event queue emptied early
  std::vector<std::string> stall_dump;  // replica states at that point

  uint64_t blocks_committed = 0;  // longest chain over live replicas
  uint64_t commands_committed = 0;
  double throughput_cps = 0;  // committed commands per second of virtual time
  double p50_ms = 0;
  double p99_ms = 0;
  double mean_latency_ms = 0;
  uint64_t async_phases = 0;
  double async_commit_fraction = 0;  // fallback phases that ended in a commit
  uint64_t view_count = 0;
  double views_per_commit = 0;
};

// Builds network, replicas, workload and fault schedule from cfg and runs to
// the horizon. trace_out may be null; otherwise events at or below
// cfg.trace_level are written to it as NDJSON.
run_result run_scenario(const sim_config& cfg, std::ostream* trace_out = nullptr);

// Deterministic pretty-printed JSON report for one run.
std::string metrics_json(const run_result& r);

}  // namespace racs
