#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "racs/command.hpp"
#include "racs/digest.hpp"

namespace racs {

// Per-run counters, filled by the replica shells and the workload driver.
// Latency is commit time minus arrival time for the first commit of each
// command; replays at other replicas do not record again.
struct metrics {
  struct kind_stat {
    uint64_t count = 0;
    uint64_t bytes = 0;
  };
  std::map<std::string, kind_stat> by_kind;
  uint64_t sends = 0;
  uint64_t send_bytes = 0;

  uint64_t timeouts_fired = 0;
  uint64_t proposals = 0;
  std::set<view_t> async_views;            // views whose fallback phase ran
  uint64_t async_exits_committed = 0;      // fallback ended committing the elected block
  uint64_t async_exits_adopted = 0;        // fallback ended adopting without commit
  view_t max_view = 0;
  std::map<view_t, uint64_t> async_msgs;   // fallback messages per phase

  std::map<command_id, double> arrival_ms;
  std::set<command_id> committed;
  std::vector<double> latency_ms;
  std::map<hash256, double> propose_ms;  // first proposal time per block

  void on_send(const std::string& kind, size_t bytes) {
    auto& k = by_kind[kind];
    k.count += 1;
    k.bytes += bytes;
    sends += 1;
    send_bytes += bytes;
  }

  void on_arrival(const command_id& id, double t) { arrival_ms.emplace(id, t); }

  void on_commit_command(const command_id& id, double commit_t) {
    if (!committed.insert(id).second) return;
    auto it = arrival_ms.find(id);
    if (it != arrival_ms.end()) latency_ms.push_back(commit_t - it->second);
  }

  kind_stat kind(const std::string& k) const {
    auto it = by_kind.find(k);
    return it == by_kind.end() ? kind_stat{} : it->second;
  }
};

// Quantile of a sample by rank (nearest-rank method); 0 for empty input.
double percentile(std::vector<double> xs, double q);

}  // namespace racs
