#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "racs/command.hpp"

namespace racs {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One simulated run, as read from a JSON config file. Unknown keys are
// rejected so a typo cannot silently fall back to a default.
struct sim_config {
  enum class run_mode : uint8_t { pipelined, sadl };

  uint32_t n = 4;
  uint32_t f = 1;  // defaults to floor((n-1)/2) when absent
  run_mode mode = run_mode::pipelined;
  bool async_enabled = true;  // false degrades to the leader-only baseline

  double timeout_ms = 150;
  uint32_t batch_size = 100;
  double batch_time_ms = 50;
  uint32_t pipeline_depth = 8;
  double fetch_retry_ms = 100;

  // "fixed" (fixed_delay_ms all pairs), "lan", "wan5", or "matrix".
  std::string delay_preset = "fixed";
  double fixed_delay_ms = 50;
  std::vector<std::vector<double>> delay_matrix;
  double jitter_ms = 0;
  double egress_cap_bytes_per_ms = 0;  // 0 = uncapped uplinks

  struct adversary_t {
    enum kind_t : uint8_t { delay_attack, target_leader };
    bool enabled = false;
    kind_t kind = delay_attack;
    double extra_ms = 0;
    double epoch_ms = 1;
    uint32_t max_targets = 0;
  } adversary;

  struct workload_t {
    double rate_cps = 1000;      // open-loop Poisson arrival rate
    uint32_t command_bytes = 17; // logical op+key+value size
    double start_ms = 0;
    double stop_ms = -1;         // -1 = run horizon
  } workload;

  struct crash_t {
    replica_id replica = 0;
    double at_ms = 0;
  };
  std::vector<crash_t> crashes;

  double until_ms = 10000;
  uint64_t seed = 1;
  std::string coin_seed_hex;  // 64 hex chars; fixed default when empty
  int trace_level = 0;  // 0 off, 1 consensus events, 2 + per-message events

  std::string name = "run";
};

extern const char* const kDefaultCoinSeedHex;

sim_config parse_config(const std::string& json_text);
sim_config load_config_file(const std::string& path);
std::string config_to_json(const sim_config& c);

// Resolved n-by-n one-way delay matrix for the configured preset.
std::vector<std::vector<double>> build_delay_matrix(const sim_config& c);

const char* mode_name(sim_config::run_mode m);

}  // namespace racs
