#include "racs/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace racs {

using nlohmann::json;

const char* const kDefaultCoinSeedHex =
    "3c1f9e2b7a804d5566778899aabbccddeeff00112233445566778899aabbccdd";

namespace {

[[noreturn]] void fail(const std::string& what) { throw config_error(what); }

void reject_unknown(const json& j, const char* where,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(std::string(where) + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      fail(std::string(where) + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
T number(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) fail(std::string(key) + ": expected a number");
  return v.get<T>();
}

bool boolean(const json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) fail(std::string(key) + ": expected a boolean");
  return v.get<bool>();
}

std::string text(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) fail(std::string(key) + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

sim_config parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(j, "config",
                 {"n", "f", "mode", "asyncEnabled", "timeoutMs", "batchSize",
                  "batchTimeMs", "pipelineDepth", "fetchRetryMs", "delay",
                  "jitterMs", "egressCapBytesPerMs", "adversary", "workload",
                  "crashes", "untilMs", "seed", "coinSeedHex", "traceLevel",
                  "name"});

  sim_config c;
  c.n = number<uint32_t>(j, "n", 4);
  if (c.n < 1 || c.n > 256) fail("n: out of range [1, 256]");
  c.f = number<uint32_t>(j, "f", (c.n - 1) / 2);
  if (c.n < 2 * c.f + 1) fail("need n >= 2f+1");

  std::string mode = text(j, "mode", "pipelined");
  if (mode == "pipelined") {
    c.mode = sim_config::run_mode::pipelined;
  } else if (mode == "sadl") {
    c.mode = sim_config::run_mode::sadl;
  } else {
    fail("mode: expected 'pipelined' or 'sadl'");
  }
  c.async_enabled = boolean(j, "asyncEnabled", true);

  c.timeout_ms = number<double>(j, "timeoutMs", 150);
  if (c.timeout_ms <= 0) fail("timeoutMs: must be positive");
  c.batch_size = number<uint32_t>(j, "batchSize", 100);
  if (c.batch_size == 0) fail("batchSize: must be positive");
  c.batch_time_ms = number<double>(j, "batchTimeMs", 50);
  if (c.batch_time_ms < 0) fail("batchTimeMs: must be nonnegative");
  c.pipeline_depth = number<uint32_t>(j, "pipelineDepth", 8);
  if (c.pipeline_depth == 0) fail("pipelineDepth: must be positive");
  c.fetch_retry_ms = number<double>(j, "fetchRetryMs", 100);
  if (c.fetch_retry_ms <= 0) fail("fetchRetryMs: must be positive");

  if (j.contains("delay")) {
    const json& d = j.at("delay");
    reject_unknown(d, "delay", {"preset", "fixedMs", "matrix"});
    c.delay_preset = text(d, "preset", "fixed");
    c.fixed_delay_ms = number<double>(d, "fixedMs", 50);
    if (c.fixed_delay_ms < 0) fail("delay.fixedMs: must be nonnegative");
    if (d.contains("matrix")) {
      const json& m = d.at("matrix");
      if (!m.is_array()) fail("delay.matrix: expected an array of arrays");
      for (const auto& row : m) {
        if (!row.is_array()) fail("delay.matrix: expected an array of arrays");
        std::vector<double> out;
        for (const auto& v : row) {
          if (!v.is_number()) fail("delay.matrix: entries must be numbers");
          out.push_back(v.get<double>());
        }
        c.delay_matrix.push_back(std::move(out));
      }
    }
    if (c.delay_preset != "fixed" && c.delay_preset != "lan" &&
        c.delay_preset != "wan5" && c.delay_preset != "matrix")
      fail("delay.preset: expected fixed, lan, wan5 or matrix");
    if (c.delay_preset == "matrix") {
      if (c.delay_matrix.size() != c.n) fail("delay.matrix: need n rows");
      for (const auto& row : c.delay_matrix)
        if (row.size() != c.n) fail("delay.matrix: need n columns per row");
    }
  }
  c.jitter_ms = number<double>(j, "jitterMs", 0);
  if (c.jitter_ms < 0) fail("jitterMs: must be nonnegative");
  c.egress_cap_bytes_per_ms = number<double>(j, "egressCapBytesPerMs", 0);
  if (c.egress_cap_bytes_per_ms < 0)
    fail("egressCapBytesPerMs: must be nonnegative");

  if (j.contains("adversary")) {
    const json& a = j.at("adversary");
    reject_unknown(a, "adversary", {"kind", "extraMs", "epochMs", "maxTargets"});
    std::string kind = text(a, "kind", "delayAttack");
    c.adversary.extra_ms = number<double>(a, "extraMs", 0);
    if (c.adversary.extra_ms < 0) fail("adversary.extraMs: must be nonnegative");
    if (kind == "delayAttack") {
      c.adversary.kind = sim_config::adversary_t::delay_attack;
      c.adversary.enabled = true;
      c.adversary.epoch_ms = number<double>(a, "epochMs", 1);
      c.adversary.max_targets = number<uint32_t>(a, "maxTargets", 0);
      if (c.adversary.epoch_ms <= 0) fail("adversary.epochMs: must be positive");
      if (c.adversary.max_targets > c.n / 2)
        fail("adversary.maxTargets: the attack targets a minority, at most n/2");
      if (c.adversary.max_targets == 0) c.adversary.enabled = false;
    } else if (kind == "targetLeader") {
      // Content-oblivious: cannot track leadership, so it pins the initial
      // leader (replica 0) for the whole run.
      c.adversary.kind = sim_config::adversary_t::target_leader;
      c.adversary.enabled = true;
      c.adversary.max_targets = 1;
    } else {
      fail("adversary.kind: expected delayAttack or targetLeader");
    }
  }

  if (j.contains("workload")) {
    const json& w = j.at("workload");
    reject_unknown(w, "workload",
                   {"ratePerSec", "commandBytes", "startMs", "stopMs"});
    c.workload.rate_cps = number<double>(w, "ratePerSec", 1000);
    c.workload.command_bytes = number<uint32_t>(w, "commandBytes", 17);
    c.workload.start_ms = number<double>(w, "startMs", 0);
    c.workload.stop_ms = number<double>(w, "stopMs", -1);
    if (c.workload.rate_cps < 0) fail("workload.ratePerSec: must be nonnegative");
    if (c.workload.command_bytes < 10)
      fail("workload.commandBytes: need at least 10 (op + 8-byte key + value)");
  }

  if (j.contains("crashes")) {
    const json& arr = j.at("crashes");
    if (!arr.is_array()) fail("crashes: expected an array");
    for (const auto& e : arr) {
      reject_unknown(e, "crashes[]", {"replica", "atMs"});
      sim_config::crash_t cr;
      cr.replica = number<uint32_t>(e, "replica", 0);
      cr.at_ms = number<double>(e, "atMs", 0);
      if (cr.replica >= c.n) fail("crashes[].replica: out of range");
      if (cr.at_ms < 0) fail("crashes[].atMs: must be nonnegative");
      c.crashes.push_back(cr);
    }
    if (c.crashes.size() > c.f)
      fail("crashes: more crash faults than the configured f");
  }

  c.until_ms = number<double>(j, "untilMs", 10000);
  if (c.until_ms <= 0) fail("untilMs: must be positive");
  c.seed = number<uint64_t>(j, "seed", 1);
  c.coin_seed_hex = text(j, "coinSeedHex", kDefaultCoinSeedHex);
  if (c.coin_seed_hex.size() != 64)
    fail("coinSeedHex: expected 64 hex characters");
  c.trace_level = number<int>(j, "traceLevel", 0);
  if (c.trace_level < 0 || c.trace_level > 2) fail("traceLevel: 0, 1 or 2");
  c.name = text(j, "name", "run");
  return c;
}

sim_config load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const sim_config& c) {
  json j;
  j["n"] = c.n;
  j["f"] = c.f;
  j["mode"] = mode_name(c.mode);
  j["asyncEnabled"] = c.async_enabled;
  j["timeoutMs"] = c.timeout_ms;
  j["batchSize"] = c.batch_size;
  j["batchTimeMs"] = c.batch_time_ms;
  j["pipelineDepth"] = c.pipeline_depth;
  j["fetchRetryMs"] = c.fetch_retry_ms;
  j["delay"] = {{"preset", c.delay_preset}, {"fixedMs", c.fixed_delay_ms}};
  if (c.delay_preset == "matrix") j["delay"]["matrix"] = c.delay_matrix;
  j["jitterMs"] = c.jitter_ms;
  j["egressCapBytesPerMs"] = c.egress_cap_bytes_per_ms;
  if (c.adversary.enabled) {
    if (c.adversary.kind == sim_config::adversary_t::target_leader) {
      j["adversary"] = {{"kind", "targetLeader"},
                        {"extraMs", c.adversary.extra_ms}};
    } else {
      j["adversary"] = {{"kind", "delayAttack"},
                        {"extraMs", c.adversary.extra_ms},
                        {"epochMs", c.adversary.epoch_ms},
                        {"maxTargets", c.adversary.max_targets}};
    }
  }
  j["workload"] = {{"ratePerSec", c.workload.rate_cps},
                   {"commandBytes", c.workload.command_bytes},
                   {"startMs", c.workload.start_ms},
                   {"stopMs", c.workload.stop_ms}};
  if (!c.crashes.empty()) {
    j["crashes"] = json::array();
    for (const auto& cr : c.crashes)
      j["crashes"].push_back({{"replica", cr.replica}, {"atMs", cr.at_ms}});
  }
  j["untilMs"] = c.until_ms;
  j["seed"] = c.seed;
  j["coinSeedHex"] = c.coin_seed_hex;
  j["traceLevel"] = c.trace_level;
  j["name"] = c.name;
  return j.dump(2);
}

std::vector<std::vector<double>> build_delay_matrix(const sim_config& c) {
  uint32_t n = c.n;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0));
  if (c.delay_preset == "matrix") return c.delay_matrix;
  if (c.delay_preset == "fixed") {
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < n; ++j)
        if (i != j) m[i][j] = c.fixed_delay_ms;
    return m;
  }
  if (c.delay_preset == "lan") {
    for (uint32_t i = 0; i < n; ++i)
      for (uint32_t j = 0; j < n; ++j)
        if (i != j) m[i][j] = 0.2;
    return m;
  }
  // wan5: five regions with asymmetric distances flattened to a symmetric
  // one-way matrix; replicas map to regions round-robin, co-located pairs
  // see a LAN-like delay.
  static const double wan[5][5] = {
      {0.5, 35, 85, 75, 95},
      {35, 0.5, 110, 50, 120},
      {85, 110, 0.5, 140, 100},
      {75, 50, 140, 0.5, 90},
      {95, 120, 100, 90, 0.5},
  };
  for (uint32_t i = 0; i < n; ++i)
    for (uint32_t j = 0; j < n; ++j)
      if (i != j) m[i][j] = wan[i % 5][j % 5];
  return m;
}

const char* mode_name(sim_config::run_mode m) {
  return m == sim_config::run_mode::pipelined ? "pipelined" : "sadl";
}

}  // namespace racs
