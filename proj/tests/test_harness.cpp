#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "racs/block.hpp"
#include "racs/config.hpp"
#include "racs/exec.hpp"
#include "racs/metrics.hpp"
#include "racs/safety.hpp"
#include "racs/scenario.hpp"
#include "racs/stats.hpp"
#include "racs/sweep.hpp"
#include "racs/workload.hpp"

using namespace racs;

namespace {

command put(uint32_t client, uint64_t seq, std::string key, std::string value) {
  command c;
  c.client = client;
  c.seq = seq;
  c.op = cmd_op::put;
  c.key = std::move(key);
  c.value = std::move(value);
  return c;
}

// Extends `prefix` with distinct single-command blocks through `upto`; the
// salt steers the payload so forks get different ids at equal rounds.
std::vector<block> extend_blocks(std::vector<block> prefix, round_t upto,
                                 uint32_t salt) {
  block_id parent = prefix.empty() ? genesis().id : prefix.back().id;
  for (round_t r = prefix.size() + 1; r <= upto; ++r) {
    block b = make_block(
        command_batch{put(salt, r, "k" + std::to_string(r), "v")}, 1, r,
        parent, kLevelSync, 0);
    parent = b.id;
    prefix.push_back(b);
  }
  return prefix;
}

std::vector<chain_entry> executed_chain(const std::vector<block>& blocks) {
  exec_engine e(exec_engine::mode::direct, 3);
  for (size_t i = 0; i < blocks.size(); ++i)
    e.on_commit(blocks[i], 10.0 * static_cast<double>(i + 1), nullptr);
  return e.chain();
}

const char* kTinyPipelined = R"({
  "name": "tiny-pipelined", "n": 3, "mode": "pipelined",
  "delay": {"preset": "fixed", "fixedMs": 10},
  "workload": {"ratePerSec": 200, "commandBytes": 17},
  "untilMs": 400
})";

const char* kTinySadl = R"({
  "name": "tiny-sadl", "n": 3, "mode": "sadl", "batchTimeMs": 20,
  "delay": {"preset": "fixed", "fixedMs": 10},
  "workload": {"ratePerSec": 200, "commandBytes": 17},
  "untilMs": 400
})";

}  // namespace

TEST_CASE("config defaults fill in around a minimal file") {
  sim_config c = parse_config(R"({"n": 5})");
  CHECK(c.n == 5);
  CHECK(c.f == 2);  // floor((n-1)/2) when absent
  CHECK(c.mode == sim_config::run_mode::pipelined);
  CHECK(c.async_enabled);
  CHECK(c.timeout_ms == 150);
  CHECK(c.batch_size == 100);
  CHECK(c.delay_preset == "fixed");
  CHECK(c.until_ms == 10000);
  CHECK(c.seed == 1);
  CHECK(!c.adversary.enabled);
  CHECK(c.crashes.empty());
  CHECK(std::string(c.coin_seed_hex) == kDefaultCoinSeedHex);
}

TEST_CASE("unknown or malformed config keys are rejected") {
  CHECK_THROWS_AS(parse_config(R"({"n": 5, "bogus": 1})"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"adversary": {"kindd": "delayAttack"}})"),
                  config_error);
  CHECK_THROWS_AS(parse_config(R"({"workload": {"rate": 10}})"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"crashes": [{"who": 1}]})"), config_error);
  CHECK_THROWS_AS(parse_config("not json"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"n": "five"})"), config_error);
}

TEST_CASE("config validation enforces the protocol arithmetic") {
  CHECK_THROWS_AS(parse_config(R"({"n": 4, "f": 2})"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"mode": "baseline"})"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"n": 0})"), config_error);
  CHECK_THROWS_AS(parse_config(R"({"timeoutMs": 0})"), config_error);
  // The attack may slow at most a minority.
  CHECK_THROWS_AS(
      parse_config(
          R"({"n": 5, "adversary": {"kind": "delayAttack", "maxTargets": 3}})"),
      config_error);
  // More scheduled crashes than tolerated faults cannot stay live.
  CHECK_THROWS_AS(
      parse_config(
          R"({"n": 3, "crashes": [{"replica": 0}, {"replica": 1}]})"),
      config_error);
  CHECK_THROWS_AS(parse_config(R"({"coinSeedHex": "abcd"})"), config_error);
  CHECK_THROWS_AS(
      parse_config(R"({"n": 3, "delay": {"preset": "matrix"}})"),
      config_error);
}

TEST_CASE("config json roundtrips losslessly") {
  sim_config c = parse_config(R"({
    "n": 5, "f": 2, "mode": "sadl", "asyncEnabled": false,
    "timeoutMs": 250, "batchSize": 64, "batchTimeMs": 20,
    "delay": {"preset": "fixed", "fixedMs": 35}, "jitterMs": 3,
    "egressCapBytesPerMs": 800,
    "adversary": {"kind": "delayAttack", "extraMs": 500, "epochMs": 500,
                  "maxTargets": 2},
    "workload": {"ratePerSec": 5000, "commandBytes": 73},
    "crashes": [{"replica": 4, "atMs": 1000}],
    "untilMs": 20000, "seed": 77, "name": "roundtrip"
  })");
  sim_config d = parse_config(config_to_json(c));
  CHECK(d.n == c.n);
  CHECK(d.f == c.f);
  CHECK(d.mode == c.mode);
  CHECK(d.async_enabled == c.async_enabled);
  CHECK(d.timeout_ms == c.timeout_ms);
  CHECK(d.batch_size == c.batch_size);
  CHECK(d.fixed_delay_ms == c.fixed_delay_ms);
  CHECK(d.jitter_ms == c.jitter_ms);
  CHECK(d.egress_cap_bytes_per_ms == c.egress_cap_bytes_per_ms);
  CHECK(d.adversary.enabled == c.adversary.enabled);
  CHECK(d.adversary.extra_ms == c.adversary.extra_ms);
  CHECK(d.adversary.max_targets == c.adversary.max_targets);
  CHECK(d.workload.rate_cps == c.workload.rate_cps);
  CHECK(d.workload.command_bytes == c.workload.command_bytes);
  REQUIRE(d.crashes.size() == 1);
  CHECK(d.crashes[0].replica == 4);
  CHECK(d.until_ms == c.until_ms);
  CHECK(d.seed == c.seed);
  CHECK(d.name == c.name);
}

TEST_CASE("delay presets build complete matrices") {
  sim_config c = parse_config(
      R"({"n": 3, "delay": {"preset": "fixed", "fixedMs": 25}})");
  auto m = build_delay_matrix(c);
  REQUIRE(m.size() == 3);
  for (uint32_t i = 0; i < 3; ++i)
    for (uint32_t j = 0; j < 3; ++j)
      CHECK(m[i][j] == (i == j ? 0.0 : 25.0));

  sim_config lan = parse_config(R"({"n": 4, "delay": {"preset": "lan"}})");
  auto lm = build_delay_matrix(lan);
  CHECK(lm[0][1] < 1.0);
  CHECK(lm[0][1] > 0.0);

  // Seven replicas wrap the five regions round-robin: 0 and 5 share one.
  sim_config wan = parse_config(R"({"n": 7, "delay": {"preset": "wan5"}})");
  auto wm = build_delay_matrix(wan);
  CHECK(wm[0][2] == wm[2][0]);
  CHECK(wm[0][5] == 0.5);  // co-located replicas see a LAN-like delay
  CHECK(wm[0][5] < wm[0][2]);
  CHECK(wm[1][2] > 0.0);
  CHECK(wm[0][0] == 0.0);

  sim_config mx = parse_config(
      R"({"n": 2, "delay": {"preset": "matrix",
           "matrix": [[0, 7], [9, 0]]}})");
  auto mm = build_delay_matrix(mx);
  CHECK(mm[0][1] == 7.0);
  CHECK(mm[1][0] == 9.0);
}

TEST_CASE("agreeing chains pass the cross-replica check") {
  auto blocks = extend_blocks({}, 8, 1);
  std::vector<std::vector<chain_entry>> chains;
  chains.push_back(executed_chain(blocks));
  chains.push_back(executed_chain(blocks));
  // A trailing replica holding a prefix is consistent, not divergent.
  auto short_chain = executed_chain(extend_blocks({}, 5, 1));
  chains.push_back(short_chain);
  CHECK(!check_chains(chains).has_value());
}

TEST_CASE("a forged divergent round is pinpointed") {
  auto honest = extend_blocks({}, 8, 1);
  auto prefix = std::vector<block>(honest.begin(), honest.begin() + 6);
  auto forked = extend_blocks(prefix, 8, 99);

  std::vector<std::vector<chain_entry>> chains;
  chains.push_back(executed_chain(honest));
  chains.push_back(executed_chain(honest));
  chains.push_back(executed_chain(forked));

  auto v = check_chains(chains);
  REQUIRE(v.has_value());
  CHECK(v->kind == "divergence");
  CHECK(v->round == 7);
}

TEST_CASE("structural breaks in a single chain are caught") {
  auto chain = executed_chain(extend_blocks({}, 5, 1));

  auto skipped = chain;
  skipped.erase(skipped.begin() + 2);  // rounds jump 2 -> 4
  auto v1 = check_chains({skipped});
  REQUIRE(v1.has_value());
  CHECK(v1->kind == "structure");
  CHECK(v1->round == 3);

  auto unlinked = chain;
  unlinked[3].parent = block_id{};
  auto v2 = check_chains({unlinked});
  REQUIRE(v2.has_value());
  CHECK(v2->kind == "structure");
  CHECK(v2->round == 4);

  auto view_drop = chain;
  view_drop[4].view = 0;  // views are nondecreasing along a chain
  auto v3 = check_chains({view_drop});
  REQUIRE(v3.has_value());
  CHECK(v3->kind == "structure");
  CHECK(v3->round == 5);

  // One consistent chain alone is vacuously safe.
  CHECK(!check_chains({chain}).has_value());
  CHECK(!check_chains({}).has_value());
}

TEST_CASE("chain dumps survive the ndjson roundtrip") {
  std::vector<std::vector<chain_entry>> chains;
  chains.push_back(executed_chain(extend_blocks({}, 4, 1)));
  chains.push_back(executed_chain(extend_blocks({}, 2, 1)));

  std::ostringstream out;
  write_chains_ndjson(out, chains);
  std::istringstream in(out.str());
  auto back = read_chains_ndjson(in);

  REQUIRE(back.size() == chains.size());
  for (size_t i = 0; i < chains.size(); ++i) {
    REQUIRE(back[i].size() == chains[i].size());
    for (size_t k = 0; k < chains[i].size(); ++k) {
      CHECK(back[i][k].round == chains[i][k].round);
      CHECK(back[i][k].view == chains[i][k].view);
      CHECK(back[i][k].id == chains[i][k].id);
      CHECK(back[i][k].parent == chains[i][k].parent);
      CHECK(back[i][k].payload_hash == chains[i][k].payload_hash);
      CHECK(back[i][k].kv_digest == chains[i][k].kv_digest);
      CHECK(back[i][k].commit_time == chains[i][k].commit_time);
    }
  }
  CHECK(!check_chains(back).has_value());

  std::istringstream bad("{\"r\": 0, \"round\": \"x\"}\n");
  CHECK_THROWS_AS(read_chains_ndjson(bad), config_error);
}

TEST_CASE("open-loop arrivals follow the configured poisson process") {
  sim_config::workload_t w;
  w.rate_cps = 1000;
  w.command_bytes = 17;
  workload_gen gen(w, 3, 42, 10000);

  std::vector<double> times;
  uint64_t i = 0;
  double last = 0;
  while (auto a = gen.next()) {
    CHECK(a->at_ms >= last);
    last = a->at_ms;
    CHECK(a->to == static_cast<replica_id>(i % 3));
    CHECK(a->cmd.client == a->to);
    CHECK(logical_size(a->cmd) == 17);
    CHECK(a->cmd.op == cmd_op::put);
    times.push_back(a->at_ms);
    ++i;
  }

  // 1000/s over 10 simulated seconds: five sigma around 10000 arrivals.
  double count = static_cast<double>(times.size());
  CHECK(std::abs(count - 10000.0) < 5 * std::sqrt(10000.0));

  // Interval counts must spread evenly: chi-square over 20 bins.
  std::vector<uint64_t> bins(20, 0);
  for (double t : times) bins[static_cast<size_t>(t / 500.0)] += 1;
  CHECK(chi_square_stat(bins) < chi_square_crit(19, kZp999));
}

TEST_CASE("workload streams are a pure function of the seed") {
  sim_config::workload_t w;
  w.rate_cps = 500;
  auto drain = [&](uint64_t seed) {
    workload_gen g(w, 3, seed, 1000);
    std::vector<std::pair<double, command>> out;
    while (auto a = g.next()) out.emplace_back(a->at_ms, a->cmd);
    return out;
  };
  CHECK(drain(7) == drain(7));
  CHECK(drain(7) != drain(8));

  // The stop time bounds the stream even when the horizon is longer.
  w.stop_ms = 100;
  workload_gen g(w, 3, 7, 50000);
  double last = 0;
  while (auto a = g.next()) last = a->at_ms;
  CHECK(last < 100);
}

TEST_CASE("a sweep runs every config and seed and aggregates cleanly") {
  std::vector<sim_config> cfgs = {parse_config(kTinyPipelined),
                                  parse_config(kTinySadl)};
  std::vector<uint64_t> seeds = {1, 2, 3};
  auto rows = run_sweep(cfgs, seeds, 1);

  REQUIRE(rows.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    const sweep_row& r = rows[i];
    CHECK(r.config == (i < 3 ? "tiny-pipelined" : "tiny-sadl"));
    CHECK(r.seed == seeds[i % 3]);
    CHECK(r.safe);
    CHECK(r.stop == "horizon");
    CHECK(r.commands > 0);
    CHECK(r.throughput > 0);
    CHECK(r.p50 <= r.p99);
  }

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  std::vector<std::string> lines;
  std::istringstream in(csv.str());
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  // Header, one row per run, then mean and stddev rows per config.
  REQUIRE(lines.size() == 1 + 6 + 4);
  CHECK(lines[0].rfind("config,seed,throughput", 0) == 0);
  CHECK(lines[7].rfind("tiny-pipelined/mean,", 0) == 0);
  CHECK(lines[8].rfind("tiny-pipelined/stddev,", 0) == 0);
  CHECK(lines[9].rfind("tiny-sadl/mean,", 0) == 0);
  CHECK(lines[10].rfind("tiny-sadl/stddev,", 0) == 0);
}

TEST_CASE("sweep rows are independent of the worker count") {
  std::vector<sim_config> cfgs = {parse_config(kTinyPipelined),
                                  parse_config(kTinySadl)};
  std::vector<uint64_t> seeds = {1, 2};
  auto serial = run_sweep(cfgs, seeds, 1);
  auto parallel = run_sweep(cfgs, seeds, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].config == parallel[i].config);
    CHECK(serial[i].seed == parallel[i].seed);
    CHECK(serial[i].throughput == parallel[i].throughput);
    CHECK(serial[i].msg_count == parallel[i].msg_count);
    CHECK(serial[i].blocks == parallel[i].blocks);
    CHECK(serial[i].stop == parallel[i].stop);
  }
}

TEST_CASE("latency metrics record only the first commit of a command") {
  metrics m;
  m.on_arrival({1, 1}, 10);
  m.on_commit_command({1, 1}, 35);
  m.on_commit_command({1, 1}, 90);  // replay at another replica
  m.on_commit_command({2, 1}, 50);  // never arrived: no latency sample
  REQUIRE(m.latency_ms.size() == 1);
  CHECK(m.latency_ms[0] == 25);
  CHECK(m.committed.size() == 2);

  m.on_send("Propose", 100);
  m.on_send("Propose", 40);
  m.on_send("Vote", 10);
  CHECK(m.kind("Propose").count == 2);
  CHECK(m.kind("Propose").bytes == 140);
  CHECK(m.kind("Vote").count == 1);
  CHECK(m.kind("absent").count == 0);
  CHECK(m.sends == 3);
  CHECK(m.send_bytes == 150);
}

TEST_CASE("percentiles use the nearest rank") {
  std::vector<double> xs;
  for (int i = 100; i >= 1; --i) xs.push_back(i);
  CHECK(percentile(xs, 0.50) == 50);
  CHECK(percentile(xs, 0.99) == 99);
  CHECK(percentile(xs, 1.0) == 100);
  CHECK(percentile({}, 0.5) == 0);
  CHECK(percentile({7}, 0.99) == 7);
}

TEST_CASE("statistical helpers match their pinned constants") {
  // Upper 0.999 chi-square quantiles: 18.467 at df 4, 43.820 at df 19.
  // The cube approximation runs a shade high at low df, which only makes
  // the uniformity gates it feeds marginally more lenient.
  CHECK(chi_square_crit(4, kZp999) == doctest::Approx(18.467).epsilon(0.02));
  CHECK(chi_square_crit(19, kZp999) == doctest::Approx(43.820).epsilon(0.01));

  std::vector<uint64_t> even = {100, 100, 100, 100};
  CHECK(chi_square_stat(even) == 0.0);
  std::vector<uint64_t> skew = {400, 0, 0, 0};
  CHECK(chi_square_stat(skew) == doctest::Approx(1200.0));

  std::vector<double> alternating;
  for (int i = 0; i < 100; ++i) alternating.push_back(i % 2 ? 1.0 : -1.0);
  CHECK(autocorr_lag1(alternating) < -0.9);
  CHECK(autocorr_lag1({3, 3, 3, 3}) == 0.0);

  CHECK(mean_of({1, 2, 3, 4}) == 2.5);
  CHECK(stddev_of({1, 2, 3, 4}) == doctest::Approx(1.2909944));
  CHECK(stddev_of({5}) == 0.0);
}

TEST_CASE("a quiet scenario commits without fallback phases") {
  sim_config cfg = parse_config(R"({
    "name": "quiet", "n": 3, "mode": "pipelined",
    "delay": {"preset": "fixed", "fixedMs": 10},
    "workload": {"ratePerSec": 100},
    "untilMs": 1500, "seed": 3
  })");
  run_result res = run_scenario(cfg);

  CHECK(!res.violation.has_value());
  CHECK(res.stop == sim::stop_reason::horizon);
  CHECK(res.async_phases == 0);  // generous timeout, no contention
  CHECK(res.met.timeouts_fired == 0);
  CHECK(res.blocks_committed > 0);
  CHECK(res.commands_committed > 0);
  CHECK(res.throughput_cps > 0);
  CHECK(res.p50_ms <= res.p99_ms);
  CHECK(res.commands_committed <= res.met.arrival_ms.size());

  // Replicas may trail by in-flight commits at the horizon; state agrees on
  // the prefix every replica has executed.
  size_t common = res.chains[0].size();
  for (const auto& ch : res.chains) common = std::min(common, ch.size());
  REQUIRE(common > 0);
  for (const auto& ch : res.chains)
    CHECK(ch[common - 1].kv_digest == res.chains[0][common - 1].kv_digest);

  nlohmann::json j = nlohmann::json::parse(metrics_json(res));
  for (const char* key :
       {"asyncCommitFraction", "asyncEnabled", "asyncExitsAdopted",
        "asyncExitsCommitted", "asyncMsgsMaxPerPhase", "asyncPhaseCount",
        "blocksCommitted", "byKind", "bytesTotal", "commandsCommitted",
        "commandsSubmitted", "crashed", "digests", "droppedToCrashed", "f",
        "latencyMeanMs", "latencyP50Ms", "latencyP99Ms", "messagesTotal",
        "mode", "n", "name", "perReplicaEgressBytes", "proposals", "safe",
        "seed", "stop", "throughputCps", "timeoutsFired", "untilMs",
        "viewCount", "viewsPerCommittedBlock"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["safe"] == true);
  CHECK(j["stop"] == "horizon");
  CHECK(j["mode"] == "pipelined");
  CHECK(j["n"] == 3);
  CHECK(j["commandsCommitted"] <= j["commandsSubmitted"]);
}
