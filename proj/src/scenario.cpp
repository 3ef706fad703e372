#include "racs/scenario.hpp"

#include <algorithm>
#include <memory>
#include <utility>

#include "json.hpp"
#include "racs/coin.hpp"
#include "racs/replica.hpp"
#include "racs/stats.hpp"
#include "racs/workload.hpp"

namespace racs {

namespace {

// Open-loop client: pre-schedules one arrival at a time so the event queue
// interleaves arrivals with deliveries deterministically. A crashed front
// end makes the client retry the next replica in the ring.
struct client_driver {
  workload_gen gen;
  std::vector<std::unique_ptr<replica_node>>& nodes;
  metrics& met;
  trace_writer& tr;
  uint32_t n;

  void pump(sim::net& net) {
    auto a = gen.next();
    if (!a) return;
    net.schedule_call(a->at_ms, [this, arr = *a](sim::net& nn) mutable {
      deliver(nn, std::move(arr));
    });
  }

  void deliver(sim::net& net, workload_gen::arrival a) {
    replica_id to = a.to;
    for (uint32_t k = 0; k < n && net.crashed(to); ++k) to = (to + 1) % n;
    if (!net.crashed(to)) {
      met.on_arrival(id_of(a.cmd), net.now());
      if (tr.want(2))
        tr.event(2, net.now(), to, "arrival").num("seq", a.cmd.seq);
      nodes[to]->on_client_commands({std::move(a.cmd)}, net.now());
    }
    pump(net);
  }
};

}  // namespace

run_result run_scenario(const sim_config& cfg, std::ostream* trace_out) {
  sim::net_params np;
  np.n = cfg.n;
  np.base_delay_ms = build_delay_matrix(cfg);
  np.jitter_ms = cfg.jitter_ms;
  np.egress_cap_bytes_per_ms = cfg.egress_cap_bytes_per_ms;
  np.seed = cfg.seed;
  np.adversary.enabled = cfg.adversary.enabled;
  np.adversary.extra_ms = cfg.adversary.extra_ms;
  np.adversary.epoch_ms = cfg.adversary.epoch_ms;
  np.adversary.max_targets = cfg.adversary.max_targets;
  np.adversary.seed = cfg.seed;
  if (cfg.adversary.kind == sim_config::adversary_t::target_leader) {
    np.adversary.static_target = true;
    np.adversary.fixed_target = 0;
  }
  sim::net net(np);

  metrics met;
  trace_writer tr(trace_out, cfg.trace_level);
  common_coin coin = common_coin::from_hex(cfg.coin_seed_hex, cfg.n);
  coin_fn cf = [coin](view_t v) { return coin.flip(v); };

  std::vector<std::unique_ptr<replica_node>> nodes;
  nodes.reserve(cfg.n);
  for (uint32_t i = 0; i < cfg.n; ++i) {
    nodes.push_back(std::make_unique<replica_node>(i, cfg, net, met, tr, cf));
    net.attach(i, nodes.back().get());
  }

  net.on_epoch = [&tr](double t, const std::vector<replica_id>& targets) {
    if (!tr.want(2)) return;
    std::string list;
    for (replica_id r : targets) {
      if (!list.empty()) list += ",";
      list += std::to_string(r);
    }
    tr.event(2, t, 0, "epoch").str("targets", list);
  };

  for (const auto& cr : cfg.crashes) {
    net.schedule_crash(cr.replica, cr.at_ms);
    net.schedule_call(cr.at_ms, [&tr, cr](sim::net& nn) {
      tr.event(1, nn.now(), cr.replica, "crash");
    });
  }

  client_driver drv{workload_gen(cfg.workload, cfg.n, cfg.seed, cfg.until_ms),
                    nodes, met, tr, cfg.n};
  drv.pump(net);

  sim::stop_reason stop = net.run(cfg.until_ms);

  run_result r;
  r.cfg = cfg;
  r.stop = stop;
  r.duration_ms = cfg.until_ms;
  if (stop == sim::stop_reason::drained) {
    r.drained_at = net.now();
    for (uint32_t i = 0; i < cfg.n; ++i) {
      r.stall_dump.push_back("replica " + std::to_string(i) +
                             (net.crashed(i) ? " (crashed): " : ": ") +
                             nodes[i]->describe());
    }
  }
  for (uint32_t i = 0; i < cfg.n; ++i) {
    r.chains.push_back(nodes[i]->exec().chain());
    r.final_digests.push_back(nodes[i]->exec().kv_digest());
    r.crashed.push_back(net.crashed(i));
  }
  r.violation = check_chains(r.chains);
  r.net_stats = net.stats();
  r.met = std::move(met);

  uint64_t best = 0;
  for (uint32_t i = 0; i < cfg.n; ++i)
    if (!r.crashed[i]) best = std::max<uint64_t>(best, r.chains[i].size());
  r.blocks_committed = best;
  r.commands_committed = r.met.committed.size();
  r.throughput_cps =
      cfg.until_ms > 0 ? r.commands_committed * 1000.0 / cfg.until_ms : 0.0;
  r.p50_ms = percentile(r.met.latency_ms, 0.50);
  r.p99_ms = percentile(r.met.latency_ms, 0.99);
  r.mean_latency_ms = mean_of(r.met.latency_ms);
  r.async_phases = r.met.async_views.size();
  uint64_t exits = r.met.async_exits_committed + r.met.async_exits_adopted;
  r.async_commit_fraction =
      exits ? static_cast<double>(r.met.async_exits_committed) / exits : 0.0;
  r.view_count = r.met.max_view + 1;
  r.views_per_commit =
      best ? static_cast<double>(r.view_count) / static_cast<double>(best) : 0.0;
  return r;
}

std::string metrics_json(const run_result& r) {
  nlohmann::json j;
  j["name"] = r.cfg.name;
  j["mode"] = mode_name(r.cfg.mode);
  j["n"] = r.cfg.n;
  j["f"] = r.cfg.f;
  j["asyncEnabled"] = r.cfg.async_enabled;
  j["seed"] = r.cfg.seed;
  j["untilMs"] = r.cfg.until_ms;
  j["stop"] = r.stop == sim::stop_reason::horizon ? "horizon" : "drained";
  j["safe"] = !r.violation.has_value();
  if (r.violation)
    j["violation"] = r.violation->kind + " at round " +
                     std::to_string(r.violation->round) + ": " +
                     r.violation->detail;
  j["blocksCommitted"] = r.blocks_committed;
  j["commandsSubmitted"] = r.met.arrival_ms.size();
  j["commandsCommitted"] = r.commands_committed;
  j["throughputCps"] = r.throughput_cps;
  j["latencyP50Ms"] = r.p50_ms;
  j["latencyP99Ms"] = r.p99_ms;
  j["latencyMeanMs"] = r.mean_latency_ms;
  j["asyncPhaseCount"] = r.async_phases;
  j["asyncCommitFraction"] = r.async_commit_fraction;
  j["asyncExitsCommitted"] = r.met.async_exits_committed;
  j["asyncExitsAdopted"] = r.met.async_exits_adopted;
  uint64_t peak = 0;
  for (const auto& [v, c] : r.met.async_msgs) peak = std::max(peak, c);
  j["asyncMsgsMaxPerPhase"] = peak;
  j["viewCount"] = r.view_count;
  j["viewsPerCommittedBlock"] = r.views_per_commit;
  j["timeoutsFired"] = r.met.timeouts_fired;
  j["proposals"] = r.met.proposals;
  j["messagesTotal"] = r.net_stats.messages;
  j["bytesTotal"] = r.net_stats.bytes;
  j["droppedToCrashed"] = r.net_stats.dropped_crashed;
  j["perReplicaEgressBytes"] = r.net_stats.egress_bytes;
  nlohmann::json bk = nlohmann::json::object();
  for (const auto& [k, s] : r.met.by_kind)
    bk[k] = {{"count", s.count}, {"bytes", s.bytes}};
  j["byKind"] = bk;
  j["digests"] = r.final_digests;
  j["crashed"] = r.crashed;
  return j.dump(2) + "\n";
}

}  // namespace racs
