#include "racs/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <ostream>
#include <thread>

#include "racs/scenario.hpp"
#include "racs/stats.hpp"

namespace racs {

namespace {

sweep_row run_one(const sim_config& base, uint64_t seed, size_t cfg_index) {
  sweep_row row;
  row.config = base.name.empty() ? "cfg" + std::to_string(cfg_index) : base.name;
  row.seed = seed;
  try {
    sim_config c = base;
    c.seed = seed;
    run_result r = run_scenario(c, nullptr);
    row.throughput = r.throughput_cps;
    row.p50 = r.p50_ms;
    row.p99 = r.p99_ms;
    row.async_commit_fraction = r.async_commit_fraction;
    row.msg_count = r.net_stats.messages;
    row.commands = r.commands_committed;
    row.blocks = r.blocks_committed;
    row.async_phases = r.async_phases;
    row.view_count = r.view_count;
    row.safe = !r.violation.has_value();
    row.stop = r.stop == sim::stop_reason::horizon ? "horizon" : "drained";
    if (r.violation) row.stop += " " + r.violation->kind;
  } catch (const std::exception& e) {
    row.stop = std::string("error: ") + e.what();
  }
  return row;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

std::vector<sweep_row> run_sweep(const std::vector<sim_config>& cfgs,
                                 const std::vector<uint64_t>& seeds,
                                 unsigned jobs) {
  size_t total = cfgs.size() * seeds.size();
  std::vector<sweep_row> rows(total);
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= total) return;
      rows[i] = run_one(cfgs[i / seeds.size()], seeds[i % seeds.size()],
                        i / seeds.size());
    }
  };
  if (jobs <= 1 || total <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    unsigned k = std::min<size_t>(jobs, total);
    pool.reserve(k);
    for (unsigned t = 0; t < k; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<sweep_row>& rows) {
  out << "config,seed,throughput,p50,p99,asyncCommitFraction,msgCount,"
         "commands,blocks,asyncPhases,viewCount,safe,stop\n";
  for (const auto& r : rows) {
    out << r.config << "," << r.seed << "," << fmt(r.throughput) << ","
        << fmt(r.p50) << "," << fmt(r.p99) << ","
        << fmt(r.async_commit_fraction) << "," << r.msg_count << ","
        << r.commands << "," << r.blocks << "," << r.async_phases << ","
        << r.view_count << "," << (r.safe ? "true" : "false") << "," << r.stop
        << "\n";
  }

  // Aggregates per config, first-appearance order, clean runs only.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const sweep_row*>> groups;
  for (const auto& r : rows) {
    auto [it, fresh] = groups.try_emplace(r.config);
    if (fresh) order.push_back(r.config);
    if (r.safe && r.stop.rfind("error", 0) != 0) it->second.push_back(&r);
  }
  for (const auto& name : order) {
    const auto& g = groups[name];
    if (g.empty()) continue;
    auto col = [&](double (*get)(const sweep_row&)) {
      std::vector<double> xs;
      xs.reserve(g.size());
      for (const sweep_row* r : g) xs.push_back(get(*r));
      return xs;
    };
    auto tputs = col([](const sweep_row& r) { return r.throughput; });
    auto p50s = col([](const sweep_row& r) { return r.p50; });
    auto p99s = col([](const sweep_row& r) { return r.p99; });
    auto fracs = col([](const sweep_row& r) { return r.async_commit_fraction; });
    auto msgs = col([](const sweep_row& r) { return double(r.msg_count); });
    out << name << "/mean,," << fmt(mean_of(tputs)) << "," << fmt(mean_of(p50s))
        << "," << fmt(mean_of(p99s)) << "," << fmt(mean_of(fracs)) << ","
        << fmt(mean_of(msgs)) << ",,,,,,\n";
    out << name << "/stddev,," << fmt(stddev_of(tputs)) << ","
        << fmt(stddev_of(p50s)) << "," << fmt(stddev_of(p99s)) << ","
        << fmt(stddev_of(fracs)) << "," << fmt(stddev_of(msgs)) << ",,,,,,\n";
  }
}

}  // namespace racs
