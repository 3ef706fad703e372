#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "racs/coin.hpp"
#include "racs/config.hpp"
#include "racs/scenario.hpp"
#include "racs/stats.hpp"
#include "racs/sweep.hpp"

namespace {

// Exit codes: 0 ok, 1 bad config or usage, 2 safety/statistical violation,
// 3 stalled run (event queue drained before the horizon).

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<uint64_t> seed, std::optional<double> until,
            std::optional<int> trace_level, std::optional<std::string> name,
            bool quiet) {
  racs::sim_config cfg;
  try {
    cfg = racs::load_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (trace_level) cfg.trace_level = *trace_level;
    if (name) cfg.name = *name;
    if (until) {
      if (*until <= 0) throw racs::config_error("--until must be positive");
      cfg.until_ms = *until;
    }
  } catch (const racs::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  std::filesystem::create_directories(out_dir);
  std::ofstream trace_file;
  std::ostream* trace = nullptr;
  if (cfg.trace_level > 0) {
    trace_file.open(out_dir + "/trace.ndjson");
    trace = &trace_file;
  }

  racs::run_result res = racs::run_scenario(cfg, trace);

  {
    std::ofstream mf(out_dir + "/metrics.json");
    mf << racs::metrics_json(res);
  }
  {
    std::ofstream cf(out_dir + "/chains.ndjson");
    racs::write_chains_ndjson(cf, res.chains);
  }

  if (!quiet) {
    std::cout << cfg.name << ": mode=" << racs::mode_name(cfg.mode)
              << " n=" << cfg.n << " seed=" << cfg.seed
              << " blocks=" << res.blocks_committed
              << " commands=" << res.commands_committed
              << " throughput=" << res.throughput_cps
              << "/s p50=" << res.p50_ms << "ms p99=" << res.p99_ms
              << "ms asyncPhases=" << res.async_phases
              << " views=" << res.view_count << "\n";
    std::cout << "outputs in " << out_dir << "/\n";
  }

  if (res.violation) {
    std::cerr << "SAFETY VIOLATION (" << res.violation->kind << ", round "
              << res.violation->round << "): " << res.violation->detail << "\n";
    return 2;
  }
  if (res.stop == racs::sim::stop_reason::drained) {
    std::cerr << "stalled: event queue drained at " << res.drained_at
              << "ms with the horizon at " << cfg.until_ms << "ms\n";
    for (const auto& line : res.stall_dump) std::cerr << "  " << line << "\n";
    return 3;
  }
  if (!quiet) std::cout << "SAFE\n";
  return 0;
}

int cmd_sweep(const std::vector<std::string>& config_paths, unsigned seed_count,
              uint64_t seed_base, unsigned jobs, const std::string& out_csv) {
  std::vector<racs::sim_config> cfgs;
  try {
    for (const auto& p : config_paths) {
      racs::sim_config c = racs::load_config_file(p);
      if (c.name == "run") c.name = std::filesystem::path(p).stem().string();
      cfgs.push_back(std::move(c));
    }
  } catch (const racs::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }
  if (seed_count == 0) {
    std::cerr << "config error: --seeds must be at least 1\n";
    return 1;
  }
  std::vector<uint64_t> seeds;
  for (unsigned i = 0; i < seed_count; ++i) seeds.push_back(seed_base + i);

  auto rows = racs::run_sweep(cfgs, seeds, jobs);

  if (out_csv.empty()) {
    racs::write_sweep_csv(std::cout, rows);
  } else {
    std::ofstream out(out_csv);
    if (!out) {
      std::cerr << "cannot open " << out_csv << " for writing\n";
      return 1;
    }
    racs::write_sweep_csv(out, rows);
    std::cout << "wrote " << rows.size() << " runs to " << out_csv << "\n";
  }

  int rc = 0;
  for (const auto& r : rows) {
    if (!r.safe) {
      std::cerr << r.config << " seed " << r.seed << ": unsafe (" << r.stop
                << ")\n";
      rc = 2;
    } else if (r.stop.rfind("error", 0) == 0) {
      std::cerr << r.config << " seed " << r.seed << ": " << r.stop << "\n";
      if (rc == 0) rc = 3;
    }
  }
  return rc;
}

int cmd_check(const std::string& chains_path) {
  std::ifstream in(chains_path);
  if (!in) {
    std::cerr << "cannot open " << chains_path << "\n";
    return 1;
  }
  std::vector<std::vector<racs::chain_entry>> chains;
  try {
    chains = racs::read_chains_ndjson(in);
  } catch (const racs::config_error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  }
  size_t rounds = 0;
  for (const auto& c : chains) rounds = std::max(rounds, c.size());
  if (chains.size() < 2)
    std::cerr << "warning: " << chains.size()
              << " chain(s); cross-replica checks are vacuous\n";
  if (auto v = racs::check_chains(chains)) {
    std::cout << "VIOLATION (" << v->kind << ", round " << v->round
              << "): " << v->detail << "\n";
    return 2;
  }
  std::cout << "SAFE: " << chains.size() << " chains, " << rounds
            << " rounds\n";
  return 0;
}

int cmd_coin_test(uint32_t n, uint64_t views, const std::string& seed_hex) {
  racs::common_coin a = racs::common_coin::from_hex(seed_hex, n);
  racs::common_coin b = racs::common_coin::from_hex(seed_hex, n);

  std::vector<uint64_t> counts(n, 0);
  std::vector<double> seq;
  seq.reserve(views);
  bool agree = true;
  for (uint64_t v = 0; v < views; ++v) {
    racs::replica_id r = a.flip(v);
    if (b.flip(v) != r) agree = false;
    counts[r] += 1;
    seq.push_back(double(r));
  }

  std::cout << "flips=" << views << " n=" << n << "\n";
  for (uint32_t i = 0; i < n; ++i)
    std::cout << "  replica " << i << ": " << counts[i] << "\n";

  double stat = racs::chi_square_stat(counts);
  double crit = racs::chi_square_crit(double(n - 1), racs::kZp999);
  double ac = racs::autocorr_lag1(seq);
  bool uniform = stat < crit;
  bool uncorrelated = std::abs(ac) < 0.01;

  std::cout << "agreement: " << (agree ? "ok" : "FAILED")
            << " (two instances, same seed)\n";
  std::cout << "chi-square: " << stat << " vs " << crit
            << " (p=0.001, df=" << n - 1 << "): "
            << (uniform ? "ok" : "FAILED") << "\n";
  std::cout << "lag-1 autocorrelation: " << ac << " (|.| < 0.01): "
            << (uncorrelated ? "ok" : "FAILED") << "\n";
  return agree && uniform && uncorrelated ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-mode crash-fault-tolerant consensus simulator"};
  app.require_subcommand(1);

  std::string run_config, run_out = "out";
  std::optional<uint64_t> run_seed;
  std::optional<double> run_until;
  std::optional<int> run_trace;
  std::optional<std::string> run_name;
  bool run_quiet = false;
  auto* run = app.add_subcommand("run", "run one scenario from a config file");
  run->add_option("-c,--config", run_config, "config JSON path")->required();
  run->add_option("-o,--out", run_out, "output directory (metrics, chains, trace)");
  run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--until", run_until, "override the horizon (ms)");
  run->add_option("--trace-level", run_trace, "override trace level")
      ->check(CLI::Range(0, 2));
  run->add_option("--name", run_name, "override the run name");
  run->add_flag("-q,--quiet", run_quiet, "suppress the summary line");

  std::vector<std::string> sweep_configs;
  unsigned sweep_seeds = 3, sweep_jobs = 1;
  uint64_t sweep_base = 1;
  std::string sweep_out;
  auto* sweep = app.add_subcommand("sweep", "run configs across seeds, emit CSV");
  sweep->add_option("-c,--config", sweep_configs, "config JSON path(s)")
      ->required();
  sweep->add_option("--seeds", sweep_seeds, "seeds per config");
  sweep->add_option("--seed-base", sweep_base, "first seed value");
  sweep->add_option("--jobs", sweep_jobs, "worker threads");
  sweep->add_option("-o,--out", sweep_out, "CSV path (default stdout)");

  std::string check_chains_path;
  auto* check = app.add_subcommand("check", "cross-check a chains.ndjson dump");
  check->add_option("--chains", check_chains_path, "chains.ndjson path")
      ->required();

  uint32_t coin_n = 5;
  uint64_t coin_views = 100000;
  std::string coin_seed = racs::kDefaultCoinSeedHex;
  auto* coin = app.add_subcommand("coin-test",
                                  "agreement and uniformity of the shared coin");
  coin->add_option("--n", coin_n, "replica count")->check(CLI::Range(1, 256));
  coin->add_option("--views", coin_views, "number of flips");
  coin->add_option("--seed-hex", coin_seed, "64-hex coin seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (run->parsed())
    return cmd_run(run_config, run_out, run_seed, run_until, run_trace,
                   run_name, run_quiet);
  if (sweep->parsed())
    return cmd_sweep(sweep_configs, sweep_seeds, sweep_base, sweep_jobs,
                     sweep_out);
  if (check->parsed()) return cmd_check(check_chains_path);
  if (coin->parsed()) {
    try {
      return cmd_coin_test(coin_n, coin_views, coin_seed);
    } catch (const std::invalid_argument& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
