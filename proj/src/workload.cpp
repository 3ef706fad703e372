#include "racs/workload.hpp"

namespace racs {

workload_gen::workload_gen(const sim_config::workload_t& w, uint32_t n,
                           uint64_t seed, double until_ms)
    : w_(w),
      n_(n),
      stop_ms_(w.stop_ms < 0 ? until_ms : w.stop_ms),
      t_(w.start_ms),
      rng_(prng(seed).fork(0x776b)) {}

std::optional<workload_gen::arrival> workload_gen::next() {
  if (w_.rate_cps <= 0) return std::nullopt;
  t_ += rng_.exp_gap(w_.rate_cps / 1000.0);  // rate per ms
  if (t_ >= stop_ms_) return std::nullopt;

  arrival a;
  a.at_ms = t_;
  a.to = static_cast<replica_id>(count_ % n_);

  command& c = a.cmd;
  c.client = a.to;
  c.seq = ++count_;  // unique across clients too; id is (client, seq)
  c.op = cmd_op::put;
  uint64_t k = rng_.raw();
  c.key.assign(reinterpret_cast<const char*>(&k), 8);
  size_t value_len = w_.command_bytes - 1 - 8;
  c.value.assign(value_len, 'x');
  uint64_t tag = rng_.raw();
  size_t head = std::min<size_t>(8, value_len);
  c.value.replace(0, head, reinterpret_cast<const char*>(&tag), head);
  return a;
}

}  // namespace racs
