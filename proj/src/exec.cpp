#include "racs/exec.hpp"

#include <algorithm>

#include "racs/check.hpp"

namespace racs {

exec_engine::exec_engine(mode m, uint32_t n)
    : mode_(m), n_(n), executed_upto_(n, 0) {}

void exec_engine::exec_commands(const std::vector<command>& cmds, double t) {
  for (const command& c : cmds) {
    command_id id = id_of(c);
    if (!applied_.insert(id).second) continue;  // replay of a committed command
    kv_.apply(c);
    out_.fresh.push_back({id, t});
  }
}

void exec_engine::record(const block& b, double t) {
  chain_entry e;
  e.round = b.round;
  e.view = b.view;
  e.level = b.level;
  e.id = b.id;
  e.parent = b.parent.value_or(block_id{});
  e.payload_kind = std::holds_alternative<round_vector>(b.payload) ? 1 : 0;
  e.payload_hash = payload_hash(b.payload);
  e.n_commands = payload_command_count(b.payload);
  e.kv_digest = kv_.digest();
  e.commit_time = t;
  chain_.push_back(e);
}

const exec_engine::output& exec_engine::on_commit(const block& b,
                                                  double commit_time,
                                                  const sadl::sadl_core* store) {
  out_.clear();
  if (mode_ == mode::direct) {
    const auto* cmds = std::get_if<command_batch>(&b.payload);
    racs_check(cmds != nullptr, "exec: direct mode block carries commands");
    exec_commands(*cmds, commit_time);
    record(b, commit_time);
    return out_;
  }
  pending_.push_back({b, commit_time});
  racs_check(store != nullptr, "exec: vectors mode needs the batch store");
  drain_pending(*store);
  return out_;
}

const exec_engine::output& exec_engine::drain(const sadl::sadl_core& store) {
  out_.clear();
  drain_pending(store);
  return out_;
}

void exec_engine::drain_pending(const sadl::sadl_core& store) {
  while (!pending_.empty()) {
    const block& b = pending_.front().b;
    double t = pending_.front().commit_time;
    const auto* vec = std::get_if<round_vector>(&b.payload);
    racs_check(vec != nullptr, "exec: vectors mode block carries a vector");
    racs_check(vec->size() == n_, "exec: vector arity");
    // Entries below executed_upto_ are stale snapshots from a slower
    // proposer; the covered batches already ran.
    bool stalled = false;
    for (replica_id j = 0; j < n_ && !stalled; ++j) {
      for (round_t r = executed_upto_[j] + 1; r <= (*vec)[j]; ++r) {
        if (!store.has_batch(j, r)) {
          out_.need.push_back({j, r});
          stalled = true;
          break;
        }
      }
    }
    if (stalled) return;
    for (replica_id j = 0; j < n_; ++j) {
      for (round_t r = executed_upto_[j] + 1; r <= (*vec)[j]; ++r) {
        exec_commands(store.batch(j, r).commands, t);
      }
      executed_upto_[j] = std::max(executed_upto_[j], (*vec)[j]);
    }
    record(b, t);
    pending_.pop_front();
  }
}

}  // namespace racs
