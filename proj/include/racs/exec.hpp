#pragma once

#include <deque>
#include <set>
#include <vector>

#include "racs/block.hpp"
#include "racs/kv.hpp"
#include "racs/sadl.hpp"

namespace racs {

// One executed consensus block, as recorded for chain comparison across
// replicas. kv_digest is the store digest after executing the block.
struct chain_entry {
  round_t round = 0;
  view_t view = 0;
  int8_t level = kLevelSync;
  block_id id{};
  block_id parent{};
  uint8_t payload_kind = 0;  // 0 commands, 1 round vector
  uint64_t payload_hash = 0;
  uint64_t n_commands = 0;
  uint64_t kv_digest = 0;
  double commit_time = 0;
};

// Applies committed blocks to the KV store exactly once per command.
//
// direct mode: blocks carry their commands and execute on commit.
// vectors mode: blocks carry per-replica dissemination round vectors; the
// engine executes the newly covered batches (creator-ascending, then round-
// ascending) and stalls on batches the local store does not hold yet.
class exec_engine {
 public:
  enum class mode : uint8_t { direct, vectors };

  struct exec_event {
    command_id id{};
    double commit_time = 0;
  };

  struct output {
    std::vector<exec_event> fresh;  // commands applied for the first time
    std::vector<std::pair<replica_id, round_t>> need;  // missing batches
    void clear() {
      fresh.clear();
      need.clear();
    }
  };

  exec_engine(mode m, uint32_t n);

  // Committed blocks arrive oldest first.
  const output& on_commit(const block& b, double commit_time,
                          const sadl::sadl_core* store);

  // Re-runs the vectors-mode queue after missing batches were fetched.
  const output& drain(const sadl::sadl_core& store);

  bool is_applied(const command_id& id) const { return applied_.count(id); }
  const std::vector<chain_entry>& chain() const { return chain_; }
  uint64_t kv_digest() const { return kv_.digest(); }
  const kv_store& kv() const { return kv_; }
  const round_vector& executed_upto() const { return executed_upto_; }
  size_t backlog() const { return pending_.size(); }

 private:
  struct pending_block {
    block b;
    double commit_time = 0;
  };

  void exec_commands(const std::vector<command>& cmds, double t);
  void record(const block& b, double t);
  void drain_pending(const sadl::sadl_core& store);

  mode mode_;
  uint32_t n_;
  kv_store kv_;
  std::set<command_id> applied_;
  std::vector<chain_entry> chain_;
  round_vector executed_upto_;  // per creator, batches already executed
  std::deque<pending_block> pending_;
  output out_;
};

}  // namespace racs
