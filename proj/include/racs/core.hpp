#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "racs/block.hpp"
#include "racs/coin.hpp"
#include "racs/messages.hpp"

namespace racs {

// Payload source for blocks the core creates on its own (asynchronous
// fallback blocks). The surrounding replica decides what goes in: a drained
// command batch in pipelined mode, a completed-rounds vector otherwise.
using payload_fn = std::function<payload_t()>;

enum class timer_op : uint8_t {
  arm_progress,    // (re)start the progress timer; arming resets it
  cancel_progress,
  arm_fetch,       // retry timer for outstanding chain-repair requests
  cancel_fetch,
};

struct out_msg {
  std::optional<replica_id> to;  // nullopt = broadcast to all, self included
  racs_msg msg;
};

struct commit_note {
  block committed;             // the new commit frontier
  std::vector<block> newly;    // path above the previous frontier, oldest first
};

struct core_output {
  std::vector<out_msg> msgs;
  std::vector<commit_note> commits;
  std::vector<timer_op> timers;
  std::vector<block> created;  // blocks this replica built, for tracing
  void clear() { msgs.clear(); commits.clear(); timers.clear(); created.clear(); }
};

// Crash-fault consensus core for one replica: a deterministic state machine
// driven entirely by delivered messages, timer expirations and propose calls.
// It never looks at a clock and has no randomness of its own; the view-leader
// coin is injected. All container state is ordered, so identical input
// sequences produce identical state and output on any platform.
//
// Mode switch: the core runs a synchronous leader path until a quorum of
// timeouts for the current view arrives, then (when fallback is enabled)
// runs the two-level asynchronous path until a quorum of completion messages
// elects a block via the coin and re-enters the next synchronous view. With
// fallback disabled it degrades to a leader-only protocol whose timeout
// quorum just rotates the view, which serves as the baseline in experiments.
class racs_core {
 public:
  struct params {
    replica_id self = 0;
    uint32_t n = 0;
    uint32_t f = 0;
    bool async_enabled = true;
  };

  racs_core(params p, coin_fn coin, payload_fn payload);

  // Message and timer entry points. Output validity ends at the next call.
  const core_output& on_message(replica_id from, racs_msg m);
  const core_output& on_timer_progress();
  const core_output& on_timer_fetch();

  // Leader proposal; no-op unless this replica may propose right now.
  const core_output& try_propose(const payload_t& payload);

  bool can_propose() const;

  replica_id leader_of(view_t v) const { return static_cast<replica_id>(v % p_.n); }
  view_t view() const { return v_cur_; }
  round_t round() const { return r_cur_; }
  bool is_async() const { return is_async_; }
  rank commit_rank() const;
  rank high_rank() const;
  // Blocks proposed on the current chain but not yet committed.
  uint64_t uncommitted_depth() const;

  const block* find_block(const block_id& id) const;

  // True iff `ancestor` lies on the parent path from `descendant` to genesis,
  // or the two are equal. Both blocks must be held locally.
  bool extends(const block_id& descendant, const block_id& ancestor) const;

  // Canonical dump of the full replica state; equal states encode equally.
  void serialize_state(wire::writer& w) const;
  // One-line summary for stall reports.
  std::string describe() const;

 private:
  struct stored_block {
    block b;
    bool resolved = false;  // full ancestor path down to genesis is present
  };

  struct fetch_state {
    replica_id asked = 0;                 // last replica the request went to
    uint32_t attempts = 0;
    std::vector<std::pair<replica_id, racs_msg>> buffered;
  };

  uint32_t quorum() const { return p_.n - p_.f; }
  bool is_stale_view(view_t v) const { return v < v_cur_; }

  void handle(replica_id from, racs_msg&& m);
  void process_propose(replica_id from, const msg_propose& m);
  void process_vote(replica_id from, const msg_vote& m);
  void process_timeout(replica_id from, const msg_timeout& m);
  void process_propose_async(const msg_propose_async& m);
  void process_vote_async(replica_id from, const msg_vote_async& m);
  void process_async_complete(replica_id from, const msg_async_complete& m);
  void process_new_view(replica_id from, const msg_new_view& m);
  void process_fetch(replica_id from, const msg_fetch_blocks& m);
  void process_blocks(replica_id from, msg_blocks&& m);

  void check_vote_quorum(view_t v, round_t r, const block_id& id);
  void check_timeout_quorums();
  void check_new_view_quorum();
  void check_async_vote_quorums();
  void check_complete_quorum();
  // Re-evaluates everything a view change or block arrival can unblock.
  void after_transition();
  void prune_stale();

  void on_timeout_quorum(view_t w);

  // Store maintenance. insert_block returns true if the id is new; newly
  // resolved blocks trigger replay of messages parked behind them.
  bool insert_block(const block& b);
  void resolve_from(const block_id& id);
  const stored_block& stored(const block_id& id) const;
  block_id first_missing_ancestor(const block_id& id) const;
  // True when the message may run now; otherwise parked under a fetch.
  bool gate_on_ancestry(replica_id from, const block_id& id, const racs_msg& m);
  void replay_ready();

  void adopt_commit(const block_id& id);
  block_id argmax_rank(const std::map<replica_id, block_id>& carried) const;

  void send(std::optional<replica_id> to, racs_msg m);
  void broadcast(racs_msg m);
  void arm(timer_op t);

  params p_;
  coin_fn coin_;
  payload_fn payload_;

  view_t v_cur_ = 0;
  round_t r_cur_ = 0;
  block_id block_high_;
  block_id block_commit_;
  bool is_async_ = false;
  std::map<replica_id, block_id> b_fall_;

  std::map<block_id, stored_block> store_;
  std::map<block_id, std::vector<block_id>> waiting_children_;

  // Pending quorum bookkeeping, pruned as views pass.
  std::map<view_t, std::map<replica_id, block_id>> new_views_;
  std::map<std::tuple<view_t, round_t, block_id>, std::set<replica_id>> votes_;
  std::map<view_t, std::map<replica_id, block_id>> timeouts_;
  std::map<std::pair<uint8_t, block_id>, std::set<replica_id>> async_votes_;
  struct complete_entry {
    replica_id sender;
    block_id id;
    replica_id creator;  // = block's creator; cached for the election scan
  };
  std::map<view_t, std::vector<complete_entry>> completes_;

  std::set<view_t> timeout_done_;
  std::set<view_t> new_view_done_;
  std::set<std::pair<view_t, uint8_t>> async_vote_done_;
  std::set<view_t> complete_done_;

  std::map<block_id, fetch_state> fetches_;
  bool fetch_timer_armed_ = false;

  std::deque<std::pair<replica_id, racs_msg>> work_;
  core_output out_;
};

}  // namespace racs
