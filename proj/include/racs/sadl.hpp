#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "racs/messages.hpp"

namespace racs::sadl {

struct sadl_out_msg {
  std::optional<replica_id> to;  // nullopt = broadcast to all, self included
  sadl_msg msg;
};

struct sadl_output {
  std::vector<sadl_out_msg> msgs;
  std::vector<round_t> completed;  // own rounds acked by a quorum this call
  // (creator, round) pairs a caller-requested fetch just satisfied.
  std::vector<std::pair<replica_id, round_t>> resolved;
  void clear() { msgs.clear(); completed.clear(); resolved.clear(); }
};

// Leaderless batch dissemination running underneath consensus. Each replica
// maintains its own chain of batches, acknowledged by quorums; consensus then
// orders fixed-size vectors of per-replica completed rounds instead of the
// batches themselves. One batch is outstanding per creator at a time.
//
// Invariants:
//  1. last_completed()[self] increments only when a quorum acks the next
//     batch in the local chain.
//  2. Batches held for a creator form a contiguous prefix of that creator's
//     chain: has_batch(c, r) iff r <= have_upto(c).
//  3. A batch's parent is (creator, round-1); learning a batch proves every
//     earlier round of that creator completed.
class sadl_core {
 public:
  struct params {
    replica_id self = 0;
    uint32_t n = 0;
    uint32_t f = 0;
    uint32_t batch_size = 100;   // commands that trigger a batch
    double batch_time_ms = 50;   // deadline for a partial batch
  };

  explicit sadl_core(params p);

  // Buffers client commands for the next batch.
  void submit(std::vector<command> cmds);

  // Creates and broadcasts the next batch when the trigger condition holds:
  // buffer at batch size or deadline passed, and no batch awaiting acks.
  const sadl_output& maybe_create(double now);

  // When the caller should schedule a wakeup for a deadline-triggered batch.
  std::optional<double> next_deadline() const;

  const sadl_output& on_message(replica_id from, sadl_msg m);

  // Snapshot ordered by consensus in place of payload bytes.
  round_vector completed_rounds() const { return last_completed_; }

  // Monotone catch-up from a committed vector; the self entry can never
  // exceed what the local quorum path already established.
  void observe_committed(const round_vector& v);

  bool has_batch(replica_id creator, round_t round) const;
  const sadl_batch& batch(replica_id creator, round_t round) const;
  round_t have_upto(replica_id creator) const { return have_upto_[creator]; }

  // The batch plus its locally held unexecuted ancestors, oldest first:
  // rounds (executed, round], which is parent-closed by construction.
  std::vector<sadl_batch> causal_segment(replica_id creator, round_t round,
                                         round_t executed) const;

  // Asks the other replicas for a missing batch (and, implicitly, everything
  // below it that is missing too). No-op if held or already requested.
  const sadl_output& request_batch(replica_id creator, round_t round);

  size_t buffered() const { return buffer_.size(); }
  bool awaiting_acks() const { return awaiting_acks_; }

  void serialize_state(wire::writer& w) const;

 private:
  uint32_t quorum() const { return p_.n - p_.f; }
  void store_batch(const sadl_batch& b);
  void note_resolved();

  params p_;
  round_vector last_completed_;        // per replica, quorum-backed
  std::vector<round_t> have_upto_;     // contiguous prefix held per creator
  std::vector<round_t> last_direct_;   // last round seen on the live stream
  std::map<std::pair<replica_id, round_t>, sadl_batch> chains_;
  std::deque<command> buffer_;
  bool awaiting_acks_ = false;
  double last_create_time_;
  bool created_any_ = false;
  std::map<round_t, std::set<replica_id>> votes_;
  std::set<std::pair<replica_id, round_t>> wanted_;  // outstanding fetches
  sadl_output out_;
};

}  // namespace racs::sadl
