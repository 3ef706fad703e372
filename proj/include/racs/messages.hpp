#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "racs/block.hpp"

namespace racs {

// ---- Consensus messages ----

struct msg_propose {
  block b;
  block_id block_commit;  // leader's last committed block
};

struct msg_vote {
  view_t view = 0;
  round_t round = 0;
  block_id id{};  // voted block; present in the sender's store
};

struct msg_timeout {
  view_t view = 0;
  round_t round = 0;
  block b;  // sender's blockHigh
};

struct msg_propose_async {
  block b;
  replica_id sender = 0;  // creator of b
  uint8_t level = 1;
};

// Vote-async goes to the voted block's creator, so a replica only ever
// collects votes for its own fallback blocks. A level-2 proposal doubles as
// the quorum certificate for its parent: the creator must have seen n-f
// votes for that level-1 block, and crash faults cannot fabricate one.
struct msg_vote_async {
  block_id id{};
  uint8_t level = 1;
  view_t view = 0;  // view of the voted block
};

struct msg_async_complete {
  block b;  // level-2 block whose quorum the sender observed; b.creator
            // names its proposer (the sender may have adopted it)
  view_t view = 0;
  replica_id sender = 0;
};

struct msg_new_view {
  view_t view = 0;
  block b;  // sender's blockHigh
};

// Chain repair: ask for the segment ending at `missing`, walking parents
// down to blocks at or below `floor_round` (requester's committed round).
struct msg_fetch_blocks {
  block_id missing{};
  round_t floor_round = 0;
};

struct msg_blocks {
  std::vector<block> segment;  // child-before-parent order as walked
};

using racs_msg =
    std::variant<msg_propose, msg_vote, msg_timeout, msg_propose_async,
                 msg_vote_async, msg_async_complete, msg_new_view,
                 msg_fetch_blocks, msg_blocks>;

// ---- Dissemination-layer messages ----

struct sadl_batch {
  replica_id creator = 0;
  round_t round = 1;        // per-creator chain position; identity is (creator, round)
  bool has_parent = false;  // parent is (creator, round-1)
  std::vector<command> commands;
  uint64_t content_hash = 0;  // checksum over commands, for integrity asserts
};

uint64_t batch_content_hash(const std::vector<command>& commands);
sadl_batch make_sadl_batch(replica_id creator, round_t round,
                           std::vector<command> commands);

struct msg_sadl_new_batch {
  sadl_batch batch;
};

struct msg_sadl_vote {
  round_t round = 0;  // acking the creator's batch for this round
};

struct msg_sadl_fetch {
  replica_id creator = 0;
  round_t round = 0;     // highest round wanted
  round_t have_upto = 0; // requester already holds rounds <= this
};

struct msg_sadl_batches {
  replica_id creator = 0;
  std::vector<sadl_batch> segment;  // ascending rounds
};

using sadl_msg = std::variant<msg_sadl_new_batch, msg_sadl_vote,
                              msg_sadl_fetch, msg_sadl_batches>;

// ---- Client path (pipelined mode): commands routed to the current leader ----

struct client_forward {
  std::vector<command> commands;
};

// Envelope: every simulated datagram is one of these three families.
using envelope = std::variant<racs_msg, sadl_msg, client_forward>;

std::vector<uint8_t> encode_envelope(const envelope& e);
envelope decode_envelope(const std::vector<uint8_t>& bytes);

// Wire kind tag of a consensus message, used by the metrics accounting.
enum class racs_kind : uint8_t {
  propose = 0,
  vote,
  timeout,
  propose_async,
  vote_async,
  async_complete,
  new_view,
  fetch_blocks,
  blocks,
};
racs_kind kind_of(const racs_msg& m);
const char* kind_name(racs_kind k);

}  // namespace racs
