#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "racs/command.hpp"
#include "racs/digest.hpp"
#include "racs/wire.hpp"

namespace racs {

// Lexicographic block rank (view first, then round). Genesis has rank (0,0).
struct rank {
  view_t view = 0;
  round_t round = 0;

  auto operator<=>(const rank&) const = default;
};

using block_id = hash256;

// Block payloads. Pipelined mode carries raw command batches; the decoupled
// mode carries an n-entry vector of per-replica completed dissemination
// rounds, so consensus traffic stays independent of batch contents.
using command_batch = std::vector<command>;
using round_vector = std::vector<round_t>;
using payload_t = std::variant<command_batch, round_vector>;

constexpr int8_t kLevelSync = -1;
constexpr int8_t kLevelAsync1 = 1;
constexpr int8_t kLevelAsync2 = 2;

// Invariants:
//  1. id is a deterministic function of every other field; structurally
//     equal blocks have equal ids.
//  2. round == parent block's round + 1 for every non-genesis block.
//  3. view >= parent block's view.
//  4. level is -1 (synchronous) or 1/2 (asynchronous fallback levels).
//  5. creator is part of the identity: fallback blocks are per-proposer
//     entities even when their contents coincide, so two replicas extending
//     the same parent with the same payload still produce distinct blocks.
struct block {
  block_id id{};
  payload_t payload;
  view_t view = 0;
  round_t round = 0;
  std::optional<block_id> parent;  // absent only for genesis
  int8_t level = kLevelSync;
  replica_id creator = 0;

  rank rnk() const { return {view, round}; }
  bool operator==(const block& o) const;
};

// Canonical id-less encoding; the id is sha256 of these bytes.
void encode_for_id(wire::writer& w, const block& b);
block_id compute_id(const block& b);

// Wire form (id omitted; receivers recompute it, so a block can never carry
// an id inconsistent with its contents).
void encode(wire::writer& w, const block& b);
block decode_block(wire::reader& r);

// Builds a block with the id filled in.
block make_block(payload_t payload, view_t view, round_t round,
                 std::optional<block_id> parent, int8_t level,
                 replica_id creator);

// The pre-committed genesis block, rank (0,0), identical at every replica.
const block& genesis();

size_t payload_command_count(const payload_t& p);
uint64_t payload_hash(const payload_t& p);

}  // namespace racs
