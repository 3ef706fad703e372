#include "racs/sadl.hpp"

#include <algorithm>

#include "racs/check.hpp"

namespace racs::sadl {

sadl_core::sadl_core(params p)
    : p_(std::move(p)),
      last_completed_(p_.n, 0),
      have_upto_(p_.n, 0),
      last_direct_(p_.n, 0),
      last_create_time_(0) {
  racs_check(p_.n >= 2 * p_.f + 1, "sadl: n >= 2f+1");
  racs_check(p_.self < p_.n, "sadl: self in range");
  racs_check(p_.batch_size > 0, "sadl: batch size positive");
}

void sadl_core::submit(std::vector<command> cmds) {
  for (auto& c : cmds) buffer_.push_back(std::move(c));
}

const sadl_output& sadl_core::maybe_create(double now) {
  out_.clear();
  if (!awaiting_acks_ && !buffer_.empty() &&
      (buffer_.size() >= p_.batch_size || !created_any_ ||
       now >= last_create_time_ + p_.batch_time_ms)) {
    // Batch size is a trigger, not a cap: creation drains the whole buffer.
    std::vector<command> cmds(std::make_move_iterator(buffer_.begin()),
                              std::make_move_iterator(buffer_.end()));
    buffer_.clear();
    round_t r = last_completed_[p_.self] + 1;
    sadl_batch b = make_sadl_batch(p_.self, r, std::move(cmds));
    awaiting_acks_ = true;
    created_any_ = true;
    last_create_time_ = now;
    out_.msgs.push_back({std::nullopt, msg_sadl_new_batch{std::move(b)}});
  }
  return out_;
}

std::optional<double> sadl_core::next_deadline() const {
  if (awaiting_acks_ || buffer_.empty()) return std::nullopt;
  if (!created_any_) return last_create_time_;
  return last_create_time_ + p_.batch_time_ms;
}

void sadl_core::store_batch(const sadl_batch& b) {
  chains_.emplace(std::make_pair(b.creator, b.round), b);
  auto& upto = have_upto_[b.creator];
  while (chains_.count({b.creator, upto + 1})) ++upto;
  // A batch links to (creator, round-1), so holding it proves all earlier
  // rounds of that creator completed somewhere.
  if (b.has_parent && b.creator != p_.self)
    last_completed_[b.creator] =
        std::max(last_completed_[b.creator], b.round - 1);
}

void sadl_core::note_resolved() {
  for (auto it = wanted_.begin(); it != wanted_.end();) {
    if (it->second <= have_upto_[it->first]) {
      out_.resolved.push_back(*it);
      it = wanted_.erase(it);
    } else {
      ++it;
    }
  }
}

const sadl_output& sadl_core::on_message(replica_id from, sadl_msg m) {
  out_.clear();
  std::visit(
      [&](auto&& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, msg_sadl_new_batch>) {
          const sadl_batch& b = msg.batch;
          racs_check(b.creator == from, "sadl: batch from its creator");
          racs_check(b.creator < p_.n, "sadl: creator in range");
          if (b.round <= last_direct_[from]) {
            // Duplicate delivery: ack again, change nothing.
            out_.msgs.push_back({from, msg_sadl_vote{b.round}});
            return;
          }
          // Links are FIFO, so the live stream arrives in round order.
          racs_check(b.round == last_direct_[from] + 1,
                     "sadl: gap on FIFO stream");
          last_direct_[from] = b.round;
          if (!has_batch(b.creator, b.round)) store_batch(b);
          note_resolved();
          out_.msgs.push_back({from, msg_sadl_vote{b.round}});
        } else if constexpr (std::is_same_v<T, msg_sadl_vote>) {
          round_t next = last_completed_[p_.self] + 1;
          if (msg.round < next) return;  // stale ack
          votes_[msg.round].insert(from);
          if (awaiting_acks_ && msg.round == next &&
              votes_[next].size() >= quorum()) {
            awaiting_acks_ = false;
            last_completed_[p_.self] = next;
            votes_.erase(next);
            out_.completed.push_back(next);
          }
        } else if constexpr (std::is_same_v<T, msg_sadl_fetch>) {
          if (msg.creator >= p_.n) return;
          // Serve the contiguous run we hold above what the requester has.
          std::vector<sadl_batch> seg;
          for (round_t r = msg.have_upto + 1; r <= msg.round; ++r) {
            if (!has_batch(msg.creator, r)) break;
            seg.push_back(batch(msg.creator, r));
          }
          if (!seg.empty())
            out_.msgs.push_back(
                {from, msg_sadl_batches{msg.creator, std::move(seg)}});
        } else if constexpr (std::is_same_v<T, msg_sadl_batches>) {
          for (const sadl_batch& b : msg.segment) {
            if (b.creator != msg.creator || b.creator >= p_.n) return;
            if (!has_batch(b.creator, b.round)) store_batch(b);
          }
          note_resolved();
        }
      },
      m);
  return out_;
}

void sadl_core::observe_committed(const round_vector& v) {
  racs_check(v.size() == p_.n, "sadl: vector arity");
  racs_check(v[p_.self] <= last_completed_[p_.self],
             "sadl: committed self entry within quorum-backed progress");
  for (uint32_t j = 0; j < p_.n; ++j)
    last_completed_[j] = std::max(last_completed_[j], v[j]);
}

bool sadl_core::has_batch(replica_id creator, round_t round) const {
  return chains_.count({creator, round}) != 0;
}

const sadl_batch& sadl_core::batch(replica_id creator, round_t round) const {
  auto it = chains_.find({creator, round});
  racs_check(it != chains_.end(), "sadl: batch present");
  return it->second;
}

std::vector<sadl_batch> sadl_core::causal_segment(replica_id creator,
                                                  round_t round,
                                                  round_t executed) const {
  std::vector<sadl_batch> seg;
  for (round_t r = executed + 1; r <= round; ++r) {
    racs_check(has_batch(creator, r), "sadl: causal segment held locally");
    seg.push_back(batch(creator, r));
  }
  return seg;
}

const sadl_output& sadl_core::request_batch(replica_id creator, round_t round) {
  out_.clear();
  if (has_batch(creator, round)) return out_;
  if (!wanted_.insert({creator, round}).second) return out_;
  for (replica_id r = 0; r < p_.n; ++r) {
    if (r == p_.self) continue;
    out_.msgs.push_back(
        {r, msg_sadl_fetch{creator, round, have_upto_[creator]}});
  }
  return out_;
}

void sadl_core::serialize_state(wire::writer& w) const {
  w.str("sadl");
  w.u32(p_.self);
  for (round_t r : last_completed_) w.u64(r);
  for (round_t r : have_upto_) w.u64(r);
  w.u8(awaiting_acks_ ? 1 : 0);
  w.u64(buffer_.size());
  w.u64(chains_.size());
  for (const auto& [key, b] : chains_) {
    w.u32(key.first);
    w.u64(key.second);
    w.u64(b.content_hash);
    w.u64(b.commands.size());
  }
  w.u64(votes_.size());
  for (const auto& [r, who] : votes_) {
    w.u64(r);
    w.u64(who.size());
    for (replica_id v : who) w.u32(v);
  }
  w.u64(wanted_.size());
  for (const auto& [c, r] : wanted_) {
    w.u32(c);
    w.u64(r);
  }
}

}  // namespace racs::sadl
