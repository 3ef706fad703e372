#include "racs/core.hpp"

#include <algorithm>
#include <sstream>

#include "racs/check.hpp"

namespace racs {

racs_core::racs_core(params p, coin_fn coin, payload_fn payload)
    : p_(p), coin_(std::move(coin)), payload_(std::move(payload)) {
  racs_check(p_.n >= 2 * p_.f + 1, "need n >= 2f+1");
  const block& g = genesis();
  stored_block sb;
  sb.b = g;
  sb.resolved = true;
  store_.emplace(g.id, std::move(sb));
  block_high_ = g.id;
  block_commit_ = g.id;
}

rank racs_core::commit_rank() const { return stored(block_commit_).b.rnk(); }
rank racs_core::high_rank() const { return stored(block_high_).b.rnk(); }

uint64_t racs_core::uncommitted_depth() const {
  const block& h = stored(block_high_).b;
  const block& c = stored(block_commit_).b;
  return h.round > c.round ? h.round - c.round : 0;
}

const block* racs_core::find_block(const block_id& id) const {
  auto it = store_.find(id);
  return it == store_.end() ? nullptr : &it->second.b;
}

const racs_core::stored_block& racs_core::stored(const block_id& id) const {
  auto it = store_.find(id);
  racs_check(it != store_.end(), "block missing from store");
  return it->second;
}

bool racs_core::extends(const block_id& descendant, const block_id& ancestor) const {
  const block& anc = stored(ancestor).b;
  block_id cur = descendant;
  while (true) {
    const block& b = stored(cur).b;
    if (cur == ancestor) return true;
    if (b.round <= anc.round || !b.parent) return false;
    cur = *b.parent;
  }
}

// ---- entry points ----

const core_output& racs_core::on_message(replica_id from, racs_msg m) {
  out_.clear();
  work_.emplace_back(from, std::move(m));
  while (!work_.empty()) {
    auto [f, msg] = std::move(work_.front());
    work_.pop_front();
    handle(f, std::move(msg));
    replay_ready();
  }
  return out_;
}

const core_output& racs_core::on_timer_progress() {
  out_.clear();
  if (is_async_) return out_;  // stale expiry; timer is dead during fallback
  broadcast(msg_timeout{v_cur_, r_cur_, stored(block_high_).b});
  return out_;
}

const core_output& racs_core::on_timer_fetch() {
  out_.clear();
  fetch_timer_armed_ = false;
  if (fetches_.empty() || p_.n == 1) return out_;
  for (auto& [missing, fs] : fetches_) {
    // Rotate to the next replica; the original holder may have crashed.
    replica_id next = (fs.asked + 1) % p_.n;
    if (next == p_.self) next = (next + 1) % p_.n;
    fs.asked = next;
    fs.attempts += 1;
    send(next, msg_fetch_blocks{missing, commit_rank().round});
  }
  arm(timer_op::arm_fetch);
  fetch_timer_armed_ = true;
  return out_;
}

bool racs_core::can_propose() const {
  if (is_async_) return false;
  if (leader_of(v_cur_) != p_.self) return false;
  // A view's leader proposes only once the entering quorum reported its
  // highest blocks; view 0 starts without one.
  return v_cur_ == 0 || new_view_done_.count(v_cur_) > 0;
}

const core_output& racs_core::try_propose(const payload_t& payload) {
  out_.clear();
  if (!can_propose()) return out_;
  const block& high = stored(block_high_).b;
  block b = make_block(payload, v_cur_, high.round + 1, block_high_, kLevelSync,
                       p_.self);
  insert_block(b);
  out_.created.push_back(b);
  r_cur_ = b.round;
  block_high_ = b.id;
  broadcast(msg_propose{b, block_commit_});
  send(p_.self, msg_vote{v_cur_, r_cur_, b.id});  // self vote
  arm(timer_op::arm_progress);
  return out_;
}

// ---- dispatch ----

void racs_core::handle(replica_id from, racs_msg&& m) {
  if (auto* p = std::get_if<msg_propose>(&m)) {
    insert_block(p->b);
    if (!gate_on_ancestry(from, p->b.id, m)) return;
    process_propose(from, *p);
  } else if (auto* v = std::get_if<msg_vote>(&m)) {
    process_vote(from, *v);
  } else if (auto* t = std::get_if<msg_timeout>(&m)) {
    insert_block(t->b);
    if (!gate_on_ancestry(from, t->b.id, m)) return;
    process_timeout(from, *t);
  } else if (auto* pa = std::get_if<msg_propose_async>(&m)) {
    insert_block(pa->b);
    if (!gate_on_ancestry(from, pa->b.id, m)) return;
    process_propose_async(*pa);
  } else if (auto* va = std::get_if<msg_vote_async>(&m)) {
    process_vote_async(from, *va);
  } else if (auto* ac = std::get_if<msg_async_complete>(&m)) {
    insert_block(ac->b);
    if (!gate_on_ancestry(from, ac->b.id, m)) return;
    process_async_complete(from, *ac);
  } else if (auto* nv = std::get_if<msg_new_view>(&m)) {
    insert_block(nv->b);
    if (!gate_on_ancestry(from, nv->b.id, m)) return;
    process_new_view(from, *nv);
  } else if (auto* fb = std::get_if<msg_fetch_blocks>(&m)) {
    process_fetch(from, *fb);
  } else if (auto* bs = std::get_if<msg_blocks>(&m)) {
    process_blocks(from, std::move(*bs));
  }
}

// ---- synchronous path ----

void racs_core::process_propose(replica_id from, const msg_propose& m) {
  (void)from;
  const block& b = stored(m.b.id).b;
  if (is_async_) return;  // recovery happens via commit references later
  if (!(b.rnk() > rank{v_cur_, r_cur_})) return;
  bool view_changed = b.view != v_cur_;
  v_cur_ = b.view;
  r_cur_ = b.round;
  block_high_ = m.b.id;
  // Adopt the leader's commit frontier; it is an ancestor of b, so the
  // resolved ancestry guarantees we hold it.
  const block& bc = stored(m.block_commit).b;
  if (bc.rnk() > commit_rank()) adopt_commit(m.block_commit);
  send(leader_of(v_cur_), msg_vote{v_cur_, r_cur_, m.b.id});
  arm(timer_op::arm_progress);
  if (view_changed) after_transition();
}

void racs_core::process_vote(replica_id from, const msg_vote& m) {
  votes_[{m.view, m.round, m.id}].insert(from);
  check_vote_quorum(m.view, m.round, m.id);
}

void racs_core::check_vote_quorum(view_t v, round_t r, const block_id& id) {
  auto it = votes_.find({v, r, id});
  if (it == votes_.end() || it->second.size() < quorum()) return;
  if (v != v_cur_ || is_async_) return;
  auto sit = store_.find(id);
  if (sit == store_.end() || !sit->second.resolved) return;
  racs_check(sit->second.b.rnk() == rank{v, r}, "vote rank mismatch");
  if (!(rank{v, r} > commit_rank())) return;
  adopt_commit(id);
}

void racs_core::process_timeout(replica_id from, const msg_timeout& m) {
  if (is_stale_view(m.view)) return;
  timeouts_[m.view][from] = m.b.id;
  check_timeout_quorums();
}

void racs_core::check_timeout_quorums() {
  while (!is_async_) {
    std::optional<view_t> fire;
    for (const auto& [w, senders] : timeouts_) {
      if (w < v_cur_ || timeout_done_.count(w)) continue;
      if (senders.size() >= quorum()) {
        fire = w;
        break;
      }
    }
    if (!fire) return;
    timeout_done_.insert(*fire);
    on_timeout_quorum(*fire);
  }
}

void racs_core::on_timeout_quorum(view_t w) {
  block_id bh = argmax_rank(timeouts_.at(w));
  // Proposals accepted after this replica's own Timeout left may have moved
  // the local high block past everything the quorum carried. The fallback
  // block must outrank (vCur, rCur) or nobody votes it, so the local high
  // competes in the argmax too.
  if (stored(block_high_).b.rnk() > stored(bh).b.rnk()) bh = block_high_;
  const block bhb = stored(bh).b;  // copy; containers change below
  block_high_ = bh;
  v_cur_ = w;
  // Not max(rCur, ...): rounds above the winner belong to an abandoned branch
  // when the winner came from a higher view, and (vCur, rCur) still advances
  // lexicographically. Keeps the fallback block consecutive with its parent.
  r_cur_ = bhb.round;
  if (p_.async_enabled) {
    is_async_ = true;
    b_fall_.clear();
    arm(timer_op::cancel_progress);
    block bf1 =
        make_block(payload_(), w, bhb.round + 1, bh, kLevelAsync1, p_.self);
    insert_block(bf1);
    out_.created.push_back(bf1);
    broadcast(msg_propose_async{bf1, p_.self, 1});
  } else {
    // Baseline view change: rotate the leader, carry the highest block, no
    // commit on this path.
    v_cur_ = w + 1;
    send(leader_of(v_cur_), msg_new_view{v_cur_, stored(block_high_).b});
    arm(timer_op::arm_progress);
  }
  after_transition();
}

// ---- asynchronous path ----

void racs_core::process_propose_async(const msg_propose_async& m) {
  const block& b = stored(m.b.id).b;
  racs_check(b.creator == m.sender, "fallback block creator mismatch");
  if (!is_async_ || b.view != v_cur_) return;
  if (m.level == 2) {
    b_fall_[b.creator] = m.b.id;
    // The proposal certifies its parent's vote quorum; a replica whose own
    // level-1 block is stuck below quorum catches up by building its level-2
    // block on that certified parent instead.
    if (!async_vote_done_.count({v_cur_, 1})) {
      racs_check(b.parent.has_value(), "level-2 block without parent");
      const block parent = stored(*b.parent).b;
      racs_check(parent.level == kLevelAsync1, "level-2 parent not level-1");
      async_vote_done_.insert({v_cur_, 1});
      block bf2 = make_block(payload_(), v_cur_, parent.round + 1, parent.id,
                             kLevelAsync2, p_.self);
      insert_block(bf2);
      out_.created.push_back(bf2);
      broadcast(msg_propose_async{bf2, p_.self, 2});
    }
  }
  if (b.rnk() > rank{v_cur_, r_cur_}) {
    send(b.creator, msg_vote_async{m.b.id, m.level, b.view});
  }
  check_async_vote_quorums();
}

void racs_core::process_vote_async(replica_id from, const msg_vote_async& m) {
  if (is_stale_view(m.view)) return;
  async_votes_[{m.level, m.id}].insert(from);
  check_async_vote_quorums();
}

void racs_core::check_async_vote_quorums() {
  if (!is_async_) return;
  // Key order puts level-1 quorums ahead of level-2 ones.
  for (auto it = async_votes_.begin(); it != async_votes_.end(); ++it) {
    const auto& [level, id] = it->first;
    if (it->second.size() < quorum()) continue;
    if (async_vote_done_.count({v_cur_, level})) continue;
    auto sit = store_.find(id);
    if (sit == store_.end() || !sit->second.resolved) continue;
    const stored_block& sb = sit->second;
    if (sb.b.view != v_cur_) continue;
    async_vote_done_.insert({v_cur_, level});
    if (level == 1) {
      // Votes arrive only for own proposals, so this is the own level-1
      // block reaching quorum first (before any foreign certificate did).
      block bf2 = make_block(payload_(), v_cur_, sb.b.round + 1, id,
                             kLevelAsync2, p_.self);
      insert_block(bf2);
      out_.created.push_back(bf2);
      broadcast(msg_propose_async{bf2, p_.self, 2});
    } else {
      broadcast(msg_async_complete{sb.b, v_cur_, p_.self});
    }
  }
}

void racs_core::process_async_complete(replica_id from, const msg_async_complete& m) {
  (void)from;
  if (is_stale_view(m.view)) return;
  auto& vec = completes_[m.view];
  for (const auto& e : vec) {
    if (e.sender == m.sender) return;  // one completion per sender
  }
  vec.push_back({m.sender, m.b.id, m.b.creator});
  check_complete_quorum();
}

void racs_core::check_complete_quorum() {
  if (!is_async_ || complete_done_.count(v_cur_)) return;
  auto it = completes_.find(v_cur_);
  if (it == completes_.end() || it->second.size() < quorum()) return;
  complete_done_.insert(v_cur_);
  view_t w = v_cur_;
  // The election set is the first n-f completions to arrive, in order.
  std::vector<complete_entry> prefix(it->second.begin(),
                                     it->second.begin() + quorum());
  replica_id l = coin_(w);
  const complete_entry* elected = nullptr;
  for (const auto& e : prefix) {
    if (e.creator == l) {
      elected = &e;
      break;
    }
  }
  if (elected) {
    // The coin landed on a proposer whose level-2 block completed: commit it
    // together with its uncommitted ancestors.
    const block eb = stored(elected->id).b;
    adopt_commit(elected->id);
    block_high_ = elected->id;
    v_cur_ = eb.view;
    r_cur_ = eb.round;
  } else if (auto bit = b_fall_.find(l); bit != b_fall_.end()) {
    // No completion from the elected proposer reached us in time, but we
    // voted for its level-2 block: adopt it as highest without committing.
    const block ab = stored(bit->second).b;
    block_high_ = bit->second;
    v_cur_ = ab.view;
    r_cur_ = ab.round;
  }
  v_cur_ = w + 1;
  is_async_ = false;
  send(leader_of(v_cur_), msg_new_view{v_cur_, stored(block_high_).b});
  arm(timer_op::arm_progress);
  after_transition();
}

void racs_core::process_new_view(replica_id from, const msg_new_view& m) {
  if (is_stale_view(m.view)) return;
  new_views_[m.view][from] = m.b.id;
  check_new_view_quorum();
}

void racs_core::check_new_view_quorum() {
  if (is_async_ || new_view_done_.count(v_cur_)) return;
  auto it = new_views_.find(v_cur_);
  if (it == new_views_.end() || it->second.size() < quorum()) return;
  new_view_done_.insert(v_cur_);
  block_id bh = argmax_rank(it->second);
  if (stored(bh).b.rnk() > high_rank()) block_high_ = bh;
}

// ---- chain repair ----

void racs_core::process_fetch(replica_id from, const msg_fetch_blocks& m) {
  auto it = store_.find(m.missing);
  if (it == store_.end()) return;  // requester's retry timer tries elsewhere
  msg_blocks reply;
  block_id cur = m.missing;
  while (true) {
    auto sit = store_.find(cur);
    if (sit == store_.end()) break;
    const block& b = sit->second.b;
    if (b.round <= m.floor_round) break;
    reply.segment.push_back(b);
    if (!b.parent) break;
    cur = *b.parent;
  }
  send(from, std::move(reply));
}

void racs_core::process_blocks(replica_id from, msg_blocks&& m) {
  (void)from;
  // Segments arrive child-first; insert parent-first so links validate.
  for (auto rit = m.segment.rbegin(); rit != m.segment.rend(); ++rit) {
    insert_block(*rit);
  }
  check_async_vote_quorums();  // a quorum may have waited on one of these
  check_complete_quorum();
}

bool racs_core::gate_on_ancestry(replica_id from, const block_id& id,
                                 const racs_msg& m) {
  const stored_block& sb = stored(id);
  if (sb.resolved) return true;
  block_id missing = first_missing_ancestor(id);
  auto [it, fresh] = fetches_.try_emplace(missing);
  if (fresh) {
    it->second.asked = from;
    it->second.attempts = 1;
    send(from, msg_fetch_blocks{missing, commit_rank().round});
    if (!fetch_timer_armed_) {
      arm(timer_op::arm_fetch);
      fetch_timer_armed_ = true;
    }
  }
  it->second.buffered.emplace_back(from, m);
  return false;
}

block_id racs_core::first_missing_ancestor(const block_id& id) const {
  block_id cur = id;
  while (true) {
    auto it = store_.find(cur);
    if (it == store_.end()) return cur;
    racs_check(!it->second.resolved, "no gap below a resolved block");
    racs_check(it->second.b.parent.has_value(), "unresolved block without parent");
    cur = *it->second.b.parent;
  }
}

void racs_core::replay_ready() {
  std::vector<block_id> ready;
  for (const auto& [missing, fs] : fetches_) {
    auto it = store_.find(missing);
    if (it != store_.end() && it->second.resolved) ready.push_back(missing);
  }
  for (const auto& id : ready) {
    auto node = fetches_.extract(id);
    for (auto& [from, m] : node.mapped().buffered) {
      work_.emplace_back(from, std::move(m));
    }
  }
  if (fetches_.empty() && fetch_timer_armed_) {
    arm(timer_op::cancel_fetch);
    fetch_timer_armed_ = false;
  }
}

// ---- store ----

static void validate_link(const block& parent, const block& child) {
  racs_check(child.round == parent.round + 1, "child round must be parent+1");
  racs_check(child.view >= parent.view, "child view below parent view");
}

bool racs_core::insert_block(const block& b) {
  auto it = store_.find(b.id);
  if (it != store_.end()) return false;
  stored_block sb;
  sb.b = b;
  bool resolved = false;
  if (!b.parent) {
    racs_check(b.id == genesis().id, "only genesis lacks a parent");
    resolved = true;
  } else {
    auto pit = store_.find(*b.parent);
    if (pit != store_.end() && pit->second.resolved) {
      validate_link(pit->second.b, b);
      resolved = true;
    }
  }
  sb.resolved = resolved;
  store_.emplace(b.id, std::move(sb));
  if (resolved) {
    resolve_from(b.id);
  } else {
    waiting_children_[*b.parent].push_back(b.id);
  }
  return true;
}

void racs_core::resolve_from(const block_id& id) {
  std::vector<block_id> queue{id};
  while (!queue.empty()) {
    block_id cur = queue.back();
    queue.pop_back();
    auto wit = waiting_children_.find(cur);
    if (wit == waiting_children_.end()) continue;
    const block& parent = store_.at(cur).b;
    for (const block_id& child_id : wit->second) {
      stored_block& child = store_.at(child_id);
      if (child.resolved) continue;
      validate_link(parent, child.b);
      child.resolved = true;
      queue.push_back(child_id);
    }
    waiting_children_.erase(wit);
  }
}

// ---- commits ----

void racs_core::adopt_commit(const block_id& id) {
  const stored_block& target = stored(id);
  racs_check(target.resolved, "committing unresolved block");
  const block old = stored(block_commit_).b;
  racs_check(target.b.rnk() > old.rnk(), "commit rank must advance");
  commit_note note;
  note.committed = target.b;
  block_id cur = id;
  while (true) {
    const block& b = stored(cur).b;
    if (b.round <= old.round) break;
    note.newly.push_back(b);
    racs_check(b.parent.has_value(), "commit walk fell off the chain");
    cur = *b.parent;
  }
  // Single history: the new frontier must extend the old one.
  racs_check(cur == block_commit_, "commit does not extend previous commit");
  std::reverse(note.newly.begin(), note.newly.end());
  block_commit_ = id;
  out_.commits.push_back(std::move(note));
}

block_id racs_core::argmax_rank(const std::map<replica_id, block_id>& carried) const {
  racs_check(!carried.empty(), "argmax over empty set");
  const block_id* best = nullptr;
  rank best_rank{};
  for (const auto& [sender, id] : carried) {
    const block& b = stored(id).b;
    // Ties (possible only among uncertified candidates) break toward the
    // smallest id so every replica picks the same block.
    if (!best || b.rnk() > best_rank ||
        (b.rnk() == best_rank && id < *best)) {
      best = &id;
      best_rank = b.rnk();
    }
  }
  return *best;
}

// ---- transitions & pruning ----

void racs_core::after_transition() {
  prune_stale();
  if (is_async_) {
    check_async_vote_quorums();
    check_complete_quorum();
  } else {
    check_timeout_quorums();
    check_new_view_quorum();
  }
}

void racs_core::prune_stale() {
  auto drop_below = [this](auto& m) {
    for (auto it = m.begin(); it != m.end();) {
      if (it->first < v_cur_) {
        it = m.erase(it);
      } else {
        break;  // keys ascend
      }
    }
  };
  drop_below(new_views_);
  drop_below(timeouts_);
  drop_below(completes_);
  for (auto it = votes_.begin(); it != votes_.end();) {
    if (std::get<0>(it->first) < v_cur_) {
      it = votes_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto it = async_votes_.begin(); it != async_votes_.end();) {
    auto sit = store_.find(it->first.second);
    if (sit != store_.end() && sit->second.b.view < v_cur_) {
      it = async_votes_.erase(it);
    } else {
      ++it;
    }
  }
  auto drop_set = [this](auto& s) {
    for (auto it = s.begin(); it != s.end();) {
      view_t v;
      if constexpr (std::is_same_v<std::decay_t<decltype(*it)>, view_t>) {
        v = *it;
      } else {
        v = it->first;
      }
      if (v < v_cur_) {
        it = s.erase(it);
      } else {
        break;
      }
    }
  };
  drop_set(timeout_done_);
  drop_set(new_view_done_);
  drop_set(async_vote_done_);
  drop_set(complete_done_);
}

// ---- output helpers ----

void racs_core::send(std::optional<replica_id> to, racs_msg m) {
  out_.msgs.push_back({to, std::move(m)});
}

void racs_core::broadcast(racs_msg m) { send(std::nullopt, std::move(m)); }

void racs_core::arm(timer_op t) { out_.timers.push_back(t); }

// ---- introspection ----

void racs_core::serialize_state(wire::writer& w) const {
  w.u64(v_cur_);
  w.u64(r_cur_);
  w.hash(block_high_);
  w.hash(block_commit_);
  w.u8(is_async_ ? 1 : 0);
  w.u32(static_cast<uint32_t>(b_fall_.size()));
  for (const auto& [r, id] : b_fall_) {
    w.u32(r);
    w.hash(id);
  }
  w.u32(static_cast<uint32_t>(store_.size()));
  for (const auto& [id, sb] : store_) {
    w.hash(id);
    w.u8(sb.resolved ? 1 : 0);
    w.u32(sb.b.creator);
  }
  w.u32(static_cast<uint32_t>(votes_.size()));
  for (const auto& [k, senders] : votes_) {
    w.u64(std::get<0>(k));
    w.u64(std::get<1>(k));
    w.hash(std::get<2>(k));
    w.u32(static_cast<uint32_t>(senders.size()));
    for (replica_id s : senders) w.u32(s);
  }
  w.u32(static_cast<uint32_t>(timeouts_.size()));
  for (const auto& [v, m] : timeouts_) {
    w.u64(v);
    w.u32(static_cast<uint32_t>(m.size()));
    for (const auto& [s, id] : m) {
      w.u32(s);
      w.hash(id);
    }
  }
  w.u32(static_cast<uint32_t>(completes_.size()));
  for (const auto& [v, vec] : completes_) {
    w.u64(v);
    w.u32(static_cast<uint32_t>(vec.size()));
    for (const auto& e : vec) {
      w.u32(e.sender);
      w.hash(e.id);
      w.u32(e.creator);
    }
  }
  w.u32(static_cast<uint32_t>(async_votes_.size()));
  for (const auto& [k, senders] : async_votes_) {
    w.u8(k.first);
    w.hash(k.second);
    w.u32(static_cast<uint32_t>(senders.size()));
    for (replica_id s : senders) w.u32(s);
  }
  w.u32(static_cast<uint32_t>(new_views_.size()));
  for (const auto& [v, m] : new_views_) {
    w.u64(v);
    w.u32(static_cast<uint32_t>(m.size()));
    for (const auto& [s, id] : m) {
      w.u32(s);
      w.hash(id);
    }
  }
  w.u32(static_cast<uint32_t>(fetches_.size()));
  for (const auto& [id, fs] : fetches_) {
    w.hash(id);
    w.u32(fs.asked);
    w.u32(fs.attempts);
    w.u32(static_cast<uint32_t>(fs.buffered.size()));
  }
}

std::string racs_core::describe() const {
  std::ostringstream os;
  os << "view=" << v_cur_ << " round=" << r_cur_
     << " async=" << (is_async_ ? 1 : 0) << " commit=(" << commit_rank().view
     << "," << commit_rank().round << ") high=(" << high_rank().view << ","
     << high_rank().round << ") store=" << store_.size()
     << " fetches=" << fetches_.size();
  return os.str();
}

}  // namespace racs
