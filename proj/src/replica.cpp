#include "racs/replica.hpp"

#include <algorithm>

#include "racs/check.hpp"

namespace racs {

namespace {

const char* sadl_kind_name(const sadl_msg& m) {
  static const char* names[] = {"sadl_new_batch", "sadl_vote", "sadl_fetch",
                                "sadl_batches"};
  return names[m.index()];
}

// Fallback-phase views for the message-per-phase accounting. A NewView for
// view w+1 is the exit message of phase w.
std::optional<view_t> phase_of(const racs_msg& m) {
  switch (kind_of(m)) {
    case racs_kind::timeout:
      return std::get<msg_timeout>(m).view;
    case racs_kind::propose_async:
      return std::get<msg_propose_async>(m).b.view;
    case racs_kind::vote_async:
      return std::get<msg_vote_async>(m).view;
    case racs_kind::async_complete:
      return std::get<msg_async_complete>(m).view;
    case racs_kind::new_view: {
      view_t v = std::get<msg_new_view>(m).view;
      if (v == 0) return std::nullopt;
      return v - 1;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

replica_node::replica_node(replica_id self, const sim_config& cfg,
                           sim::net& net, metrics& met, trace_writer& tr,
                           coin_fn coin)
    : self_(self),
      cfg_(cfg),
      net_(net),
      met_(met),
      tr_(tr),
      core_(racs_core::params{self, cfg.n, cfg.f, cfg.async_enabled},
            std::move(coin), [this] { return fallback_payload(); }),
      exec_(cfg.mode == sim_config::run_mode::sadl ? exec_engine::mode::vectors
                                                   : exec_engine::mode::direct,
            cfg.n) {
  if (cfg.mode == sim_config::run_mode::sadl) {
    sadl_.emplace(sadl::sadl_core::params{self, cfg.n, cfg.f, cfg.batch_size,
                                          cfg.batch_time_ms});
  }
  // Every replica starts in sync mode with the timer running.
  net_.arm_timer(self_, kSlotProgress, cfg_.timeout_ms);
}

payload_t replica_node::fallback_payload() {
  if (sadl_) return payload_t{sadl_->completed_rounds()};
  return payload_t{command_batch{drain_available(cfg_.batch_size)}};
}

size_t replica_node::live_available() const { return avail_ids_.size(); }

std::vector<command> replica_node::drain_available(size_t cap) {
  std::vector<command> out;
  while (out.size() < cap && !available_.empty() && !avail_ids_.empty()) {
    pending_cmd e = std::move(available_.front());
    available_.pop_front();
    command_id id = id_of(e.cmd);
    if (avail_ids_.erase(id) == 0) continue;  // committed meanwhile
    inflight_ids_.insert(id);
    out.push_back(e.cmd);
    inflight_.push_back(std::move(e));
  }
  return out;
}

void replica_node::reset_in_flight() {
  if (sadl_ || inflight_.empty()) return;
  // Uncommitted in-flight commands become proposable again, ahead of the
  // younger backlog; they are re-proposed until they commit.
  std::deque<pending_cmd> merged;
  for (auto& e : inflight_) {
    command_id id = id_of(e.cmd);
    if (inflight_ids_.count(id)) {
      avail_ids_.insert(id);
      merged.push_back(std::move(e));
    }
  }
  inflight_.clear();
  inflight_ids_.clear();
  for (auto& e : available_) merged.push_back(std::move(e));
  available_.swap(merged);
}

void replica_node::compact_inflight() {
  if (inflight_.size() <= 2 * inflight_ids_.size()) return;
  std::erase_if(inflight_, [&](const pending_cmd& e) {
    return inflight_ids_.count(id_of(e.cmd)) == 0;
  });
}

void replica_node::forward_mine(double now) {
  if (sadl_ || leader_now()) return;
  std::vector<command> fwd;
  auto take = [&](const pending_cmd& e) {
    if (!e.mine) return;
    command_id id = id_of(e.cmd);
    if (avail_ids_.count(id) || inflight_ids_.count(id)) fwd.push_back(e.cmd);
  };
  for (const auto& e : inflight_) take(e);
  for (const auto& e : available_) take(e);
  if (!fwd.empty())
    send_forward(core_.leader_of(core_.view()), std::move(fwd), now);
}

void replica_node::on_client_commands(std::vector<command> cmds, double now) {
  if (tr_.want(2))
    tr_.event(2, now, self_, "arrive").num("count", cmds.size());
  if (sadl_) {
    sadl_->submit(std::move(cmds));
  } else {
    std::vector<command> fwd;
    bool fwd_needed = !leader_now();
    for (auto& c : cmds) {
      command_id id = id_of(c);
      if (exec_.is_applied(id)) continue;
      if (avail_ids_.count(id) || inflight_ids_.count(id)) continue;
      avail_ids_.insert(id);
      if (fwd_needed) fwd.push_back(c);
      available_.push_back({std::move(c), true});
    }
    if (!fwd.empty())
      send_forward(core_.leader_of(core_.view()), std::move(fwd), now);
  }
  post_step(now);
}

void replica_node::on_message(replica_id from,
                              const std::vector<uint8_t>& bytes, double now) {
  envelope e = decode_envelope(bytes);
  std::visit(
      [&](auto&& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, racs_msg>) {
          process_core(core_.on_message(from, std::move(m)), now);
        } else if constexpr (std::is_same_v<T, sadl_msg>) {
          racs_check(sadl_.has_value(), "replica: sadl message in sadl mode");
          process_sadl(sadl_->on_message(from, std::move(m)), now);
        } else {
          racs_check(!sadl_, "replica: client forwarding is pipelined-mode");
          for (auto& c : m.commands) {
            command_id id = id_of(c);
            if (exec_.is_applied(id)) continue;
            if (avail_ids_.count(id) || inflight_ids_.count(id)) continue;
            avail_ids_.insert(id);
            available_.push_back({std::move(c), false});
          }
        }
      },
      std::move(e));
  post_step(now);
}

void replica_node::on_timer(uint8_t slot, double now) {
  if (slot == kSlotProgress) {
    met_.timeouts_fired += 1;
    tr_.event(1, now, self_, "timeout").num("view", core_.view());
    process_core(core_.on_timer_progress(), now);
  } else if (slot == kSlotFetch) {
    process_core(core_.on_timer_fetch(), now);
  } else if (slot == kSlotBatch) {
    armed_batch_deadline_ = -1;
    if (!sadl_ && core_.can_propose() &&
        core_.uncommitted_depth() < cfg_.pipeline_depth) {
      auto batch = drain_available(cfg_.batch_size);
      if (!batch.empty()) {
        last_propose_time_ = now;
        process_core(core_.try_propose(command_batch{std::move(batch)}), now);
      }
    }
    // sadl mode: post_step's maybe_create picks the deadline up
  }
  post_step(now);
}

void replica_node::process_core(const core_output& out, double now) {
  for (const auto& m : out.msgs) send_racs(m.to, m.msg, now);
  for (timer_op op : out.timers) {
    switch (op) {
      case timer_op::arm_progress:
        net_.arm_timer(self_, kSlotProgress, cfg_.timeout_ms);
        break;
      case timer_op::cancel_progress:
        net_.cancel_timer(self_, kSlotProgress);
        break;
      case timer_op::arm_fetch:
        net_.arm_timer(self_, kSlotFetch, cfg_.fetch_retry_ms);
        break;
      case timer_op::cancel_fetch:
        net_.cancel_timer(self_, kSlotFetch);
        break;
    }
  }
  for (const block& b : out.created) {
    met_.proposals += 1;
    met_.propose_ms.emplace(b.id, now);
    tr_.event(1, now, self_, "propose")
        .num("view", b.view)
        .num("round", b.round)
        .snum("level", b.level)
        .id("id", b.id)
        .num("ncmd", payload_command_count(b.payload));
  }
  for (const auto& note : out.commits) {
    for (const block& nb : note.newly) {
      // A level-2 commit while leaving the fallback marks the phase as
      // one that committed its elected block.
      if (nb.level == kLevelAsync2 && was_async_ && !core_.is_async())
        exit_committed_flag_ = true;
      tr_.event(1, now, self_, "commit")
          .num("view", nb.view)
          .num("round", nb.round)
          .snum("level", nb.level)
          .id("id", nb.id);
      if (sadl_) {
        const auto* vec = std::get_if<round_vector>(&nb.payload);
        racs_check(vec != nullptr, "replica: sadl-mode blocks carry vectors");
        sadl_->observe_committed(*vec);
        handle_exec_output(exec_.on_commit(nb, now, &*sadl_), now);
      } else {
        handle_exec_output(exec_.on_commit(nb, now, nullptr), now);
        if (const auto* cmds = std::get_if<command_batch>(&nb.payload)) {
          for (const command& c : *cmds) {
            command_id id = id_of(c);
            avail_ids_.erase(id);
            inflight_ids_.erase(id);
          }
        }
      }
    }
  }
  if (!out.commits.empty() && !sadl_) compact_inflight();
}

void replica_node::process_sadl(const sadl::sadl_output& out, double now) {
  for (const auto& m : out.msgs) send_sadl(m.to, m.msg, now);
  for (round_t r : out.completed)
    tr_.event(2, now, self_, "sadl_complete").num("round", r);
  bool resolved = !out.resolved.empty();
  for (const auto& [c, r] : out.resolved)
    tr_.event(2, now, self_, "sadl_resolved").num("creator", c).num("round", r);
  if (resolved) handle_exec_output(exec_.drain(*sadl_), now);
}

void replica_node::handle_exec_output(const exec_engine::output& out,
                                      double now) {
  for (const auto& ev : out.fresh) met_.on_commit_command(ev.id, ev.commit_time);
  for (const auto& [c, r] : out.need) {
    tr_.event(2, now, self_, "need_batch").num("creator", c).num("round", r);
    const auto& so = sadl_->request_batch(c, r);
    for (const auto& m : so.msgs) send_sadl(m.to, m.msg, now);
  }
}

void replica_node::post_step(double now) {
  view_t v = core_.view();
  bool async = core_.is_async();
  if (async && !was_async_) {
    met_.async_views.insert(v);
    tr_.event(1, now, self_, "async_enter").num("view", v);
    reset_in_flight();
  }
  if (!async && was_async_) {
    tr_.event(1, now, self_, "async_exit")
        .num("view", v)
        .str("outcome", exit_committed_flag_ ? "commit" : "noncommit");
    if (exit_committed_flag_)
      met_.async_exits_committed += 1;
    else
      met_.async_exits_adopted += 1;
    exit_committed_flag_ = false;
  }
  was_async_ = async;
  if (v != last_view_) {
    tr_.event(1, now, self_, "view").num("view", v).num("leader",
                                                        core_.leader_of(v));
    last_view_ = v;
    if (v > met_.max_view) met_.max_view = v;
    last_proposed_vec_.reset();
    reset_in_flight();
    forward_mine(now);
  }

  if (sadl_) {
    process_sadl(sadl_->maybe_create(now), now);
    // One outstanding vector proposal; depth 2 lets a proposal extend an
    // adopted-but-uncommitted fallback block.
    if (core_.can_propose() && core_.uncommitted_depth() < 2) {
      round_vector vec = sadl_->completed_rounds();
      bool advanced =
          last_proposed_vec_ ? vec != *last_proposed_vec_
                             : std::any_of(vec.begin(), vec.end(),
                                           [](round_t r) { return r > 0; });
      if (advanced) {
        last_proposed_vec_ = vec;
        last_propose_time_ = now;
        process_core(core_.try_propose(payload_t{std::move(vec)}), now);
      }
    }
  } else {
    while (core_.can_propose() &&
           core_.uncommitted_depth() < cfg_.pipeline_depth &&
           live_available() >= cfg_.batch_size) {
      auto batch = drain_available(cfg_.batch_size);
      if (batch.empty()) break;
      last_propose_time_ = now;
      process_core(core_.try_propose(command_batch{std::move(batch)}), now);
    }
  }
  sync_batch_timer(now);
}

void replica_node::sync_batch_timer(double now) {
  double want = -1;
  if (sadl_) {
    if (auto dl = sadl_->next_deadline()) want = *dl;
  } else if (core_.can_propose() &&
             core_.uncommitted_depth() < cfg_.pipeline_depth &&
             live_available() > 0) {
    want = last_propose_time_ + cfg_.batch_time_ms;
  }
  if (want == armed_batch_deadline_) return;
  armed_batch_deadline_ = want;
  if (want < 0)
    net_.cancel_timer(self_, kSlotBatch);
  else
    net_.arm_timer(self_, kSlotBatch, std::max(0.0, want - now));
}

void replica_node::send_racs(const std::optional<replica_id>& to,
                             const racs_msg& m, double now) {
  transmit(to, envelope{m}, kind_name(kind_of(m)), phase_of(m), now);
}

void replica_node::send_sadl(const std::optional<replica_id>& to,
                             const sadl_msg& m, double now) {
  transmit(to, envelope{m}, sadl_kind_name(m), std::nullopt, now);
}

void replica_node::send_forward(replica_id to, std::vector<command> cmds,
                                double now) {
  transmit(to, envelope{client_forward{std::move(cmds)}}, "client_forward",
           std::nullopt, now);
}

void replica_node::transmit(const std::optional<replica_id>& to,
                            const envelope& e, const char* kind,
                            std::optional<view_t> phase, double now) {
  auto bytes =
      std::make_shared<const std::vector<uint8_t>>(encode_envelope(e));
  size_t sz = bytes->size();
  if (to) {
    net_.send(self_, *to, bytes);
    met_.on_send(kind, sz);
    if (phase) met_.async_msgs[*phase] += 1;
  } else {
    for (replica_id d = 0; d < cfg_.n; ++d) {
      net_.send(self_, d, bytes);
      met_.on_send(kind, sz);
      if (phase) met_.async_msgs[*phase] += 1;
    }
  }
  if (tr_.want(2))
    tr_.event(2, now, self_, "send")
        .str("kind", kind)
        .snum("to", to ? static_cast<int64_t>(*to) : -1)
        .num("size", sz);
}

std::string replica_node::describe() const {
  std::string s = core_.describe();
  s += " backlog=" + std::to_string(avail_ids_.size() + inflight_ids_.size());
  s += " exec_pending=" + std::to_string(exec_.backlog());
  if (sadl_) {
    s += " sadl_buf=" + std::to_string(sadl_->buffered());
    s += sadl_->awaiting_acks() ? " awaiting" : "";
  }
  return s;
}

}  // namespace racs
