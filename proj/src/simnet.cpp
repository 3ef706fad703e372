#include "racs/simnet.hpp"

#include <algorithm>

#include "racs/check.hpp"

namespace racs::sim {

net::net(net_params p)
    : p_(std::move(p)),
      nodes_(p_.n, nullptr),
      crashed_(p_.n, 0),
      fifo_floor_(p_.n, std::vector<double>(p_.n, 0)),
      egress_free_(p_.n, 0),
      timer_gen_(p_.n, std::vector<uint64_t>(8, 0)),
      jitter_rng_(prng(p_.seed).fork(0x6a69)),
      adv_rng_(prng(p_.adversary.seed).fork(0x6164)) {
  racs_check(p_.n > 0, "net: nonempty");
  racs_check(p_.base_delay_ms.size() == p_.n, "net: delay matrix rows");
  for (const auto& row : p_.base_delay_ms)
    racs_check(row.size() == p_.n, "net: delay matrix cols");
  stats_.egress_bytes.assign(p_.n, 0);
  if (p_.adversary.enabled) {
    if (p_.adversary.static_target) {
      racs_check(p_.adversary.fixed_target < p_.n, "net: target in range");
      targets_ = {p_.adversary.fixed_target};
    } else if (p_.adversary.max_targets > 0) {
      racs_check(p_.adversary.epoch_ms > 0, "net: adversary epoch positive");
      push(0, ev_call{[](net& n) { n.epoch_tick(); }});
    }
  }
}

void net::attach(replica_id id, node_handler* h) {
  racs_check(id < p_.n, "net: attach id in range");
  nodes_[id] = h;
}

void net::push(double at, ev_body body) {
  q_.push(event{at, next_seq_++, std::move(body)});
}

void net::roll_targets() {
  uint32_t k = std::min(p_.adversary.max_targets, p_.n);
  std::vector<replica_id> pool(p_.n);
  for (uint32_t i = 0; i < p_.n; ++i) pool[i] = i;
  for (uint32_t i = 0; i < k; ++i) {
    uint32_t j = i + static_cast<uint32_t>(adv_rng_.below(p_.n - i));
    std::swap(pool[i], pool[j]);
  }
  targets_.assign(pool.begin(), pool.begin() + k);
  std::sort(targets_.begin(), targets_.end());
}

void net::epoch_tick() {
  roll_targets();
  if (on_epoch) on_epoch(now_, targets_);
  push(now_ + p_.adversary.epoch_ms, ev_call{[](net& n) { n.epoch_tick(); }});
}

bool net::is_target(replica_id r) const {
  return std::binary_search(targets_.begin(), targets_.end(), r);
}

void net::send(replica_id from, replica_id to, payload_ptr bytes) {
  racs_check(from < p_.n && to < p_.n, "net: endpoints in range");
  racs_check(bytes != nullptr, "net: payload present");
  stats_.messages += 1;
  stats_.bytes += bytes->size();
  if (from == to) {
    // Loopback: no wire, no delay. Ordering against other events at the
    // same instant follows schedule order.
    push(now_, ev_message{from, to, std::move(bytes)});
    return;
  }
  stats_.egress_bytes[from] += bytes->size();
  double depart = now_;
  if (p_.egress_cap_bytes_per_ms > 0) {
    double start = std::max(now_, egress_free_[from]);
    depart = start + static_cast<double>(bytes->size()) / p_.egress_cap_bytes_per_ms;
    egress_free_[from] = depart;
  }
  double delay = p_.base_delay_ms[from][to];
  if (p_.jitter_ms > 0) delay += jitter_rng_.uniform01() * p_.jitter_ms;
  if (p_.adversary.enabled && is_target(from)) delay += p_.adversary.extra_ms;
  double deliver = depart + delay;
  // FIFO per ordered pair: never deliver before an earlier send.
  deliver = std::max(deliver, fifo_floor_[from][to]);
  fifo_floor_[from][to] = deliver;
  push(deliver, ev_message{from, to, std::move(bytes)});
}

void net::broadcast(replica_id from, payload_ptr bytes) {
  for (replica_id to = 0; to < p_.n; ++to) send(from, to, bytes);
}

void net::arm_timer(replica_id who, uint8_t slot, double delay_ms) {
  racs_check(who < p_.n && slot < timer_gen_[who].size(), "net: timer slot");
  uint64_t gen = ++timer_gen_[who][slot];
  push(now_ + delay_ms, ev_timer{who, slot, gen});
}

void net::cancel_timer(replica_id who, uint8_t slot) {
  racs_check(who < p_.n && slot < timer_gen_[who].size(), "net: timer slot");
  ++timer_gen_[who][slot];
}

void net::schedule_crash(replica_id who, double at) {
  racs_check(who < p_.n, "net: crash id in range");
  push(at, ev_crash{who});
}

void net::schedule_call(double at, std::function<void(net&)> fn) {
  push(at, ev_call{std::move(fn)});
}

stop_reason net::run(double until) {
  while (!q_.empty()) {
    if (q_.top().at > until) {
      now_ = until;
      return stop_reason::horizon;
    }
    event e = q_.top();
    q_.pop();
    now_ = e.at;
    std::visit(
        [&](auto&& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, ev_message>) {
            if (crashed_[body.to]) {
              stats_.dropped_crashed += 1;
              return;
            }
            racs_check(nodes_[body.to] != nullptr, "net: receiver attached");
            nodes_[body.to]->on_message(body.from, *body.bytes, now_);
          } else if constexpr (std::is_same_v<T, ev_timer>) {
            if (crashed_[body.who]) return;
            if (body.gen != timer_gen_[body.who][body.slot]) return;  // stale
            racs_check(nodes_[body.who] != nullptr, "net: timer owner attached");
            nodes_[body.who]->on_timer(body.slot, now_);
          } else if constexpr (std::is_same_v<T, ev_crash>) {
            crashed_[body.who] = 1;
          } else {
            body.fn(*this);
          }
        },
        e.body);
  }
  return stop_reason::drained;
}

}  // namespace racs::sim
