#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <variant>
#include <vector>

#include "racs/command.hpp"
#include "racs/rng.hpp"

namespace racs::sim {

using payload_ptr = std::shared_ptr<const std::vector<uint8_t>>;

// A node plugged into the network. Handlers run to completion at a virtual
// instant; any sends they issue are scheduled, never delivered inline.
class node_handler {
 public:
  virtual ~node_handler() = default;
  virtual void on_message(replica_id from, const std::vector<uint8_t>& bytes,
                          double now) = 0;
  virtual void on_timer(uint8_t slot, double now) = 0;
};

struct net_params {
  uint32_t n = 0;
  // One-way base delay in ms from row sender to column receiver.
  std::vector<std::vector<double>> base_delay_ms;
  double jitter_ms = 0;  // uniform [0, jitter_ms) added per message
  // Sender-side serialization: consecutive sends from one replica occupy its
  // uplink for size/cap ms each. 0 disables the cap.
  double egress_cap_bytes_per_ms = 0;
  uint64_t seed = 1;

  // Delay adversary. delay_attack re-rolls a seeded target set of max_targets
  // replicas every epoch and adds extra_ms to everything they send; it sees
  // only (sender, receiver, time, size), never contents or replica state.
  // static_target pins a fixed replica for the whole run.
  struct adversary_t {
    bool enabled = false;
    bool static_target = false;  // targets fixed_target, ignores epochs
    replica_id fixed_target = 0;
    double extra_ms = 0;
    double epoch_ms = 1;
    uint32_t max_targets = 0;
    uint64_t seed = 1;
  } adversary;
};

enum class stop_reason : uint8_t {
  horizon,   // virtual time reached `until`
  drained,   // event queue emptied first: the system stalled
};

// Seeded discrete-event network simulator. Per (sender, receiver) delivery
// order is FIFO: a later send is clamped to deliver no earlier than the one
// before it, and ties break by schedule order.
class net {
 public:
  explicit net(net_params p);

  void attach(replica_id id, node_handler* h);

  void send(replica_id from, replica_id to, payload_ptr bytes);
  void broadcast(replica_id from, payload_ptr bytes);  // includes self

  // Arming an armed slot restarts it. Generations make stale fires inert.
  void arm_timer(replica_id who, uint8_t slot, double delay_ms);
  void cancel_timer(replica_id who, uint8_t slot);

  void schedule_crash(replica_id who, double at);
  void schedule_call(double at, std::function<void(net&)> fn);

  double now() const { return now_; }
  bool crashed(replica_id who) const { return crashed_[who]; }
  const std::vector<replica_id>& adversary_targets() const { return targets_; }

  stop_reason run(double until);

  struct stats_t {
    uint64_t messages = 0;
    uint64_t bytes = 0;
    uint64_t dropped_crashed = 0;
    std::vector<uint64_t> egress_bytes;  // per sender
  };
  const stats_t& stats() const { return stats_; }

  // Observability hook, fired when the adversary rolls a new target set.
  std::function<void(double, const std::vector<replica_id>&)> on_epoch;

 private:
  struct ev_message {
    replica_id from = 0, to = 0;
    payload_ptr bytes;
  };
  struct ev_timer {
    replica_id who = 0;
    uint8_t slot = 0;
    uint64_t gen = 0;
  };
  struct ev_crash {
    replica_id who = 0;
  };
  struct ev_call {
    std::function<void(net&)> fn;
  };
  using ev_body = std::variant<ev_message, ev_timer, ev_crash, ev_call>;
  struct event {
    double at = 0;
    uint64_t seq = 0;
    ev_body body;
  };
  struct later {
    bool operator()(const event& a, const event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  void push(double at, ev_body body);
  void roll_targets();
  void epoch_tick();
  bool is_target(replica_id r) const;

  net_params p_;
  std::vector<node_handler*> nodes_;
  std::priority_queue<event, std::vector<event>, later> q_;
  uint64_t next_seq_ = 0;
  double now_ = 0;
  std::vector<char> crashed_;
  std::vector<std::vector<double>> fifo_floor_;  // last delivery per (from,to)
  std::vector<double> egress_free_;              // uplink free time per sender
  std::vector<std::vector<uint64_t>> timer_gen_;
  prng jitter_rng_;
  prng adv_rng_;
  std::vector<replica_id> targets_;
  stats_t stats_;
};

}  // namespace racs::sim
