#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "racs/config.hpp"
#include "racs/core.hpp"
#include "racs/exec.hpp"
#include "racs/metrics.hpp"
#include "racs/sadl.hpp"
#include "racs/simnet.hpp"
#include "racs/trace.hpp"

namespace racs {

// One full replica wired into the simulator: consensus core, dissemination
// layer (SADL mode), execution engine, client command routing and timers.
// All policy that needs a clock or a payload source lives here; the cores
// stay pure.
class replica_node : public sim::node_handler {
 public:
  replica_node(replica_id self, const sim_config& cfg, sim::net& net,
               metrics& met, trace_writer& tr, coin_fn coin);

  // Workload entry: commands arriving at this replica's front end.
  void on_client_commands(std::vector<command> cmds, double now);

  void on_message(replica_id from, const std::vector<uint8_t>& bytes,
                  double now) override;
  void on_timer(uint8_t slot, double now) override;

  const exec_engine& exec() const { return exec_; }
  const racs_core& consensus() const { return core_; }
  std::string describe() const;

  static constexpr uint8_t kSlotProgress = 0;
  static constexpr uint8_t kSlotFetch = 1;
  static constexpr uint8_t kSlotBatch = 2;

 private:
  struct pending_cmd {
    command cmd;
    bool mine = false;  // arrived via workload here (vs forwarded copy)
  };

  bool leader_now() const { return core_.leader_of(core_.view()) == self_; }
  payload_t fallback_payload();
  std::vector<command> drain_available(size_t cap);
  size_t live_available() const;
  void reset_in_flight();
  void compact_inflight();
  void forward_mine(double now);

  void process_core(const core_output& out, double now);
  void process_sadl(const sadl::sadl_output& out, double now);
  void handle_exec_output(const exec_engine::output& out, double now);
  void post_step(double now);
  void sync_batch_timer(double now);

  void send_racs(const std::optional<replica_id>& to, const racs_msg& m,
                 double now);
  void send_sadl(const std::optional<replica_id>& to, const sadl_msg& m,
                 double now);
  void send_forward(replica_id to, std::vector<command> cmds, double now);
  void transmit(const std::optional<replica_id>& to, const envelope& e,
                const char* kind, std::optional<view_t> phase, double now);

  replica_id self_;
  const sim_config& cfg_;
  sim::net& net_;
  metrics& met_;
  trace_writer& tr_;

  racs_core core_;
  std::optional<sadl::sadl_core> sadl_;
  exec_engine exec_;

  // Pipelined-mode client backlog. The id sets are authoritative; committed
  // commands leave the sets first and their queue entries are skipped lazily.
  std::deque<pending_cmd> available_;
  std::vector<pending_cmd> inflight_;
  std::set<command_id> avail_ids_;
  std::set<command_id> inflight_ids_;

  bool was_async_ = false;
  view_t last_view_ = 0;
  bool exit_committed_flag_ = false;
  std::optional<round_vector> last_proposed_vec_;
  double last_propose_time_ = 0;
  double armed_batch_deadline_ = -1;
};

}  // namespace racs
