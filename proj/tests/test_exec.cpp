#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>
#include <string>
#include <vector>

#include "racs/block.hpp"
#include "racs/check.hpp"
#include "racs/exec.hpp"
#include "racs/kv.hpp"
#include "racs/sadl.hpp"

using namespace racs;

namespace {

command put(uint32_t client, uint64_t seq, std::string key, std::string value) {
  command c;
  c.client = client;
  c.seq = seq;
  c.op = cmd_op::put;
  c.key = std::move(key);
  c.value = std::move(value);
  return c;
}

command get(uint32_t client, uint64_t seq, std::string key) {
  command c;
  c.client = client;
  c.seq = seq;
  c.op = cmd_op::get;
  c.key = std::move(key);
  return c;
}

// Batch store preloaded through the repair path, bypassing live streams.
sadl::sadl_core store_with(uint32_t n,
                           const std::vector<sadl_batch>& batches) {
  sadl::sadl_core::params p;
  p.self = n - 1;
  p.n = n;
  p.f = (n - 1) / 2;
  sadl::sadl_core s(p);
  for (const auto& b : batches)
    s.on_message(0, msg_sadl_batches{b.creator, {b}});
  return s;
}

block vec_block(round_vector v, round_t round, block_id parent) {
  return make_block(std::move(v), 1, round, parent, kLevelSync, 0);
}

std::vector<command_id> ids_of(const std::vector<exec_engine::exec_event>& ev) {
  std::vector<command_id> out;
  for (const auto& e : ev) out.push_back(e.id);
  return out;
}

}  // namespace

TEST_CASE("kv store applies puts and serves gets") {
  kv_store kv;
  kv.apply(put(1, 1, "k", "v"));
  auto hit = kv.apply(get(1, 2, "k"));
  REQUIRE(hit.value.has_value());
  CHECK(*hit.value == "v");
  CHECK(!kv.apply(get(1, 3, "absent")).value.has_value());
  CHECK(kv.get("k") == std::optional<std::string>("v"));
  CHECK(kv.size() == 1);
}

TEST_CASE("kv digest depends on content, not history") {
  kv_store a, b, c;
  a.apply(put(1, 1, "x", "1"));
  a.apply(put(1, 2, "y", "2"));
  b.apply(put(2, 1, "y", "2"));
  b.apply(put(2, 2, "x", "1"));
  CHECK(a.digest() == b.digest());

  // An overwrite retires the old pair's contribution entirely.
  c.apply(put(3, 1, "x", "0"));
  c.apply(put(3, 2, "x", "1"));
  c.apply(put(3, 3, "y", "2"));
  CHECK(c.digest() == a.digest());
  CHECK(a.digest() != 0);

  a.apply(get(1, 9, "x"));
  CHECK(a.digest() == b.digest());  // reads leave state alone
}

TEST_CASE("direct mode executes a block's commands and records it") {
  exec_engine e(exec_engine::mode::direct, 3);
  block b = make_block(command_batch{put(1, 1, "a", "1"), put(1, 2, "b", "2")},
                       1, 1, genesis().id, kLevelSync, 0);
  const auto& out = e.on_commit(b, 250.0, nullptr);

  REQUIRE(out.fresh.size() == 2);
  CHECK(out.fresh[0].id == command_id{1, 1});
  CHECK(out.fresh[0].commit_time == 250.0);
  CHECK(out.need.empty());
  CHECK(e.kv().get("a") == std::optional<std::string>("1"));

  REQUIRE(e.chain().size() == 1);
  const chain_entry& ce = e.chain()[0];
  CHECK(ce.round == 1);
  CHECK(ce.view == 1);
  CHECK(ce.id == b.id);
  CHECK(ce.parent == genesis().id);
  CHECK(ce.payload_kind == 0);
  CHECK(ce.payload_hash == payload_hash(b.payload));
  CHECK(ce.n_commands == 2);
  CHECK(ce.kv_digest == e.kv_digest());
  CHECK(ce.commit_time == 250.0);
}

TEST_CASE("a command id is applied exactly once across retries") {
  exec_engine e(exec_engine::mode::direct, 3);
  block b1 = make_block(command_batch{put(7, 1, "k", "first")}, 1, 1,
                        genesis().id, kLevelSync, 0);
  // A client retry lands the same id in a later block with different bytes.
  block b2 = make_block(command_batch{put(7, 1, "k", "second")}, 1, 2, b1.id,
                        kLevelSync, 0);

  CHECK(e.on_commit(b1, 10, nullptr).fresh.size() == 1);
  const auto& out2 = e.on_commit(b2, 20, nullptr);
  CHECK(out2.fresh.empty());
  CHECK(e.kv().get("k") == std::optional<std::string>("first"));
  CHECK(e.is_applied(command_id{7, 1}));
  CHECK(e.chain().size() == 2);
}

TEST_CASE("vector commits execute newly covered batches in creator order") {
  auto store = store_with(
      3, {make_sadl_batch(0, 1, {put(10, 1, "a", "1")}),
          make_sadl_batch(0, 2, {put(10, 2, "b", "2")}),
          make_sadl_batch(1, 1, {put(11, 1, "c", "3")})});
  exec_engine e(exec_engine::mode::vectors, 3);

  const auto& out = e.on_commit(vec_block({2, 1, 0}, 1, genesis().id), 100,
                                &store);
  CHECK(out.need.empty());
  CHECK(ids_of(out.fresh) ==
        std::vector<command_id>{{10, 1}, {10, 2}, {11, 1}});
  CHECK(e.executed_upto() == round_vector{2, 1, 0});
  CHECK(e.backlog() == 0);
  REQUIRE(e.chain().size() == 1);
  CHECK(e.chain()[0].payload_kind == 1);
  CHECK(e.chain()[0].n_commands == 0);
}

TEST_CASE("an unchanged vector commits no new work") {
  auto store = store_with(3, {make_sadl_batch(0, 1, {put(10, 1, "a", "1")})});
  exec_engine e(exec_engine::mode::vectors, 3);
  block b1 = vec_block({1, 0, 0}, 1, genesis().id);
  e.on_commit(b1, 10, &store);

  const auto& out = e.on_commit(vec_block({1, 0, 0}, 2, b1.id), 20, &store);
  CHECK(out.fresh.empty());
  CHECK(e.chain().size() == 2);
  CHECK(e.executed_upto() == round_vector{1, 0, 0});
}

TEST_CASE("stale vector entries are skipped as already executed") {
  auto store = store_with(
      3, {make_sadl_batch(0, 1, {put(10, 1, "a", "1")}),
          make_sadl_batch(0, 2, {put(10, 2, "b", "2")}),
          make_sadl_batch(2, 1, {put(12, 1, "c", "3")})});
  exec_engine e(exec_engine::mode::vectors, 3);
  block b1 = vec_block({2, 0, 0}, 1, genesis().id);
  e.on_commit(b1, 10, &store);

  // A slower proposer's snapshot: lower for creator 0, newer for creator 2.
  const auto& out = e.on_commit(vec_block({1, 0, 1}, 2, b1.id), 20, &store);
  CHECK(ids_of(out.fresh) == std::vector<command_id>{{12, 1}});
  CHECK(e.executed_upto() == round_vector{2, 0, 1});
}

TEST_CASE("execution stalls on missing batches and resumes after repair") {
  sadl::sadl_core::params sp;
  sp.self = 2;
  sp.n = 3;
  sp.f = 1;
  sadl::sadl_core store(sp);
  exec_engine e(exec_engine::mode::vectors, 3);

  block b1 = vec_block({1, 0, 0}, 1, genesis().id);
  const auto& out = e.on_commit(b1, 10, &store);
  CHECK(out.fresh.empty());
  REQUIRE(out.need.size() == 1);
  CHECK(out.need[0] == std::make_pair(replica_id{0}, round_t{1}));
  CHECK(e.backlog() == 1);
  CHECK(e.chain().empty());

  // Later commits queue behind the stalled one in order.
  const auto& out2 = e.on_commit(vec_block({1, 1, 0}, 2, b1.id), 20, &store);
  CHECK(out2.fresh.empty());
  CHECK(e.backlog() == 2);

  store.on_message(0, msg_sadl_batches{0, {make_sadl_batch(
                          0, 1, {put(10, 1, "a", "1")})}});
  const auto& d1 = e.drain(store);
  // The first block runs; the second still waits on creator 1.
  CHECK(ids_of(d1.fresh) == std::vector<command_id>{{10, 1}});
  CHECK(d1.need == std::vector<std::pair<replica_id, round_t>>{{1, 1}});
  CHECK(e.backlog() == 1);

  store.on_message(0, msg_sadl_batches{1, {make_sadl_batch(
                          1, 1, {put(11, 1, "b", "2")})}});
  const auto& d2 = e.drain(store);
  CHECK(ids_of(d2.fresh) == std::vector<command_id>{{11, 1}});
  CHECK(e.backlog() == 0);
  CHECK(e.chain().size() == 2);
  CHECK(e.executed_upto() == round_vector{1, 1, 0});
}

TEST_CASE("replicas fed the same chain agree on every digest") {
  auto feed = [](exec_engine& e) {
    block b1 = make_block(command_batch{put(1, 1, "a", "1")}, 1, 1,
                          genesis().id, kLevelSync, 0);
    block b2 = make_block(command_batch{put(2, 1, "b", "2"), get(2, 2, "a")},
                          1, 2, b1.id, kLevelSync, 1);
    e.on_commit(b1, 10, nullptr);
    e.on_commit(b2, 20, nullptr);
  };
  exec_engine a(exec_engine::mode::direct, 3);
  exec_engine b(exec_engine::mode::direct, 3);
  feed(a);
  feed(b);
  REQUIRE(a.chain().size() == b.chain().size());
  for (size_t i = 0; i < a.chain().size(); ++i)
    CHECK(a.chain()[i].kv_digest == b.chain()[i].kv_digest);
  CHECK(a.kv_digest() == b.kv_digest());
}

TEST_CASE("payload kind must match the execution mode") {
  exec_engine direct(exec_engine::mode::direct, 3);
  exec_engine vectors(exec_engine::mode::vectors, 3);
  sadl::sadl_core::params sp;
  sp.self = 0;
  sp.n = 3;
  sp.f = 1;
  sadl::sadl_core store(sp);

  block vb = vec_block({0, 0, 0}, 1, genesis().id);
  block cb = make_block(command_batch{}, 1, 1, genesis().id, kLevelSync, 0);

  CHECK_THROWS_AS(direct.on_commit(vb, 10, nullptr), std::logic_error);
  CHECK_THROWS_AS(vectors.on_commit(cb, 10, &store), std::logic_error);
  CHECK_THROWS_AS(vectors.on_commit(vb, 10, nullptr), std::logic_error);

  block bad = vec_block({0, 0}, 1, genesis().id);  // arity 2 in a 3-net
  CHECK_THROWS_AS(vectors.on_commit(bad, 10, &store), std::logic_error);
}
