#include "racs/block.hpp"

namespace racs {

void encode(wire::writer& w, const command& c) {
  w.u32(c.client);
  w.u64(c.seq);
  w.u8(static_cast<uint8_t>(c.op));
  w.str(c.key);
  w.str(c.value);
}

command decode_command(wire::reader& r) {
  command c;
  c.client = r.u32();
  c.seq = r.u64();
  uint8_t op = r.u8();
  if (op > 1) throw wire::decode_error("bad command op");
  c.op = static_cast<cmd_op>(op);
  c.key = r.str();
  c.value = r.str();
  return c;
}

static void encode_payload(wire::writer& w, const payload_t& p) {
  if (const auto* cmds = std::get_if<command_batch>(&p)) {
    w.u8(0);
    w.u32(static_cast<uint32_t>(cmds->size()));
    for (const auto& c : *cmds) encode(w, c);
  } else {
    const auto& vec = std::get<round_vector>(p);
    w.u8(1);
    w.u32(static_cast<uint32_t>(vec.size()));
    for (round_t r : vec) w.u64(r);
  }
}

static payload_t decode_payload(wire::reader& r) {
  uint8_t tag = r.u8();
  uint32_t n = r.u32();
  if (tag == 0) {
    command_batch cmds;
    cmds.reserve(n);
    for (uint32_t i = 0; i < n; ++i) cmds.push_back(decode_command(r));
    return cmds;
  }
  if (tag == 1) {
    round_vector vec;
    vec.reserve(n);
    for (uint32_t i = 0; i < n; ++i) vec.push_back(r.u64());
    return vec;
  }
  throw wire::decode_error("bad payload tag");
}

void encode_for_id(wire::writer& w, const block& b) {
  encode_payload(w, b.payload);
  w.u64(b.view);
  w.u64(b.round);
  w.u8(b.parent ? 1 : 0);
  if (b.parent) w.hash(*b.parent);
  w.i8(b.level);
  w.u32(b.creator);
}

block_id compute_id(const block& b) {
  wire::writer w;
  encode_for_id(w, b);
  return sha256(w.data());
}

void encode(wire::writer& w, const block& b) { encode_for_id(w, b); }

block decode_block(wire::reader& r) {
  block b;
  b.payload = decode_payload(r);
  b.view = r.u64();
  b.round = r.u64();
  if (r.u8()) b.parent = r.hash();
  b.level = r.i8();
  if (b.level != kLevelSync && b.level != kLevelAsync1 && b.level != kLevelAsync2) {
    throw wire::decode_error("bad block level");
  }
  b.creator = r.u32();
  b.id = compute_id(b);
  return b;
}

bool block::operator==(const block& o) const {
  return id == o.id && payload == o.payload && view == o.view &&
         round == o.round && parent == o.parent && level == o.level &&
         creator == o.creator;
}

block make_block(payload_t payload, view_t view, round_t round,
                 std::optional<block_id> parent, int8_t level,
                 replica_id creator) {
  block b;
  b.payload = std::move(payload);
  b.view = view;
  b.round = round;
  b.parent = parent;
  b.level = level;
  b.creator = creator;
  b.id = compute_id(b);
  return b;
}

const block& genesis() {
  static const block g =
      make_block(command_batch{}, 0, 0, std::nullopt, kLevelSync, 0);
  return g;
}

size_t payload_command_count(const payload_t& p) {
  if (const auto* cmds = std::get_if<command_batch>(&p)) return cmds->size();
  return 0;
}

uint64_t payload_hash(const payload_t& p) {
  wire::writer w;
  encode_payload(w, p);
  return fnv1a64(w.data().data(), w.data().size());
}

}  // namespace racs
