#include "racs/messages.hpp"

namespace racs {

uint64_t batch_content_hash(const std::vector<command>& commands) {
  wire::writer w;
  w.u32(static_cast<uint32_t>(commands.size()));
  for (const auto& c : commands) encode(w, c);
  return fnv1a64(w.data().data(), w.size());
}

sadl_batch make_sadl_batch(replica_id creator, round_t round,
                           std::vector<command> commands) {
  sadl_batch b;
  b.creator = creator;
  b.round = round;
  b.has_parent = round > 1;
  b.commands = std::move(commands);
  b.content_hash = batch_content_hash(b.commands);
  return b;
}

static void encode(wire::writer& w, const sadl_batch& b) {
  w.u32(b.creator);
  w.u64(b.round);
  w.u8(b.has_parent ? 1 : 0);
  w.u32(static_cast<uint32_t>(b.commands.size()));
  for (const auto& c : b.commands) encode(w, c);
  w.u64(b.content_hash);
}

static sadl_batch decode_sadl_batch(wire::reader& r) {
  sadl_batch b;
  b.creator = r.u32();
  b.round = r.u64();
  b.has_parent = r.u8() != 0;
  uint32_t n = r.u32();
  b.commands.reserve(n);
  for (uint32_t i = 0; i < n; ++i) b.commands.push_back(decode_command(r));
  b.content_hash = r.u64();
  if (b.content_hash != batch_content_hash(b.commands)) {
    throw wire::decode_error("batch content hash mismatch");
  }
  return b;
}

racs_kind kind_of(const racs_msg& m) {
  return static_cast<racs_kind>(m.index());
}

const char* kind_name(racs_kind k) {
  switch (k) {
    case racs_kind::propose: return "propose";
    case racs_kind::vote: return "vote";
    case racs_kind::timeout: return "timeout";
    case racs_kind::propose_async: return "propose_async";
    case racs_kind::vote_async: return "vote_async";
    case racs_kind::async_complete: return "async_complete";
    case racs_kind::new_view: return "new_view";
    case racs_kind::fetch_blocks: return "fetch_blocks";
    case racs_kind::blocks: return "blocks";
  }
  return "?";
}

static void encode_racs(wire::writer& w, const racs_msg& m) {
  w.u8(static_cast<uint8_t>(m.index()));
  std::visit(
      [&w](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, msg_propose>) {
          encode(w, v.b);
          w.hash(v.block_commit);
        } else if constexpr (std::is_same_v<T, msg_vote>) {
          w.u64(v.view);
          w.u64(v.round);
          w.hash(v.id);
        } else if constexpr (std::is_same_v<T, msg_timeout>) {
          w.u64(v.view);
          w.u64(v.round);
          encode(w, v.b);
        } else if constexpr (std::is_same_v<T, msg_propose_async>) {
          encode(w, v.b);
          w.u32(v.sender);
          w.u8(v.level);
        } else if constexpr (std::is_same_v<T, msg_vote_async>) {
          w.hash(v.id);
          w.u8(v.level);
          w.u64(v.view);
        } else if constexpr (std::is_same_v<T, msg_async_complete>) {
          encode(w, v.b);
          w.u64(v.view);
          w.u32(v.sender);
        } else if constexpr (std::is_same_v<T, msg_new_view>) {
          w.u64(v.view);
          encode(w, v.b);
        } else if constexpr (std::is_same_v<T, msg_fetch_blocks>) {
          w.hash(v.missing);
          w.u64(v.floor_round);
        } else if constexpr (std::is_same_v<T, msg_blocks>) {
          w.u32(static_cast<uint32_t>(v.segment.size()));
          for (const auto& b : v.segment) encode(w, b);
        }
      },
      m);
}

static racs_msg decode_racs(wire::reader& r) {
  uint8_t tag = r.u8();
  switch (static_cast<racs_kind>(tag)) {
    case racs_kind::propose: {
      msg_propose m;
      m.b = decode_block(r);
      m.block_commit = r.hash();
      return m;
    }
    case racs_kind::vote: {
      msg_vote m;
      m.view = r.u64();
      m.round = r.u64();
      m.id = r.hash();
      return m;
    }
    case racs_kind::timeout: {
      msg_timeout m;
      m.view = r.u64();
      m.round = r.u64();
      m.b = decode_block(r);
      return m;
    }
    case racs_kind::propose_async: {
      msg_propose_async m;
      m.b = decode_block(r);
      m.sender = r.u32();
      m.level = r.u8();
      if (m.level != 1 && m.level != 2) throw wire::decode_error("bad level");
      return m;
    }
    case racs_kind::vote_async: {
      msg_vote_async m;
      m.id = r.hash();
      m.level = r.u8();
      m.view = r.u64();
      if (m.level != 1 && m.level != 2) throw wire::decode_error("bad level");
      return m;
    }
    case racs_kind::async_complete: {
      msg_async_complete m;
      m.b = decode_block(r);
      m.view = r.u64();
      m.sender = r.u32();
      return m;
    }
    case racs_kind::new_view: {
      msg_new_view m;
      m.view = r.u64();
      m.b = decode_block(r);
      return m;
    }
    case racs_kind::fetch_blocks: {
      msg_fetch_blocks m;
      m.missing = r.hash();
      m.floor_round = r.u64();
      return m;
    }
    case racs_kind::blocks: {
      msg_blocks m;
      uint32_t n = r.u32();
      m.segment.reserve(n);
      for (uint32_t i = 0; i < n; ++i) m.segment.push_back(decode_block(r));
      return m;
    }
  }
  throw wire::decode_error("bad consensus message tag");
}

static void encode_sadl(wire::writer& w, const sadl_msg& m) {
  w.u8(static_cast<uint8_t>(m.index()));
  std::visit(
      [&w](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, msg_sadl_new_batch>) {
          encode(w, v.batch);
        } else if constexpr (std::is_same_v<T, msg_sadl_vote>) {
          w.u64(v.round);
        } else if constexpr (std::is_same_v<T, msg_sadl_fetch>) {
          w.u32(v.creator);
          w.u64(v.round);
          w.u64(v.have_upto);
        } else if constexpr (std::is_same_v<T, msg_sadl_batches>) {
          w.u32(v.creator);
          w.u32(static_cast<uint32_t>(v.segment.size()));
          for (const auto& b : v.segment) encode(w, b);
        }
      },
      m);
}

static sadl_msg decode_sadl(wire::reader& r) {
  uint8_t tag = r.u8();
  switch (tag) {
    case 0: {
      msg_sadl_new_batch m;
      m.batch = decode_sadl_batch(r);
      return m;
    }
    case 1: {
      msg_sadl_vote m;
      m.round = r.u64();
      return m;
    }
    case 2: {
      msg_sadl_fetch m;
      m.creator = r.u32();
      m.round = r.u64();
      m.have_upto = r.u64();
      return m;
    }
    case 3: {
      msg_sadl_batches m;
      m.creator = r.u32();
      uint32_t n = r.u32();
      m.segment.reserve(n);
      for (uint32_t i = 0; i < n; ++i) m.segment.push_back(decode_sadl_batch(r));
      return m;
    }
  }
  throw wire::decode_error("bad dissemination message tag");
}

std::vector<uint8_t> encode_envelope(const envelope& e) {
  wire::writer w;
  w.u8(static_cast<uint8_t>(e.index()));
  if (const auto* rm = std::get_if<racs_msg>(&e)) {
    encode_racs(w, *rm);
  } else if (const auto* sm = std::get_if<sadl_msg>(&e)) {
    encode_sadl(w, *sm);
  } else {
    const auto& cf = std::get<client_forward>(e);
    w.u32(static_cast<uint32_t>(cf.commands.size()));
    for (const auto& c : cf.commands) encode(w, c);
  }
  return w.take();
}

envelope decode_envelope(const std::vector<uint8_t>& bytes) {
  wire::reader r(bytes);
  uint8_t family = r.u8();
  envelope out;
  switch (family) {
    case 0:
      out = decode_racs(r);
      break;
    case 1:
      out = decode_sadl(r);
      break;
    case 2: {
      client_forward cf;
      uint32_t n = r.u32();
      cf.commands.reserve(n);
      for (uint32_t i = 0; i < n; ++i) cf.commands.push_back(decode_command(r));
      out = cf;
      break;
    }
    default:
      throw wire::decode_error("bad envelope family");
  }
  r.expect_done();
  return out;
}

}  // namespace racs
