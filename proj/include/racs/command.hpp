#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "racs/wire.hpp"

namespace racs {

using replica_id = uint32_t;
using view_t = uint64_t;
using round_t = uint64_t;

enum class cmd_op : uint8_t { get = 0, put = 1 };

// A client command. The (client, seq) pair is the identity used for
// exactly-once execution; op/key/value are the logical payload whose size
// the workload generator controls (1 + key + value bytes).
struct command {
  uint32_t client = 0;
  uint64_t seq = 0;
  cmd_op op = cmd_op::put;
  std::string key;
  std::string value;

  auto operator<=>(const command&) const = default;
};

struct command_id {
  uint32_t client = 0;
  uint64_t seq = 0;

  auto operator<=>(const command_id&) const = default;
};

inline command_id id_of(const command& c) { return {c.client, c.seq}; }

void encode(wire::writer& w, const command& c);
command decode_command(wire::reader& r);

// Logical payload size as configured by the workload (op + key + value).
inline size_t logical_size(const command& c) {
  return 1 + c.key.size() + c.value.size();
}

}  // namespace racs
