#pragma once

#include <cstdio>
#include <ostream>
#include <string_view>

#include "racs/command.hpp"
#include "racs/digest.hpp"

namespace racs {

// NDJSON event log with deterministic formatting: fixed-precision times and
// stable key order, so identical runs produce byte-identical traces.
// Level 0 logs nothing, 1 logs consensus-level events, 2 adds per-message
// and dissemination events.
class trace_writer {
 public:
  trace_writer() = default;
  trace_writer(std::ostream* out, int level) : out_(out), level_(level) {}

  bool want(int level) const { return out_ != nullptr && level <= level_; }

  class line {
   public:
    line(std::ostream* o, double t, replica_id r, const char* ev);
    line(const line&) = delete;
    line& operator=(const line&) = delete;
    ~line();

    line& num(const char* key, uint64_t v);
    line& snum(const char* key, int64_t v);
    line& fnum(const char* key, double v);
    line& str(const char* key, std::string_view v);  // no escaping needed
    line& id(const char* key, const hash256& h);     // 16-hex prefix

   private:
    std::ostream* o_ = nullptr;
  };

  // Usage: trace.event(1, now, self, "commit").num("round", r);
  line event(int level, double t, replica_id r, const char* ev) {
    return line(want(level) ? out_ : nullptr, t, r, ev);
  }

 private:
  std::ostream* out_ = nullptr;
  int level_ = 0;
};

}  // namespace racs
