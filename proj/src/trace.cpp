#include "racs/trace.hpp"

#include <cinttypes>

namespace racs {

trace_writer::line::line(std::ostream* o, double t, replica_id r,
                         const char* ev)
    : o_(o) {
  if (!o_) return;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "{\"t\":%.3f,\"r\":%u,\"ev\":\"%s\"", t, r, ev);
  *o_ << buf;
}

trace_writer::line::~line() {
  // Flushed per line so an assertion abort keeps the events leading up to it.
  if (o_) *o_ << "}\n" << std::flush;
}

trace_writer::line& trace_writer::line::num(const char* key, uint64_t v) {
  if (!o_) return *this;
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",\"%s\":%" PRIu64, key, v);
  *o_ << buf;
  return *this;
}

trace_writer::line& trace_writer::line::snum(const char* key, int64_t v) {
  if (!o_) return *this;
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",\"%s\":%" PRId64, key, v);
  *o_ << buf;
  return *this;
}

trace_writer::line& trace_writer::line::fnum(const char* key, double v) {
  if (!o_) return *this;
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",\"%s\":%.3f", key, v);
  *o_ << buf;
  return *this;
}

trace_writer::line& trace_writer::line::str(const char* key,
                                            std::string_view v) {
  if (!o_) return *this;
  *o_ << ",\"" << key << "\":\"" << v << "\"";
  return *this;
}

trace_writer::line& trace_writer::line::id(const char* key, const hash256& h) {
  if (!o_) return *this;
  *o_ << ",\"" << key << "\":\"" << to_hex(h.data(), 8) << "\"";
  return *this;
}

}  // namespace racs
