#pragma once

#include <stdexcept>
#include <string>

namespace racs {

// Internal invariant check. A failure is a protocol bug (or a safety
// violation surfacing inside a replica) and must abort the run loudly
// rather than be papered over.
inline void racs_check(bool cond, const char* what) {
  if (!cond) throw std::logic_error(std::string("invariant violated: ") + what);
}

}  // namespace racs
