#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "racs/exec.hpp"

namespace racs {

struct safety_violation {
  std::string kind;  // "structure" or "divergence"
  round_t round = 0;
  std::string detail;
};

// Cross-checks the executed chains of all replicas: every chain must be a
// consecutive run of rounds rooted at the genesis id with nondecreasing
// views, and any two chains must agree byte for byte on every round both
// have. Returns the violation at the lowest round, or nullopt.
std::optional<safety_violation> check_chains(
    const std::vector<std::vector<chain_entry>>& chains);

// Chain dumps: one JSON object per line, replica-major then round order.
void write_chains_ndjson(std::ostream& out,
                         const std::vector<std::vector<chain_entry>>& chains);

// Throws config_error on malformed input.
std::vector<std::vector<chain_entry>> read_chains_ndjson(std::istream& in);

}  // namespace racs
