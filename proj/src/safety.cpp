#include "racs/safety.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "racs/block.hpp"
#include "racs/config.hpp"

namespace racs {

namespace {

std::string short_id(const hash256& h) { return to_hex(h.data(), 8); }

}  // namespace

std::optional<safety_violation> check_chains(
    const std::vector<std::vector<chain_entry>>& chains) {
  const hash256 root = genesis().id;
  size_t max_len = 0;
  for (const auto& c : chains) max_len = std::max(max_len, c.size());

  for (size_t k = 0; k < max_len; ++k) {
    round_t want_round = static_cast<round_t>(k + 1);

    // Per-chain structure at this height.
    for (size_t i = 0; i < chains.size(); ++i) {
      if (chains[i].size() <= k) continue;
      const chain_entry& e = chains[i][k];
      std::ostringstream d;
      if (e.round != want_round) {
        d << "replica " << i << " entry " << k << " has round " << e.round
          << ", expected " << want_round;
        return safety_violation{"structure", want_round, d.str()};
      }
      const hash256& want_parent = k == 0 ? root : chains[i][k - 1].id;
      if (e.parent != want_parent) {
        d << "replica " << i << " round " << e.round << " parent "
          << short_id(e.parent) << " does not link " << short_id(want_parent);
        return safety_violation{"structure", want_round, d.str()};
      }
      if (k > 0 && e.view < chains[i][k - 1].view) {
        d << "replica " << i << " round " << e.round << " view " << e.view
          << " below prior view " << chains[i][k - 1].view;
        return safety_violation{"structure", want_round, d.str()};
      }
    }

    // Cross-replica agreement at this height.
    const chain_entry* first = nullptr;
    size_t first_at = 0;
    for (size_t i = 0; i < chains.size(); ++i) {
      if (chains[i].size() <= k) continue;
      const chain_entry& e = chains[i][k];
      if (!first) {
        first = &e;
        first_at = i;
        continue;
      }
      std::ostringstream d;
      if (e.id != first->id) {
        d << "round " << want_round << " block differs: replica " << first_at
          << " has " << short_id(first->id) << ", replica " << i << " has "
          << short_id(e.id);
        return safety_violation{"divergence", want_round, d.str()};
      }
      if (e.payload_hash != first->payload_hash ||
          e.n_commands != first->n_commands) {
        d << "round " << want_round << " payload differs between replicas "
          << first_at << " and " << i;
        return safety_violation{"divergence", want_round, d.str()};
      }
      if (e.kv_digest != first->kv_digest) {
        d << "round " << want_round << " KV digest differs: replica "
          << first_at << " has " << first->kv_digest << ", replica " << i
          << " has " << e.kv_digest;
        return safety_violation{"divergence", want_round, d.str()};
      }
    }
  }
  return std::nullopt;
}

void write_chains_ndjson(std::ostream& out,
                         const std::vector<std::vector<chain_entry>>& chains) {
  for (size_t i = 0; i < chains.size(); ++i) {
    for (const chain_entry& e : chains[i]) {
      nlohmann::json j;
      j["r"] = i;
      j["round"] = e.round;
      j["view"] = e.view;
      j["level"] = static_cast<int>(e.level);
      j["id"] = to_hex(e.id);
      j["parent"] = to_hex(e.parent);
      j["kind"] = static_cast<int>(e.payload_kind);
      j["phash"] = e.payload_hash;
      j["ncmd"] = e.n_commands;
      j["digest"] = e.kv_digest;
      j["t"] = e.commit_time;
      out << j.dump() << "\n";
    }
  }
}

std::vector<std::vector<chain_entry>> read_chains_ndjson(std::istream& in) {
  std::vector<std::vector<chain_entry>> chains;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw config_error("chains line " + std::to_string(lineno) + ": " +
                         e.what());
    }
    try {
      size_t r = j.at("r").get<size_t>();
      if (r > 4096) throw config_error("chains: replica index out of range");
      if (chains.size() <= r) chains.resize(r + 1);
      chain_entry e;
      e.round = j.at("round").get<round_t>();
      e.view = j.at("view").get<view_t>();
      e.level = static_cast<int8_t>(j.at("level").get<int>());
      from_hex(j.at("id").get<std::string>(), e.id.data(), e.id.size());
      from_hex(j.at("parent").get<std::string>(), e.parent.data(),
               e.parent.size());
      e.payload_kind = static_cast<uint8_t>(j.at("kind").get<int>());
      e.payload_hash = j.at("phash").get<uint64_t>();
      e.n_commands = j.at("ncmd").get<uint64_t>();
      e.kv_digest = j.at("digest").get<uint64_t>();
      e.commit_time = j.at("t").get<double>();
      chains[r].push_back(e);
    } catch (const nlohmann::json::exception& e) {
      throw config_error("chains line " + std::to_string(lineno) + ": " +
                         e.what());
    } catch (const std::invalid_argument& e) {
      throw config_error("chains line " + std::to_string(lineno) + ": " +
                         e.what());
    }
  }
  for (auto& c : chains) {
    std::sort(c.begin(), c.end(),
              [](const chain_entry& a, const chain_entry& b) {
                return a.round < b.round;
              });
  }
  return chains;
}

}  // namespace racs
