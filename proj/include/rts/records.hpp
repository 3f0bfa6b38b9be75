#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rts/config.hpp"

namespace rts {

// One line of a results file.
struct ResultRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::uint64_t nfe_used = 0;
  double final_reward = 0.0;
  std::vector<double> final_sample;
  std::vector<double> rounds_initial;       // best reward per initial-phase round
  std::vector<double> rounds_intermediate;  // same, concatenated over key steps
  std::vector<int> key_steps;
  bool truncated = false;
  std::optional<bool> preferred_hit;  // mode-preference rewards only
  double wall_ms = 0.0;
  std::vector<std::pair<std::string, std::string>> overrides;

  bool operator==(const ResultRecord&) const = default;
};

ResultRecord make_record(const RunResult& result, const RunConfig& cfg, const MixtureModel& model, double wall_ms);

// Single line, no trailing newline. Leaving out the wall clock gives a string
// that is identical across reruns of the same config and seed.
std::string emit_record(const ResultRecord& r, bool include_wall_clock = true);
ResultRecord parse_record(const std::string& line);

// Blank lines are skipped. Throws Error naming the line on malformed input.
std::vector<ResultRecord> read_records(const std::string& path);

}  // namespace rts
