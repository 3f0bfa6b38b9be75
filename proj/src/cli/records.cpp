#include "rts/records.hpp"

#include <fstream>

#include <json.hpp>

namespace rts {

using json = nlohmann::ordered_json;

ResultRecord make_record(const RunResult& result, const RunConfig& cfg, const MixtureModel& model, double wall_ms) {
  ResultRecord r;
  r.method = to_string(result.method);
  r.seed = result.seed;
  r.nfe_used = result.nfe_used;
  r.final_reward = result.final_reward.value();
  r.final_sample.assign(result.final_sample.values().begin(), result.final_sample.values().end());
  r.rounds_initial = result.round_history.initial;
  r.rounds_intermediate = result.round_history.intermediate;
  if (result.key_steps) r.key_steps = result.key_steps->indices;
  r.truncated = result.truncated;
  if (cfg.reward.kind == RewardKind::kModePreference) {
    r.preferred_hit = nearest_component(model, result.final_sample) == cfg.reward.preferred;
  }
  r.wall_ms = wall_ms;
  r.overrides = cfg.overrides;
  return r;
}

std::string emit_record(const ResultRecord& r, bool include_wall_clock) {
  json j;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["nfe_used"] = r.nfe_used;
  j["final_reward"] = r.final_reward;
  j["final_sample"] = r.final_sample;
  j["round_history"] = {{"initial", r.rounds_initial}, {"intermediate", r.rounds_intermediate}};
  j["key_steps"] = r.key_steps;
  j["truncated"] = r.truncated;
  j["preferred_hit"] = r.preferred_hit ? json(*r.preferred_hit) : json(nullptr);
  json ov = json::object();
  for (const auto& [k, v] : r.overrides) ov[k] = v;
  j["overrides"] = ov;
  if (include_wall_clock) j["wall_ms"] = r.wall_ms;
  return j.dump();
}

ResultRecord parse_record(const std::string& line) {
  try {
    const json j = json::parse(line);
    ResultRecord r;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.nfe_used = j.at("nfe_used").get<std::uint64_t>();
    r.final_reward = j.at("final_reward").get<double>();
    r.final_sample = j.at("final_sample").get<std::vector<double>>();
    r.rounds_initial = j.at("round_history").at("initial").get<std::vector<double>>();
    r.rounds_intermediate = j.at("round_history").at("intermediate").get<std::vector<double>>();
    r.key_steps = j.at("key_steps").get<std::vector<int>>();
    r.truncated = j.at("truncated").get<bool>();
    if (!j.at("preferred_hit").is_null()) r.preferred_hit = j.at("preferred_hit").get<bool>();
    for (const auto& [k, v] : j.at("overrides").items()) r.overrides.emplace_back(k, v.get<std::string>());
    if (j.contains("wall_ms")) r.wall_ms = j.at("wall_ms").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed record: ") + e.what());
  }
}

std::vector<ResultRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open results file");
  std::vector<ResultRecord> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace rts
