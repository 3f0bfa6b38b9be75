#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rts/config.hpp"
#include "rts/records.hpp"

namespace rts {

// Runs every replicate of cfg (seed, seed + 1, ...) and returns the records
// in replicate order. Replicates run concurrently up to the worker cap.
std::vector<ResultRecord> execute(const RunConfig& cfg);

// Appends the records of execute(cfg) to cfg.out.
void cmd_run(const RunConfig& cfg);

struct MethodSummary {
  std::string method;
  std::size_t count = 0;
  double mean_reward = 0.0;
  double stddev_reward = 0.0;
  double mean_nfe = 0.0;
  std::optional<double> hit_rate;  // only when every record carries a hit flag
};

struct Report {
  std::vector<MethodSummary> methods;  // sorted by name
  // p_greater[{a, b}]: one-sided rank-sum p-value of H1 "a rewards exceed b".
  std::map<std::pair<std::string, std::string>, double> p_greater;
};

Report summarize(const std::vector<ResultRecord>& records);
std::string format_report(const Report& report);
std::string report_json(const Report& report);

// Prints the aligned table to `out` and writes the JSON table to table_path.
// Throws Error on empty input.
void cmd_report(const std::string& results_path, const std::string& table_path, std::ostream& out);

// step,t,x,y,z,curvature,selected for every latent of the trajectory; the k
// highest-curvature interior steps are flagged.
void write_trajectory_csv(std::ostream& out, std::span<const Latent> latents, std::span<const double> times, int k,
                          CurvatureKind kind);

// Denoises the unsearched sample of cfg.seed and exports its trajectory.
void cmd_export_trajectory(const RunConfig& cfg, const std::string& out_path);

// Full command-line front end. Returns the process exit code:
// 0 success, 2 configuration error, 3 any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rts
