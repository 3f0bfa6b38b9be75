#include "rts/commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rts/stats.hpp"

namespace rts {
namespace {

RunResult run_method(const RunConfig& cfg, const MixtureModel& model, const RewardModel& reward, std::uint64_t seed,
                     unsigned workers) {
  const RngStream stream(seed);
  switch (cfg.method) {
    case Method::kRts: {
      RtsConfig rts = cfg.rts;
      rts.workers = workers;
      return run_rts(model, cfg.solver, reward, rts, stream);
    }
    case Method::kBon:
      return run_bon(model, cfg.solver, reward, cfg.baseline_budget(), stream, workers);
    case Method::kZo:
      return run_zo(model, cfg.solver, reward, cfg.baseline_budget(), cfg.zo_step_tau, stream);
    case Method::kFree:
      return run_free(model, cfg.solver, reward, stream);
  }
  throw Error("unknown method");
}

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

std::vector<ResultRecord> execute(const RunConfig& cfg) {
  const MixtureModel model = cfg.build_model();
  const RewardModel reward = cfg.build_reward(model);
  const unsigned workers = capped_workers(cfg.workers);
  const auto n = static_cast<std::size_t>(cfg.replicates);

  std::vector<std::optional<ResultRecord>> slots(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const RunResult result = run_method(cfg, model, reward, cfg.seed + i, workers);
    const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
    slots[i] = make_record(result, cfg, model, elapsed.count());
  });

  std::vector<ResultRecord> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

void cmd_run(const RunConfig& cfg) {
  // Open before running so an unwritable path fails fast.
  std::ofstream file(cfg.out, std::ios::app);
  if (!file) throw Error(cfg.out + ": cannot open output file for writing");
  for (const auto& r : execute(cfg)) file << emit_record(r) << '\n';
  file.flush();
  if (!file) throw Error(cfg.out + ": write failed");
}

Report summarize(const std::vector<ResultRecord>& records) {
  if (records.empty()) throw Error("report: no records");
  std::map<std::string, std::vector<const ResultRecord*>> groups;
  for (const auto& r : records) groups[r.method].push_back(&r);

  Report report;
  std::map<std::string, std::vector<double>> rewards;
  for (const auto& [method, rs] : groups) {
    MethodSummary s;
    s.method = method;
    s.count = rs.size();
    std::vector<double> nfe;
    std::size_t hits = 0;
    bool all_flagged = true;
    for (const auto* r : rs) {
      rewards[method].push_back(r->final_reward);
      nfe.push_back(static_cast<double>(r->nfe_used));
      if (r->preferred_hit) {
        hits += *r->preferred_hit ? 1 : 0;
      } else {
        all_flagged = false;
      }
    }
    s.mean_reward = stats::mean(rewards[method]);
    s.stddev_reward = stats::stddev(rewards[method]);
    s.mean_nfe = stats::mean(nfe);
    if (all_flagged) s.hit_rate = static_cast<double>(hits) / static_cast<double>(rs.size());
    report.methods.push_back(s);
  }
  for (const auto& a : report.methods) {
    for (const auto& b : report.methods) {
      if (a.method == b.method) continue;
      report.p_greater[{a.method, b.method}] = stats::rank_sum_greater(rewards[a.method], rewards[b.method]);
    }
  }
  return report;
}

std::string format_report(const Report& report) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "method" << std::right << std::setw(8) << "n" << std::setw(12) << "mean"
     << std::setw(12) << "stddev" << std::setw(12) << "mean_nfe" << std::setw(10) << "hit_rate" << '\n';
  for (const auto& s : report.methods) {
    os << std::left << std::setw(8) << s.method << std::right << std::setw(8) << s.count << std::setw(12)
       << fixed(s.mean_reward, 4) << std::setw(12) << fixed(s.stddev_reward, 4) << std::setw(12)
       << fixed(s.mean_nfe, 1) << std::setw(10) << (s.hit_rate ? fixed(*s.hit_rate, 3) : "-") << '\n';
  }
  if (!report.p_greater.empty()) {
    os << "\none-sided rank-sum p-values, P(row > column):\n" << std::left << std::setw(8) << "";
    for (const auto& s : report.methods) os << std::right << std::setw(12) << s.method;
    os << '\n';
    for (const auto& a : report.methods) {
      os << std::left << std::setw(8) << a.method << std::right;
      for (const auto& b : report.methods) {
        if (a.method == b.method) {
          os << std::setw(12) << "-";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%.3g", report.p_greater.at({a.method, b.method}));
          os << std::setw(12) << buf;
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string report_json(const Report& report) {
  nlohmann::ordered_json j;
  j["methods"] = nlohmann::ordered_json::array();
  for (const auto& s : report.methods) {
    nlohmann::ordered_json m;
    m["method"] = s.method;
    m["count"] = s.count;
    m["mean_reward"] = s.mean_reward;
    m["stddev_reward"] = s.stddev_reward;
    m["mean_nfe"] = s.mean_nfe;
    m["hit_rate"] = s.hit_rate ? nlohmann::ordered_json(*s.hit_rate) : nlohmann::ordered_json(nullptr);
    j["methods"].push_back(m);
  }
  j["p_greater"] = nlohmann::ordered_json::array();
  for (const auto& [pair, p] : report.p_greater) {
    j["p_greater"].push_back({{"a", pair.first}, {"b", pair.second}, {"p", p}});
  }
  return j.dump(2);
}

void cmd_report(const std::string& results_path, const std::string& table_path, std::ostream& out) {
  const Report report = summarize(read_records(results_path));
  std::ofstream table(table_path);
  if (!table) throw Error(table_path + ": cannot open table file for writing");
  table << report_json(report) << '\n';
  if (!table) throw Error(table_path + ": write failed");
  out << format_report(report);
}

void write_trajectory_csv(std::ostream& out, std::span<const Latent> latents, std::span<const double> times, int k,
                          CurvatureKind kind) {
  if (times.size() != latents.size()) throw PreconditionError("write_trajectory_csv: one time per latent required");
  const ProjectedTrajectory proj = project_trajectory(latents);
  const auto profile = curvature_profile(proj.points, kind);
  std::vector<bool> selected(latents.size(), false);
  if (k > 0) {
    for (int i : select_key_steps(proj, k, kind).indices) selected[i] = true;
  }
  out << "step,t,x,y,z,curvature,selected\n" << std::setprecision(17);
  for (std::size_t l = 0; l < latents.size(); ++l) {
    const auto& p = proj.points[l];
    out << l << ',' << times[l] << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << profile[l] << ','
        << (selected[l] ? 1 : 0) << '\n';
  }
}

void cmd_export_trajectory(const RunConfig& cfg, const std::string& out_path) {
  const MixtureModel model = cfg.build_model();
  const RewardModel reward = cfg.build_reward(model);
  const RngStream stream(cfg.seed);
  const RunResult free = run_free(model, cfg.solver, reward, stream);
  NfeCounter nfe;
  const NoiseTrajectory traj =
      denoise(model, cfg.solver, free.final_init, std::span<const Latent>(free.final_injected), stream, nfe);

  std::ofstream file(out_path);
  if (!file) throw Error(out_path + ": cannot open output file for writing");
  write_trajectory_csv(file, traj.latents, traj.step_times, cfg.rts.k_keysteps, cfg.rts.curvature);
  if (!file) throw Error(out_path + ": write failed");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reward-guided trajectory search on a Gaussian-mixture flow testbed"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> override_args;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<std::string> method;
  std::optional<std::uint64_t> budget;
  std::optional<std::string> out_path;
  std::optional<int> workers;

  auto* run = app.add_subcommand("run", "Run the configured method for every replicate seed");
  auto* report = app.add_subcommand("report", "Summarize a results file");
  auto* export_traj = app.add_subcommand("export-trajectory", "Write the projected denoising path as CSV");

  for (auto* sub : {run, export_traj}) {
    sub->add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Root seed");
    sub->add_option("--method", method, "rts, bon, zo or free");
    sub->add_option("--budget", budget, "NFE budget for every method");
    sub->add_option("--out", out_path, "Output path");
    sub->add_option("--workers", workers, "Worker threads");
    sub->add_option("overrides", override_args, "Dotted-key overrides, e.g. search_init.alpha=0.7");
  }
  run->add_option("--replicates", replicates, "Number of replicate seeds");

  std::string results_path;
  std::string table_path;
  report->add_option("results", results_path, "JSON-lines results file")->required();
  report->add_option("--out", table_path, "Machine-readable table (default: <results>.summary.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (report->parsed()) {
      cmd_report(results_path, table_path.empty() ? results_path + ".summary.json" : table_path, out);
      return 0;
    }

    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& text : override_args) overrides.push_back(parse_override(text));
    if (seed) overrides.emplace_back("seed", std::to_string(*seed));
    if (replicates) overrides.emplace_back("replicates", std::to_string(*replicates));
    if (method) overrides.emplace_back("method", *method);
    if (budget) {
      overrides.emplace_back("budget_nfe", std::to_string(*budget));
      overrides.emplace_back("baseline.budget_nfe", std::to_string(*budget));
    }
    if (out_path && run->parsed()) overrides.emplace_back("out", *out_path);
    if (workers) overrides.emplace_back("workers", std::to_string(*workers));

    const RunConfig cfg = load_config(config_path, overrides);
    if (run->parsed()) {
      cmd_run(cfg);
    } else {
      cmd_export_trajectory(cfg, out_path.value_or("trajectory.csv"));
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rts
