// SPDX-License-Identifier: Apache-2.0
// isac-secbf: single designs, parameter sweeps and the sensing experiments.
#include "isac/bench.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace isac;

namespace {

ScenarioConfig profile_config(const std::string& profile) {
  return profile == "full" ? full_profile() : desk_profile();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  return f;
}

nlohmann::json record_json(const ResultRecord& r, const TrialInput& in) {
  return {{"method", r.method},
          {"seed", r.seed},
          {"status", r.status},
          {"secrecy_rate", r.secrecy_rate},
          {"sum_rate", r.sum_rate},
          {"power", r.power},
          {"ae_sinr_db", r.ae_sinr_db},
          {"scnr_db", r.scnr_db},
          {"angle_rmse_deg", r.angle_rmse_deg},
          {"estimated_angles_deg",
           [&] {
             std::vector<double> d;
             for (double a : in.estimated_angles) d.push_back(rad2deg(a));
             return d;
           }()},
          {"iterations", r.iterations},
          {"wall_time_s", r.wall_time}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Secure ISAC beamforming designs and experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  std::string profile = "desk";
  std::optional<int> trials;
  std::string trace_path;
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--profile", profile, "Default scenario profile")->check(CLI::IsMember({"desk", "full"}));
  app.add_option("--trials", trials, "Monte Carlo trials (overrides the spec)")->check(CLI::PositiveNumber);
  app.add_option("--trace", trace_path, "Write the solver iteration trace of `run` to this CSV");

  auto* run = app.add_subcommand("run", "Design one instance and score it on the true channels");
  std::string scenario_path, method_name_arg;
  std::optional<double> injected;
  run->add_option("--scenario", scenario_path, "Scenario JSON file")->check(CLI::ExistingFile);
  run->add_option("--method", method_name_arg, "digital | had | decomposed_had | comm_only | perfect_csi")
      ->required();
  run->add_option("--injected-rmse", injected, "Perturb the true AE angles instead of running MUSIC (degrees)");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a JSON spec");
  std::string spec_path, out_dir;
  int threads = 0;
  sweep->add_option("--spec", spec_path, "Sweep spec JSON file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--threads", threads, "Worker threads (overrides the spec)")->check(CLI::PositiveNumber);

  auto* beams = app.add_subcommand("beams", "Required number of sensing beams for T = 1..tmax");
  int tmax = 4;
  std::string beams_out;
  beams->add_option("--tmax", tmax, "Largest AE count")->check(CLI::Range(1, 8));
  beams->add_option("--out", beams_out, "CSV file (stdout when omitted)");

  auto* sensing = app.add_subcommand("sensing", "MUSIC angle RMSE against sensing SCNR");
  std::vector<double> scnr_db = {5, 10, 15, 20, 25, 30};
  std::string sensing_out;
  sensing->add_option("--scnr-db", scnr_db, "Target SCNR values in dB");
  sensing->add_option("--out", sensing_out, "CSV file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const Method m = parse_method(method_name_arg);
      const ScenarioConfig cfg =
          scenario_path.empty() ? profile_config(profile) : load_scenario(scenario_path, profile_config(profile));
      PipelineOptions po;
      po.injected_rmse_deg = injected;
      const TrialInput in = prepare_trial(cfg, seed, po);
      std::optional<std::ofstream> trace;
      if (!trace_path.empty()) trace = open_out(trace_path);
      const ResultRecord r = run_method(m, in, {}, trace ? &*trace : nullptr);
      std::cout << record_json(r, in).dump(2) << '\n';
      return r.status == "error" ? 1 : 0;
    }
    if (*sweep) {
      SweepSpec spec = load_sweep_spec(spec_path, profile);
      if (app.get_option("--seed")->count() > 0) spec.seed = seed;
      if (trials) spec.trials = *trials;
      if (threads > 0) spec.threads = threads;
      const SweepResult r = run_sweep(spec, out_dir);
      write_summary_csv(r.summary, std::cout);
      return 0;
    }
    if (*beams) {
      const auto rows = required_beams_experiment(tmax, trials.value_or(50), profile_config(profile), seed);
      if (beams_out.empty()) {
        write_beams_csv(rows, std::cout);
      } else {
        auto f = open_out(beams_out);
        write_beams_csv(rows, f);
      }
      return 0;
    }
    if (*sensing) {
      const auto rows = sensing_accuracy_experiment(scnr_db, trials.value_or(200), profile_config(profile), seed);
      if (sensing_out.empty()) {
        write_sensing_csv(rows, std::cout);
      } else {
        auto f = open_out(sensing_out);
        write_sensing_csv(rows, f);
      }
      return 0;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
