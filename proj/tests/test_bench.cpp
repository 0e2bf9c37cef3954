// SPDX-License-Identifier: Apache-2.0
#include "isac/bench.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace isac;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur)) out.push_back(cur);
  return out;
}

SweepSpec small_spec() {
  SweepSpec s;
  s.param = SweepParam::PowerDbm;
  s.values = {30.0};
  s.trials = 2;
  s.methods = {Method::Digital, Method::CommOnly};
  s.seed = 5;
  return s;
}

std::string results_text(const SweepResult& r) {
  std::ostringstream os;
  write_results_csv(r.records, os);
  return os.str();
}

}  // namespace

TEST_CASE("method and parameter names") {
  for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
  CHECK(all_methods().size() == 5);
  CHECK_THROWS_AS(parse_method("hybrid"), std::invalid_argument);
  for (auto p : {SweepParam::PowerDbm, SweepParam::KUsers, SweepParam::TAes, SweepParam::NRf, SweepParam::GammaRDb,
                 SweepParam::InjectedRmseDeg})
    CHECK(parse_param(param_name(p)) == p);
  CHECK_THROWS_AS(parse_param("snr"), std::invalid_argument);
}

TEST_CASE("sweep values applied to the scenario") {
  const ScenarioConfig base = desk_profile();
  CHECK(apply_sweep_value(base, SweepParam::PowerDbm, 20.0).power_budget == doctest::Approx(0.1));
  CHECK(apply_sweep_value(base, SweepParam::GammaRDb, 10.0).gamma_r == doctest::Approx(10.0));
  CHECK(apply_sweep_value(base, SweepParam::NRf, 6.0).n_rf == 6);

  const ScenarioConfig t3 = apply_sweep_value(base, SweepParam::TAes, 3.0);
  CHECK(t3.t_aes == 3);
  CHECK(t3.ae_geometry.size() == 3);
  CHECK(t3.rcs.size() == 3);
  CHECK(t3.clutter.size() == base.clutter.size());

  const ScenarioConfig k4 = apply_sweep_value(base, SweepParam::KUsers, 4.0);
  CHECK(k4.k_users == 4);
  CHECK(k4.user_geometry.size() == 4);
  // Unchanged counts keep the configured geometry.
  CHECK(apply_sweep_value(base, SweepParam::KUsers, 2.0).user_geometry[0].angle == base.user_geometry[0].angle);

  const ScenarioConfig same = apply_sweep_value(base, SweepParam::InjectedRmseDeg, 0.5);
  CHECK(to_scenario_text(same) == to_scenario_text(base));

  CHECK_THROWS_AS(apply_sweep_value(base, SweepParam::KUsers, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(apply_sweep_value(base, SweepParam::NRf, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_sweep_value(base, SweepParam::TAes, 9.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_sweep_value(base, SweepParam::InjectedRmseDeg, -1.0), std::invalid_argument);
  CHECK_THROWS(apply_sweep_value(base, SweepParam::KUsers, 70.0));  // frame too short for the streams
}

TEST_CASE("sweep spec parsing and validation") {
  const SweepSpec s = parse_sweep_spec(R"({
    "profile": "desk",
    "scenario": {"power_dbm": 27},
    "parameter": "n_rf",
    "values": [2, 4],
    "trials": 3,
    "methods": ["digital", "decomposed_had"],
    "seed": 9
  })");
  CHECK(s.param == SweepParam::NRf);
  CHECK(s.values == std::vector<double>{2.0, 4.0});
  CHECK(s.trials == 3);
  CHECK(s.seed == 9);
  CHECK(s.methods == std::vector<Method>{Method::Digital, Method::DecomposedHad});
  CHECK(s.base.m_t == 8);
  CHECK(s.base.power_budget == doctest::Approx(dbm_to_watts(27.0)));
  CHECK_NOTHROW(validate(s));

  const SweepSpec d = parse_sweep_spec(R"({"parameter": "power_dbm", "values": [30]})");
  CHECK(d.methods.size() == 5);
  CHECK(d.trials == 50);

  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "power_dbm", "values": [30], "extra": 1})"), ScenarioError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"values": [30]})"), ScenarioError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "power_dbm", "values": 30})"), ScenarioError);
  CHECK_THROWS_AS(parse_sweep_spec(R"({"parameter": "power_dbm", "values": [30], "methods": ["x"]})"),
                  ScenarioError);
  CHECK_THROWS_AS(parse_sweep_spec("{"), ScenarioError);

  SweepSpec bad = small_spec();
  bad.trials = 0;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = small_spec();
  bad.values.clear();
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = small_spec();
  bad.param = SweepParam::TAes;
  bad.values = {0.0};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("sweep spec loads a scenario file relative to itself") {
  const auto dir = std::filesystem::temp_directory_path() / "isac_bench_spec";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "scn.json") << R"({"antennas": {"tx": 6, "rx": 6}})";
  std::ofstream(dir / "spec.json") << R"({"scenario": "scn.json", "parameter": "power_dbm", "values": [30]})";
  const SweepSpec s = load_sweep_spec(dir / "spec.json");
  CHECK(s.base.m_t == 6);
  CHECK_THROWS_AS(load_sweep_spec(dir / "missing.json"), ScenarioError);
}

TEST_CASE("trial preparation") {
  const ScenarioConfig cfg = desk_profile();
  SUBCASE("MUSIC at the desk noise level") {
    const TrialInput in = prepare_trial(cfg, trial_seed(3, 0));
    CHECK(in.estimated_angles.size() == 2);
    CHECK_FALSE(in.estimation_shortfall);
    CHECK(in.angle_rmse_deg < 0.5);
    CHECK((in.design.h_users - in.truth.h_users).norm() == 0.0);
    CHECK((in.design.h_clutter - in.truth.h_clutter).norm() == 0.0);
    CHECK(in.design.ae_distances == in.truth.ae_distances);
  }
  SUBCASE("zero injected error reproduces the true channels") {
    PipelineOptions po;
    po.injected_rmse_deg = 0.0;
    const TrialInput in = prepare_trial(cfg, trial_seed(3, 0), po);
    CHECK(in.angle_rmse_deg == 0.0);
    for (int t = 0; t < cfg.t_aes; ++t) CHECK((in.design.h_aes[t] - in.truth.h_aes[t]).norm() <= 1e-15);
  }
  SUBCASE("injected errors scale with the requested RMSE on shared draws") {
    PipelineOptions a, b;
    a.injected_rmse_deg = 1.0;
    b.injected_rmse_deg = 2.0;
    const TrialInput x = prepare_trial(cfg, 17, a);
    const TrialInput y = prepare_trial(cfg, 17, b);
    CHECK(y.angle_rmse_deg == doctest::Approx(2.0 * x.angle_rmse_deg).epsilon(1e-9));
  }
  SUBCASE("same seed gives the same channels") {
    const TrialInput x = prepare_trial(cfg, 99);
    const TrialInput y = prepare_trial(cfg, 99);
    CHECK((x.truth.h_users - y.truth.h_users).norm() == 0.0);
    CHECK(x.estimated_angles == y.estimated_angles);
  }
}

TEST_CASE("one trial, one method, one value gives one record") {
  SweepSpec s = small_spec();
  s.trials = 1;
  s.methods = {Method::Digital};
  const SweepResult r = run_sweep(s);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].method == "digital");
  CHECK(r.records[0].value == 30.0);
  CHECK(r.records[0].status == "optimal");
  REQUIRE(r.summary.size() == 1);
  CHECK(r.summary[0].n == 1);
  CHECK(r.summary[0].secrecy_se == 0.0);
}

TEST_CASE("sweep records, scoring and determinism") {
  SweepSpec s = small_spec();
  s.methods = all_methods();
  s.values = {25.0, 30.0};
  const SweepResult a = run_sweep(s);
  REQUIRE(a.records.size() == 5 * 2 * 2);

  // Order: method, then value, then trial.
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& r = a.records[i];
    CHECK(r.method == method_name(s.methods[i / 4]));
    CHECK(r.value == s.values[(i / 2) % 2]);
    CHECK(r.trial == static_cast<int>(i % 2));
    CHECK(r.seed == trial_seed(s.seed, r.trial));
  }

  // Rows scored on true channels honour the AE ceiling at sub-half-degree errors.
  const double ceiling = linear_to_db(s.base.gamma_e * 1.05);
  for (const auto& r : a.records) {
    if (r.method == "comm_only" || r.status != "optimal" || r.angle_rmse_deg >= 0.5) continue;
    if (r.method == "decomposed_had") continue;  // approximation of the digital design
    for (double v : r.ae_sinr_db) CHECK(v <= ceiling);
  }
  for (const auto& r : a.records) {
    CHECK(r.power <= dbm_to_watts(r.value) * (1.0 + 1e-6));
    CHECK(r.secrecy_rate <= r.sum_rate + 1e-12);
    CHECK(r.ae_sinr_db.size() == 2);
  }

  const SweepResult b = run_sweep(s);
  CHECK(results_text(a) == results_text(b));
  for (std::size_t i = 0; i < a.summary.size(); ++i) {
    CHECK(std::abs(a.summary[i].secrecy_mean - b.summary[i].secrecy_mean) <= 1e-12);
    CHECK(std::abs(a.summary[i].sum_rate_mean - b.summary[i].sum_rate_mean) <= 1e-12);
  }
  s.threads = 3;
  CHECK(results_text(run_sweep(s)) == results_text(a));
}

TEST_CASE("summary statistics") {
  std::vector<ResultRecord> recs(4);
  const double sec[] = {1.0, 2.0, 3.0, 6.0};
  for (int i = 0; i < 4; ++i) {
    recs[i].method = i < 3 ? "digital" : "had";
    recs[i].value = 1.0;
    recs[i].trial = i;
    recs[i].secrecy_rate = sec[i];
    recs[i].sum_rate = 2.0 * sec[i];
    recs[i].iterations = i;
    recs[i].status = i == 1 ? "max_iter" : "optimal";
  }
  const auto cells = summarize(recs);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].n == 3);
  CHECK(cells[0].n_optimal == 2);
  CHECK(cells[0].secrecy_mean == doctest::Approx(2.0));
  CHECK(cells[0].secrecy_se == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(cells[0].sum_rate_se == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK(cells[0].iterations_mean == doctest::Approx(1.0));
  CHECK(cells[1].n == 1);
  CHECK(cells[1].secrecy_se == 0.0);
}

TEST_CASE("CSV and JSON layouts") {
  const auto dir = std::filesystem::temp_directory_path() / "isac_bench_out";
  std::filesystem::remove_all(dir);
  const SweepResult r = run_sweep(small_spec(), dir);
  for (const char* f : {"results.csv", "summary.csv", "summary.json", "timing.csv"})
    CHECK(std::filesystem::exists(dir / f));

  std::ifstream rf(dir / "results.csv");
  std::stringstream rs;
  rs << rf.rdbuf();
  const auto rows = lines(rs.str());
  REQUIRE(rows.size() == 1 + r.records.size());
  CHECK(rows[0] ==
        "method,value,trial,seed,status,secrecy_rate,sum_rate,power,angle_rmse_deg,iterations,max_ae_sinr_db,"
        "min_scnr_db,ae_sinr_db,scnr_db");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto cols = split(rows[i], ',');
    REQUIRE(cols.size() == 14);
    CHECK(std::stod(cols[5]) == r.records[i - 1].secrecy_rate);  // round-trips exactly
  }
  const auto comm = split(rows.back(), ',');
  CHECK(comm[0] == "comm_only");
  CHECK(split(comm[12], ';').size() == 2);

  std::ifstream sf(dir / "summary.csv");
  std::string header;
  std::getline(sf, header);
  std::ifstream jf(dir / "summary.json");
  const auto doc = nlohmann::json::parse(jf);
  REQUIRE(doc.size() == r.summary.size());
  for (const auto& key : split(header, ',')) CHECK(doc[0].contains(key));
  CHECK(doc[0].size() == split(header, ',').size());

  std::ifstream tf(dir / "timing.csv");
  std::getline(tf, header);
  CHECK(header == "method,value,trial,wall_time_s");
}

TEST_CASE("required sensing beams") {
  const auto rows = required_beams_experiment(2, 3, desk_profile(), 4);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].bound == 1);
  CHECK(rows[1].bound == 2);
  for (const auto& r : rows) {
    CHECK(r.empirical_max <= r.bound);
    CHECK(r.empirical_max >= 1);
    CHECK(r.failures == 0);
    CHECK(r.trials == 3);
  }
  CHECK(worst_case_bound(4) == 3);
  CHECK(worst_case_bound(7) <= 4);
  std::ostringstream os;
  write_beams_csv(rows, os);
  CHECK(lines(os.str())[0] == "t_aes,bound,empirical_max,empirical_mean,trials,failures");
  CHECK_THROWS_AS(required_beams_experiment(0, 1, desk_profile()), std::invalid_argument);
}

TEST_CASE("sensing accuracy experiment") {
  const auto rows = sensing_accuracy_experiment({10.0, 30.0}, 3, desk_profile(), 6);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.trials == 3);
    CHECK(std::abs(r.achieved_scnr_db - r.target_scnr_db) <= 1.0);
  }
  CHECK(rows[1].rmse_deg < 0.5);
  std::ostringstream os;
  write_sensing_csv(rows, os);
  CHECK(lines(os.str())[0] == "target_scnr_db,achieved_scnr_db,rmse_deg,trials,shortfalls");
}
