// SPDX-License-Identifier: Apache-2.0
#include "isac/bench.hpp"

#include "isac/estimators.hpp"
#include "isac/linalg.hpp"
#include "isac/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace isac {

using nlohmann::json;

namespace {

struct MethodEntry {
  Method method;
  std::string_view name;
};

constexpr MethodEntry kMethods[] = {
    {Method::Digital, "digital"},   {Method::Had, "had"},
    {Method::DecomposedHad, "decomposed_had"}, {Method::CommOnly, "comm_only"},
    {Method::PerfectCsi, "perfect_csi"},
};

struct ParamEntry {
  SweepParam param;
  std::string_view name;
};

constexpr ParamEntry kParams[] = {
    {SweepParam::PowerDbm, "power_dbm"}, {SweepParam::KUsers, "k_users"},
    {SweepParam::TAes, "t_aes"},         {SweepParam::NRf, "n_rf"},
    {SweepParam::GammaRDb, "gamma_r_db"}, {SweepParam::InjectedRmseDeg, "injected_rmse_deg"},
};

// AE placements in the order they are added; clear of the default users and clutter.
constexpr double kAeAnglesDeg[] = {-40.0, 40.0, -55.0, 55.0, -28.0, 28.0, -65.0, 65.0};

int as_count(double value, const char* what) {
  if (!(value >= 1.0) || value != std::floor(value) || value > 1e6)
    throw std::invalid_argument(std::string(what) + " must be a positive integer");
  return static_cast<int>(value);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Assigns estimates to the prior angles; a prior left without an estimate
// takes the nearest one, or keeps its own value when nothing was found.
std::vector<double> align_estimates(const std::vector<double>& est, const std::vector<double>& prior) {
  const std::size_t n = prior.size();
  if (est.empty()) return prior;
  std::vector<double> best_out = prior;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(std::max(est.size(), n));
  std::iota(order.begin(), order.end(), 0);
  do {
    std::vector<double> out(n);
    double cost = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double pick;
      if (order[t] < est.size()) {
        pick = est[order[t]];
      } else {
        pick = *std::min_element(est.begin(), est.end(), [&](double a, double b) {
          return std::abs(a - prior[t]) < std::abs(b - prior[t]);
        });
      }
      out[t] = pick;
      cost += (pick - prior[t]) * (pick - prior[t]);
    }
    if (cost < best) {
      best = cost;
      best_out = out;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  return best_out;
}

CMat covariance_of(const CMat& v) { return v.cols() == 0 ? CMat() : CMat(v * v.adjoint()); }

void fill_metrics(ResultRecord& r, const DesignMetrics& m) {
  r.secrecy_rate = m.secrecy_rate;
  r.sum_rate = m.sum_rate;
  r.power = m.power;
  r.ae_sinr_db.clear();
  r.scnr_db.clear();
  for (double v : m.ae_sinr) r.ae_sinr_db.push_back(linear_to_db(v));
  for (double v : m.scnr) r.scnr_db.push_back(linear_to_db(v));
}

ResultRecord run_method_impl(Method m, const TrialInput& trial, const MethodOptions& opts,
                             const DigitalSolution* cached, double cached_time, std::ostream* trace) {
  ResultRecord r;
  r.method = std::string(method_name(m));
  r.seed = trial.seed;
  r.angle_rmse_deg = m == Method::PerfectCsi ? 0.0 : trial.angle_rmse_deg;
  const auto t0 = std::chrono::steady_clock::now();
  double extra = 0.0;
  try {
    const ScenarioConfig& cfg = trial.cfg;
    switch (m) {
      case Method::Digital:
      case Method::DecomposedHad: {
        DigitalSolution fresh;
        const DigitalSolution* sol = cached;
        if (sol == nullptr) {
          fresh = run_digital(trial.design, cfg, opts.digital);
          sol = &fresh;
        } else {
          extra = cached_time;
        }
        r.status = sol->status;
        r.iterations = static_cast<int>(sol->trace.size()) - 1;
        if (trace) write_trace_csv(sol->trace, *trace);
        if (m == Method::Digital) {
          fill_metrics(r, evaluate_design(trial.truth, sol->beams.w_comm, covariance_of(sol->beams.v_sense), cfg));
        } else {
          const HybridDecomposition d =
              decompose_fully_digital(sol->beams.w_comm, sol->beams.v_sense, cfg.n_rf, cfg, opts.hybrid);
          const CMat w = d.f_a * d.f_c;
          const CMat v = d.f_a * d.f_s;
          fill_metrics(r, evaluate_design(trial.truth, w, covariance_of(v), cfg));
        }
        break;
      }
      case Method::Had: {
        const HybridSolution h = run_hybrid(trial.design, cfg, opts.hybrid);
        r.status = h.status;
        r.iterations = static_cast<int>(h.trace.size()) - 1;
        if (trace) write_hybrid_trace_csv(h.trace, *trace);
        fill_metrics(r, evaluate_hybrid(trial.truth, h.state, cfg));
        break;
      }
      case Method::CommOnly: {
        ScenarioConfig c = cfg;
        c.n_s = 0;
        DigitalOptions o = opts.digital;
        o.enforce_ae = false;
        const DigitalSolution sol = run_digital(trial.design, c, o);
        r.status = sol.status;
        r.iterations = static_cast<int>(sol.trace.size()) - 1;
        if (trace) write_trace_csv(sol.trace, *trace);
        fill_metrics(r, evaluate_design(trial.truth, sol.beams.w_comm, CMat(), c));
        break;
      }
      case Method::PerfectCsi: {
        DigitalOptions o = opts.digital;
        o.enforce_scnr = false;
        const DigitalSolution sol = run_digital(trial.truth, cfg, o);
        r.status = sol.status;
        r.iterations = static_cast<int>(sol.trace.size()) - 1;
        if (trace) write_trace_csv(sol.trace, *trace);
        fill_metrics(r, evaluate_design(trial.truth, sol.beams.w_comm, covariance_of(sol.beams.v_sense), cfg));
        break;
      }
    }
  } catch (const std::exception&) {
    r.status = "error";
  }
  r.wall_time = seconds_since(t0) + extra;
  return r;
}

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double se_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_list(std::ostream& os, const std::vector<double>& xs) {
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ";" : "") << num(xs[i]);
}

template <class T>
void write_file(const std::filesystem::path& path, const T& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  writer(f);
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& e : kMethods)
    if (e.method == m) return e.name;
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& e : kMethods)
    if (e.name == name) return e.method;
  throw std::invalid_argument("unknown method: " + std::string(name));
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& e : kMethods) out.push_back(e.method);
  return out;
}

std::string_view param_name(SweepParam p) {
  for (const auto& e : kParams)
    if (e.param == p) return e.name;
  return "unknown";
}

SweepParam parse_param(std::string_view name) {
  for (const auto& e : kParams)
    if (e.name == name) return e.param;
  throw std::invalid_argument("unknown sweep parameter: " + std::string(name));
}

SweepSpec parse_sweep_spec(std::string_view text, const std::filesystem::path& base_dir,
                           std::string_view default_profile) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ScenarioError("<document>", std::string("parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw ScenarioError("<document>", "expected an object");
  static const char* kKeys[] = {"profile", "scenario", "parameter", "values", "trials", "methods", "seed", "threads"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) throw ScenarioError(key, "unknown key");
  }

  SweepSpec s;
  const std::string profile = doc.value("profile", std::string(default_profile));
  if (profile != "desk" && profile != "full") throw ScenarioError("profile", "expected desk or full");
  const ScenarioConfig defaults = profile == "desk" ? desk_profile() : full_profile();
  s.base = defaults;
  if (doc.contains("scenario")) {
    const auto& sc = doc["scenario"];
    if (sc.is_string()) {
      std::filesystem::path p = sc.get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      s.base = load_scenario(p, defaults);
    } else if (sc.is_object()) {
      s.base = parse_scenario(sc.dump(), defaults);
    } else {
      throw ScenarioError("scenario", "expected an object or a path");
    }
  }
  try {
    if (!doc.contains("parameter")) throw ScenarioError("parameter", "missing");
    s.param = parse_param(doc["parameter"].get<std::string>());
    if (!doc.contains("values") || !doc["values"].is_array()) throw ScenarioError("values", "expected an array");
    s.values = doc["values"].get<std::vector<double>>();
    if (doc.contains("trials")) s.trials = doc["trials"].get<int>();
    if (doc.contains("methods")) {
      for (const auto& m : doc["methods"]) s.methods.push_back(parse_method(m.get<std::string>()));
    } else {
      s.methods = all_methods();
    }
    if (doc.contains("seed")) s.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("threads")) s.threads = doc["threads"].get<int>();
  } catch (const json::exception& e) {
    throw ScenarioError("<document>", e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("<document>", e.what());
  }
  return s;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path, std::string_view default_profile) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ScenarioError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_sweep_spec(ss.str(), path.parent_path(), default_profile);
}

void validate(const SweepSpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (spec.values.empty()) throw std::invalid_argument("at least one sweep value is required");
  if (spec.methods.empty()) throw std::invalid_argument("at least one method is required");
  if (spec.threads < 1) throw std::invalid_argument("threads must be >= 1");
  for (double v : spec.values) (void)apply_sweep_value(spec.base, spec.param, v);
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& base, SweepParam p, double value) {
  ScenarioConfig c = base;
  if (!std::isfinite(value)) throw std::invalid_argument("sweep values must be finite");
  switch (p) {
    case SweepParam::PowerDbm:
      c.power_budget = dbm_to_watts(value);
      break;
    case SweepParam::KUsers: {
      const int k = as_count(value, "k_users");
      if (k != c.k_users) {
        c.user_geometry.clear();
        for (int i = 0; i < k; ++i) {
          const double deg = k == 1 ? 15.0 : -60.0 + 120.0 * i / (k - 1);
          c.user_geometry.push_back({deg2rad(deg), 200.0});
        }
        c.k_users = k;
      }
      break;
    }
    case SweepParam::TAes: {
      const int t = as_count(value, "t_aes");
      if (t > static_cast<int>(std::size(kAeAnglesDeg))) throw std::invalid_argument("t_aes above the placement table");
      if (t != c.t_aes) {
        c.ae_geometry.clear();
        for (int i = 0; i < t; ++i) c.ae_geometry.push_back({deg2rad(kAeAnglesDeg[i]), 100.0});
        c.rcs.assign(static_cast<std::size_t>(t), 1.0);
        c.t_aes = t;
        c.clutter = default_clutter(c);
      }
      break;
    }
    case SweepParam::NRf:
      c.n_rf = as_count(value, "n_rf");
      break;
    case SweepParam::GammaRDb:
      c.gamma_r = db_to_linear(value);
      break;
    case SweepParam::InjectedRmseDeg:
      if (value < 0.0) throw std::invalid_argument("injected_rmse_deg must be >= 0");
      break;
  }
  validate(c);
  return c;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(trial);
}

TrialInput prepare_trial(const ScenarioConfig& cfg, std::uint64_t seed, const PipelineOptions& opts) {
  TrialInput in;
  in.cfg = cfg;
  in.seed = seed;
  auto rng = make_rng(seed, "channels");
  in.truth = make_channels(cfg, rng);
  const std::vector<double>& truth = in.truth.ae_angles;

  if (opts.injected_rmse_deg) {
    auto err = make_rng(seed, "angle-error");
    in.estimated_angles = truth;
    for (double& a : in.estimated_angles) a += deg2rad(*opts.injected_rmse_deg) * err.normal();
  } else {
    BeamformerPair probe;
    probe.w_comm = CMat::Zero(cfg.m_t, cfg.k_users);
    probe.v_sense = CMat(cfg.m_t, cfg.t_aes);
    const double amp = std::sqrt(cfg.power_budget / cfg.t_aes / cfg.m_t);
    for (int t = 0; t < cfg.t_aes; ++t) probe.v_sense.col(t) = amp * steering(truth[t], cfg.m_t);
    auto echo = make_rng(seed, "echo");
    const EchoBatch e = simulate_echoes(in.truth, probe, cfg, echo);
    const AngleEstimate est = music_estimate(e, cfg.t_aes, opts.music);
    in.estimation_shortfall = est.shortfall;
    in.estimated_angles = align_estimates(est.angles, truth);
  }
  double ss = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) ss += std::pow(rad2deg(in.estimated_angles[t] - truth[t]), 2);
  in.angle_rmse_deg = truth.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(truth.size()));
  in.design = with_ae_estimates(in.truth, cfg, in.estimated_angles, in.truth.ae_distances);
  return in;
}

ResultRecord run_method(Method m, const TrialInput& trial, const MethodOptions& opts, std::ostream* trace) {
  return run_method_impl(m, trial, opts, nullptr, 0.0, trace);
}

std::vector<CellSummary> summarize(const std::vector<ResultRecord>& records) {
  std::vector<CellSummary> out;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].method == records[i].method && records[j].value == records[i].value) ++j;
    CellSummary c;
    c.method = records[i].method;
    c.value = records[i].value;
    std::vector<double> sec, sum, rmse, iters;
    for (std::size_t k = i; k < j; ++k) {
      sec.push_back(records[k].secrecy_rate);
      sum.push_back(records[k].sum_rate);
      rmse.push_back(records[k].angle_rmse_deg);
      iters.push_back(records[k].iterations);
      if (records[k].status == "optimal") ++c.n_optimal;
    }
    c.n = static_cast<int>(j - i);
    c.secrecy_mean = mean_of(sec);
    c.secrecy_se = se_of(sec);
    c.sum_rate_mean = mean_of(sum);
    c.sum_rate_se = se_of(sum);
    c.angle_rmse_mean = mean_of(rmse);
    c.iterations_mean = mean_of(iters);
    out.push_back(c);
    i = j;
  }
  return out;
}

SweepResult run_sweep(const SweepSpec& spec, const MethodOptions& opts) {
  validate(spec);
  std::vector<ScenarioConfig> cfgs;
  for (double v : spec.values) cfgs.push_back(apply_sweep_value(spec.base, spec.param, v));

  const std::size_t n_values = spec.values.size();
  const std::size_t n_trials = static_cast<std::size_t>(spec.trials);
  const std::size_t n_methods = spec.methods.size();
  const bool needs_digital =
      std::any_of(spec.methods.begin(), spec.methods.end(),
                  [](Method m) { return m == Method::Digital || m == Method::DecomposedHad; });

  // Each job owns its slot; slots are merged in (method, value, trial) order.
  std::vector<std::vector<ResultRecord>> slots(n_values * n_trials);
  auto job = [&](std::size_t idx) {
    const std::size_t vi = idx / n_trials;
    const int trial = static_cast<int>(idx % n_trials);
    PipelineOptions po;
    if (spec.param == SweepParam::InjectedRmseDeg) po.injected_rmse_deg = spec.values[vi];
    const TrialInput in = prepare_trial(cfgs[vi], trial_seed(spec.seed, trial), po);
    std::optional<DigitalSolution> digital;
    double digital_time = 0.0;
    if (needs_digital) {
      const auto t0 = std::chrono::steady_clock::now();
      try {
        digital = run_digital(in.design, in.cfg, opts.digital);
      } catch (const std::exception&) {
        digital.reset();
      }
      digital_time = seconds_since(t0);
    }
    auto& slot = slots[idx];
    for (Method m : spec.methods) {
      const bool reuse = digital && (m == Method::Digital || m == Method::DecomposedHad);
      ResultRecord r = run_method_impl(m, in, opts, reuse ? &*digital : nullptr, digital_time, nullptr);
      r.value = spec.values[vi];
      r.trial = trial;
      slot.push_back(std::move(r));
    }
  };

  const std::size_t n_jobs = slots.size();
  const int workers = std::max(1, std::min<int>(spec.threads, static_cast<int>(n_jobs)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_jobs; ++i) job(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_jobs; i = next++) job(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  SweepResult res;
  for (std::size_t mi = 0; mi < n_methods; ++mi)
    for (std::size_t vi = 0; vi < n_values; ++vi)
      for (std::size_t ti = 0; ti < n_trials; ++ti) res.records.push_back(slots[vi * n_trials + ti][mi]);
  res.summary = summarize(res.records);
  return res;
}

SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& dir, const MethodOptions& opts) {
  SweepResult res = run_sweep(spec, opts);
  std::filesystem::create_directories(dir);
  write_file(dir / "results.csv", [&](std::ostream& os) { write_results_csv(res.records, os); });
  write_file(dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(res.summary, os); });
  write_file(dir / "summary.json", [&](std::ostream& os) { write_summary_json(res.summary, os); });
  write_file(dir / "timing.csv", [&](std::ostream& os) { write_timing_csv(res.records, os); });
  return res;
}

void write_results_csv(const std::vector<ResultRecord>& records, std::ostream& os) {
  os << "method,value,trial,seed,status,secrecy_rate,sum_rate,power,angle_rmse_deg,iterations,max_ae_sinr_db,"
        "min_scnr_db,ae_sinr_db,scnr_db\n";
  for (const auto& r : records) {
    const double max_ae = r.ae_sinr_db.empty() ? 0.0 : *std::max_element(r.ae_sinr_db.begin(), r.ae_sinr_db.end());
    const double min_sc = r.scnr_db.empty() ? 0.0 : *std::min_element(r.scnr_db.begin(), r.scnr_db.end());
    os << r.method << ',' << num(r.value) << ',' << r.trial << ',' << r.seed << ',' << r.status << ','
       << num(r.secrecy_rate) << ',' << num(r.sum_rate) << ',' << num(r.power) << ',' << num(r.angle_rmse_deg) << ','
       << r.iterations << ',' << num(max_ae) << ',' << num(min_sc) << ',';
    write_list(os, r.ae_sinr_db);
    os << ',';
    write_list(os, r.scnr_db);
    os << '\n';
  }
}

void write_timing_csv(const std::vector<ResultRecord>& records, std::ostream& os) {
  os << "method,value,trial,wall_time_s\n";
  for (const auto& r : records) os << r.method << ',' << num(r.value) << ',' << r.trial << ',' << num(r.wall_time) << '\n';
}

void write_summary_csv(const std::vector<CellSummary>& cells, std::ostream& os) {
  os << "method,value,n,n_optimal,secrecy_mean,secrecy_se,sum_rate_mean,sum_rate_se,angle_rmse_mean,"
        "iterations_mean\n";
  for (const auto& c : cells) {
    os << c.method << ',' << num(c.value) << ',' << c.n << ',' << c.n_optimal << ',' << num(c.secrecy_mean) << ','
       << num(c.secrecy_se) << ',' << num(c.sum_rate_mean) << ',' << num(c.sum_rate_se) << ','
       << num(c.angle_rmse_mean) << ',' << num(c.iterations_mean) << '\n';
  }
}

void write_summary_json(const std::vector<CellSummary>& cells, std::ostream& os) {
  json arr = json::array();
  for (const auto& c : cells) {
    arr.push_back({{"method", c.method},
                   {"value", c.value},
                   {"n", c.n},
                   {"n_optimal", c.n_optimal},
                   {"secrecy_mean", c.secrecy_mean},
                   {"secrecy_se", c.secrecy_se},
                   {"sum_rate_mean", c.sum_rate_mean},
                   {"sum_rate_se", c.sum_rate_se},
                   {"angle_rmse_mean", c.angle_rmse_mean},
                   {"iterations_mean", c.iterations_mean}});
  }
  os << arr.dump(2) << '\n';
}

std::vector<BeamsRow> required_beams_experiment(int t_max, int trials, const ScenarioConfig& base,
                                                std::uint64_t seed) {
  if (t_max < 1 || trials < 1) throw std::invalid_argument("t_max and trials must be >= 1");
  std::vector<BeamsRow> rows;
  for (int t = 1; t <= t_max; ++t) {
    const ScenarioConfig cfg = apply_sweep_value(base, SweepParam::TAes, t);
    BeamsRow row;
    row.t_aes = t;
    row.bound = worst_case_bound(t);
    row.trials = trials;
    double total = 0.0;
    for (int i = 0; i < trials; ++i) {
      auto rng = make_rng(trial_seed(seed, i), "channels");
      const ChannelSet ch = make_channels(cfg, rng);
      const DigitalSolution sol = run_digital(ch, cfg);
      if (!sol.reduction.ok) ++row.failures;
      const int rank = linalg::numeric_rank(sol.reduction.r, 1e-6);
      row.empirical_max = std::max(row.empirical_max, rank);
      total += rank;
    }
    row.empirical_mean = total / trials;
    rows.push_back(row);
  }
  return rows;
}

void write_beams_csv(const std::vector<BeamsRow>& rows, std::ostream& os) {
  os << "t_aes,bound,empirical_max,empirical_mean,trials,failures\n";
  for (const auto& r : rows) {
    os << r.t_aes << ',' << r.bound << ',' << r.empirical_max << ',' << num(r.empirical_mean) << ',' << r.trials << ','
       << r.failures << '\n';
  }
}

std::vector<SensingRow> sensing_accuracy_experiment(const std::vector<double>& scnr_db, int trials,
                                                    const ScenarioConfig& base, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<SensingRow> rows(scnr_db.size());
  std::vector<double> sq(scnr_db.size(), 0.0);
  for (std::size_t p = 0; p < scnr_db.size(); ++p) {
    rows[p].target_scnr_db = scnr_db[p];
    rows[p].trials = trials;
  }
  for (int i = 0; i < trials; ++i) {
    const std::uint64_t ts = trial_seed(seed, i);
    auto rng = make_rng(ts, "channels");
    const ChannelSet ch = make_channels(base, rng);
    const DigitalSolution sol = run_digital(ch, base);
    auto probe = make_rng(ts, "echo");
    const EchoBatch e0 = simulate_echoes(ch, sol.beams, base, probe);
    const double worst = *std::min_element(e0.scnr_achieved.begin(), e0.scnr_achieved.end());
    for (std::size_t p = 0; p < scnr_db.size(); ++p) {
      ScenarioConfig c = base;
      c.noise_sense = base.noise_sense * worst / db_to_linear(scnr_db[p]);
      auto er = make_rng(ts, "echo-" + std::to_string(p));
      const EchoBatch e = simulate_echoes(ch, sol.beams, c, er);
      const AngleEstimate a = music_estimate(e, c.t_aes);
      const double r = angle_rmse(a.angles, e.true_angles);
      sq[p] += r * r;
      rows[p].achieved_scnr_db += linear_to_db(*std::min_element(e.scnr_achieved.begin(), e.scnr_achieved.end()));
      if (a.shortfall) ++rows[p].shortfalls;
    }
  }
  for (std::size_t p = 0; p < rows.size(); ++p) {
    rows[p].rmse_deg = std::sqrt(sq[p] / trials);
    rows[p].achieved_scnr_db /= trials;
  }
  return rows;
}

void write_sensing_csv(const std::vector<SensingRow>& rows, std::ostream& os) {
  os << "target_scnr_db,achieved_scnr_db,rmse_deg,trials,shortfalls\n";
  for (const auto& r : rows) {
    os << num(r.target_scnr_db) << ',' << num(r.achieved_scnr_db) << ',' << num(r.rmse_deg) << ',' << r.trials << ',' << r.shortfalls
       << '\n';
  }
}

}  // namespace isac
