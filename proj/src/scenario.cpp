// SPDX-License-Identifier: Apache-2.0
#include "isac/scenario.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace isac {

using nlohmann::json;

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool open_half_pi(double a) { return a > -kPi / 2 && a < kPi / 2; }

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::string_view label) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ fnv1a(label));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

cd RandomStream::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  const double re = normal();
  const double im = normal();
  return {s * re, s * im};
}

RandomStream make_rng(std::uint64_t seed, std::string_view stream) {
  return RandomStream(seed, stream);
}

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ScenarioError(field, what);
  };
  require(c.m_t >= 1, "antennas.tx", "must be >= 1");
  require(c.m_r >= 1, "antennas.rx", "must be >= 1");
  require(c.k_users >= 1, "users", "at least one user is required");
  require(c.t_aes >= 1, "aes", "at least one AE is required");
  require(c.n_s >= 0, "n_sensing_beams", "must be >= 0");
  require(c.n_rf >= 1, "n_rf", "must be >= 1");
  require(c.frame_len_l >= 1, "frame_len", "must be >= 1");
  require(c.frame_len_l >= c.k_users + c.n_s, "frame_len",
          "must be at least the number of streams (users + sensing beams)");
  require(c.nlos_paths >= 0, "nlos.paths", "must be >= 0");
  require(std::isfinite(c.power_budget) && c.power_budget > 0, "power_dbm", "power budget must be positive");
  require(std::isfinite(c.noise_comm) && c.noise_comm > 0, "noise_dbm.comm", "must be positive");
  require(std::isfinite(c.noise_eav) && c.noise_eav > 0, "noise_dbm.eav", "must be positive");
  require(std::isfinite(c.noise_sense) && c.noise_sense > 0, "noise_dbm.sense", "must be positive");
  require(std::isfinite(c.gamma_e) && c.gamma_e > 0, "gamma_e_db", "must be positive");
  require(std::isfinite(c.gamma_r) && c.gamma_r > 0, "gamma_r_db", "must be positive");
  require(std::isfinite(c.ref_gain_rho) && c.ref_gain_rho > 0, "pathloss.rho_db", "must be positive");
  require(std::isfinite(c.pathloss_exp) && c.pathloss_exp > 0, "pathloss.alpha0", "must be positive");
  require(std::isfinite(c.nlos_power) && c.nlos_power >= 0, "nlos.power_db", "must be non-negative");
  require(static_cast<int>(c.user_geometry.size()) == c.k_users, "users",
          "user count does not match the geometry list");
  require(static_cast<int>(c.ae_geometry.size()) == c.t_aes, "aes", "AE count does not match the geometry list");
  require(static_cast<int>(c.rcs.size()) == c.t_aes, "aes.rcs_dbsm", "one RCS value per AE is required");
  for (const auto& u : c.user_geometry) {
    require(open_half_pi(u.angle), "users.angle_deg", "must lie in (-90, 90) degrees");
    require(std::isfinite(u.distance) && u.distance > 0, "users.distance_m", "must be positive");
  }
  for (const auto& a : c.ae_geometry) {
    require(open_half_pi(a.angle), "aes.angle_deg", "must lie in (-90, 90) degrees");
    require(std::isfinite(a.distance) && a.distance > 0, "aes.distance_m", "must be positive");
  }
  for (double z : c.rcs) require(std::isfinite(z) && z > 0, "aes.rcs_dbsm", "must be finite");
  for (const auto& s : c.clutter) {
    require(open_half_pi(s.angle), "clutter.angle_deg", "must lie in (-90, 90) degrees");
    require(std::isfinite(s.gain.real()) && std::isfinite(s.gain.imag()), "clutter.gain_db", "must be finite");
  }
}

std::vector<Scatterer> default_clutter(const ScenarioConfig& cfg) {
  double roundtrip = cfg.ref_gain_rho * std::pow(100.0, -4.0);
  if (!cfg.ae_geometry.empty()) {
    const double z = cfg.rcs.empty() ? 1.0 : cfg.rcs.front();
    roundtrip = z * cfg.ref_gain_rho * std::pow(cfg.ae_geometry.front().distance, -4.0);
  }
  const double mag = std::sqrt(roundtrip * db_to_linear(-10.0));
  std::vector<Scatterer> out;
  for (double deg : {-75.0, 0.0, 75.0}) out.push_back({deg2rad(deg), cd{mag, 0.0}});
  return out;
}

ScenarioConfig full_profile() {
  ScenarioConfig c;
  c.m_t = 64;
  c.m_r = 64;
  for (double deg : {-60.0, -15.0, 15.0, 60.0}) c.user_geometry.push_back({deg2rad(deg), 200.0});
  for (double deg : {-40.0, 40.0}) c.ae_geometry.push_back({deg2rad(deg), 100.0});
  c.k_users = 4;
  c.t_aes = 2;
  c.rcs.assign(2, 1.0);
  c.n_s = 4;
  c.n_rf = 8;
  c.clutter = default_clutter(c);
  return c;
}

ScenarioConfig desk_profile() {
  ScenarioConfig c = full_profile();
  c.m_t = 8;
  c.m_r = 8;
  c.user_geometry = {{deg2rad(-15.0), 200.0}, {deg2rad(15.0), 200.0}};
  c.k_users = 2;
  c.n_s = 2;
  c.n_rf = 4;
  c.clutter = default_clutter(c);
  return c;
}

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ScenarioError(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ScenarioError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

double number(const json& obj, const char* key, const std::string& field) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ScenarioError(field, "expected a number");
  return v.get<double>();
}

int integer(const json& obj, const char* key, const std::string& field) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ScenarioError(field, "expected an integer");
  return v.get<int>();
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text) { return parse_scenario(text, full_profile()); }

ScenarioConfig parse_scenario(std::string_view text, const ScenarioConfig& defaults) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ScenarioError("<document>", std::string("parse failure: ") + e.what());
  }
  check_keys(doc, "",
             {"antennas", "users", "aes", "clutter", "power_dbm", "noise_dbm", "gamma_e_db", "gamma_r_db", "frame_len",
              "n_sensing_beams", "n_rf", "pathloss", "nlos", "seed"});

  ScenarioConfig c = defaults;
  bool geometry_changed = false;
  if (doc.contains("antennas")) {
    const auto& a = doc["antennas"];
    check_keys(a, "antennas", {"tx", "rx"});
    if (a.contains("tx")) c.m_t = integer(a, "tx", "antennas.tx");
    if (a.contains("rx")) c.m_r = integer(a, "rx", "antennas.rx");
  }
  if (doc.contains("users")) {
    if (!doc["users"].is_array()) throw ScenarioError("users", "expected an array");
    c.user_geometry.clear();
    for (const auto& u : doc["users"]) {
      check_keys(u, "users", {"angle_deg", "distance_m"});
      Placement p;
      p.angle = deg2rad(number(u, "angle_deg", "users.angle_deg"));
      p.distance = number(u, "distance_m", "users.distance_m");
      c.user_geometry.push_back(p);
    }
    c.k_users = static_cast<int>(c.user_geometry.size());
  }
  if (doc.contains("pathloss")) {
    const auto& p = doc["pathloss"];
    check_keys(p, "pathloss", {"rho_db", "alpha0"});
    if (p.contains("rho_db")) c.ref_gain_rho = db_to_linear(number(p, "rho_db", "pathloss.rho_db"));
    if (p.contains("alpha0")) c.pathloss_exp = number(p, "alpha0", "pathloss.alpha0");
    geometry_changed = true;
  }
  if (doc.contains("aes")) {
    if (!doc["aes"].is_array()) throw ScenarioError("aes", "expected an array");
    c.ae_geometry.clear();
    c.rcs.clear();
    for (const auto& a : doc["aes"]) {
      check_keys(a, "aes", {"angle_deg", "distance_m", "rcs_dbsm"});
      Placement p;
      p.angle = deg2rad(number(a, "angle_deg", "aes.angle_deg"));
      p.distance = number(a, "distance_m", "aes.distance_m");
      c.ae_geometry.push_back(p);
      c.rcs.push_back(a.contains("rcs_dbsm") ? db_to_linear(number(a, "rcs_dbsm", "aes.rcs_dbsm")) : 1.0);
    }
    c.t_aes = static_cast<int>(c.ae_geometry.size());
    geometry_changed = true;
  }
  if (doc.contains("clutter")) {
    if (!doc["clutter"].is_array()) throw ScenarioError("clutter", "expected an array");
    c.clutter.clear();
    for (const auto& s : doc["clutter"]) {
      check_keys(s, "clutter", {"angle_deg", "gain_db"});
      Scatterer sc;
      sc.angle = deg2rad(number(s, "angle_deg", "clutter.angle_deg"));
      sc.gain = cd{std::sqrt(db_to_linear(number(s, "gain_db", "clutter.gain_db"))), 0.0};
      c.clutter.push_back(sc);
    }
  } else if (geometry_changed) {
    c.clutter = default_clutter(c);
  }
  if (doc.contains("power_dbm")) c.power_budget = dbm_to_watts(number(doc, "power_dbm", "power_dbm"));
  if (doc.contains("noise_dbm")) {
    const auto& n = doc["noise_dbm"];
    check_keys(n, "noise_dbm", {"comm", "eav", "sense"});
    if (n.contains("comm")) c.noise_comm = dbm_to_watts(number(n, "comm", "noise_dbm.comm"));
    if (n.contains("eav")) c.noise_eav = dbm_to_watts(number(n, "eav", "noise_dbm.eav"));
    if (n.contains("sense")) c.noise_sense = dbm_to_watts(number(n, "sense", "noise_dbm.sense"));
  }
  if (doc.contains("gamma_e_db")) c.gamma_e = db_to_linear(number(doc, "gamma_e_db", "gamma_e_db"));
  if (doc.contains("gamma_r_db")) c.gamma_r = db_to_linear(number(doc, "gamma_r_db", "gamma_r_db"));
  if (doc.contains("frame_len")) c.frame_len_l = integer(doc, "frame_len", "frame_len");
  if (doc.contains("n_sensing_beams")) c.n_s = integer(doc, "n_sensing_beams", "n_sensing_beams");
  if (doc.contains("n_rf")) c.n_rf = integer(doc, "n_rf", "n_rf");
  if (doc.contains("nlos")) {
    const auto& n = doc["nlos"];
    check_keys(n, "nlos", {"paths", "power_db"});
    if (n.contains("paths")) c.nlos_paths = integer(n, "paths", "nlos.paths");
    if (n.contains("power_db")) c.nlos_power = db_to_linear(number(n, "power_db", "nlos.power_db"));
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw ScenarioError("seed", "expected an integer");
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return load_scenario(path, full_profile()); }

ScenarioConfig load_scenario(const std::filesystem::path& path, const ScenarioConfig& defaults) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), defaults);
}

std::string to_scenario_text(const ScenarioConfig& c) {
  json doc;
  doc["antennas"] = {{"tx", c.m_t}, {"rx", c.m_r}};
  doc["users"] = json::array();
  for (const auto& u : c.user_geometry) doc["users"].push_back({{"angle_deg", rad2deg(u.angle)}, {"distance_m", u.distance}});
  doc["aes"] = json::array();
  for (std::size_t i = 0; i < c.ae_geometry.size(); ++i) {
    doc["aes"].push_back({{"angle_deg", rad2deg(c.ae_geometry[i].angle)},
                          {"distance_m", c.ae_geometry[i].distance},
                          {"rcs_dbsm", linear_to_db(c.rcs.at(i))}});
  }
  doc["clutter"] = json::array();
  for (const auto& s : c.clutter) {
    doc["clutter"].push_back({{"angle_deg", rad2deg(s.angle)}, {"gain_db", linear_to_db(std::norm(s.gain))}});
  }
  doc["power_dbm"] = watts_to_dbm(c.power_budget);
  doc["noise_dbm"] = {{"comm", watts_to_dbm(c.noise_comm)},
                      {"eav", watts_to_dbm(c.noise_eav)},
                      {"sense", watts_to_dbm(c.noise_sense)}};
  doc["gamma_e_db"] = linear_to_db(c.gamma_e);
  doc["gamma_r_db"] = linear_to_db(c.gamma_r);
  doc["frame_len"] = c.frame_len_l;
  doc["n_sensing_beams"] = c.n_s;
  doc["n_rf"] = c.n_rf;
  doc["pathloss"] = {{"rho_db", linear_to_db(c.ref_gain_rho)}, {"alpha0", c.pathloss_exp}};
  doc["nlos"] = {{"paths", c.nlos_paths}, {"power_db", c.nlos_power > 0 ? linear_to_db(c.nlos_power) : -300.0}};
  doc["seed"] = c.seed;
  return doc.dump(2);
}

}  // namespace isac
