// SPDX-License-Identifier: Apache-2.0
#include "qjsim/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qjsim {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where, std::string("'") + key + "' must be a number");
  return v.get<double>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where, std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

long long get_integer(const json& obj, const std::string& where, const char* key,
                      long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where, std::string("'") + key + "' must be an integer");
  return v.get<long long>();
}

std::vector<double> get_number_array(const json& obj, const std::string& where, const char* key,
                                     std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) fail(where, std::string("'") + key + "' must be a non-empty array");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) fail(where, std::string("'") + key + "' must contain numbers only");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

void AppConfig::validate() const {
  try {
    detector.validate();
    exposure.validate();
  } catch (const std::domain_error& err) {
    throw ConfigError(err.what());
  }
  if (runs_per_setting <= 0) fail("", "runs_per_setting must be > 0");
  if (!(readout_wait >= 0.0) || !std::isfinite(readout_wait)) {
    fail("", "readout_wait_s must be finite and >= 0");
  }
  if (threshold_fixed && threshold < 0) fail("decision", "threshold must be >= 0");
  if (probe_photon_sweep.empty()) fail("sweeps", "probe_photons must be non-empty");
  for (double v : probe_photon_sweep) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("sweeps", "probe_photons must be >= 0");
  }
  for (double v : readout_duration_sweep) {
    if (!(v > 0.0) || !std::isfinite(v)) fail("sweeps", "readout_duration_s must be > 0");
  }
  for (double v : exposure_duration_sweep) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail("sweeps", "exposure_duration_s must be >= 0");
  }
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("malformed JSON: ") + err.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be an object");
  check_keys(root, "config",
             {"schema_version", "master_seed", "runs_per_setting", "parallel", "readout_wait_s",
              "detector", "exposure", "decision", "sweeps"});

  if (!root.contains("schema_version")) fail("config", "missing required key 'schema_version'");
  if (!root.at("schema_version").is_number_integer() ||
      root.at("schema_version").get<long long>() != kSchemaVersion) {
    fail("config", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (!root.contains("master_seed")) fail("config", "missing required key 'master_seed'");
  const json& seed = root.at("master_seed");
  if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                    seed.get<long long>() < 0)) {
    fail("config", "'master_seed' must be a non-negative integer");
  }

  AppConfig cfg;
  cfg.master_seed = seed.get<std::uint64_t>();
  cfg.runs_per_setting = get_integer(root, "config", "runs_per_setting", cfg.runs_per_setting);
  cfg.parallel = get_bool(root, "config", "parallel", cfg.parallel);
  cfg.readout_wait = get_number(root, "config", "readout_wait_s", cfg.readout_wait);

  if (root.contains("detector")) {
    const json& det = root.at("detector");
    if (!det.is_object()) fail("detector", "must be an object");
    check_keys(det, "detector",
               {"f2_model", "variant", "scatter_survival", "det_efficiency", "bg_mean_counts",
                "gauss_mean_counts", "gauss_variance_counts", "readout_duration_s"});
    if (det.contains("f2_model")) {
      const json& v = det.at("f2_model");
      if (!v.is_string()) fail("detector", "'f2_model' must be a string");
      const std::string s = v.get<std::string>();
      if (s == "markov") {
        cfg.detector.f2_model = F2Model::markov;
      } else if (s == "gaussian") {
        cfg.detector.f2_model = F2Model::gaussian;
      } else {
        fail("detector", "'f2_model' must be 'markov' or 'gaussian'");
      }
    }
    if (det.contains("variant")) {
      const json& v = det.at("variant");
      if (!v.is_string()) fail("detector", "'variant' must be a string");
      const std::string s = v.get<std::string>();
      if (s == "paper-literal") {
        cfg.detector.variant = CascadeVariant::paper_literal;
      } else if (s == "corrected") {
        cfg.detector.variant = CascadeVariant::corrected;
      } else {
        fail("detector", "'variant' must be 'paper-literal' or 'corrected'");
      }
    }
    cfg.detector.cascade.scatter_survival =
        get_number(det, "detector", "scatter_survival", cfg.detector.cascade.scatter_survival);
    cfg.detector.cascade.det_efficiency =
        get_number(det, "detector", "det_efficiency", cfg.detector.cascade.det_efficiency);
    cfg.detector.cascade.bg_mean =
        get_number(det, "detector", "bg_mean_counts", cfg.detector.cascade.bg_mean);
    cfg.detector.gauss.mean =
        get_number(det, "detector", "gauss_mean_counts", cfg.detector.gauss.mean);
    cfg.detector.gauss.variance =
        get_number(det, "detector", "gauss_variance_counts", cfg.detector.gauss.variance);
    cfg.detector.readout_duration =
        get_number(det, "detector", "readout_duration_s", cfg.detector.readout_duration);
  }

  if (root.contains("exposure")) {
    const json& exp = root.at("exposure");
    if (!exp.is_object()) fail("exposure", "must be an object");
    check_keys(exp, "exposure",
               {"mean_probe_photons", "quantum_jump_eff", "dark_rate_per_s",
                "exposure_duration_s", "prep_error", "atom_loss_rate_per_s"});
    cfg.exposure.mean_probe_photons =
        get_number(exp, "exposure", "mean_probe_photons", cfg.exposure.mean_probe_photons);
    cfg.exposure.quantum_jump_eff =
        get_number(exp, "exposure", "quantum_jump_eff", cfg.exposure.quantum_jump_eff);
    cfg.exposure.dark_rate = get_number(exp, "exposure", "dark_rate_per_s", cfg.exposure.dark_rate);
    cfg.exposure.exposure_duration =
        get_number(exp, "exposure", "exposure_duration_s", cfg.exposure.exposure_duration);
    cfg.exposure.prep_error = get_number(exp, "exposure", "prep_error", cfg.exposure.prep_error);
    cfg.exposure.atom_loss_rate =
        get_number(exp, "exposure", "atom_loss_rate_per_s", cfg.exposure.atom_loss_rate);
  }

  if (root.contains("decision")) {
    const json& dec = root.at("decision");
    if (!dec.is_object()) fail("decision", "must be an object");
    check_keys(dec, "decision", {"threshold"});
    if (dec.contains("threshold") && !dec.at("threshold").is_null()) {
      if (!dec.at("threshold").is_number_integer()) {
        fail("decision", "'threshold' must be an integer or null");
      }
      cfg.threshold_fixed = true;
      cfg.threshold = static_cast<int>(dec.at("threshold").get<long long>());
    }
  }

  if (root.contains("sweeps")) {
    const json& sw = root.at("sweeps");
    if (!sw.is_object()) fail("sweeps", "must be an object");
    check_keys(sw, "sweeps", {"probe_photons", "readout_duration_s", "exposure_duration_s"});
    cfg.probe_photon_sweep =
        get_number_array(sw, "sweeps", "probe_photons", cfg.probe_photon_sweep);
    cfg.readout_duration_sweep =
        get_number_array(sw, "sweeps", "readout_duration_s", cfg.readout_duration_sweep);
    cfg.exposure_duration_sweep =
        get_number_array(sw, "sweeps", "exposure_duration_s", cfg.exposure_duration_sweep);
  }

  cfg.validate();
  return cfg;
}

std::string canonical_config_json(const AppConfig& config) {
  json root;
  root["schema_version"] = kSchemaVersion;
  root["master_seed"] = config.master_seed;
  root["runs_per_setting"] = config.runs_per_setting;
  root["parallel"] = config.parallel;
  root["readout_wait_s"] = config.readout_wait;
  json det;
  det["f2_model"] = config.detector.f2_model == F2Model::markov ? "markov" : "gaussian";
  det["variant"] =
      config.detector.variant == CascadeVariant::paper_literal ? "paper-literal" : "corrected";
  det["scatter_survival"] = config.detector.cascade.scatter_survival;
  det["det_efficiency"] = config.detector.cascade.det_efficiency;
  det["bg_mean_counts"] = config.detector.cascade.bg_mean;
  det["gauss_mean_counts"] = config.detector.gauss.mean;
  det["gauss_variance_counts"] = config.detector.gauss.variance;
  det["readout_duration_s"] = config.detector.readout_duration;
  root["detector"] = det;
  json exp;
  exp["mean_probe_photons"] = config.exposure.mean_probe_photons;
  exp["quantum_jump_eff"] = config.exposure.quantum_jump_eff;
  exp["dark_rate_per_s"] = config.exposure.dark_rate;
  exp["exposure_duration_s"] = config.exposure.exposure_duration;
  exp["prep_error"] = config.exposure.prep_error;
  exp["atom_loss_rate_per_s"] = config.exposure.atom_loss_rate;
  root["exposure"] = exp;
  json dec;
  if (config.threshold_fixed) {
    dec["threshold"] = config.threshold;
  } else {
    dec["threshold"] = nullptr;
  }
  root["decision"] = dec;
  json sw;
  sw["probe_photons"] = config.probe_photon_sweep;
  sw["readout_duration_s"] = config.readout_duration_sweep;
  sw["exposure_duration_s"] = config.exposure_duration_sweep;
  root["sweeps"] = sw;
  return root.dump();
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string config_hash(const AppConfig& config) {
  const std::uint64_t h = fnv1a64(canonical_config_json(config));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Provenance make_provenance(const AppConfig& config) {
  Provenance prov;
  prov.config_hash = config_hash(config);
  prov.master_seed = config.master_seed;
  return prov;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_csv(const std::string& path, const Provenance& prov, const std::string& header,
               const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "# schema_version=" << prov.schema_version << "\n";
  out << "# config_hash=" << prov.config_hash << "\n";
  out << "# master_seed=" << prov.master_seed << "\n";
  out << header << "\n";
  for (const std::string& row : rows) out << row << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_runs_csv(const std::string& path, const Provenance& prov,
                    const std::vector<SettingResult>& results) {
  std::vector<std::string> rows;
  for (const SettingResult& result : results) {
    for (std::size_t run = 0; run < result.outcomes.size(); ++run) {
      const RunOutcome& o = result.outcomes[run];
      std::ostringstream row;
      row << result.setting_index << ',' << format_double(result.setting_value) << ',' << run
          << ',' << (o.state_f2 ? 1 : 0) << ',' << o.counts << ',' << (o.retained ? 1 : 0);
      rows.push_back(row.str());
    }
  }
  write_csv(path, prov, kRunsCsvHeader, rows);
}

std::vector<SettingResult> read_runs_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open runs file: " + path);
  std::string line;
  bool header_seen = false;
  std::vector<SettingResult> results;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != kRunsCsvHeader) {
        throw std::runtime_error("unexpected runs header in " + path + ": " + line);
      }
      header_seen = true;
      continue;
    }
    std::array<std::string, 6> field;
    std::size_t pos = 0;
    for (int i = 0; i < 6; ++i) {
      const std::size_t next = line.find(',', pos);
      if ((next == std::string::npos) != (i == 5)) {
        throw std::runtime_error("malformed runs row in " + path + ": " + line);
      }
      field[static_cast<std::size_t>(i)] = line.substr(pos, next - pos);
      pos = next + 1;
    }
    const int setting_id = std::stoi(field[0]);
    if (results.empty() || results.back().setting_index != setting_id) {
      SettingResult r;
      r.setting_index = setting_id;
      r.setting_value = std::stod(field[1]);
      results.push_back(r);
    }
    RunOutcome o;
    o.state_f2 = field[3] == "1";
    o.counts = std::stoi(field[4]);
    o.retained = field[5] == "1";
    if (std::stoull(field[2]) != results.back().outcomes.size()) {
      throw std::runtime_error("run_index out of order in " + path + ": " + line);
    }
    results.back().outcomes.push_back(o);
  }
  if (!header_seen) throw std::runtime_error("runs file has no header: " + path);
  return results;
}

void write_report_json(const std::string& path, const Provenance& prov, const json& body) {
  json report = body;
  report["schema_version"] = prov.schema_version;
  report["config_hash"] = prov.config_hash;
  report["master_seed"] = prov.master_seed;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << report.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

CampaignConfig campaign_from_config(const AppConfig& config, const std::vector<double>& sweep) {
  CampaignConfig campaign;
  campaign.exposure = config.exposure;
  campaign.detector = config.detector;
  campaign.sweep = sweep;
  campaign.runs_per_setting = config.runs_per_setting;
  campaign.master_seed = config.master_seed;
  campaign.parallel = config.parallel;
  campaign.readout_wait = config.readout_wait;
  return campaign;
}

}  // namespace qjsim
