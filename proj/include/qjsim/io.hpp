// SPDX-License-Identifier: Apache-2.0
//
// Configuration loading with strict validation, provenance stamping, and
// the CSV/JSON writers shared by the command-line tools.  Every output file
// embeds (schema_version, config_hash, master_seed) so results can be tied
// back to the exact configuration that produced them.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qjsim/sequence_sim.hpp"

namespace qjsim {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitValidationFailure = 3,
  kExitIoError = 4,
};

/// Invalid, unknown, missing, or out-of-range configuration input.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message) : std::runtime_error(message) {}
};

/// Full tool configuration; defaults reproduce the reference setup.
struct AppConfig {
  std::uint64_t master_seed = 1;
  long long runs_per_setting = 300;
  bool parallel = true;
  double readout_wait = 37e-3;  // seconds

  DetectorParams detector;
  ExposureParams exposure;

  bool threshold_fixed = false;  // false: optimize from the model pmfs
  int threshold = 4;

  std::vector<double> probe_photon_sweep = {50,   100,  200,  400,  700,
                                            1000, 1400, 1900, 2500, 3200};
  std::vector<double> readout_duration_sweep = {0.5e-3, 1e-3, 2e-3, 3e-3, 5e-3};
  std::vector<double> exposure_duration_sweep = {0.5, 1.0, 2.0, 3.0};

  void validate() const;  // throws ConfigError
};

/// Parses a config file, rejecting unknown keys, wrong types, missing
/// master_seed, and out-of-range values.  Throws ConfigError.
AppConfig load_config(const std::string& path);

/// The canonical JSON form of a config (sorted keys, all fields present).
std::string canonical_config_json(const AppConfig& config);

/// FNV-1a hash of the canonical form, as 16 hex digits.
std::string config_hash(const AppConfig& config);

std::uint64_t fnv1a64(const std::string& data);

/// Provenance triple embedded in every output file.
struct Provenance {
  int schema_version = kSchemaVersion;
  std::string config_hash;
  std::uint64_t master_seed = 0;
};

Provenance make_provenance(const AppConfig& config);

/// Shortest decimal form that round-trips a double exactly.
std::string format_double(double value);

/// Writes `# key=value` provenance lines, a header row, then data rows.
/// Throws std::runtime_error on I/O failure.
void write_csv(const std::string& path, const Provenance& prov, const std::string& header,
               const std::vector<std::string>& rows);

inline constexpr const char* kRunsCsvHeader =
    "setting_id,setting_value,run_index,jumped,n_c,atom_present";

/// Per-run campaign records: one row per (setting, run).
void write_runs_csv(const std::string& path, const Provenance& prov,
                    const std::vector<SettingResult>& results);

/// Inverse of write_runs_csv; integer fields round-trip exactly and
/// setting values reparse to the identical double.  Throws
/// std::runtime_error on missing files or malformed rows.
std::vector<SettingResult> read_runs_csv(const std::string& path);

/// Serializes `body` with provenance fields injected at the top level.
void write_report_json(const std::string& path, const Provenance& prov,
                       const nlohmann::json& body);

CampaignConfig campaign_from_config(const AppConfig& config, const std::vector<double>& sweep);

}  // namespace qjsim
