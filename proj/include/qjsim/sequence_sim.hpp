// SPDX-License-Identifier: Apache-2.0
//
// Single-atom measurement sequences (prepare, expose, read out, presence
// check) and the campaign drivers that sweep one control variable over many
// independent runs.  Each run draws from its own counter-based stream keyed
// by (master seed, setting, run), so results are independent of thread
// count and iteration order.
#pragma once

#include <cstdint>
#include <vector>

#include "qjsim/detector_model.hpp"

namespace qjsim {

struct ExposureParams {
  double mean_probe_photons = 0.0;   // incident probe photons per exposure
  double quantum_jump_eff = 2.9e-3;  // jump probability per probe photon
  double dark_rate = 9e-3;           // spurious jump rate, 1/s
  double exposure_duration = 10e-3;  // seconds
  double prep_error = 0.0;           // probability the atom starts bright
  double atom_loss_rate = 0.0;       // 1/s over exposure plus readout

  void validate() const;
};

/// P(jump) = 1 - exp(-(eta_qj nbar + dark_rate t_exp)).
double jump_probability(const ExposureParams& exposure);

struct RunOutcome {
  bool state_f2 = false;  // state at readout
  int counts = 0;
  bool retained = true;   // atom survived the presence check
};

/// One full sequence with all stochastic draws taken from `rng`.
RunOutcome simulate_sequence(const ExposureParams& exposure, const DetectorParams& detector,
                             RandomStream& rng);

struct CampaignConfig {
  ExposureParams exposure;
  DetectorParams detector;
  std::vector<double> sweep;       // per-campaign meaning, see the runners
  long long runs_per_setting = 300;
  std::uint64_t master_seed = 1;
  bool parallel = true;
  double readout_wait = 37e-3;     // idle window before readout, seconds

  void validate() const;
};

struct SettingResult {
  int setting_index = 0;
  double setting_value = 0.0;
  std::vector<RunOutcome> outcomes;  // indexed by run

  long long retained() const;
  /// Retained runs with counts above the threshold.
  long long detections(int threshold) const;
  /// Count histogram over retained runs.
  std::vector<long long> histogram() const;
};

/// Sweep of the mean probe photon number; exposure window fixed.
std::vector<SettingResult> run_qe_campaign(const CampaignConfig& config);

/// Sweep of the readout duration with the probe off; jumps can still occur
/// during the idle window.  Background and Gaussian scales follow duration.
std::vector<SettingResult> run_readout_noise_campaign(const CampaignConfig& config);

/// Sweep of the exposure duration with the probe off; detector fixed.
std::vector<SettingResult> run_dark_current_campaign(const CampaignConfig& config);

}  // namespace qjsim
