// SPDX-License-Identifier: Apache-2.0
#include "qjsim/sequence_sim.hpp"

#include <cmath>
#include <stdexcept>

namespace qjsim {

void ExposureParams::validate() const {
  if (!(mean_probe_photons >= 0.0) || !std::isfinite(mean_probe_photons)) {
    throw std::domain_error("exposure: mean_probe_photons must be finite and >= 0");
  }
  if (!(quantum_jump_eff >= 0.0) || quantum_jump_eff > 1.0) {
    throw std::domain_error("exposure: quantum_jump_eff must be in [0, 1]");
  }
  if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate)) {
    throw std::domain_error("exposure: dark_rate must be finite and >= 0");
  }
  if (!(exposure_duration >= 0.0) || !std::isfinite(exposure_duration)) {
    throw std::domain_error("exposure: exposure_duration must be finite and >= 0");
  }
  if (!(prep_error >= 0.0) || prep_error > 1.0) {
    throw std::domain_error("exposure: prep_error must be in [0, 1]");
  }
  if (!(atom_loss_rate >= 0.0) || !std::isfinite(atom_loss_rate)) {
    throw std::domain_error("exposure: atom_loss_rate must be finite and >= 0");
  }
}

double jump_probability(const ExposureParams& exposure) {
  exposure.validate();
  const double rate = exposure.quantum_jump_eff * exposure.mean_probe_photons +
                      exposure.dark_rate * exposure.exposure_duration;
  return -std::expm1(-rate);
}

RunOutcome simulate_sequence(const ExposureParams& exposure, const DetectorParams& detector,
                             RandomStream& rng) {
  detector.validate();
  RunOutcome outcome;
  bool bright = exposure.prep_error > 0.0 && rng.bernoulli(exposure.prep_error);
  if (!bright) bright = rng.bernoulli(jump_probability(exposure));
  outcome.state_f2 = bright;
  outcome.counts =
      sample_readout(bright ? HyperfineState::f2 : HyperfineState::f1, detector, rng);
  if (exposure.atom_loss_rate > 0.0) {
    const double window = exposure.exposure_duration + detector.readout_duration;
    outcome.retained = !rng.bernoulli(-std::expm1(-exposure.atom_loss_rate * window));
  }
  return outcome;
}

void CampaignConfig::validate() const {
  exposure.validate();
  detector.validate();
  if (sweep.empty()) throw std::domain_error("campaign: sweep must be non-empty");
  if (runs_per_setting <= 0) throw std::domain_error("campaign: runs_per_setting must be > 0");
  if (!(readout_wait >= 0.0) || !std::isfinite(readout_wait)) {
    throw std::domain_error("campaign: readout_wait must be finite and >= 0");
  }
}

long long SettingResult::retained() const {
  long long n = 0;
  for (const RunOutcome& o : outcomes) n += o.retained ? 1 : 0;
  return n;
}

long long SettingResult::detections(int threshold) const {
  long long n = 0;
  for (const RunOutcome& o : outcomes) n += (o.retained && o.counts > threshold) ? 1 : 0;
  return n;
}

std::vector<long long> SettingResult::histogram() const {
  int max_count = 0;
  for (const RunOutcome& o : outcomes) {
    if (o.retained && o.counts > max_count) max_count = o.counts;
  }
  std::vector<long long> hist(static_cast<std::size_t>(max_count) + 1, 0);
  for (const RunOutcome& o : outcomes) {
    if (o.retained) ++hist[static_cast<std::size_t>(o.counts)];
  }
  return hist;
}

namespace {

// shared campaign loop: per-run streams keyed by (seed, setting, run, label)
// keep results identical under serial and parallel execution
std::vector<SettingResult> run_campaign(const CampaignConfig& config, StreamLabel label,
                                        const std::vector<ExposureParams>& exposures,
                                        const std::vector<DetectorParams>& detectors) {
  std::vector<SettingResult> results(config.sweep.size());
  for (std::size_t si = 0; si < config.sweep.size(); ++si) {
    SettingResult& result = results[si];
    result.setting_index = static_cast<int>(si);
    result.setting_value = config.sweep[si];
    result.outcomes.resize(static_cast<std::size_t>(config.runs_per_setting));
    const ExposureParams& exposure = exposures[si];
    const DetectorParams& detector = detectors[si];
    const long long n_runs = config.runs_per_setting;
#pragma omp parallel for schedule(static) if (config.parallel)
    for (long long run = 0; run < n_runs; ++run) {
      RandomStream rng(config.master_seed, static_cast<std::uint64_t>(si),
                       static_cast<std::uint64_t>(run), label);
      result.outcomes[static_cast<std::size_t>(run)] = simulate_sequence(exposure, detector, rng);
    }
  }
  return results;
}

}  // namespace

std::vector<SettingResult> run_qe_campaign(const CampaignConfig& config) {
  config.validate();
  std::vector<ExposureParams> exposures;
  std::vector<DetectorParams> detectors;
  for (double nbar : config.sweep) {
    ExposureParams e = config.exposure;
    e.mean_probe_photons = nbar;
    e.validate();
    exposures.push_back(e);
    detectors.push_back(config.detector);
  }
  return run_campaign(config, StreamLabel::qe_campaign, exposures, detectors);
}

std::vector<SettingResult> run_readout_noise_campaign(const CampaignConfig& config) {
  config.validate();
  std::vector<ExposureParams> exposures;
  std::vector<DetectorParams> detectors;
  for (double t_rd : config.sweep) {
    ExposureParams e = config.exposure;
    e.mean_probe_photons = 0.0;
    e.exposure_duration = config.readout_wait;
    e.validate();
    exposures.push_back(e);
    detectors.push_back(with_readout_duration(config.detector, t_rd));
  }
  return run_campaign(config, StreamLabel::readout_noise_campaign, exposures, detectors);
}

std::vector<SettingResult> run_dark_current_campaign(const CampaignConfig& config) {
  config.validate();
  std::vector<ExposureParams> exposures;
  std::vector<DetectorParams> detectors;
  for (double t_exp : config.sweep) {
    ExposureParams e = config.exposure;
    e.mean_probe_photons = 0.0;
    e.exposure_duration = t_exp;
    e.validate();
    exposures.push_back(e);
    detectors.push_back(config.detector);
  }
  return run_campaign(config, StreamLabel::dark_current_campaign, exposures, detectors);
}

}  // namespace qjsim
