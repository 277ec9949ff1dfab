// SPDX-License-Identifier: Apache-2.0
//
// State-dependent fluorescence readout: count distributions conditioned on
// the atom's hyperfine state.  The dark state produces Poisson background
// only; the bright state either follows the scatter-cascade model or an
// empirical discretized Gaussian.
#pragma once

#include "qjsim/distributions.hpp"
#include "qjsim/pmf.hpp"
#include "qjsim/rng.hpp"

namespace qjsim {

enum class HyperfineState { f1, f2 };

enum class F2Model { markov, gaussian };

/// Empirical bright-state count model: Gaussian discretized to integer bins
/// [n - 1/2, n + 1/2), clipped at n >= 0 and renormalized.
struct GaussianParams {
  double mean = 5.9;
  double variance = 17.6;

  void validate() const;
};

struct DetectorParams {
  F2Model f2_model = F2Model::markov;
  CascadeVariant variant = CascadeVariant::corrected;
  CascadeParams cascade;         // bright-state cascade; bg_mean also drives f1
  GaussianParams gauss;
  double readout_duration = 1e-3;  // seconds

  void validate() const;
};

/// Count pmf conditioned on the hyperfine state at readout.
Pmf pmf_counts_given_state(HyperfineState state, const DetectorParams& params,
                           const PmfBuildOptions& opts = {});

/// One readout draw conditioned on the state.
int sample_readout(HyperfineState state, const DetectorParams& params, RandomStream& rng);

/// Clipped bin-integrated Gaussian over n = 0, 1, ...
Pmf discretized_gaussian_pmf(double mean, double variance, const PmfBuildOptions& opts = {});

/// Exact draw from discretized_gaussian_pmf: rejection below -1/2, then
/// rounding to the nearest bin.
int sample_discretized_gaussian(double mean, double variance, RandomStream& rng);

/// Standard normal via Box-Muller (one value per call).
double standard_normal(RandomStream& rng);

/// Rescales count accumulation to a new readout duration: Poisson background
/// mean and Gaussian mean/variance scale linearly; the cascade shape does not
/// depend on duration.
DetectorParams with_readout_duration(const DetectorParams& params, double readout_duration);

}  // namespace qjsim
