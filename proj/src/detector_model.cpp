// SPDX-License-Identifier: Apache-2.0
#include "qjsim/detector_model.hpp"

#include <cmath>
#include <stdexcept>

namespace qjsim {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 6.28318530717958647693;

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

}  // namespace

void GaussianParams::validate() const {
  if (!std::isfinite(mean)) throw std::domain_error("gaussian: mean must be finite");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::domain_error("gaussian: variance must be finite and > 0");
  }
}

void DetectorParams::validate() const {
  cascade.validate();
  gauss.validate();
  if (!(readout_duration > 0.0) || !std::isfinite(readout_duration)) {
    throw std::domain_error("detector: readout_duration must be finite and > 0");
  }
}

Pmf discretized_gaussian_pmf(double mean, double variance, const PmfBuildOptions& opts) {
  GaussianParams{mean, variance}.validate();
  const double sigma = std::sqrt(variance);
  const double norm = 1.0 - normal_cdf((-0.5 - mean) / sigma);
  if (!(norm > 0.0)) throw std::domain_error("gaussian: all mass clipped below 0");
  Pmf pmf;
  double lower_cdf = normal_cdf((-0.5 - mean) / sigma);
  for (int n = 0; n < opts.max_terms; ++n) {
    const double upper_cdf = normal_cdf((static_cast<double>(n) + 0.5 - mean) / sigma);
    pmf.masses.push_back((upper_cdf - lower_cdf) / norm);
    lower_cdf = upper_cdf;
    const double remaining = (1.0 - upper_cdf) / norm;
    if (remaining < opts.tail_cutoff) {
      pmf.tail_mass = remaining > 0.0 ? remaining : 0.0;
      return pmf;
    }
  }
  pmf.tail_mass = (1.0 - lower_cdf) / norm;
  return pmf;
}

double standard_normal(RandomStream& rng) {
  const double u1 = rng.next_open_double();
  const double u2 = rng.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

int sample_discretized_gaussian(double mean, double variance, RandomStream& rng) {
  GaussianParams{mean, variance}.validate();
  const double sigma = std::sqrt(variance);
  for (;;) {
    const double x = mean + sigma * standard_normal(rng);
    if (x >= -0.5) return static_cast<int>(std::floor(x + 0.5));
  }
}

Pmf pmf_counts_given_state(HyperfineState state, const DetectorParams& params,
                           const PmfBuildOptions& opts) {
  params.validate();
  if (state == HyperfineState::f1) {
    return build_poisson_pmf(params.cascade.bg_mean, opts);
  }
  if (params.f2_model == F2Model::markov) {
    return build_counts_f2_pmf(params.cascade, params.variant, opts);
  }
  return discretized_gaussian_pmf(params.gauss.mean, params.gauss.variance, opts);
}

int sample_readout(HyperfineState state, const DetectorParams& params, RandomStream& rng) {
  params.validate();
  if (state == HyperfineState::f1) {
    return sample_poisson(params.cascade.bg_mean, rng);
  }
  if (params.f2_model == F2Model::markov) {
    return sample_readout_count_f2(params.cascade, rng);
  }
  return sample_discretized_gaussian(params.gauss.mean, params.gauss.variance, rng);
}

DetectorParams with_readout_duration(const DetectorParams& params, double readout_duration) {
  params.validate();
  if (!(readout_duration > 0.0) || !std::isfinite(readout_duration)) {
    throw std::domain_error("detector: readout_duration must be finite and > 0");
  }
  DetectorParams scaled = params;
  const double ratio = readout_duration / params.readout_duration;
  scaled.cascade.bg_mean *= ratio;
  scaled.gauss.mean *= ratio;
  scaled.gauss.variance *= ratio;
  scaled.readout_duration = readout_duration;
  return scaled;
}

}  // namespace qjsim
