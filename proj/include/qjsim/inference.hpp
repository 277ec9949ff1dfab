// SPDX-License-Identifier: Apache-2.0
//
// Estimators that map detection data back to physical parameters: threshold
// selection, the linear detection-to-jump-probability correction, mixture
// weight fitting, and weighted least-squares fits for the saturation curve
// and rate regressions.
#pragma once

#include <string>
#include <vector>

#include "qjsim/pmf.hpp"

namespace qjsim {

/// "Detection" means counts strictly above `threshold`.
struct DecisionRule {
  int threshold = 0;
  double eps_fp = 0.0;    // P(counts > threshold | dark)
  double eps_fn = 0.0;    // P(counts <= threshold | bright)
  double fidelity = 0.0;  // 1 - (eps_fp + eps_fn) / 2

  double informativeness() const { return 1.0 - eps_fp - eps_fn; }
};

/// Error rates and fidelity at a fixed threshold.
DecisionRule rule_at_threshold(int threshold, const Pmf& pmf_f1, const Pmf& pmf_f2);

/// Exhaustive search over the stored count range for the threshold that
/// maximizes fidelity; ties resolve to the smallest threshold.
DecisionRule choose_threshold(const Pmf& pmf_f1, const Pmf& pmf_f2);

struct PqjEstimate {
  double value = 0.0;  // clamped to [0, 1]
  double raw = 0.0;    // linear estimate before clamping
  bool clamped = false;
};

/// Inverts P(detect) = eps_fp + (1 - eps_fp - eps_fn) p_qj.  Throws
/// std::invalid_argument if the rule carries no information
/// (1 - eps_fp - eps_fn <= 0).
PqjEstimate infer_pqj(double p_detect, const DecisionRule& rule);

/// Mean squared error of the linear estimate over n_runs sequences.
double mse_pqj(double p_detect, const DecisionRule& rule, long long n_runs);

struct FitReport {
  std::vector<double> params;
  std::vector<double> se;
  double objective = 0.0;  // log-likelihood or chi-square, per fit
  long long n = 0;
  bool converged = false;
  std::string diagnostics;
};

/// Maximum-likelihood weight w for the mixture (1-w) pmf_f1 + w pmf_f2
/// given a count histogram.  params = {w}, objective = log-likelihood.
FitReport fit_mixture(const std::vector<long long>& histogram, const Pmf& pmf_f1,
                      const Pmf& pmf_f2);

struct SaturationPoint {
  double nbar = 0.0;
  double pqj = 0.0;
  double pqj_err = 0.0;
  double nbar_err = 0.0;
};

/// Weighted least squares for p_qj(nbar) = 1 - exp(-eta nbar); x errors fold
/// into effective variances through the local slope, iterated once.
/// params = {eta}, objective = chi-square.
FitReport fit_saturation(const std::vector<SaturationPoint>& points);

struct RatePoint {
  double duration = 0.0;    // seconds
  long long detections = 0;
  long long n = 0;
};

/// Weighted linear fit of the detection fraction versus duration with
/// binomial weights; params = {intercept, slope}, objective = chi-square.
/// A 1/2-count continuity correction keeps weights finite at 0 or n.
FitReport fit_rate(const std::vector<RatePoint>& points);

/// True when the slope is within three standard errors of zero.
bool rate_consistent_with_zero(const FitReport& rate_fit);

struct HistogramFits {
  FitReport poisson;   // params = {mean}
  FitReport gaussian;  // params = {mean, variance} of the pre-clip Gaussian
};

/// Fits both count models to a histogram.  The Gaussian fit maximizes the
/// binned likelihood of the clipped discretized model; with moment_matching
/// it returns sample moments instead.
HistogramFits fit_histogram_models(const std::vector<long long>& histogram,
                                   bool moment_matching = false);

}  // namespace qjsim
