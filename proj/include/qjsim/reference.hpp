// SPDX-License-Identifier: Apache-2.0
//
// Serial reference implementations kept deliberately independent of the
// production evaluators: straight series summation with explicit tail
// bounds, direct convolution, and adaptive quadrature.  Used by the
// validation subcommands, the acceptance suite, and the benchmark.
#pragma once

#include <vector>

#include "qjsim/distributions.hpp"

namespace qjsim::reference {

/// P(d detected photons) summed term by term over scatter counts s >= 1,
/// stopping when the analytic geometric tail bound drops below tail_cutoff.
double pmf_detected_photons_series(int d, const CascadeParams& params,
                                   CascadeVariant variant, double tail_cutoff = 1e-14);

/// P(n_c | bright state) as an explicit convolution of series-summed
/// detection masses with a recurrence-evaluated Poisson background.
double pmf_counts_f2_convolution(int n_c, const CascadeParams& params,
                                 CascadeVariant variant, double tail_cutoff = 1e-14);

/// log E_{-n}(z) = log int_1^inf e^{-zt} t^n dt by adaptive Simpson
/// quadrature on the log-shifted integrand.
double log_exp_integral_quadrature(int n, double z, double rel_tol = 1e-12);

/// P(N > threshold) for N ~ Poisson(mu), summed by recurrence.
double poisson_upper_tail(int threshold, double mu);

struct AppendixGridRow {
  CascadeVariant variant = CascadeVariant::paper_literal;
  double scatter_survival = 0.0;
  double det_efficiency = 0.0;
  double bg_mean = 0.0;
  int n_c = 0;
  double closed_form = 0.0;
  double brute_force = 0.0;
  double abs_diff = 0.0;
};

struct AppendixValidation {
  std::vector<AppendixGridRow> rows;
  double max_abs_diff = 0.0;
  bool within_tolerance = false;
  // the verbatim d = 0 detection mass exceeds 1 somewhere on the grid
  bool literal_anomaly_found = false;
  double literal_d0_max = 0.0;
  double tolerance = 0.0;
  int max_count = 0;
};

/// Compares the closed-form count pmf against the convolution oracle for
/// both variants over a fixed parameter grid, n_c = 0..max_count.
AppendixValidation run_appendix_validation(double tolerance = 1e-10, int max_count = 30);

}  // namespace qjsim::reference
