// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qjsim/detector_model.hpp"
#include "qjsim/inference.hpp"
#include "qjsim/reference.hpp"
#include "test_support.hpp"

using namespace qjsim;

namespace {

Pmf dark_pmf() { return build_poisson_pmf(1.146); }

Pmf bright_pmf() { return build_counts_f2_pmf(CascadeParams{}, CascadeVariant::corrected); }

}  // namespace

TEST_CASE("threshold rule reproduces frozen error rates at the defaults") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  const DecisionRule best = choose_threshold(dark, bright);
  CHECK(best.threshold == 2);
  CHECK(best.eps_fp == doctest::Approx(0.1090186180345301).epsilon(1e-12));
  CHECK(best.eps_fn == doctest::Approx(0.2827928206774064).epsilon(1e-10));
  CHECK(best.fidelity == doctest::Approx(0.8040942806440318).epsilon(1e-11));

  const DecisionRule at4 = rule_at_threshold(4, dark, bright);
  CHECK(at4.eps_fp == doctest::Approx(0.006427227389774375).epsilon(1e-12));
  CHECK(at4.eps_fn == doctest::Approx(0.5071351961433104).epsilon(1e-10));
  CHECK(at4.fidelity == doctest::Approx(0.7432187882334576).epsilon(1e-11));
}

TEST_CASE("threshold rule for the empirical bright model") {
  const Pmf dark = dark_pmf();
  const Pmf bright = discretized_gaussian_pmf(5.9, 17.6);
  const DecisionRule best = choose_threshold(dark, bright);
  CHECK(best.threshold == 2);
  CHECK(best.eps_fn == doctest::Approx(0.1551416830525327).epsilon(1e-10));
  CHECK(best.fidelity == doctest::Approx(0.8679198494564686).epsilon(1e-11));
}

TEST_CASE("false-positive rate equals the poisson upper tail") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  for (int t = 0; t <= 8; ++t) {
    const DecisionRule rule = rule_at_threshold(t, dark, bright);
    CHECK(rule.eps_fp ==
          doctest::Approx(reference::poisson_upper_tail(t, 1.146)).epsilon(1e-11));
  }
}

TEST_CASE("identical state models leave every threshold at coin-flip fidelity") {
  const Pmf pmf = dark_pmf();
  const DecisionRule rule = choose_threshold(pmf, pmf);
  CHECK(rule.threshold == 0);  // smallest threshold wins the tie
  CHECK(rule.fidelity == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("appending zero-mass bins does not change the chosen rule") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  Pmf dark_padded = dark;
  Pmf bright_padded = bright;
  for (int i = 0; i < 25; ++i) {
    dark_padded.masses.push_back(0.0);
    bright_padded.masses.push_back(0.0);
  }
  const DecisionRule a = choose_threshold(dark, bright);
  const DecisionRule b = choose_threshold(dark_padded, bright_padded);
  CHECK(a.threshold == b.threshold);
  CHECK(a.fidelity == doctest::Approx(b.fidelity).epsilon(1e-14));
}

TEST_CASE("threshold search rejects unnormalized inputs") {
  Pmf bogus;
  bogus.masses = {0.5, 0.2};  // total 0.7
  CHECK_THROWS_AS(choose_threshold(bogus, dark_pmf()), std::invalid_argument);
}

TEST_CASE("detection-fraction inversion is exact inside the open interval") {
  const DecisionRule rule = rule_at_threshold(4, dark_pmf(), bright_pmf());
  const double p_true = 0.3;
  const double p_detect = rule.eps_fp + rule.informativeness() * p_true;
  const PqjEstimate est = infer_pqj(p_detect, rule);
  CHECK(est.value == doctest::Approx(p_true).epsilon(1e-12));
  CHECK_FALSE(est.clamped);
  CHECK(est.raw == est.value);
}

TEST_CASE("detection-fraction inversion clamps and keeps the raw value") {
  const DecisionRule rule = rule_at_threshold(4, dark_pmf(), bright_pmf());
  const PqjEstimate low = infer_pqj(0.0, rule);
  CHECK(low.clamped);
  CHECK(low.value == 0.0);
  CHECK(low.raw < 0.0);
  CHECK(low.raw == doctest::Approx(-rule.eps_fp / rule.informativeness()).epsilon(1e-12));
  const PqjEstimate high = infer_pqj(1.0, rule);
  CHECK(high.clamped);
  CHECK(high.value == 1.0);
  CHECK(high.raw > 1.0);
}

TEST_CASE("uninformative rules are rejected") {
  DecisionRule flat;
  flat.eps_fp = 0.6;
  flat.eps_fn = 0.6;
  CHECK_THROWS_AS(infer_pqj(0.5, flat), std::invalid_argument);
  CHECK_THROWS_AS(mse_pqj(0.5, flat, 100), std::invalid_argument);
  CHECK_THROWS_AS(infer_pqj(1.5, DecisionRule{}), std::invalid_argument);
}

TEST_CASE("estimator variance follows the binomial propagation formula") {
  DecisionRule rule;
  rule.eps_fp = 0.01;
  rule.eps_fn = 0.4;
  const double p_detect = 0.35;
  const double denom = 1.0 - 0.01 - 0.4;
  CHECK(mse_pqj(p_detect, rule, 300) ==
        doctest::Approx(0.35 * 0.65 / (300.0 * denom * denom)).epsilon(1e-14));
  CHECK_THROWS_AS(mse_pqj(0.35, rule, 0), std::invalid_argument);
}

TEST_CASE("mixture weight recovers the generating fraction from expected counts") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  const double w_true = 0.37;
  const std::size_t n_bins = static_cast<std::size_t>(bright.max_count()) + 1;
  std::vector<long long> hist(n_bins);
  for (std::size_t n = 0; n < n_bins; ++n) {
    const double mix = (1.0 - w_true) * dark.mass(static_cast<int>(n)) +
                       w_true * bright.mass(static_cast<int>(n));
    hist[n] = static_cast<long long>(std::llround(4e7 * mix));
  }
  const FitReport fit = fit_mixture(hist, dark, bright);
  REQUIRE(fit.params.size() == 1u);
  CHECK(fit.params[0] == doctest::Approx(w_true).epsilon(2e-4));
  CHECK(fit.se[0] > 0.0);
  CHECK(fit.se[0] < 1e-3);
  CHECK(fit.converged);
}

TEST_CASE("mixture weight lands on the boundary for pure samples") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  std::vector<long long> hist(static_cast<std::size_t>(dark.max_count()) + 1);
  for (std::size_t n = 0; n < hist.size(); ++n) {
    hist[n] = static_cast<long long>(std::llround(1e6 * dark.mass(static_cast<int>(n))));
  }
  const FitReport fit = fit_mixture(hist, dark, bright);
  CHECK(fit.params[0] == 0.0);
  CHECK(fit.diagnostics.find("boundary") != std::string::npos);
}

TEST_CASE("mixture fit reports counts outside both supports") {
  const Pmf dark = dark_pmf();
  const Pmf bright = bright_pmf();
  std::vector<long long> hist(static_cast<std::size_t>(bright.max_count()) + 30, 0);
  for (int n = 0; n <= dark.max_count(); ++n) {
    hist[static_cast<std::size_t>(n)] =
        static_cast<long long>(std::llround(1e5 * dark.mass(n)));
  }
  hist.back() = 7;  // beyond both stored supports
  const FitReport fit = fit_mixture(hist, dark, bright);
  CHECK(fit.diagnostics.find("7 counts outside model support") != std::string::npos);

  std::vector<long long> empty(10, 0);
  CHECK_THROWS_AS(fit_mixture(empty, dark, bright), std::invalid_argument);
}

TEST_CASE("saturation fit reproduces exact curve points") {
  const double eta = 2.9e-3;
  std::vector<SaturationPoint> pts;
  for (double nbar : {100.0, 400.0, 900.0, 1600.0, 2500.0}) {
    SaturationPoint pt;
    pt.nbar = nbar;
    pt.pqj = -std::expm1(-eta * nbar);
    pt.pqj_err = 0.01;
    pts.push_back(pt);
  }
  const FitReport fit = fit_saturation(pts);
  CHECK(fit.params[0] == doctest::Approx(eta).epsilon(1e-8));
  CHECK(fit.objective < 1e-12);
  CHECK(fit.converged);
  CHECK(fit.se[0] > 0.0);
}

TEST_CASE("saturation fit folds abscissa errors into the weights") {
  const double eta = 1.6e-3;
  std::vector<SaturationPoint> pts;
  for (double nbar : {200.0, 800.0, 2000.0}) {
    SaturationPoint pt;
    pt.nbar = nbar;
    pt.pqj = -std::expm1(-eta * nbar);
    pt.pqj_err = 0.02;
    pt.nbar_err = 0.05 * nbar;
    pts.push_back(pt);
  }
  const FitReport with_x = fit_saturation(pts);
  CHECK(with_x.params[0] == doctest::Approx(eta).epsilon(1e-8));
  for (SaturationPoint& pt : pts) pt.nbar_err = 0.0;
  const FitReport without_x = fit_saturation(pts);
  // exact data: same optimum, larger error bars with x uncertainty folded in
  CHECK(with_x.se[0] > without_x.se[0]);
}

TEST_CASE("saturation fit rejects degenerate input") {
  CHECK_THROWS_AS(fit_saturation({}), std::invalid_argument);
  SaturationPoint pt;
  pt.nbar = 100.0;
  pt.pqj = 0.2;
  pt.pqj_err = 0.0;
  CHECK_THROWS_AS(fit_saturation({pt, pt}), std::invalid_argument);
}

TEST_CASE("rate fit recovers an exact affine detection fraction") {
  // p(t) = 0.018 t/1ms-equivalent: intercept 0.005, slope 0.9 per s
  std::vector<RatePoint> pts;
  const double a = 0.005, b = 0.9;
  for (double t : {0.5e-3, 1e-3, 2e-3, 3e-3, 5e-3}) {
    RatePoint pt;
    pt.duration = t;
    pt.n = 1000000;
    pt.detections = static_cast<long long>(std::llround((a + b * t) * 1e6));
    pts.push_back(pt);
  }
  const FitReport fit = fit_rate(pts);
  CHECK(fit.params[0] == doctest::Approx(a).epsilon(1e-9));
  CHECK(fit.params[1] == doctest::Approx(b).epsilon(1e-9));
  CHECK(fit.converged);
  CHECK_FALSE(rate_consistent_with_zero(fit));
}

TEST_CASE("rate fit stays finite at empty and saturated points") {
  std::vector<RatePoint> pts;
  RatePoint p0;
  p0.duration = 1e-3;
  p0.n = 500;
  p0.detections = 0;
  RatePoint p1;
  p1.duration = 5e-3;
  p1.n = 500;
  p1.detections = 500;
  pts = {p0, p1};
  const FitReport fit = fit_rate(pts);
  CHECK(fit.converged);
  CHECK(std::isfinite(fit.params[1]));
  CHECK(std::isfinite(fit.se[1]));
}

TEST_CASE("rate fit flags slopes consistent with zero") {
  std::vector<RatePoint> pts;
  for (double t : {1e-3, 2e-3, 4e-3}) {
    RatePoint pt;
    pt.duration = t;
    pt.n = 10000;
    pt.detections = 180;  // flat: no duration dependence
    pts.push_back(pt);
  }
  CHECK(rate_consistent_with_zero(fit_rate(pts)));
  CHECK_THROWS_AS(fit_rate({pts[0]}), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate({pts[0], pts[0]}), std::invalid_argument);
}

TEST_CASE("histogram fits recover the poisson mean") {
  std::vector<long long> hist(30);
  for (std::size_t n = 0; n < hist.size(); ++n) {
    hist[n] = static_cast<long long>(std::llround(1e7 * poisson_pmf(static_cast<int>(n), 1.146)));
  }
  const HistogramFits fits = fit_histogram_models(hist);
  CHECK(fits.poisson.params[0] == doctest::Approx(1.146).epsilon(1e-6));
  CHECK(fits.poisson.converged);
  CHECK(fits.poisson.se[0] > 0.0);
}

TEST_CASE("histogram fit of a single-bin sample is a zero-mean poisson") {
  std::vector<long long> hist = {1000};
  const HistogramFits fits = fit_histogram_models(hist);
  CHECK(fits.poisson.params[0] == 0.0);
  CHECK(fits.poisson.objective == 0.0);  // P(0 | mu = 0) = 1 for every draw
  CHECK_FALSE(fits.gaussian.converged);
  CHECK(fits.gaussian.diagnostics.find("degenerate") != std::string::npos);
}

TEST_CASE("binned likelihood recovers pre-clip gaussian parameters where moments cannot") {
  const Pmf pmf = discretized_gaussian_pmf(5.9, 17.6);
  std::vector<long long> hist(static_cast<std::size_t>(pmf.max_count()) + 1);
  for (std::size_t n = 0; n < hist.size(); ++n) {
    hist[n] = static_cast<long long>(std::llround(1e7 * pmf.mass(static_cast<int>(n))));
  }
  const HistogramFits mle = fit_histogram_models(hist);
  CHECK(mle.gaussian.converged);
  CHECK(mle.gaussian.params[0] == doctest::Approx(5.9).epsilon(2e-3));
  CHECK(mle.gaussian.params[1] == doctest::Approx(17.6).epsilon(5e-3));

  const HistogramFits moments = fit_histogram_models(hist, true);
  // clipping at zero biases the sample moments away from the generator
  CHECK(moments.gaussian.params[0] == doctest::Approx(6.460887159155599).epsilon(1e-4));
  CHECK(moments.gaussian.params[1] == doctest::Approx(13.76206964669378).epsilon(1e-3));
  CHECK(moments.gaussian.diagnostics == "moment matching");
}

TEST_CASE("histogram fits reject empty input") {
  std::vector<long long> empty(5, 0);
  CHECK_THROWS_AS(fit_histogram_models(empty), std::invalid_argument);
}
