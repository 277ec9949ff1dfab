// SPDX-License-Identifier: Apache-2.0
#include "qjsim/inference.hpp"

#include "qjsim/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qjsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassFloor = 1e-300;  // keeps log-likelihoods finite on dead bins

void require_normalized(const Pmf& pmf, const char* which) {
  if (std::abs(pmf.total() - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string(which) + ": pmf is not normalized");
  }
}

}  // namespace

DecisionRule rule_at_threshold(int threshold, const Pmf& pmf_f1, const Pmf& pmf_f2) {
  require_normalized(pmf_f1, "rule_at_threshold: dark");
  require_normalized(pmf_f2, "rule_at_threshold: bright");
  DecisionRule rule;
  rule.threshold = threshold;
  rule.eps_fp = pmf_f1.upper_tail(threshold);
  rule.eps_fn = pmf_f2.cdf(threshold);
  rule.fidelity = 1.0 - 0.5 * (rule.eps_fp + rule.eps_fn);
  return rule;
}

DecisionRule choose_threshold(const Pmf& pmf_f1, const Pmf& pmf_f2) {
  require_normalized(pmf_f1, "choose_threshold: dark");
  require_normalized(pmf_f2, "choose_threshold: bright");
  const int top = std::max(pmf_f1.max_count(), pmf_f2.max_count());
  DecisionRule best = rule_at_threshold(0, pmf_f1, pmf_f2);
  for (int t = 1; t <= top; ++t) {
    const DecisionRule rule = rule_at_threshold(t, pmf_f1, pmf_f2);
    if (rule.fidelity > best.fidelity) best = rule;
  }
  return best;
}

PqjEstimate infer_pqj(double p_detect, const DecisionRule& rule) {
  if (!(p_detect >= 0.0) || p_detect > 1.0) {
    throw std::invalid_argument("infer_pqj: detection fraction must be in [0, 1]");
  }
  const double denom = rule.informativeness();
  if (!(denom > 0.0)) {
    throw std::invalid_argument("infer_pqj: rule carries no information");
  }
  PqjEstimate est;
  est.raw = (p_detect - rule.eps_fp) / denom;
  est.value = std::clamp(est.raw, 0.0, 1.0);
  est.clamped = est.value != est.raw;
  return est;
}

double mse_pqj(double p_detect, const DecisionRule& rule, long long n_runs) {
  if (!(p_detect >= 0.0) || p_detect > 1.0) {
    throw std::invalid_argument("mse_pqj: detection fraction must be in [0, 1]");
  }
  if (n_runs <= 0) throw std::invalid_argument("mse_pqj: n_runs must be > 0");
  const double denom = rule.informativeness();
  if (!(denom > 0.0)) {
    throw std::invalid_argument("mse_pqj: rule carries no information");
  }
  return p_detect * (1.0 - p_detect) / (static_cast<double>(n_runs) * denom * denom);
}

FitReport fit_mixture(const std::vector<long long>& histogram, const Pmf& pmf_f1,
                      const Pmf& pmf_f2) {
  require_normalized(pmf_f1, "fit_mixture: dark");
  require_normalized(pmf_f2, "fit_mixture: bright");
  long long total = 0;
  for (long long c : histogram) {
    if (c < 0) throw std::invalid_argument("fit_mixture: negative bin count");
    total += c;
  }
  if (total == 0) throw std::invalid_argument("fit_mixture: empty histogram");

  struct Bin {
    double count, q1, q2;
  };
  std::vector<Bin> bins;
  long long dead = 0;
  for (std::size_t n = 0; n < histogram.size(); ++n) {
    if (histogram[n] == 0) continue;
    const double q1 = pmf_f1.mass(static_cast<int>(n));
    const double q2 = pmf_f2.mass(static_cast<int>(n));
    if (q1 == 0.0 && q2 == 0.0) {
      dead += histogram[n];
      continue;
    }
    bins.push_back({static_cast<double>(histogram[n]), q1, q2});
  }
  if (bins.empty()) throw std::invalid_argument("fit_mixture: histogram outside model support");

  // score g(w) = d/dw log L; strictly decreasing unless the pmfs coincide
  const auto score = [&](double w) {
    double g = 0.0;
    for (const Bin& b : bins) {
      g += b.count * (b.q2 - b.q1) / ((1.0 - w) * b.q1 + w * b.q2);
    }
    return g;
  };
  bool lo_infinite = false, hi_infinite = false;
  double g0 = 0.0, g1 = 0.0;
  for (const Bin& b : bins) {
    if (b.q1 == 0.0) lo_infinite = true;  // g(0+) = +inf
    if (b.q2 == 0.0) hi_infinite = true;  // g(1-) = -inf
  }
  if (!lo_infinite) g0 = score(0.0);
  if (!hi_infinite) g1 = score(1.0);

  FitReport report;
  double w = 0.0;
  if (!lo_infinite && g0 <= 0.0) {
    w = 0.0;
    report.diagnostics = "boundary at 0";
  } else if (!hi_infinite && g1 >= 0.0) {
    w = 1.0;
    report.diagnostics = "boundary at 1";
  } else {
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (score(mid) > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    w = 0.5 * (lo + hi);
  }

  double loglik = 0.0;
  for (std::size_t n = 0; n < histogram.size(); ++n) {
    if (histogram[n] == 0) continue;
    const double mix = (1.0 - w) * pmf_f1.mass(static_cast<int>(n)) +
                       w * pmf_f2.mass(static_cast<int>(n));
    loglik += static_cast<double>(histogram[n]) * std::log(std::max(mix, kMassFloor));
  }
  double info = 0.0;
  for (const Bin& b : bins) {
    const double mix = (1.0 - w) * b.q1 + w * b.q2;
    const double d = (b.q2 - b.q1) / mix;
    info += b.count * d * d;
  }
  if (info == 0.0 && report.diagnostics.empty()) report.diagnostics = "flat likelihood";
  if (dead > 0) {
    report.diagnostics += report.diagnostics.empty() ? "" : "; ";
    report.diagnostics += std::to_string(dead) + " counts outside model support";
  }
  report.params = {w};
  report.se = {info > 0.0 ? 1.0 / std::sqrt(info) : kInf};
  report.objective = loglik;
  report.n = total;
  report.converged = true;
  return report;
}

namespace {

double saturation_chi2(double eta, const std::vector<SaturationPoint>& pts,
                       const std::vector<double>& weights) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = pts[i].pqj + std::expm1(-eta * pts[i].nbar);
    chi2 += weights[i] * r * r;
  }
  return chi2;
}

double fit_saturation_eta(const std::vector<SaturationPoint>& pts,
                          const std::vector<double>& weights) {
  double hi = 1e-9;
  for (const SaturationPoint& pt : pts) {
    if (pt.nbar <= 0.0) continue;
    const double y = std::min(pt.pqj, 1.0 - 1e-12);
    if (y <= 0.0) continue;
    hi = std::max(hi, -std::log1p(-y) / pt.nbar);
  }
  hi *= 4.0;
  // golden-section minimum of chi2 on [0, hi]
  const double invphi = 0.6180339887498949;
  double a = 0.0, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = saturation_chi2(c, pts, weights);
  double fd = saturation_chi2(d, pts, weights);
  for (int i = 0; i < 300 && (b - a) > 1e-16 * hi; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = saturation_chi2(c, pts, weights);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = saturation_chi2(d, pts, weights);
    }
  }
  double eta = 0.5 * (a + b);
  // Newton polish on d(chi2)/d(eta)
  for (int i = 0; i < 8; ++i) {
    double grad = 0.0, curv = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double x = pts[j].nbar;
      const double e = std::exp(-eta * x);
      const double r = pts[j].pqj - (1.0 - e);
      grad += -2.0 * weights[j] * r * x * e;
      curv += 2.0 * weights[j] * (x * e * x * e + r * x * x * e);
    }
    if (!(curv > 0.0)) break;
    const double step = grad / curv;
    const double next = eta - step;
    if (!(next >= 0.0) || !(next <= hi) || !std::isfinite(next)) break;
    eta = next;
    if (std::abs(step) < 1e-15 * (eta + 1e-30)) break;
  }
  return eta;
}

}  // namespace

FitReport fit_saturation(const std::vector<SaturationPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_saturation: need at least 2 points");
  for (const SaturationPoint& pt : points) {
    if (!(pt.pqj_err > 0.0) || !std::isfinite(pt.pqj_err)) {
      throw std::invalid_argument("fit_saturation: pqj_err must be finite and > 0");
    }
    if (!(pt.nbar >= 0.0) || !std::isfinite(pt.nbar) || !(pt.nbar_err >= 0.0)) {
      throw std::invalid_argument("fit_saturation: invalid abscissa");
    }
  }
  std::vector<double> weights(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    weights[i] = 1.0 / (points[i].pqj_err * points[i].pqj_err);
  }
  double eta = fit_saturation_eta(points, weights);
  // fold x errors into effective variances via the local slope, refit once
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double slope = eta * std::exp(-eta * points[i].nbar);
    const double var = points[i].pqj_err * points[i].pqj_err +
                       slope * slope * points[i].nbar_err * points[i].nbar_err;
    weights[i] = 1.0 / var;
  }
  eta = fit_saturation_eta(points, weights);

  double gauss_newton = 0.0, curv = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = points[i].nbar;
    const double e = std::exp(-eta * x);
    const double r = points[i].pqj - (1.0 - e);
    const double jac = x * e;
    gauss_newton += weights[i] * jac * jac;
    curv += weights[i] * (jac * jac + r * x * x * e);
  }
  FitReport report;
  report.params = {eta};
  if (curv > 0.0) {
    report.se = {1.0 / std::sqrt(curv)};
  } else if (gauss_newton > 0.0) {
    report.se = {1.0 / std::sqrt(gauss_newton)};
  } else {
    report.se = {kInf};
    report.diagnostics = "degenerate abscissas";
  }
  report.objective = saturation_chi2(eta, points, weights);
  report.n = static_cast<long long>(points.size());
  report.converged = gauss_newton > 0.0;
  if (eta == 0.0) {
    report.diagnostics += report.diagnostics.empty() ? "boundary at 0" : "; boundary at 0";
  }
  return report;
}

FitReport fit_rate(const std::vector<RatePoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_rate: need at least 2 points");
  bool distinct = false;
  for (const RatePoint& pt : points) {
    if (pt.n <= 0) throw std::invalid_argument("fit_rate: n must be > 0");
    if (pt.detections < 0 || pt.detections > pt.n) {
      throw std::invalid_argument("fit_rate: detections out of range");
    }
    if (pt.duration != points.front().duration) distinct = true;
  }
  if (!distinct) throw std::invalid_argument("fit_rate: need at least 2 distinct durations");

  double S = 0.0, Sx = 0.0, Sy = 0.0, Sxx = 0.0, Sxy = 0.0;
  std::vector<double> ys(points.size()), ws(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double n = static_cast<double>(points[i].n);
    const double y = static_cast<double>(points[i].detections) / n;
    // 1/2-count continuity correction keeps the weight finite at the edges
    double p = y;
    if (points[i].detections == 0) p = 0.5 / n;
    if (points[i].detections == points[i].n) p = 1.0 - 0.5 / n;
    const double w = n / (p * (1.0 - p));
    const double x = points[i].duration;
    ys[i] = y;
    ws[i] = w;
    S += w;
    Sx += w * x;
    Sy += w * y;
    Sxx += w * x * x;
    Sxy += w * x * y;
  }
  const double delta = S * Sxx - Sx * Sx;
  FitReport report;
  report.n = static_cast<long long>(points.size());
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    report.params = {0.0, 0.0};
    report.se = {kInf, kInf};
    report.diagnostics = "singular normal equations";
    return report;
  }
  const double slope = (S * Sxy - Sx * Sy) / delta;
  const double intercept = (Sxx * Sy - Sx * Sxy) / delta;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double r = ys[i] - intercept - slope * points[i].duration;
    chi2 += ws[i] * r * r;
  }
  report.params = {intercept, slope};
  report.se = {std::sqrt(Sxx / delta), std::sqrt(S / delta)};
  report.objective = chi2;
  report.converged = true;
  return report;
}

bool rate_consistent_with_zero(const FitReport& rate_fit) {
  if (rate_fit.params.size() < 2 || rate_fit.se.size() < 2) {
    throw std::invalid_argument("rate_consistent_with_zero: not a rate fit");
  }
  return std::abs(rate_fit.params[1]) <= 3.0 * rate_fit.se[1];
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

// log probability of count bin n under the clipped discretized Gaussian
double gauss_bin_loglik(const std::vector<long long>& hist, double mean, double log_var) {
  const double sigma = std::exp(0.5 * log_var);
  const double norm = 1.0 - normal_cdf((-0.5 - mean) / sigma);
  if (!(norm > 0.0)) return -kInf;
  double ll = 0.0;
  for (std::size_t n = 0; n < hist.size(); ++n) {
    if (hist[n] == 0) continue;
    const double x = static_cast<double>(n);
    const double q =
        (normal_cdf((x + 0.5 - mean) / sigma) - normal_cdf((x - 0.5 - mean) / sigma)) / norm;
    ll += static_cast<double>(hist[n]) * std::log(std::max(q, kMassFloor));
  }
  return ll;
}

struct SimplexPoint {
  std::array<double, 2> x;
  double f;
};

// Nelder-Mead minimization in (mean, log variance); deterministic
std::array<double, 2> nelder_mead_gauss(const std::vector<long long>& hist, double m0, double v0,
                                        bool* converged) {
  const auto objective = [&](const std::array<double, 2>& x) {
    return -gauss_bin_loglik(hist, x[0], x[1]);
  };
  std::array<SimplexPoint, 3> s;
  const double lv0 = std::log(v0);
  s[0].x = {m0, lv0};
  s[1].x = {m0 + std::max(0.1, 0.1 * std::sqrt(v0)), lv0};
  s[2].x = {m0, lv0 + 0.2};
  for (SimplexPoint& p : s) p.f = objective(p.x);

  *converged = false;
  for (int iter = 0; iter < 600; ++iter) {
    std::sort(s.begin(), s.end(), [](const SimplexPoint& a, const SimplexPoint& b) {
      return a.f < b.f;
    });
    const double size = std::max(std::abs(s[2].x[0] - s[0].x[0]) + std::abs(s[2].x[1] - s[0].x[1]),
                                 std::abs(s[1].x[0] - s[0].x[0]) + std::abs(s[1].x[1] - s[0].x[1]));
    if (s[2].f - s[0].f < 1e-13 * (1.0 + std::abs(s[0].f)) && size < 1e-9) {
      *converged = true;
      break;
    }
    const std::array<double, 2> centroid = {0.5 * (s[0].x[0] + s[1].x[0]),
                                            0.5 * (s[0].x[1] + s[1].x[1])};
    const auto at = [&](double t) {
      return std::array<double, 2>{centroid[0] + t * (s[2].x[0] - centroid[0]),
                                   centroid[1] + t * (s[2].x[1] - centroid[1])};
    };
    const std::array<double, 2> xr = at(-1.0);
    const double fr = objective(xr);
    if (fr < s[0].f) {
      const std::array<double, 2> xe = at(-2.0);
      const double fe = objective(xe);
      if (fe < fr) {
        s[2] = {xe, fe};
      } else {
        s[2] = {xr, fr};
      }
    } else if (fr < s[1].f) {
      s[2] = {xr, fr};
    } else {
      const std::array<double, 2> xc = at(fr < s[2].f ? -0.5 : 0.5);
      const double fcontr = objective(xc);
      if (fcontr < std::min(fr, s[2].f)) {
        s[2] = {xc, fcontr};
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i].x = {0.5 * (s[i].x[0] + s[0].x[0]), 0.5 * (s[i].x[1] + s[0].x[1])};
          s[i].f = objective(s[i].x);
        }
      }
    }
  }
  std::sort(s.begin(), s.end(),
            [](const SimplexPoint& a, const SimplexPoint& b) { return a.f < b.f; });
  return s[0].x;
}

}  // namespace

HistogramFits fit_histogram_models(const std::vector<long long>& histogram,
                                   bool moment_matching) {
  long long total = 0;
  double sum = 0.0;
  for (std::size_t n = 0; n < histogram.size(); ++n) {
    if (histogram[n] < 0) throw std::invalid_argument("fit_histogram_models: negative bin count");
    total += histogram[n];
    sum += static_cast<double>(histogram[n]) * static_cast<double>(n);
  }
  if (total == 0) throw std::invalid_argument("fit_histogram_models: empty histogram");
  const double nd = static_cast<double>(total);
  const double mean = sum / nd;
  double var = 0.0;
  for (std::size_t n = 0; n < histogram.size(); ++n) {
    const double d = static_cast<double>(n) - mean;
    var += static_cast<double>(histogram[n]) * d * d;
  }
  var /= nd;

  HistogramFits fits;
  fits.poisson.params = {mean};
  fits.poisson.se = {std::sqrt(mean / nd)};
  double pois_ll = 0.0;
  for (std::size_t n = 0; n < histogram.size(); ++n) {
    if (histogram[n] == 0) continue;
    pois_ll += static_cast<double>(histogram[n]) *
               std::max(log_poisson_pmf(static_cast<int>(n), mean), std::log(kMassFloor));
  }
  fits.poisson.objective = pois_ll;
  fits.poisson.n = total;
  fits.poisson.converged = true;

  fits.gaussian.n = total;
  if (var == 0.0) {
    fits.gaussian.params = {mean, 0.0};
    fits.gaussian.se = {kInf, kInf};
    fits.gaussian.diagnostics = "degenerate support";
    return fits;
  }
  if (moment_matching) {
    fits.gaussian.params = {mean, var};
    fits.gaussian.se = {std::sqrt(var / nd), var * std::sqrt(2.0 / nd)};
    fits.gaussian.objective = gauss_bin_loglik(histogram, mean, std::log(var));
    fits.gaussian.converged = true;
    fits.gaussian.diagnostics = "moment matching";
    return fits;
  }

  bool nm_ok = false;
  const std::array<double, 2> opt = nelder_mead_gauss(histogram, mean, var, &nm_ok);
  const double m_hat = opt[0];
  const double v_hat = std::exp(opt[1]);
  fits.gaussian.params = {m_hat, v_hat};
  fits.gaussian.objective = gauss_bin_loglik(histogram, m_hat, opt[1]);
  fits.gaussian.converged = nm_ok;

  // observed information by central differences in (mean, variance)
  const double hm = 1e-4 * std::max(1.0, std::sqrt(v_hat));
  const double hv = 1e-4 * std::max(1.0, v_hat);
  const auto ll = [&](double m, double v) { return gauss_bin_loglik(histogram, m, std::log(v)); };
  const double f0 = fits.gaussian.objective;
  const double dmm = (ll(m_hat + hm, v_hat) - 2.0 * f0 + ll(m_hat - hm, v_hat)) / (hm * hm);
  const double dvv = (ll(m_hat, v_hat + hv) - 2.0 * f0 + ll(m_hat, v_hat - hv)) / (hv * hv);
  const double dmv = (ll(m_hat + hm, v_hat + hv) - ll(m_hat + hm, v_hat - hv) -
                      ll(m_hat - hm, v_hat + hv) + ll(m_hat - hm, v_hat - hv)) /
                     (4.0 * hm * hv);
  const double det = dmm * dvv - dmv * dmv;
  if (dmm < 0.0 && det > 0.0) {
    fits.gaussian.se = {std::sqrt(-dvv / det), std::sqrt(-dmm / det)};
  } else {
    fits.gaussian.se = {std::sqrt(var / nd), var * std::sqrt(2.0 / nd)};
    fits.gaussian.diagnostics = "curvature not positive definite; moment-based errors";
  }
  return fits;
}

}  // namespace qjsim
