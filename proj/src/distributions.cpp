// SPDX-License-Identifier: Apache-2.0
#include "qjsim/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qjsim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log(n!) table; all factorial uses in this module take integer arguments,
// so a fixed table avoids std::lgamma's signgam global in parallel sections.
double log_factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(131072);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    }
    return t;
  }();
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  if (static_cast<std::size_t>(n) < table.size()) return table[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

// log(sum(exp(terms))); terms may contain -inf
double logsumexp(const std::vector<double>& terms) {
  double mx = kNegInf;
  for (double t : terms) mx = std::max(mx, t);
  if (!std::isfinite(mx)) return mx;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - mx);
  return mx + std::log(sum);
}

// single-stretch Poisson inversion; callers keep mu <= 60 so cum stays
// representable and the loop short
int poisson_inversion(double mu, RandomStream& rng) {
  const double u = rng.next_double();
  double pk = std::exp(-mu);
  double cum = pk;
  int k = 0;
  const int cap = static_cast<int>(mu + 12.0 * std::sqrt(mu + 1.0) + 60.0);
  while (u >= cum && k < cap) {
    ++k;
    pk *= mu / static_cast<double>(k);
    cum += pk;
  }
  return k;
}

}  // namespace

void CascadeParams::validate() const {
  if (!(scatter_survival > 0.0) || !(scatter_survival < 1.0)) {
    throw std::domain_error("cascade: scatter_survival must be in (0, 1)");
  }
  if (!(det_efficiency > 0.0) || det_efficiency > 1.0) {
    throw std::domain_error("cascade: det_efficiency must be in (0, 1]");
  }
  if (!(bg_mean >= 0.0) || !std::isfinite(bg_mean)) {
    throw std::domain_error("cascade: bg_mean must be finite and >= 0");
  }
}

double CascadeParams::background_ratio() const {
  return bg_mean * (1.0 - scatter_survival) / (det_efficiency * scatter_survival);
}

double log_poisson_pmf(int n, double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::domain_error("poisson: mean must be finite and >= 0");
  if (n < 0) return kNegInf;
  if (mu == 0.0) return n == 0 ? 0.0 : kNegInf;
  return static_cast<double>(n) * std::log(mu) - mu - log_factorial(n);
}

double poisson_pmf(int n, double mu) {
  const double lp = log_poisson_pmf(n, mu);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double pmf_scatter_count(int s, double p) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("scatter: survival must be in (0, 1)");
  if (s <= 0) return 0.0;
  return std::exp(static_cast<double>(s - 1) * std::log(p)) * (1.0 - p);
}

double pmf_detected_photons(int d, const CascadeParams& params, CascadeVariant variant) {
  params.validate();
  if (d < 0) return 0.0;
  const double p = params.scatter_survival;
  const double eta = params.det_efficiency;
  const double denom = 1.0 - p + eta * p;
  if (variant == CascadeVariant::corrected && d == 0) {
    return (1.0 - p) * (1.0 - eta) / denom;
  }
  if (d == 0) {
    return (1.0 - p) / (p * denom);
  }
  const double log_mass = static_cast<double>(d - 1) * std::log(p) +
                          static_cast<double>(d) * std::log(eta) + std::log(1.0 - p) -
                          static_cast<double>(d + 1) * std::log(denom);
  return std::exp(log_mass);
}

double log_exp_integral_neg_order(int n, double z) {
  if (n < 0) throw std::domain_error("exp_integral: order index must be >= 0");
  if (!(z > 0.0)) throw std::domain_error("exp_integral: argument must be > 0");
  const double lz = std::log(z);
  const double lfn = log_factorial(n);
  std::vector<double> terms(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    terms[static_cast<std::size_t>(k)] =
        lfn - log_factorial(n - k) - static_cast<double>(k + 1) * lz;
  }
  return -z + logsumexp(terms);
}

double exp_integral_neg_order(int n, double z) {
  return std::exp(log_exp_integral_neg_order(n, z));
}

namespace {

// counts pmf by explicit convolution of the detected-photon cascade masses
// with the Poisson background; shared fallback and corrected-variant route
double f2_counts_direct_sum(int n_c, const CascadeParams& params, CascadeVariant variant) {
  double sum = 0.0;
  double comp = 0.0;
  for (int d = 0; d <= n_c; ++d) {
    const double term = pmf_detected_photons(d, params, variant) * poisson_pmf(n_c - d, params.bg_mean);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

double pmf_counts_f2_closed_form(int n_c, const CascadeParams& params, CascadeVariant variant,
                                 F2EvalDiagnostics* diag) {
  params.validate();
  if (diag) *diag = F2EvalDiagnostics{};
  if (n_c < 0) return 0.0;
  const double mu = params.bg_mean;
  if (mu == 0.0) return pmf_detected_photons(n_c, params, variant);
  if (variant == CascadeVariant::corrected) {
    // corrected zero-mass breaks the geometric structure the closed form
    // relies on; the convolution is exact and short
    if (diag) diag->est_abs_error = 4.0 * static_cast<double>(n_c + 1) * 1e-16;
    return f2_counts_direct_sum(n_c, params, variant);
  }

  const double p = params.scatter_survival;
  const double x = params.background_ratio();
  const double z = x + mu;
  double value = std::numeric_limits<double>::infinity();
  double log_value = std::numeric_limits<double>::infinity();
  if (std::isfinite(x)) {
    const double lmu = std::log(mu);
    const double lz = std::log(z);
    std::vector<double> terms(static_cast<std::size_t>(n_c) + 1);
    for (int k = 0; k <= n_c; ++k) {
      terms[static_cast<std::size_t>(k)] = static_cast<double>(n_c) * lmu -
                                           log_factorial(n_c - k) -
                                           static_cast<double>(k + 1) * lz;
    }
    log_value = std::log(x) - std::log(p) - mu + logsumexp(terms);
    value = std::exp(log_value);
  }

  // crude forward bound on accumulated rounding in the log-space pipeline
  const double scale = std::abs(x) + mu + std::abs(std::log(p)) +
                       static_cast<double>(n_c) * std::abs(std::log(mu)) + log_factorial(n_c) +
                       static_cast<double>(n_c + 1) * std::abs(std::log(z)) + 30.0;
  const double est = value * 1e-15 * scale;
  if (diag) diag->est_abs_error = est;
  if (!std::isfinite(value) || est > 1e-8) {
    if (diag) {
      diag->fallback_used = true;
      diag->est_abs_error = 4.0 * static_cast<double>(n_c + 1) * 1e-16;
    }
    value = f2_counts_direct_sum(n_c, params, variant);
  }
  return value;
}

Pmf build_poisson_pmf(double mu, const PmfBuildOptions& opts) {
  return build_pmf([mu](int n) { return poisson_pmf(n, mu); }, opts);
}

Pmf build_counts_f2_pmf(const CascadeParams& params, CascadeVariant variant,
                        const PmfBuildOptions& opts) {
  params.validate();
  if (variant == CascadeVariant::corrected) {
    return build_pmf([&](int n) { return pmf_counts_f2_closed_form(n, params, variant); }, opts);
  }
  // paper_literal is not normalized (the d = 0 mass can exceed 1), so the
  // cumulative stopping rule does not apply; stop once masses are negligible
  Pmf pmf;
  const double mean_guess =
      params.bg_mean + params.det_efficiency / (1.0 - params.scatter_survival) + 10.0;
  for (int n = 0; n < opts.max_terms; ++n) {
    const double m = pmf_counts_f2_closed_form(n, params, variant);
    pmf.masses.push_back(m);
    if (n > mean_guess && m < opts.tail_cutoff * 0.1) break;
  }
  pmf.tail_mass = 0.0;
  return pmf;
}

int sample_poisson(double mu, RandomStream& rng) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::domain_error("poisson: mean must be finite and >= 0");
  if (mu == 0.0) return 0;
  int total = 0;
  while (mu > 60.0) {
    total += poisson_inversion(60.0, rng);
    mu -= 60.0;
  }
  return total + poisson_inversion(mu, rng);
}

int sample_geometric_scatter(double p, RandomStream& rng) {
  if (!(p > 0.0) || !(p < 1.0)) throw std::domain_error("scatter: survival must be in (0, 1)");
  const double u = rng.next_open_double();
  const double s = 1.0 + std::floor(std::log(u) / std::log(p));
  if (s < 1.0) return 1;
  if (s > 2147483000.0) return 2147483000;
  return static_cast<int>(s);
}

CascadeDraw sample_cascade(const CascadeParams& params, RandomStream& rng) {
  params.validate();
  CascadeDraw draw;
  draw.n_scat = sample_geometric_scatter(params.scatter_survival, rng);
  draw.n_det = 0;
  for (int i = 0; i < draw.n_scat; ++i) {
    if (rng.bernoulli(params.det_efficiency)) ++draw.n_det;
  }
  return draw;
}

int sample_readout_count_f2(const CascadeParams& params, RandomStream& rng) {
  const CascadeDraw draw = sample_cascade(params, rng);
  return draw.n_det + sample_poisson(params.bg_mean, rng);
}

}  // namespace qjsim
