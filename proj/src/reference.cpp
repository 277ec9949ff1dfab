// SPDX-License-Identifier: Apache-2.0
#include "qjsim/reference.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace qjsim::reference {

double pmf_detected_photons_series(int d, const CascadeParams& params, CascadeVariant variant,
                                   double tail_cutoff) {
  params.validate();
  if (d < 0) return 0.0;
  const double p = params.scatter_survival;
  const double eta = params.det_efficiency;
  if (variant == CascadeVariant::paper_literal && d == 0) {
    // verbatim formula, not a series: kept so the oracle covers both variants
    return (1.0 - p) / (p * (1.0 - p + eta * p));
  }
  // term(s) = p^{s-1}(1-p) C(s,d) eta^d (1-eta)^{s-d}, s >= max(d, 1)
  double term;
  int s;
  if (d == 0) {
    s = 1;
    term = (1.0 - p) * (1.0 - eta);
  } else {
    s = d;
    term = std::exp(static_cast<double>(d - 1) * std::log(p) +
                    static_cast<double>(d) * std::log(eta)) *
           (1.0 - p);
  }
  double sum = 0.0;
  for (;;) {
    sum += term;
    const double ratio =
        p * (1.0 - eta) * static_cast<double>(s + 1) / static_cast<double>(s + 1 - d);
    if (ratio < 1.0) {
      // remaining tail <= term * ratio / (1 - ratio) once the ratio is
      // decreasing, which holds from the first summed term onward
      if (term * ratio / (1.0 - ratio) < tail_cutoff) break;
    }
    term *= ratio;
    ++s;
    if (s > 100000000) throw std::runtime_error("detected-photon series failed to converge");
  }
  return sum;
}

double pmf_counts_f2_convolution(int n_c, const CascadeParams& params, CascadeVariant variant,
                                 double tail_cutoff) {
  params.validate();
  if (n_c < 0) return 0.0;
  const double mu = params.bg_mean;
  // Poisson masses by recurrence, a different route than the log-space
  // production evaluator
  std::vector<double> pois(static_cast<std::size_t>(n_c) + 1);
  pois[0] = std::exp(-mu);
  for (int k = 1; k <= n_c; ++k) {
    pois[static_cast<std::size_t>(k)] = pois[static_cast<std::size_t>(k - 1)] * mu / k;
  }
  double sum = 0.0;
  for (int d = 0; d <= n_c; ++d) {
    sum += pmf_detected_photons_series(d, params, variant, tail_cutoff) *
           pois[static_cast<std::size_t>(n_c - d)];
  }
  return sum;
}

namespace {

// integrand of E_{-n}(z) on t >= 1, log-shifted so the peak value is ~1
double shifted_integrand(double t, int n, double z, double shift) {
  return std::exp(static_cast<double>(n) * std::log(t) - z * t - shift);
}

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adaptive_simpson(int n, double z, double shift, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = shifted_integrand(lm, n, z, shift);
  const double frm = shifted_integrand(rm, n, z, shift);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(n, z, shift, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(n, z, shift, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double log_exp_integral_quadrature(int n, double z, double rel_tol) {
  if (n < 0) throw std::domain_error("exp_integral: order index must be >= 0");
  if (!(z > 0.0)) throw std::domain_error("exp_integral: argument must be > 0");
  const double peak_t = std::max(1.0, static_cast<double>(n) / z);
  const double shift = static_cast<double>(n) * std::log(peak_t) - z * peak_t;
  // march past the peak until the shifted integrand is ~1e-20
  double upper = peak_t;
  const double step = std::max(1.0, (std::sqrt(static_cast<double>(n)) + 1.0) / z);
  while (static_cast<double>(n) * std::log(upper) - z * upper - shift > -46.0) {
    upper += step;
  }
  const double a = 1.0;
  // a coarse composite pass pins the integral's magnitude first; a 3-point
  // bootstrap can miss a narrow interior peak entirely, and a tolerance
  // anchored to that underestimate never terminates
  const int panels = 128;
  const double h = (upper - a) / panels;
  std::vector<double> f(2 * panels + 1);
  for (int i = 0; i <= 2 * panels; ++i) {
    f[static_cast<std::size_t>(i)] = shifted_integrand(a + 0.5 * h * i, n, z, shift);
  }
  double coarse = 0.0;
  for (int i = 0; i < panels; ++i) {
    coarse += simpson(f[2 * i], f[2 * i + 1], f[2 * i + 2], h);
  }
  const double tol = rel_tol * std::max(std::abs(coarse), 1e-30);
  double integral = 0.0;
  for (int i = 0; i < panels; ++i) {
    const double pa = a + h * i;
    const double whole = simpson(f[2 * i], f[2 * i + 1], f[2 * i + 2], h);
    integral += adaptive_simpson(n, z, shift, pa, pa + h, f[2 * i], f[2 * i + 1], f[2 * i + 2],
                                 whole, tol / panels, 40);
  }
  return shift + std::log(integral);
}

double poisson_upper_tail(int threshold, double mu) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson: mean must be >= 0");
  if (threshold < 0) return 1.0;
  double term = std::exp(-mu);
  double cum = term;
  for (int k = 1; k <= threshold; ++k) {
    term *= mu / k;
    cum += term;
  }
  return cum < 1.0 ? 1.0 - cum : 0.0;
}

AppendixValidation run_appendix_validation(double tolerance, int max_count) {
  AppendixValidation out;
  out.tolerance = tolerance;
  out.max_count = max_count;
  const double survival_grid[] = {0.3, 0.7, 0.95};
  const double efficiency_grid[] = {0.01, 0.1, 0.5};
  const double bg_grid[] = {0.5, 1.146, 3.0};
  const CascadeVariant variants[] = {CascadeVariant::paper_literal, CascadeVariant::corrected};
  for (CascadeVariant variant : variants) {
    for (double p : survival_grid) {
      for (double eta : efficiency_grid) {
        for (double mu : bg_grid) {
          const CascadeParams params{p, eta, mu};
          const double d0 = pmf_detected_photons(0, params, CascadeVariant::paper_literal);
          if (d0 > 1.0) {
            out.literal_anomaly_found = true;
          }
          if (d0 > out.literal_d0_max) out.literal_d0_max = d0;
          for (int n_c = 0; n_c <= max_count; ++n_c) {
            AppendixGridRow row;
            row.variant = variant;
            row.scatter_survival = p;
            row.det_efficiency = eta;
            row.bg_mean = mu;
            row.n_c = n_c;
            row.closed_form = pmf_counts_f2_closed_form(n_c, params, variant);
            row.brute_force = pmf_counts_f2_convolution(n_c, params, variant);
            row.abs_diff = std::abs(row.closed_form - row.brute_force);
            if (row.abs_diff > out.max_abs_diff) out.max_abs_diff = row.abs_diff;
            out.rows.push_back(row);
          }
        }
      }
    }
  }
  out.within_tolerance = out.max_abs_diff < tolerance;
  return out;
}

}  // namespace qjsim::reference
