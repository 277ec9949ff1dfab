// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace qjsim {

/// Probability mass function over counts n = 0, 1, ..., masses.size()-1,
/// with tail_mass accounting for everything beyond the stored range.
struct Pmf {
  std::vector<double> masses;
  double tail_mass = 0.0;

  double mass(int n) const {
    if (n < 0 || static_cast<std::size_t>(n) >= masses.size()) return 0.0;
    return masses[static_cast<std::size_t>(n)];
  }

  int max_count() const { return static_cast<int>(masses.size()) - 1; }

  /// P(N <= n) over the stored range.
  double cdf(int n) const;

  /// P(N > n), counting tail_mass as above any stored bin.
  double upper_tail(int n) const;

  /// Mean over the stored range (tail ignored).
  double mean() const;

  /// Sum of stored masses plus tail_mass.
  double total() const;
};

/// Controls adaptive truncation when building pmfs.
struct PmfBuildOptions {
  double tail_cutoff = 1e-12;
  int max_terms = 100000;
};

/// Builds a pmf by evaluating `mass_at(n)` for n = 0, 1, ... until the
/// remaining tail drops below the cutoff (or the term cap is hit).
template <typename MassFn>
Pmf build_pmf(MassFn&& mass_at, const PmfBuildOptions& opts = {}) {
  Pmf pmf;
  double cum = 0.0;
  for (int n = 0; n < opts.max_terms; ++n) {
    const double m = mass_at(n);
    pmf.masses.push_back(m);
    cum += m;
    if (1.0 - cum < opts.tail_cutoff) break;
  }
  pmf.tail_mass = 1.0 - cum;
  if (pmf.tail_mass < 0.0) pmf.tail_mass = 0.0;
  return pmf;
}

/// Discrete convolution of two count pmfs; tails combine conservatively.
Pmf convolve(const Pmf& a, const Pmf& b);

}  // namespace qjsim
