// SPDX-License-Identifier: Apache-2.0
#include "qjsim/pmf.hpp"

namespace qjsim {

double Pmf::cdf(int n) const {
  if (n < 0) return 0.0;
  const std::size_t last = static_cast<std::size_t>(n) + 1;
  const std::size_t stop = last < masses.size() ? last : masses.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < stop; ++i) sum += masses[i];
  return sum;
}

double Pmf::upper_tail(int n) const {
  double sum = tail_mass;
  const std::size_t start = n < 0 ? 0 : static_cast<std::size_t>(n) + 1;
  for (std::size_t i = start; i < masses.size(); ++i) sum += masses[i];
  return sum;
}

double Pmf::mean() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i) sum += static_cast<double>(i) * masses[i];
  return sum;
}

double Pmf::total() const {
  double sum = tail_mass;
  for (double m : masses) sum += m;
  return sum;
}

Pmf convolve(const Pmf& a, const Pmf& b) {
  Pmf out;
  if (a.masses.empty() || b.masses.empty()) {
    out.tail_mass = 1.0;
    return out;
  }
  out.masses.assign(a.masses.size() + b.masses.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    for (std::size_t j = 0; j < b.masses.size(); ++j) {
      out.masses[i + j] += a.masses[i] * b.masses[j];
    }
  }
  double cum = 0.0;
  for (double m : out.masses) cum += m;
  out.tail_mass = 1.0 - cum;
  if (out.tail_mass < 0.0) out.tail_mass = 0.0;
  return out;
}

}  // namespace qjsim
