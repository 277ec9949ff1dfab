// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "qjsim/rng.hpp"
#include "test_support.hpp"

using namespace qjsim;

TEST_CASE("streams with identical keys replay identical sequences") {
  RandomStream a(42, 3, 17, StreamLabel::qe_campaign);
  RandomStream b(42, 3, 17, StreamLabel::qe_campaign);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("any key component changes the stream") {
  const std::uint64_t base = derive_stream_seed(42, 3, 17, StreamLabel::qe_campaign);
  CHECK(derive_stream_seed(43, 3, 17, StreamLabel::qe_campaign) != base);
  CHECK(derive_stream_seed(42, 4, 17, StreamLabel::qe_campaign) != base);
  CHECK(derive_stream_seed(42, 3, 18, StreamLabel::qe_campaign) != base);
  CHECK(derive_stream_seed(42, 3, 17, StreamLabel::dark_current_campaign) != base);
}

TEST_CASE("derived seeds do not collide across a campaign-sized key space") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t setting = 0; setting < 20; ++setting) {
    for (std::uint64_t run = 0; run < 2000; ++run) {
      for (StreamLabel label : {StreamLabel::qe_campaign, StreamLabel::dark_current_campaign}) {
        seen.insert(derive_stream_seed(1, setting, run, label));
      }
    }
  }
  CHECK(seen.size() == 20u * 2000u * 2u);
}

TEST_CASE("unit doubles stay inside their half-open ranges") {
  RandomStream rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.next_double();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  RandomStream rng2(8);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng2.next_open_double();
    REQUIRE(u > 0.0);
    REQUIRE(u <= 1.0);
  }
}

TEST_CASE("unit doubles are uniform by chi-square") {
  RandomStream rng(12345, 0, 0, StreamLabel::sampler_test);
  const int n_bins = 64;
  const long long n_draws = 640000;
  std::vector<long long> hist(static_cast<std::size_t>(n_bins), 0);
  for (long long i = 0; i < n_draws; ++i) {
    const int bin = static_cast<int>(rng.next_double() * n_bins);
    ++hist[static_cast<std::size_t>(bin)];
  }
  const std::vector<double> expected(static_cast<std::size_t>(n_bins), 1.0 / n_bins);
  const auto gof = testsupport::chi_square_gof(hist, expected, n_draws);
  CHECK(gof.p_value > 1e-3);
}

TEST_CASE("bernoulli matches its probability") {
  RandomStream rng(5, 1, 2, StreamLabel::sampler_test);
  const double p = 0.0029;
  const long long n_draws = 2000000;
  long long hits = 0;
  for (long long i = 0; i < n_draws; ++i) hits += rng.bernoulli(p) ? 1 : 0;
  const double phat = static_cast<double>(hits) / static_cast<double>(n_draws);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n_draws));
  CHECK(std::abs(phat - p) < 5.0 * se);
}

TEST_CASE("adjacent run streams are statistically unrelated") {
  // correlation between consecutive runs' first outputs
  const long long n_pairs = 200000;
  double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
  for (long long run = 0; run < n_pairs; ++run) {
    RandomStream a(9, 0, static_cast<std::uint64_t>(run), StreamLabel::generic);
    RandomStream b(9, 0, static_cast<std::uint64_t>(run) + 1, StreamLabel::generic);
    const double x = a.next_double();
    const double y = b.next_double();
    sx += x;
    sy += y;
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  const double n = static_cast<double>(n_pairs);
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double corr = cov / std::sqrt(vx * vy);
  CHECK(std::abs(corr) < 5.0 / std::sqrt(n));
}
