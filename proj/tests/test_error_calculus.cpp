#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "reuserisk/error_calculus.hpp"
#include "reuserisk/rng.hpp"

using namespace reuserisk;

namespace {

// Valid (p1, p2, p2_given_1) triples sampled by generating the joint table.
std::vector<DependentEventPair> sampled_pairs(int count, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DependentEventPair> out;
  while (static_cast<int>(out.size()) < count) {
    double cells[4] = {u(gen), u(gen), u(gen), u(gen)};
    const double total = cells[0] + cells[1] + cells[2] + cells[3];
    for (double& c : cells) c /= total;
    // cells: p00, p01 (E2 only), p10 (E1 only), p11
    const double p1 = cells[2] + cells[3];
    const double p2 = cells[1] + cells[3];
    if (p1 <= 0.0) continue;
    out.emplace_back(p1, p2, cells[3] / p1);
  }
  return out;
}

}  // namespace

TEST_CASE("two-event distribution reference values") {
  const double alpha = 0.05;
  SUBCASE("same hypothesis on the same data") {
    const auto dist =
        two_event_distribution(DependentEventPair(alpha, alpha, 1.0));
    CHECK(dist.pmf().prob(0) == doctest::Approx(1.0 - alpha).epsilon(1e-14));
    CHECK(dist.pmf().prob(1) == doctest::Approx(0.0));
    CHECK(dist.pmf().prob(2) == doctest::Approx(alpha).epsilon(1e-14));
  }
  SUBCASE("same hypothesis on disjoint datasets") {
    const auto dist =
        two_event_distribution(DependentEventPair(alpha, alpha, alpha));
    CHECK(dist.pmf().prob(0) ==
          doctest::Approx(1.0 - 2.0 * alpha + alpha * alpha).epsilon(1e-14));
    CHECK(dist.pmf().prob(1) ==
          doctest::Approx(2.0 * alpha - 2.0 * alpha * alpha).epsilon(1e-14));
    CHECK(dist.pmf().prob(2) == doctest::Approx(alpha * alpha).epsilon(1e-14));
  }
  SUBCASE("intermediate dependence, joint-table oracle") {
    // p11 = 0.025, p10 = 0.025, p01 = 0.025, p00 = 0.925
    const auto dist =
        two_event_distribution(DependentEventPair(0.05, 0.05, 0.5));
    CHECK(dist.pmf().prob(0) == doctest::Approx(0.925).epsilon(1e-14));
    CHECK(dist.pmf().prob(1) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(dist.pmf().prob(2) == doctest::Approx(0.025).epsilon(1e-14));
  }
}

TEST_CASE("joint-consistency violations name the offending cell") {
  CHECK_THROWS_WITH_AS(DependentEventPair(0.5, 0.1, 0.9),
                       doctest::Contains("pr(E2 and not E1)"),
                       std::domain_error);
  CHECK_THROWS_WITH_AS(DependentEventPair(0.9, 0.5, 0.1),
                       doctest::Contains("pr(neither event)"),
                       std::domain_error);
  CHECK_THROWS_AS(DependentEventPair(1.2, 0.5, 0.5), std::domain_error);
}

TEST_CASE("two-event distribution sums to 1 with mean p1 + p2") {
  for (const auto& pair : sampled_pairs(200, 99)) {
    const auto dist = two_event_distribution(pair);
    double sum = 0.0;
    for (std::int64_t c = 0; c <= 2; ++c) sum += dist.pmf().prob(c);
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    CHECK(std::fabs(dist.mean() - (pair.p1 + pair.p2)) < 1e-12);
  }
}

TEST_CASE("stop-loss premium reference values") {
  const auto dist = two_event_distribution(DependentEventPair(0.05, 0.07, 0.4));
  CHECK(stop_loss_premium(dist, 0) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(stop_loss_premium(dist, 1) ==
        doctest::Approx(0.05 * 0.4).epsilon(1e-12));
  CHECK(stop_loss_premium(dist, 2) == 0.0);
  CHECK_THROWS_AS(stop_loss_premium(dist, 3), std::domain_error);
  CHECK_THROWS_AS(stop_loss_premium(dist, -1), std::domain_error);

  const ErrorCountDistribution point2(DiscretePmf(0, {0.0, 0.0, 1.0}));
  CHECK(stop_loss_premium(point2, 1) == doctest::Approx(1.0));
}

TEST_CASE("stop-loss curve reference values and shape") {
  SUBCASE("alpha 0.05, weak dependence") {
    const auto curve = stop_loss_curve(
        two_event_distribution(DependentEventPair(0.05, 0.05, 0.05)));
    REQUIRE(curve.premiums.size() == 3);
    CHECK(curve.premiums[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(curve.premiums[1] == doctest::Approx(0.0025).epsilon(1e-12));
    CHECK(curve.premiums[2] == 0.0);
  }
  SUBCASE("alpha 0.05, perfect dependence") {
    const auto curve = stop_loss_curve(
        two_event_distribution(DependentEventPair(0.05, 0.05, 1.0)));
    CHECK(curve.premiums[0] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(curve.premiums[1] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(curve.premiums[2] == 0.0);
  }
  SUBCASE("degenerate at zero errors") {
    const ErrorCountDistribution dist(DiscretePmf(0, {1.0, 0.0, 0.0}));
    for (double premium : stop_loss_curve(dist).premiums) {
      CHECK(premium == 0.0);
    }
  }
  SUBCASE("curve starts at the mean, nonincreasing, convex, ends at zero") {
    for (const auto& pair : sampled_pairs(100, 5)) {
      const auto dist = two_event_distribution(pair);
      const auto curve = stop_loss_curve(dist);
      CHECK(std::fabs(curve.premiums[0] - dist.mean()) < 1e-12);
      CHECK(curve.premiums.back() == 0.0);
      for (std::size_t L = 1; L < curve.premiums.size(); ++L) {
        CHECK(curve.premiums[L] <= curve.premiums[L - 1] + 1e-12);
      }
      for (std::size_t L = 1; L + 1 < curve.premiums.size(); ++L) {
        CHECK(curve.premiums[L - 1] + curve.premiums[L + 1] >=
              2.0 * curve.premiums[L] - 1e-12);
      }
    }
  }
}

TEST_CASE("stop-loss comparison") {
  const auto curve_for = [](double p2g1) {
    return stop_loss_curve(
        two_event_distribution(DependentEventPair(0.05, 0.05, p2g1)));
  };
  CHECK(stop_loss_compare(curve_for(0.3), curve_for(0.3)) ==
        StopLossOrder::equal);
  CHECK(stop_loss_compare(curve_for(0.2), curve_for(0.8)) ==
        StopLossOrder::a_smaller);
  CHECK(stop_loss_compare(curve_for(0.8), curve_for(0.2)) ==
        StopLossOrder::b_smaller);

  // The pair (0.9,0,0.1) vs (0.85,0.15,0) has premiums (0.2,0.1,0) vs
  // (0.15,0,0): the second is smaller everywhere rather than crossing.
  const auto curve_a =
      stop_loss_curve(ErrorCountDistribution(DiscretePmf(0, {0.9, 0.0, 0.1})));
  const auto curve_b = stop_loss_curve(
      ErrorCountDistribution(DiscretePmf(0, {0.85, 0.15, 0.0})));
  CHECK(stop_loss_compare(curve_a, curve_b) == StopLossOrder::b_smaller);

  // A genuinely crossing pair: means 0.2 vs 0.3 with rho(1) = 0.1 vs 0.
  const auto curve_c =
      stop_loss_curve(ErrorCountDistribution(DiscretePmf(0, {0.7, 0.3, 0.0})));
  CHECK(stop_loss_compare(curve_a, curve_c) == StopLossOrder::incomparable);

  // Padding: the shorter curve extends with zeros.
  const StopLossCurve small{{0.1, 0.0}};
  const StopLossCurve long_zero{{0.1, 0.0, 0.0, 0.0}};
  CHECK(stop_loss_compare(small, long_zero) == StopLossOrder::equal);
}

TEST_CASE("stop-loss order is a partial order on sampled triples") {
  const auto pairs = sampled_pairs(30, 17);
  std::vector<StopLossCurve> curves;
  for (const auto& pair : pairs) {
    curves.push_back(stop_loss_curve(two_event_distribution(pair)));
  }
  for (const auto& curve : curves) {
    CHECK(stop_loss_compare(curve, curve) == StopLossOrder::equal);
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t j = 0; j < curves.size(); ++j) {
      const auto ab = stop_loss_compare(curves[i], curves[j]);
      const auto ba = stop_loss_compare(curves[j], curves[i]);
      if (ab == StopLossOrder::a_smaller) CHECK(ba == StopLossOrder::b_smaller);
      if (ab == StopLossOrder::equal) CHECK(ba == StopLossOrder::equal);
      for (std::size_t k = 0; k < curves.size(); ++k) {
        if (ab == StopLossOrder::a_smaller &&
            stop_loss_compare(curves[j], curves[k]) ==
                StopLossOrder::a_smaller) {
          const auto ac = stop_loss_compare(curves[i], curves[k]);
          CHECK((ac == StopLossOrder::a_smaller || ac == StopLossOrder::equal));
        }
      }
    }
  }
}

TEST_CASE("pcer") {
  const double alpha = 0.05;
  for (double p2g1 : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto dist =
        two_event_distribution(DependentEventPair(alpha, alpha, p2g1));
    CHECK(pcer(dist) == doctest::Approx(alpha).epsilon(1e-12));
  }
  const ErrorCountDistribution no_errors(DiscretePmf(0, {1.0, 0.0, 0.0}));
  CHECK(pcer(no_errors) == 0.0);
  const ErrorCountDistribution empty(DiscretePmf(0, {1.0}));
  CHECK_THROWS_AS(pcer(empty), std::domain_error);
}

TEST_CASE("fwer reference values and monotonicity") {
  const double alpha = 0.05;
  CHECK(fwer(two_event_distribution(DependentEventPair(alpha, alpha, 1.0))) ==
        doctest::Approx(alpha).epsilon(1e-12));
  CHECK(fwer(two_event_distribution(DependentEventPair(alpha, alpha, 0.0))) ==
        doctest::Approx(2.0 * alpha).epsilon(1e-12));
  CHECK(
      fwer(two_event_distribution(DependentEventPair(alpha, alpha, alpha))) ==
      doctest::Approx(2.0 * alpha - alpha * alpha).epsilon(1e-12));
  double prev = 1.0;
  for (double p2g1 = 0.0; p2g1 <= 1.0; p2g1 += 0.05) {
    const double f =
        fwer(two_event_distribution(DependentEventPair(alpha, alpha, p2g1)));
    CHECK(f <= prev + 1e-12);
    prev = f;
  }
}

TEST_CASE("fdr under the global null") {
  const double alpha = 0.05;
  CHECK(fdr_global_null(two_event_distribution(
            DependentEventPair(alpha, alpha, 1.0))) ==
        doctest::Approx(alpha).epsilon(1e-12));
  CHECK(fdr_global_null(two_event_distribution(
            DependentEventPair(alpha, alpha, alpha))) ==
        doctest::Approx(2.0 * alpha - alpha * alpha).epsilon(1e-12));
  CHECK(fdr_global_null(two_event_distribution(
            DependentEventPair(alpha, alpha, 0.5))) ==
        doctest::Approx(0.075).epsilon(1e-12));
}

TEST_CASE("pcer <= fdr = fwer sandwich") {
  for (const auto& pair : sampled_pairs(200, 23)) {
    const auto dist = two_event_distribution(pair);
    CHECK(pcer(dist) <= fdr_global_null(dist) + 1e-12);
    CHECK(fdr_global_null(dist) == fwer(dist));
  }
}

TEST_CASE("expected utility") {
  const double alpha = 0.05;
  for (double p2g1 : {0.0, 0.3, 1.0}) {
    const auto dist =
        two_event_distribution(DependentEventPair(alpha, alpha, p2g1));
    CHECK(expected_utility(dist, UtilityFunction::linear()) ==
          doctest::Approx(-2.0 * alpha).epsilon(1e-12));
  }
  const ErrorCountDistribution identical(
      DiscretePmf(0, {1.0 - alpha, 0.0, alpha}));
  CHECK(expected_utility(identical, UtilityFunction::quadratic()) ==
        doctest::Approx(-4.0 * alpha).epsilon(1e-12));
  CHECK(expected_utility(identical,
                         UtilityFunction::tabulated({0.0, 0.0, 0.0})) == 0.0);
  CHECK_THROWS_AS(
      expected_utility(identical, UtilityFunction::tabulated({0.0, -1.0})),
      std::domain_error);
  CHECK_THROWS_AS(expected_utility(identical, UtilityFunction::qaly()),
                  std::domain_error);
}

TEST_CASE("risk neutrality of the mean versus rho(1)") {
  // For fixed marginals the L=1 premium strictly grows with the dependence
  // while pcer and expected linear utility stay flat.
  const double alpha = 0.05;
  double prev_premium = -1.0;
  for (double p2g1 = 0.0; p2g1 <= 1.0; p2g1 += 0.1) {
    const auto dist =
        two_event_distribution(DependentEventPair(alpha, alpha, p2g1));
    const double premium = stop_loss_premium(dist, 1);
    CHECK(premium > prev_premium);
    prev_premium = premium;
    CHECK(pcer(dist) == doctest::Approx(alpha).epsilon(1e-12));
    CHECK(expected_utility(dist, UtilityFunction::linear()) ==
          doctest::Approx(-2.0 * alpha).epsilon(1e-12));
  }
}

TEST_CASE("shared-control correlation formula") {
  CHECK(shared_control_correlation(100, 0) == 0.0);
  CHECK(shared_control_correlation(100, 100) == doctest::Approx(0.5));
  CHECK(shared_control_correlation(100, 50) == doctest::Approx(0.25));
  CHECK_THROWS_AS(shared_control_correlation(100, 101), std::domain_error);
  CHECK_THROWS_AS(shared_control_correlation(0, 0), std::domain_error);
}

TEST_CASE("shared-control correlation against a Monte Carlo oracle") {
  // 2n-unit control pool, treatment arms of size n compared against
  // overlapping size-n control subsets sharing k units; z statistics with the
  // known sigma = 1.
  const std::int64_t n = 100;
  const std::int64_t k = 50;
  const int reps = 100000;
  Rng rng(424242);
  double sum1 = 0.0, sum2 = 0.0, sum11 = 0.0, sum22 = 0.0, sum12 = 0.0;
  const double se = std::sqrt(2.0 / static_cast<double>(n));
  for (int rep = 0; rep < reps; ++rep) {
    double pool_a = 0.0, pool_shared = 0.0, pool_b = 0.0;
    for (std::int64_t i = 0; i < n - k; ++i) pool_a += rng.normal();
    for (std::int64_t i = 0; i < k; ++i) pool_shared += rng.normal();
    for (std::int64_t i = 0; i < n - k; ++i) pool_b += rng.normal();
    double x = 0.0, z = 0.0;
    for (std::int64_t i = 0; i < n; ++i) x += rng.normal();
    for (std::int64_t i = 0; i < n; ++i) z += rng.normal();
    const double mean_ya = (pool_a + pool_shared) / static_cast<double>(n);
    const double mean_yb = (pool_b + pool_shared) / static_cast<double>(n);
    const double t1 = (x / static_cast<double>(n) - mean_ya) / se;
    const double t2 = (z / static_cast<double>(n) - mean_yb) / se;
    sum1 += t1;
    sum2 += t2;
    sum11 += t1 * t1;
    sum22 += t2 * t2;
    sum12 += t1 * t2;
  }
  const double m1 = sum1 / reps, m2 = sum2 / reps;
  const double v1 = sum11 / reps - m1 * m1;
  const double v2 = sum22 / reps - m2 * m2;
  const double corr = (sum12 / reps - m1 * m2) / std::sqrt(v1 * v2);
  CHECK(std::fabs(corr - shared_control_correlation(n, k)) < 0.02);
}
