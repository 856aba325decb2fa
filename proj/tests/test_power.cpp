#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "reuserisk/dist.hpp"
#include "reuserisk/power.hpp"

using namespace reuserisk;

namespace {

TestSpec z_spec(double alpha = 0.05, double delta = 0.5, double sigma = 1.0) {
  return TestSpec{TestKind::z_known_variance, alpha, true, delta, sigma};
}

TestSpec t_spec(double alpha = 0.05, double delta = 0.5, double sigma = 1.0) {
  return TestSpec{TestKind::t_pooled, alpha, true, delta, sigma};
}

}  // namespace

TEST_CASE("student t distribution basics") {
  CHECK(student_t_cdf(0.0, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
  // classical critical values
  CHECK(student_t_quantile(0.975, 10.0) ==
        doctest::Approx(2.228138852).epsilon(1e-7));
  CHECK(student_t_quantile(0.975, 148.0) ==
        doctest::Approx(1.976122).epsilon(1e-5));
  for (double df : {3.0, 30.0, 148.0}) {
    for (double p = 0.05; p < 1.0; p += 0.1) {
      CHECK(student_t_cdf(student_t_quantile(p, df), df) ==
            doctest::Approx(p).epsilon(1e-10));
    }
  }
  // symmetry
  CHECK(student_t_cdf(-1.3, 7.0) ==
        doctest::Approx(1.0 - student_t_cdf(1.3, 7.0)).epsilon(1e-12));
}

TEST_CASE("noncentral t reduces to central t at zero noncentrality") {
  for (double df : {2.0, 11.0, 98.0}) {
    for (double t = -3.0; t <= 3.0; t += 0.75) {
      CHECK(noncentral_t_cdf(t, df, 0.0) ==
            doctest::Approx(student_t_cdf(t, df)).epsilon(1e-9));
    }
  }
}

TEST_CASE("noncentral t approaches the shifted normal for large df") {
  for (double t = -2.0; t <= 4.0; t += 1.0) {
    CHECK(std::fabs(noncentral_t_cdf(t, 4000.0, 1.5) - normal_cdf(t - 1.5)) <
          1e-3);
  }
}

TEST_CASE("type-II error equals 1 - alpha under the null effect") {
  const SampleVector n{40, 40};
  CHECK(type2_error(z_spec(0.05, 0.0), n) ==
        doctest::Approx(0.95).epsilon(1e-10));
  CHECK(type2_error(t_spec(0.05, 0.0), n) ==
        doctest::Approx(0.95).epsilon(1e-8));
  CHECK(power(z_spec(0.05, 0.0), n) == doctest::Approx(0.05).epsilon(1e-8));
}

TEST_CASE("pooled-t type-II error reference values") {
  CHECK(std::fabs(type2_error(t_spec(), SampleVector{100, 50}) - 0.182) <
        0.005);
  CHECK(std::fabs(type2_error(t_spec(), SampleVector{50, 50}) - 0.303) <
        0.005);
}

TEST_CASE("z type-II error at registry scale") {
  CHECK(type2_error(z_spec(), SampleVector{1000, 500}) < 1e-10);
  const double beta = type2_error(z_spec(), SampleVector{500, 500});
  CHECK(beta > 1.4e-9 / 2.0);
  CHECK(beta < 1.4e-9 * 2.0);
}

TEST_CASE("type2_error + power = 1 exactly") {
  for (const SampleVector n : {SampleVector{10, 10}, SampleVector{100, 50}}) {
    CHECK(type2_error(t_spec(), n) + power(t_spec(), n) == 1.0);
    CHECK(type2_error(z_spec(), n) + power(z_spec(), n) == 1.0);
  }
}

TEST_CASE("required sample size by bisection against a scan oracle") {
  const auto result = required_sample_size(z_spec(), 0.80, 1.0);
  CHECK(result.n1 == result.n2);
  CHECK(result.n1 >= 63);
  CHECK(result.n1 <= 64);
  // independent scan over [50, 80]
  std::int64_t smallest = -1;
  for (std::int64_t n = 50; n <= 80; ++n) {
    if (power(z_spec(), SampleVector{n, n}) >= 0.80) {
      smallest = n;
      break;
    }
  }
  CHECK(result.n1 == smallest);
  CHECK(power(z_spec(), result) >= 0.80);
  CHECK(power(z_spec(), SampleVector{result.n1 - 1, result.n2 - 1}) < 0.80);
}

TEST_CASE("required sample size boundary and scaling behavior") {
  // Huge effect with a target barely above the level: minimal arms suffice.
  const auto tiny = required_sample_size(z_spec(0.05, 10.0), 0.06, 1.0);
  CHECK(tiny.n1 == 1);
  const auto tiny_t = required_sample_size(t_spec(0.05, 20.0), 0.06, 1.0);
  CHECK(tiny_t.n1 == 2);

  // Doubling the effect size roughly quarters the requirement.
  const auto half = required_sample_size(z_spec(0.05, 0.5), 0.80, 1.0);
  const auto full = required_sample_size(z_spec(0.05, 1.0), 0.80, 1.0);
  std::int64_t scan = -1;
  for (std::int64_t n = 2; n <= half.n1; ++n) {
    if (power(z_spec(0.05, 1.0), SampleVector{n, n}) >= 0.80) {
      scan = n;
      break;
    }
  }
  CHECK(full.n1 == scan);
  CHECK(std::llabs(full.n1 - (half.n1 + 3) / 4) <= 1);

  CHECK_THROWS_AS(required_sample_size(z_spec(), 1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(required_sample_size(z_spec(), 0.04, 1.0),
                  std::domain_error);
}

TEST_CASE("allocation ratio shapes the returned sample") {
  const auto result = required_sample_size(z_spec(), 0.80, 2.0);
  CHECK(result.n2 == 2 * result.n1);
}

TEST_CASE("portfolio expected type-II error") {
  const std::vector<TestSpec> specs{t_spec(), t_spec()};
  SUBCASE("full control reuse vs disjoint split") {
    const std::vector<SampleVector> glutton{{100, 50}, {100, 50}};
    const std::vector<SampleVector> split{{50, 50}, {50, 50}};
    CHECK(std::fabs(portfolio_expected_type2(specs, glutton) - 0.364) < 0.01);
    CHECK(std::fabs(portfolio_expected_type2(specs, split) - 0.606) < 0.01);
  }
  SUBCASE("empty portfolio and mismatched lengths") {
    CHECK(portfolio_expected_type2({}, {}) == 0.0);
    const std::vector<SampleVector> one{{50, 50}};
    CHECK_THROWS_AS(portfolio_expected_type2(specs, one),
                    std::invalid_argument);
  }
}

TEST_CASE("power is monotone in the sample size") {
  // Componentwise larger samples never lose power (checked for arms >= 5).
  for (const TestSpec& spec :
       {z_spec(0.05, 0.3), t_spec(0.05, 0.3), t_spec(0.01, 0.8, 2.0)}) {
    const std::int64_t sizes[] = {5, 8, 13, 21, 55, 144};
    for (std::size_t i = 0; i < std::size(sizes); ++i) {
      for (std::size_t j = i; j < std::size(sizes); ++j) {
        for (std::size_t a = 0; a < std::size(sizes); ++a) {
          for (std::size_t b = a; b < std::size(sizes); ++b) {
            const double lo =
                power(spec, SampleVector{sizes[i], sizes[a]});
            const double hi =
                power(spec, SampleVector{sizes[j], sizes[b]});
            CHECK(lo <= hi + 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("z and t agree for large arms") {
  for (std::int64_t n : {200, 400, 1000}) {
    const double beta_z = type2_error(z_spec(0.05, 0.2), SampleVector{n, n});
    const double beta_t = type2_error(t_spec(0.05, 0.2), SampleVector{n, n});
    CHECK(std::fabs(beta_z - beta_t) < 0.005);
  }
}

TEST_CASE("power is nondecreasing and continuous in the effect size") {
  const SampleVector n{60, 60};
  double prev = 0.0;
  double prev_delta_power = 0.0;
  for (double delta = 0.0; delta <= 1.5; delta += 0.01) {
    const double p = power(t_spec(0.05, delta), n);
    CHECK(p >= prev - 1e-12);
    // continuity: small delta steps move power by small amounts
    if (delta > 0.0) CHECK(std::fabs(p - prev_delta_power) < 0.05);
    prev = std::max(prev, p);
    prev_delta_power = p;
  }
}

TEST_CASE("one-sided tests") {
  TestSpec spec = z_spec(0.05, 0.0);
  spec.two_sided = false;
  CHECK(power(spec, SampleVector{50, 50}) ==
        doctest::Approx(0.05).epsilon(1e-9));
  spec.delta = 0.5;
  TestSpec spec_t = t_spec(0.05, 0.5);
  spec_t.two_sided = false;
  // one-sided power exceeds the two-sided power at the same level
  CHECK(power(spec, SampleVector{50, 50}) >
        power(z_spec(), SampleVector{50, 50}));
  CHECK(power(spec_t, SampleVector{50, 50}) >
        power(t_spec(), SampleVector{50, 50}));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(type2_error(z_spec(1.5), SampleVector{10, 10}),
                  std::domain_error);
  CHECK_THROWS_AS(type2_error(z_spec(0.05, 0.5, -1.0), SampleVector{10, 10}),
                  std::domain_error);
  CHECK_THROWS_AS(type2_error(t_spec(), SampleVector{1, 10}),
                  std::domain_error);
  CHECK_THROWS_AS(type2_error(z_spec(), SampleVector{0, 10}),
                  std::domain_error);
  CHECK_THROWS_AS(student_t_quantile(0.5, -1.0), std::domain_error);
  CHECK_THROWS_AS(student_t_quantile(1.0, 5.0), std::domain_error);
}
