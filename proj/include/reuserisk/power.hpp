#pragma once

// Power, Type-II error and sample-size calculus for two-sample mean-difference
// tests: a z test with known common variance and a pooled-variance t test with
// noncentral-t power evaluated by adaptive numeric integration.

#include <cstdint>
#include <span>

namespace reuserisk {

enum class TestKind { z_known_variance, t_pooled };

struct TestSpec {
  TestKind kind = TestKind::z_known_variance;
  double alpha = 0.05;
  bool two_sided = true;
  double delta = 0.0;  // effect size, outcome units
  double sigma = 1.0;  // common standard deviation
};

struct SampleVector {
  std::int64_t n1 = 0;  // control arm
  std::int64_t n2 = 0;  // treatment arm
};

// pr(fail to reject | true shift spec.delta).
double type2_error(const TestSpec& spec, const SampleVector& n);

// 1 - type2_error, exactly.
double power(const TestSpec& spec, const SampleVector& n);

// Smallest sample (n2 = ceil(ratio * n1)) whose power reaches target_power,
// found by doubling then bisection. target_power must lie in (alpha, 1).
SampleVector required_sample_size(const TestSpec& spec, double target_power,
                                  double allocation_ratio);

// Sum of per-study Type-II error rates; the portfolio's expected error count
// under the global alternative.
double portfolio_expected_type2(std::span<const TestSpec> specs,
                                std::span<const SampleVector> ns);

// Student's t distribution with df degrees of freedom (incomplete-beta based),
// and the noncentral-t cdf via integration over the pooled-SD scale factor.
// Shared with the simulation module for critical values.
double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);
double noncentral_t_cdf(double t, double df, double noncentrality);

}  // namespace reuserisk
