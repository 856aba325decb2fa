#pragma once

// Probability primitives shared by the rest of the library: log-space
// combinatorics, the hypergeometric family, the standard normal cdf/quantile,
// Poisson, and exact Poisson-binomial (sum of independent Bernoulli) pmfs.

#include <cstdint>
#include <span>
#include <vector>

namespace reuserisk {

// Probability mass function on a contiguous integer support
// [support_min, support_min + size). Probabilities must lie in [0,1] and sum
// to 1 within 1e-12; construction throws std::invalid_argument otherwise.
class DiscretePmf {
 public:
  DiscretePmf(std::int64_t support_min, std::vector<double> probabilities);

  std::int64_t support_min() const { return support_min_; }
  std::int64_t support_max() const {
    return support_min_ + static_cast<std::int64_t>(probs_.size()) - 1;
  }
  std::size_t size() const { return probs_.size(); }
  const std::vector<double>& probabilities() const { return probs_; }

  // 0 outside the stored support.
  double prob(std::int64_t x) const;
  // pr(X <= x)
  double cdf(std::int64_t x) const;
  double mean() const;

 private:
  std::int64_t support_min_;
  std::vector<double> probs_;
};

// Immutable table of ln(n!) for n in [0, max_n]; safe to share across threads
// once constructed.
class LogCombinatorics {
 public:
  explicit LogCombinatorics(std::size_t max_n);

  std::size_t max_n() const { return log_fact_.size() - 1; }
  double log_factorial(std::int64_t n) const;
  double log_binomial(std::int64_t n, std::int64_t k) const;

 private:
  std::vector<double> log_fact_;
};

// Cached for small n, lgamma beyond the cache. Thread-safe.
double log_factorial(std::int64_t n);

// ln C(n, k). Throws std::domain_error for k > n or negative arguments.
// Exact under exponentiate-and-round for n <= 20.
double log_binomial(std::int64_t n, std::int64_t k);

// Hypergeometric(N, K, n): x successes in n draws without replacement from a
// population of N containing K successes. pmf is 0 outside
// [max(0, n+K-N), min(n, K)].
double hypergeom_pmf(std::int64_t N, std::int64_t K, std::int64_t n,
                     std::int64_t x);
// pr(X >= ell); 1 for ell at or below the support minimum.
double hypergeom_tail(std::int64_t N, std::int64_t K, std::int64_t n,
                      std::int64_t ell);
// ln pr(X >= ell); -inf for an empty tail. Usable where the tail underflows.
double hypergeom_log_tail(std::int64_t N, std::int64_t K, std::int64_t n,
                          std::int64_t ell);

// Standard normal cdf, accurate to ~1e-14 absolute (erfc-based).
double normal_cdf(double z);
// Inverse of normal_cdf on (0,1); Acklam's approximation polished with one
// Halley step. Throws std::domain_error outside (0,1).
double normal_quantile(double p);

double poisson_pmf(double lambda, std::int64_t x);
// Partial sum of the pmf over 0..x.
double poisson_cdf(double lambda, std::int64_t x);

// Exact pmf of a sum of independent Bernoulli(rates[i]) variables, by
// iterative convolution; support 0..rates.size().
DiscretePmf bernoulli_sum_pmf(std::span<const double> rates);

}  // namespace reuserisk
