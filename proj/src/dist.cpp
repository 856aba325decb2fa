#include "reuserisk/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace reuserisk {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2Pi = 2.50662827463100050242;
constexpr std::size_t kLogFactCacheSize = std::size_t{1} << 16;

const std::vector<double>& log_fact_cache() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kLogFactCacheSize);
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log(static_cast<double>(i));
    }
    return t;
  }();
  return table;
}

}  // namespace

DiscretePmf::DiscretePmf(std::int64_t support_min,
                         std::vector<double> probabilities)
    : support_min_(support_min), probs_(std::move(probabilities)) {
  if (probs_.empty()) {
    throw std::invalid_argument("DiscretePmf: support must be nonempty");
  }
  double sum = 0.0;
  for (double& p : probs_) {
    if (p < 0.0) {
      if (p < -1e-12) {
        throw std::invalid_argument("DiscretePmf: negative probability " +
                                    std::to_string(p));
      }
      p = 0.0;
    }
    if (p > 1.0) {
      if (p > 1.0 + 1e-12) {
        throw std::invalid_argument("DiscretePmf: probability exceeds 1: " +
                                    std::to_string(p));
      }
      p = 1.0;
    }
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscretePmf: probabilities sum to " +
                                std::to_string(sum) + ", expected 1");
  }
}

double DiscretePmf::prob(std::int64_t x) const {
  if (x < support_min_ || x > support_max()) return 0.0;
  return probs_[static_cast<std::size_t>(x - support_min_)];
}

double DiscretePmf::cdf(std::int64_t x) const {
  if (x < support_min_) return 0.0;
  if (x >= support_max()) return 1.0;
  double acc = 0.0;
  for (std::int64_t v = support_min_; v <= x; ++v) {
    acc += probs_[static_cast<std::size_t>(v - support_min_)];
  }
  return std::min(acc, 1.0);
}

double DiscretePmf::mean() const {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += static_cast<double>(support_min_ + static_cast<std::int64_t>(i)) *
           probs_[i];
  }
  return acc;
}

LogCombinatorics::LogCombinatorics(std::size_t max_n) : log_fact_(max_n + 1) {
  log_fact_[0] = 0.0;
  for (std::size_t i = 1; i < log_fact_.size(); ++i) {
    log_fact_[i] = log_fact_[i - 1] + std::log(static_cast<double>(i));
  }
}

double LogCombinatorics::log_factorial(std::int64_t n) const {
  if (n < 0 || static_cast<std::size_t>(n) >= log_fact_.size()) {
    throw std::domain_error("LogCombinatorics: argument outside cache");
  }
  return log_fact_[static_cast<std::size_t>(n)];
}

double LogCombinatorics::log_binomial(std::int64_t n, std::int64_t k) const {
  if (k < 0 || n < 0 || k > n) {
    throw std::domain_error("log_binomial: requires 0 <= k <= n");
  }
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_factorial(std::int64_t n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  const auto& cache = log_fact_cache();
  if (static_cast<std::size_t>(n) < cache.size()) {
    return cache[static_cast<std::size_t>(n)];
  }
  return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) {
    throw std::domain_error("log_binomial: requires 0 <= k <= n");
  }
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

namespace {

void check_hypergeom_params(std::int64_t N, std::int64_t K, std::int64_t n) {
  if (N < 0 || K < 0 || n < 0 || K > N || n > N) {
    throw std::domain_error(
        "hypergeometric: requires 0 <= K <= N and 0 <= n <= N");
  }
}

}  // namespace

double hypergeom_pmf(std::int64_t N, std::int64_t K, std::int64_t n,
                     std::int64_t x) {
  check_hypergeom_params(N, K, n);
  const std::int64_t lo = std::max<std::int64_t>(0, n + K - N);
  const std::int64_t hi = std::min(n, K);
  if (x < lo || x > hi) return 0.0;
  return std::exp(log_binomial(K, x) + log_binomial(N - K, n - x) -
                  log_binomial(N, n));
}

double hypergeom_log_tail(std::int64_t N, std::int64_t K, std::int64_t n,
                          std::int64_t ell) {
  check_hypergeom_params(N, K, n);
  const std::int64_t lo = std::max<std::int64_t>(0, n + K - N);
  const std::int64_t hi = std::min(n, K);
  if (ell <= lo) return 0.0;  // the whole support
  if (ell > hi) return -std::numeric_limits<double>::infinity();
  const double log_denom = log_binomial(N, n);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(hi - ell + 1));
  double max_term = -std::numeric_limits<double>::infinity();
  for (std::int64_t x = ell; x <= hi; ++x) {
    const double t =
        log_binomial(K, x) + log_binomial(N - K, n - x) - log_denom;
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

double hypergeom_tail(std::int64_t N, std::int64_t K, std::int64_t n,
                      std::int64_t ell) {
  return std::min(1.0, std::exp(hypergeom_log_tail(N, K, n, ell)));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  }
  // Work in the lower half: 1 - p is exact for p >= 0.5, and the Halley
  // polish below needs the full relative resolution of small cdf values.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  // Acklam's rational approximation (~1.15e-9 absolute).
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
          c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // One Halley step against the erfc-based cdf. Skipped beyond |x| = 37 where
  // exp(x^2/2) overflows and the cdf saturates; the rational approximation is
  // already the best available there.
  if (std::fabs(x) < 37.0) {
    const double e = normal_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double poisson_pmf(double lambda, std::int64_t x) {
  if (!(lambda >= 0.0)) {
    throw std::domain_error("poisson_pmf: lambda must be nonnegative");
  }
  if (x < 0) throw std::domain_error("poisson_pmf: x must be nonnegative");
  if (lambda == 0.0) return x == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(x) * std::log(lambda) - lambda -
                  log_factorial(x));
}

double poisson_cdf(double lambda, std::int64_t x) {
  if (!(lambda >= 0.0)) {
    throw std::domain_error("poisson_cdf: lambda must be nonnegative");
  }
  if (x < 0) throw std::domain_error("poisson_cdf: x must be nonnegative");
  double acc = 0.0;
  for (std::int64_t k = 0; k <= x; ++k) acc += poisson_pmf(lambda, k);
  return std::min(acc, 1.0);
}

DiscretePmf bernoulli_sum_pmf(std::span<const double> rates) {
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::domain_error("bernoulli_sum_pmf: rate outside [0,1]");
    }
  }
  std::vector<double> pmf{1.0};
  pmf.reserve(rates.size() + 1);
  for (double r : rates) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t i = 0; i < pmf.size(); ++i) {
      next[i] += pmf[i] * (1.0 - r);
      next[i + 1] += pmf[i] * r;
    }
    pmf = std::move(next);
  }
  return DiscretePmf(0, std::move(pmf));
}

}  // namespace reuserisk
