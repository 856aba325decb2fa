#include "reuserisk/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace reuserisk {

namespace {

constexpr double kLog2Pow62 = 62.0 * 0.69314718055994530942;

void check_hoeffding_range(const CapacityQuery& q) {
  // Validity range of the concentration bound: ell >= k^2/n, i.e. ell*n >= k^2.
  if (q.ell * q.n < q.k * q.k) {
    throw std::domain_error(
        "hoeffding tail: requires ell >= k^2/n (equivalently ell/k >= k/n); "
        "got ell = " + std::to_string(q.ell) + ", k^2/n = " +
        std::to_string(static_cast<double>(q.k) * static_cast<double>(q.k) /
                       static_cast<double>(q.n)));
  }
}

double pairwise_log_tail(const CapacityQuery& q, TailMethod method) {
  if (method == TailMethod::exact_tail) {
    return hypergeom_log_tail(q.n, q.k, q.k, q.ell);
  }
  check_hoeffding_range(q);
  const double b = static_cast<double>(q.ell) / static_cast<double>(q.k) -
                   static_cast<double>(q.k) / static_cast<double>(q.n);
  return -2.0 * static_cast<double>(q.k) * b * b;
}

}  // namespace

void CapacityQuery::validate() const {
  if (!(k > 0 && k <= n)) {
    throw std::domain_error("CapacityQuery: requires 0 < k <= n");
  }
  if (!(ell >= 0 && ell <= k)) {
    throw std::domain_error("CapacityQuery: requires 0 <= ell <= k");
  }
  if (!(p_tol > 0.0 && p_tol <= 1.0)) {
    throw std::domain_error("CapacityQuery: requires p_tol in (0, 1]");
  }
}

double pairwise_overlap_tail(const CapacityQuery& q, TailMethod method) {
  q.validate();
  return std::min(1.0, std::exp(pairwise_log_tail(q, method)));
}

CapacityResult max_studies(const CapacityQuery& q, TailMethod method) {
  q.validate();
  const double log_tail = pairwise_log_tail(q, method);
  CapacityResult res;
  res.method = method;
  res.pairwise_tail = std::min(1.0, std::exp(log_tail));
  res.r1 = static_cast<double>(q.k) / static_cast<double>(q.n);
  res.r2 = static_cast<double>(q.ell) / static_cast<double>(q.k);
  res.log_c_bound = 0.5 * (std::log(2.0 * q.p_tol) - log_tail);
  if (res.log_c_bound > kLog2Pow62) {
    res.overflow = true;
    res.c_bound = 0;
  } else {
    res.overflow = false;
    res.c_bound =
        static_cast<std::uint64_t>(std::floor(std::exp(res.log_c_bound)));
  }
  return res;
}

std::vector<CapacityRow> capacity_table(const CapacityQuery& base,
                                        std::span<const std::int64_t> ell_values,
                                        TailMethod method) {
  std::vector<CapacityRow> rows;
  rows.reserve(ell_values.size());
  for (std::int64_t ell : ell_values) {
    CapacityRow row;
    row.ell = ell;
    row.ratio = static_cast<double>(ell) / static_cast<double>(base.k);
    CapacityQuery q = base;
    q.ell = ell;
    try {
      row.result = max_studies(q, method);
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::int64_t guaranteed_overlap_two(std::int64_t N, std::int64_t k) {
  if (N < 0 || k < 0 || k > N) {
    throw std::domain_error("guaranteed_overlap_two: requires 0 <= k <= N");
  }
  return std::max<std::int64_t>(0, 2 * k - N);
}

std::int64_t min_k_for_overlap_fraction(std::int64_t N, double lambda) {
  if (N <= 0) {
    throw std::domain_error("min_k_for_overlap_fraction: N must be positive");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::domain_error(
        "min_k_for_overlap_fraction: lambda must lie in [0, 1]");
  }
  const auto k = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(N) / (2.0 - lambda)));
  // 2k - N >= lambda k must hold at the returned k.
  if (static_cast<double>(guaranteed_overlap_two(N, std::min(k, N))) <
      lambda * static_cast<double>(k) - 1e-9) {
    throw std::logic_error("min_k_for_overlap_fraction: postcondition failed");
  }
  return k;
}

PigeonholeCapacity pigeonhole_capacity(std::int64_t N, std::int64_t k) {
  if (N < 0 || k < 0 || k > N) {
    throw std::domain_error("pigeonhole_capacity: requires 0 <= k <= N");
  }
  PigeonholeCapacity out;
  out.log_subsets = log_binomial(N, k);
  constexpr unsigned __int128 limit = static_cast<unsigned __int128>(1) << 62;
  unsigned __int128 c = 1;
  bool exact = true;
  for (std::int64_t i = 1; i <= k; ++i) {
    // c stays integral at every step: after i steps it equals C(N, i).
    c = c * static_cast<unsigned __int128>(N - k + i) /
        static_cast<unsigned __int128>(i);
    if (c > limit) {
      exact = false;
      break;
    }
  }
  if (exact) {
    out.overflow = false;
    out.count = static_cast<std::uint64_t>(c) + 1;
  } else {
    out.overflow = true;
    out.count = 0;
  }
  return out;
}

UnitReuseReport unit_reuse(std::span<const double> rates) {
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::domain_error("unit_reuse: rate outside [0,1]");
    }
  }
  double lambda = 0.0;
  double sum_sq = 0.0;
  double max_rate = 0.0;
  for (double r : rates) {
    lambda += r;
    sum_sq += r * r;
    max_rate = std::max(max_rate, r);
  }
  UnitReuseReport report{bernoulli_sum_pmf(rates), 0.0, std::nullopt,
                         0.0, 0.0, 0.0};
  report.poisson_lambda = lambda;
  report.pr_ge2_exact =
      std::max(0.0, 1.0 - report.exact_pmf.prob(0) - report.exact_pmf.prob(1));
  report.pr_ge2_poisson = 1.0 - (1.0 + lambda) * std::exp(-lambda);
  if (lambda > 0.0 && max_rate <= 0.25) {
    report.lecam_bound = 16.0 * sum_sq / lambda;
  }
  double sup = 0.0;
  double exact_cdf = 0.0;
  for (std::int64_t x = 0; x <= report.exact_pmf.support_max(); ++x) {
    exact_cdf += report.exact_pmf.prob(x);
    sup = std::max(sup, std::fabs(exact_cdf - poisson_cdf(lambda, x)));
  }
  report.sup_cdf_distance = sup;
  return report;
}

}  // namespace reuserisk
