#pragma once

// Capacity theory for subsampled datasets: how many k-subsamples an n-unit
// dataset sustains before a pairwise intersection of size >= ell becomes
// probable (union bound over study pairs, exact hypergeometric tail or its
// Hoeffding-type relaxation), deterministic overlap guarantees, and the
// distribution of per-unit reuse with its Poisson approximation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reuserisk/dist.hpp"

namespace reuserisk {

struct CapacityQuery {
  std::int64_t n = 0;    // dataset size
  std::int64_t k = 0;    // per-study sample size
  std::int64_t ell = 0;  // intersection threshold
  double p_tol = 0.05;   // tolerated probability of any large intersection

  void validate() const;
};

enum class TailMethod { exact_tail, hoeffding };

struct CapacityResult {
  std::uint64_t c_bound = 0;  // max studies; valid when !overflow
  double log_c_bound = 0.0;   // ln of the real-valued bound, always set
  bool overflow = false;      // bound exceeds 2^62, use log_c_bound
  TailMethod method = TailMethod::exact_tail;
  double pairwise_tail = 0.0;  // pr(|X1 ∩ X2| >= ell); may underflow to 0
  double r1 = 0.0;             // k/n
  double r2 = 0.0;             // ell/k
};

struct CapacityRow {
  std::int64_t ell = 0;
  double ratio = 0.0;  // ell/k
  bool ok = false;
  std::string error;
  CapacityResult result;
};

struct PigeonholeCapacity {
  bool overflow = false;
  std::uint64_t count = 0;   // C(N,k) + 1 when !overflow
  double log_subsets = 0.0;  // ln C(N,k), always set
};

struct UnitReuseReport {
  DiscretePmf exact_pmf;               // sum of Bernoulli(rate_i)
  double poisson_lambda = 0.0;         // sum of rates
  std::optional<double> lecam_bound;   // 16 * sum(r^2) / sum(r), when max rate <= 1/4
  double pr_ge2_exact = 0.0;
  double pr_ge2_poisson = 0.0;         // 1 - (1 + lambda) e^{-lambda}
  double sup_cdf_distance = 0.0;       // sup_x |F_exact(x) - F_poisson(x)|
};

// pr(|X1 ∩ X2| >= ell) for two independent uniform k-subsets of [n].
// exact_tail evaluates the Hypergeometric(n, k, k) tail; hoeffding returns
// exp(-2 k b^2) with b = ell/k - k/n and requires ell >= k^2/n.
double pairwise_overlap_tail(const CapacityQuery& q, TailMethod method);

// Largest C with C(C,2) * tail <= p_tol, i.e. floor(sqrt(2 p_tol / tail)).
CapacityResult max_studies(const CapacityQuery& q, TailMethod method);

// One CapacityResult row per ell value, in input order; per-row failures are
// reported in the row, not thrown.
std::vector<CapacityRow> capacity_table(const CapacityQuery& base,
                                        std::span<const std::int64_t> ell_values,
                                        TailMethod method);

// Deterministic lower bound |X1 ∩ X2| >= max(0, 2k - N).
std::int64_t guaranteed_overlap_two(std::int64_t N, std::int64_t k);

// Smallest k guaranteeing |X1 ∩ X2| >= lambda * k: ceil(N / (2 - lambda)).
std::int64_t min_k_for_overlap_fraction(std::int64_t N, double lambda);

// C(N,k) + 1 draws force two identical subsets (pigeonhole).
PigeonholeCapacity pigeonhole_capacity(std::int64_t N, std::int64_t k);

// Distribution of the number of studies reusing one fixed unit when study i
// includes it with probability rates[i].
UnitReuseReport unit_reuse(std::span<const double> rates);

}  // namespace reuserisk
