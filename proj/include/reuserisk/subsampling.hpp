#pragma once

// Seeded subsampling without replacement and allocation of many draws from one
// dataset, either as independent uniform subsets or as a disjoint partition,
// plus overlap auditing. All operations are deterministic functions of their
// seed; per-draw seeds derive from (master_seed, draw index) via derive_stream.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace reuserisk {

enum class AllocationStrategy { independent_uniform, disjoint_partition };

enum class SampleMethod {
  auto_select,    // Fisher-Yates below the memory threshold, else selection scan
  fisher_yates,   // partial shuffle of a materialized index array, O(n) memory
  selection_scan  // sequential selection sampling, O(k) memory
};

struct Allocation {
  std::int64_t dataset_size = 0;
  std::vector<std::vector<std::int64_t>> draws;  // each sorted, duplicate-free
  AllocationStrategy strategy = AllocationStrategy::independent_uniform;
  std::uint64_t master_seed = 0;
};

// Index arrays above this size switch to selection sampling.
inline constexpr std::int64_t kFisherYatesMaxN = std::int64_t{1} << 24;

// k distinct indices from [0, n), uniform over all C(n,k) subsets, sorted.
std::vector<std::int64_t> subsample(std::int64_t n, std::int64_t k,
                                    std::uint64_t seed,
                                    SampleMethod method = SampleMethod::auto_select);

// independent_uniform: draw i is subsample(n, k_list[i], derive_stream(seed, i)).
// disjoint_partition: draws carved from one full shuffle of [0, n) (stream 0);
// requires sum(k_list) <= n.
Allocation allocate(std::int64_t n, std::span<const std::int64_t> k_list,
                    AllocationStrategy strategy, std::uint64_t master_seed);

// Entry (i, j) = |draw_i ∩ draw_j|; diagonal holds the draw sizes.
std::vector<std::vector<std::int64_t>> overlap_matrix(const Allocation& a);

// Fraction of trials in which C independent k-subsamples of [0, n) contain a
// pair intersecting in >= ell indices. Trial t uses derive_stream(seed, t).
double empirical_max_overlap(std::int64_t n, std::int64_t k, std::int64_t C,
                             std::int64_t ell, std::int64_t trials,
                             std::uint64_t master_seed);

// Export format: header "draw_id,k,indices", then one row per draw holding the
// draw id, its size, and the sorted indices, all comma-separated.
void write_allocation(std::ostream& out, const Allocation& a);

std::int64_t overlap_size(std::span<const std::int64_t> a,
                          std::span<const std::int64_t> b);

}  // namespace reuserisk
