#include "reuserisk/subsampling.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "reuserisk/rng.hpp"

namespace reuserisk {

namespace {

std::vector<std::int64_t> sample_fisher_yates(std::int64_t n, std::int64_t k,
                                              Rng& rng) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  for (std::int64_t i = 0; i < k; ++i) {
    const std::int64_t j =
        i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Sequential selection sampling: index j enters with probability
// needed/remaining, which yields every k-subset with equal probability.
std::vector<std::int64_t> sample_selection_scan(std::int64_t n, std::int64_t k,
                                                Rng& rng) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(k));
  std::int64_t needed = k;
  for (std::int64_t j = 0; j < n && needed > 0; ++j) {
    const auto remaining = static_cast<std::uint64_t>(n - j);
    if (rng.below(remaining) < static_cast<std::uint64_t>(needed)) {
      out.push_back(j);
      --needed;
    }
  }
  return out;  // already sorted
}

}  // namespace

std::vector<std::int64_t> subsample(std::int64_t n, std::int64_t k,
                                    std::uint64_t seed, SampleMethod method) {
  if (n < 0 || k < 0 || k > n) {
    throw std::domain_error("subsample: requires 0 <= k <= n");
  }
  if (k == 0) return {};
  Rng rng(seed);
  switch (method) {
    case SampleMethod::fisher_yates:
      return sample_fisher_yates(n, k, rng);
    case SampleMethod::selection_scan:
      return sample_selection_scan(n, k, rng);
    case SampleMethod::auto_select:
      break;
  }
  return n <= kFisherYatesMaxN ? sample_fisher_yates(n, k, rng)
                               : sample_selection_scan(n, k, rng);
}

Allocation allocate(std::int64_t n, std::span<const std::int64_t> k_list,
                    AllocationStrategy strategy, std::uint64_t master_seed) {
  std::int64_t total = 0;
  for (std::int64_t k : k_list) {
    if (k < 0 || k > n) {
      throw std::domain_error("allocate: each draw size must lie in [0, n]");
    }
    total += k;
  }
  Allocation alloc;
  alloc.dataset_size = n;
  alloc.strategy = strategy;
  alloc.master_seed = master_seed;
  alloc.draws.reserve(k_list.size());
  if (strategy == AllocationStrategy::independent_uniform) {
    for (std::size_t i = 0; i < k_list.size(); ++i) {
      alloc.draws.push_back(
          subsample(n, k_list[i], derive_stream(master_seed, i)));
    }
    return alloc;
  }
  if (total > n) {
    std::string msg = "allocate: disjoint_partition needs sum of draw sizes <= " +
                      std::to_string(n) + ", got " + std::to_string(total);
    const bool uniform_k =
        !k_list.empty() &&
        std::all_of(k_list.begin(), k_list.end(),
                    [&](std::int64_t k) { return k == k_list[0]; });
    if (uniform_k && k_list[0] > 0) {
      msg += " (at most " + std::to_string(n / k_list[0]) +
             " disjoint draws of size " + std::to_string(k_list[0]) + ")";
    }
    throw std::domain_error(msg);
  }
  std::vector<std::int64_t> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), std::int64_t{0});
  Rng rng(derive_stream(master_seed, 0));
  for (std::int64_t i = 0; i < n - 1; ++i) {
    const std::int64_t j =
        i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  std::size_t offset = 0;
  for (std::int64_t k : k_list) {
    std::vector<std::int64_t> draw(perm.begin() + static_cast<std::ptrdiff_t>(offset),
                                   perm.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(k)));
    std::sort(draw.begin(), draw.end());
    alloc.draws.push_back(std::move(draw));
    offset += static_cast<std::size_t>(k);
  }
  return alloc;
}

std::int64_t overlap_size(std::span<const std::int64_t> a,
                          std::span<const std::int64_t> b) {
  std::int64_t count = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

std::vector<std::vector<std::int64_t>> overlap_matrix(const Allocation& a) {
  const std::size_t m = a.draws.size();
  std::vector<std::vector<std::int64_t>> mat(m, std::vector<std::int64_t>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    mat[i][i] = static_cast<std::int64_t>(a.draws[i].size());
    for (std::size_t j = i + 1; j < m; ++j) {
      mat[i][j] = mat[j][i] = overlap_size(a.draws[i], a.draws[j]);
    }
  }
  return mat;
}

double empirical_max_overlap(std::int64_t n, std::int64_t k, std::int64_t C,
                             std::int64_t ell, std::int64_t trials,
                             std::uint64_t master_seed) {
  if (n < 0 || k < 0 || k > n || C < 0) {
    throw std::domain_error("empirical_max_overlap: invalid sizes");
  }
  if (trials < 1) {
    throw std::domain_error("empirical_max_overlap: trials must be >= 1");
  }
  if (C < 2) return 0.0;  // no pairs to overlap
  std::int64_t hits = 0;
  std::vector<std::vector<std::int64_t>> draws(static_cast<std::size_t>(C));
  for (std::int64_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_stream(master_seed, static_cast<std::uint64_t>(t));
    for (std::int64_t i = 0; i < C; ++i) {
      draws[static_cast<std::size_t>(i)] =
          subsample(n, k, derive_stream(trial_seed, static_cast<std::uint64_t>(i)));
    }
    bool hit = ell <= 0;
    for (std::size_t i = 0; i < draws.size() && !hit; ++i) {
      for (std::size_t j = i + 1; j < draws.size() && !hit; ++j) {
        hit = overlap_size(draws[i], draws[j]) >= ell;
      }
    }
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

void write_allocation(std::ostream& out, const Allocation& a) {
  out << "draw_id,k,indices\n";
  for (std::size_t i = 0; i < a.draws.size(); ++i) {
    out << i << ',' << a.draws[i].size();
    for (std::int64_t idx : a.draws[i]) out << ',' << idx;
    out << '\n';
  }
}

}  // namespace reuserisk
