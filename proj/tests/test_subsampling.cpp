#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "reuserisk/dist.hpp"
#include "reuserisk/rng.hpp"
#include "reuserisk/subsampling.hpp"

using namespace reuserisk;

namespace {

// chi-square upper critical values at the 0.001 level
constexpr double kChi2Crit001Df9 = 27.877164;
constexpr double kChi2Crit001Df5 = 20.515006;

std::size_t pair_rank(std::int64_t a, std::int64_t b, std::int64_t n) {
  // rank of the 2-subset {a < b} of [0, n)
  std::size_t rank = 0;
  for (std::int64_t i = 0; i < a; ++i) rank += static_cast<std::size_t>(n - 1 - i);
  return rank + static_cast<std::size_t>(b - a - 1);
}

}  // namespace

TEST_CASE("subsample basics") {
  CHECK(subsample(5, 5, 1) == std::vector<std::int64_t>{0, 1, 2, 3, 4});
  CHECK(subsample(5, 0, 1).empty());
  CHECK_THROWS_AS(subsample(5, 6, 1), std::domain_error);
  for (const SampleMethod method :
       {SampleMethod::fisher_yates, SampleMethod::selection_scan}) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto draw = subsample(40, 13, seed, method);
      REQUIRE(draw.size() == 13);
      CHECK(std::is_sorted(draw.begin(), draw.end()));
      CHECK(std::adjacent_find(draw.begin(), draw.end()) == draw.end());
      CHECK(draw.front() >= 0);
      CHECK(draw.back() < 40);
    }
  }
}

TEST_CASE("subsample determinism") {
  const auto a = subsample(1000, 77, 123456);
  const auto b = subsample(1000, 77, 123456);
  CHECK(a == b);
  const auto c = subsample(1000, 77, 123457);
  CHECK(a != c);
}

TEST_CASE("subsample uniformity over all C(5,2) subsets") {
  const int draws = 100000;
  std::map<std::size_t, int> counts;
  for (int i = 0; i < draws; ++i) {
    const auto draw = subsample(5, 2, derive_stream(2024, static_cast<std::uint64_t>(i)));
    counts[pair_rank(draw[0], draw[1], 5)] += 1;
  }
  REQUIRE(counts.size() == 10);
  const double expected = draws / 10.0;
  double chi2 = 0.0;
  for (const auto& [rank, count] : counts) {
    CHECK(std::fabs(count / static_cast<double>(draws) - 0.1) < 0.005);
    chi2 += (count - expected) * (count - expected) / expected;
  }
  CHECK(chi2 < kChi2Crit001Df9);
}

TEST_CASE("selection sampling matches the uniform law too") {
  const int draws = 50000;
  std::map<std::size_t, int> counts;
  for (int i = 0; i < draws; ++i) {
    const auto draw = subsample(5, 2, derive_stream(55, static_cast<std::uint64_t>(i)),
                                SampleMethod::selection_scan);
    counts[pair_rank(draw[0], draw[1], 5)] += 1;
  }
  const double expected = draws / 10.0;
  double chi2 = 0.0;
  for (const auto& [rank, count] : counts) {
    chi2 += (count - expected) * (count - expected) / expected;
  }
  CHECK(chi2 < kChi2Crit001Df9);
}

TEST_CASE("disjoint partition allocation") {
  const std::vector<std::int64_t> sizes{50, 50};
  const auto alloc =
      allocate(100, sizes, AllocationStrategy::disjoint_partition, 9);
  REQUIRE(alloc.draws.size() == 2);
  CHECK(alloc.draws[0].size() == 50);
  CHECK(alloc.draws[1].size() == 50);
  CHECK(overlap_size(alloc.draws[0], alloc.draws[1]) == 0);

  const std::vector<std::int64_t> too_big{60, 60};
  CHECK_THROWS_WITH_AS(
      allocate(100, too_big, AllocationStrategy::disjoint_partition, 9),
      doctest::Contains("at most 1 disjoint draws of size 60"),
      std::domain_error);
}

TEST_CASE("independent allocation has hypergeometric mean overlap") {
  const std::vector<std::int64_t> sizes{50, 50};
  double total_overlap = 0.0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    const auto alloc = allocate(100, sizes,
                                AllocationStrategy::independent_uniform,
                                static_cast<std::uint64_t>(s));
    total_overlap +=
        static_cast<double>(overlap_size(alloc.draws[0], alloc.draws[1]));
  }
  CHECK(std::fabs(total_overlap / seeds - 25.0) < 0.5);
}

TEST_CASE("overlap matrix") {
  Allocation alloc;
  alloc.dataset_size = 10;
  alloc.draws = {{0, 1, 2}, {0, 1, 2}, {3, 4, 5}};
  const auto matrix = overlap_matrix(alloc);
  CHECK(matrix[0][0] == 3);
  CHECK(matrix[0][1] == 3);
  CHECK(matrix[1][0] == 3);
  CHECK(matrix[0][2] == 0);
  CHECK(matrix[2][1] == 0);

  const auto disjoint = allocate(100, std::vector<std::int64_t>{20, 30, 40},
                                 AllocationStrategy::disjoint_partition, 3);
  const auto dm = overlap_matrix(disjoint);
  for (std::size_t i = 0; i < dm.size(); ++i) {
    for (std::size_t j = 0; j < dm.size(); ++j) {
      if (i != j) CHECK(dm[i][j] == 0);
    }
  }
}

TEST_CASE("pairwise overlap of independent draws follows Hypergeometric(10,5,5)") {
  const int seeds = 40000;
  std::vector<int> counts(6, 0);
  for (int s = 0; s < seeds; ++s) {
    const auto alloc = allocate(10, std::vector<std::int64_t>{5, 5},
                                AllocationStrategy::independent_uniform,
                                static_cast<std::uint64_t>(s) + 100000);
    counts[static_cast<std::size_t>(
        overlap_size(alloc.draws[0], alloc.draws[1]))] += 1;
  }
  double chi2 = 0.0;
  for (int x = 0; x <= 5; ++x) {
    const double expected = seeds * hypergeom_pmf(10, 5, 5, x);
    chi2 += (counts[static_cast<std::size_t>(x)] - expected) *
            (counts[static_cast<std::size_t>(x)] - expected) / expected;
  }
  CHECK(chi2 < kChi2Crit001Df5);
}

TEST_CASE("empirical max overlap matches the hypergeometric tail for a pair") {
  // With C = 2 there is no union bound: the frequency estimates
  // pr(|X1 ∩ X2| >= ell) = Hypergeometric(10,5,5) tail directly.
  const std::int64_t trials = 4000;
  const double freq = empirical_max_overlap(10, 5, 2, 3, trials, 2718);
  const double tail = hypergeom_tail(10, 5, 5, 3);
  const double se = std::sqrt(tail * (1.0 - tail) / static_cast<double>(trials));
  CHECK(std::fabs(freq - tail) < 3.5 * se);
}

TEST_CASE("empirical max overlap corner cases") {
  CHECK(empirical_max_overlap(100, 10, 1, 3, 50, 1) == 0.0);
  CHECK(empirical_max_overlap(100, 10, 3, 0, 50, 1) == 1.0);
  CHECK_THROWS_AS(empirical_max_overlap(100, 10, 3, 0, 0, 1),
                  std::domain_error);
  // deterministic in the master seed
  CHECK(empirical_max_overlap(60, 12, 4, 5, 200, 42) ==
        empirical_max_overlap(60, 12, 4, 5, 200, 42));
}

TEST_CASE("per-index inclusion probability is k/n") {
  const std::int64_t n = 30;
  const std::int64_t k = 6;
  const int draws = 30000;
  std::vector<int> hits(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < draws; ++i) {
    for (std::int64_t idx :
         subsample(n, k, derive_stream(31337, static_cast<std::uint64_t>(i)))) {
      hits[static_cast<std::size_t>(idx)] += 1;
    }
  }
  for (int h : hits) {
    CHECK(std::fabs(h / static_cast<double>(draws) - 0.2) < 0.012);
  }
}

TEST_CASE("subsample-then-use equals direct draws (exchangeability)") {
  // Empirical two-sample KS between normals reached through an n -> k
  // subsample and normals drawn directly.
  const int total = 100000;
  const std::int64_t pool_n = 20;
  const std::int64_t pool_k = 10;
  std::vector<double> via_subsample;
  via_subsample.reserve(total);
  Rng direct_rng(8888);
  std::vector<double> direct(total);
  for (double& x : direct) x = direct_rng.normal();
  std::uint64_t round = 0;
  Rng value_rng(9999);
  std::vector<double> pool(static_cast<std::size_t>(pool_n));
  while (static_cast<int>(via_subsample.size()) < total) {
    for (double& x : pool) x = value_rng.normal();
    for (std::int64_t idx : subsample(pool_n, pool_k, derive_stream(4242, round))) {
      via_subsample.push_back(pool[static_cast<std::size_t>(idx)]);
    }
    ++round;
  }
  via_subsample.resize(total);
  std::sort(via_subsample.begin(), via_subsample.end());
  std::sort(direct.begin(), direct.end());
  double ks = 0.0;
  std::size_t i = 0, j = 0;
  while (i < via_subsample.size() && j < direct.size()) {
    if (via_subsample[i] <= direct[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / total;
    const double fb = static_cast<double>(j) / total;
    ks = std::max(ks, std::fabs(fa - fb));
  }
  // two-sample KS critical value at the 0.001 level:
  // c(0.001) * sqrt((n+m)/(n*m)), c(0.001) = sqrt(-ln(0.0005)/2)
  const double crit = std::sqrt(-std::log(0.0005) / 2.0) *
                      std::sqrt(2.0 / static_cast<double>(total));
  CHECK(ks < crit);
}

TEST_CASE("allocation export format") {
  const auto alloc = allocate(8, std::vector<std::int64_t>{3, 2},
                              AllocationStrategy::disjoint_partition, 5);
  std::ostringstream out;
  write_allocation(out, alloc);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "draw_id,k,indices");
  std::string row;
  int row_count = 0;
  while (std::getline(in, row)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream cells_in(row);
    while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() >= 2);
    CHECK(std::stoi(cells[0]) == row_count);
    const auto k = static_cast<std::size_t>(std::stoul(cells[1]));
    CHECK(cells.size() == 2 + k);
    for (std::size_t c = 3; c < cells.size(); ++c) {
      CHECK(std::stoll(cells[c - 1]) < std::stoll(cells[c]));
    }
    ++row_count;
  }
  CHECK(row_count == 2);
}

TEST_CASE("allocate rejects invalid draw sizes") {
  const std::vector<std::int64_t> bad{5, 200};
  CHECK_THROWS_AS(allocate(100, bad, AllocationStrategy::independent_uniform, 1),
                  std::domain_error);
}
