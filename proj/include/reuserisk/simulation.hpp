#pragma once

// Seeded Monte Carlo replication of two dependent-testing case studies and
// their decorrelated counterparts: a multi-treatment design sharing one
// control group, and repeated truncated log-rank tests on one survival cohort
// versus a gatekeeping split. Reports are bit-reproducible given the design.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "reuserisk/error_calculus.hpp"
#include "reuserisk/rng.hpp"

namespace reuserisk {

enum class ControlMode { reuse_full, disjoint_split, independent_subsample };

struct SharedControlDesign {
  std::int64_t m = 7;            // treatment count
  std::int64_t n_arm = 100;      // per-treatment size
  std::int64_t n_control = 100;  // control-pool size
  ControlMode control_mode = ControlMode::reuse_full;
  std::int64_t subsample_k = 0;  // per-test control draw, independent_subsample only
  double alpha = 0.05;
  double effect = 0.0;           // true mean shift of every treatment arm
  std::int64_t replications = 10000;
  std::uint64_t master_seed = 0;
};

enum class SurvivalMode { reuse_same_cohort, gatekeep_split };

struct SurvivalReuseDesign {
  std::int64_t n_per_group = 100;
  double weibull_shape = 2.0;
  double weibull_scale = 0.5;
  std::vector<double> truncation_times{1.0, 5.0};  // strictly increasing
  SurvivalMode mode = SurvivalMode::reuse_same_cohort;
  double alpha = 0.05;
  std::int64_t replications = 10000;
  std::uint64_t master_seed = 0;
};

struct SimulationReport {
  ErrorCountDistribution empirical_error_pmf;
  std::vector<std::int64_t> error_count_n;  // raw histogram behind the pmf
  std::vector<double> per_test_rejection_freq;
  std::vector<std::vector<double>> pairwise_stat_correlation;
  StopLossCurve stop_loss;
  // Joint rejection counts for two-test designs:
  // [later][earlier] with 0 = not rejected, 1 = rejected.
  std::optional<std::array<std::array<std::int64_t, 2>, 2>> contingency;
  std::int64_t rep_count = 0;
  std::uint64_t master_seed = 0;
};

struct Subject {
  double time = 0.0;
  bool event = false;
};

struct LogRankResult {
  double z = 0.0;
  bool valid = false;  // false when no events accrue before the truncation
};

SimulationReport run_shared_control(const SharedControlDesign& design);
SimulationReport run_survival_reuse(const SurvivalReuseDesign& design);

// Two-group log-rank z over distinct event times at or before the truncation;
// subjects beyond the truncation are administratively censored there.
// Positive z when group A has the earlier events; an invalid result (zero
// total variance) counts as a non-rejection.
LogRankResult logrank_statistic(std::span<const Subject> group_a,
                                std::span<const Subject> group_b,
                                double truncation);

// Inverse-cdf Weibull draw: quantile scale * (-log(1 - p))^(1/shape).
double weibull_quantile(double shape, double scale, double p);
double weibull_sample(double shape, double scale, Rng& rng);

// Key-value header followed by delimited tables (columns count,n,frequency
// for the error histogram).
void write_report(std::ostream& out, const SimulationReport& report);

}  // namespace reuserisk
