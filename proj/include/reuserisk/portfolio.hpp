#pragma once

// Expected-utility evaluation of study portfolios over discrete effect priors,
// and exhaustive grid search over per-plan (alpha, data fraction) candidates.
//
// Each plan is a two-sample test whose control arm comes from one shared
// dataset of `dataset_size` units: either an explicit SampleVector or a
// fraction r of the pool, n1 = round(r * dataset_size), with a plan-owned
// treatment arm. The analytic mode treats plans as independent; the
// monte_carlo mode draws control arms from a common pool of unit values under
// a declared allocation strategy, so reused units induce the same dependence
// the simulation module studies.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "reuserisk/error_calculus.hpp"
#include "reuserisk/power.hpp"
#include "reuserisk/subsampling.hpp"

namespace reuserisk {

enum class Decision { reject, fail_to_reject };

// Quality-adjusted life-year utility of deciding about H0: theta < 0.
// Rejecting converts all patients to the new treatment (gain theta, possibly
// negative); failing to reject keeps the status quo (forgone gain when
// theta > 0).
double qaly_utility(double theta, Decision decision);

enum class NullKind {
  point_zero_two_sided,    // H0: theta = 0, two-sided test
  nonpositive_one_sided,   // H0: theta <= 0, upper-tailed test
};

// Discrete prior over the effect theta; probabilities must sum to 1 within
// 1e-12.
struct EffectPrior {
  std::vector<std::pair<double, double>> points;  // (theta, probability)

  void validate() const;
  static EffectPrior point(double theta) { return EffectPrior{{{theta, 1.0}}}; }
};

// Control arm as a fraction of the shared pool; the treatment arm is fixed.
struct FractionSample {
  double fraction = 1.0;  // in (0, 1]
  std::int64_t treatment_arm = 0;
};

struct StudyPlan {
  TestSpec test;
  std::variant<SampleVector, FractionSample> sample;
  EffectPrior prior = EffectPrior::point(0.0);
  NullKind null_kind = NullKind::point_zero_two_sided;
};

enum class DependenceMode { analytic_independent, monte_carlo };

struct MonteCarloOptions {
  std::int64_t replications = 10000;
  std::uint64_t seed = 0;
  AllocationStrategy allocation = AllocationStrategy::independent_uniform;
};

struct PortfolioConfig {
  std::vector<StudyPlan> plans;
  std::int64_t dataset_size = 0;
  UtilityFunction utility = UtilityFunction::linear();
  DependenceMode mode = DependenceMode::analytic_independent;
  MonteCarloOptions mc;
};

struct PortfolioEvaluation {
  double utility = 0.0;
  double std_error = 0.0;  // Monte Carlo standard error; 0 in analytic mode
};

// Arm sizes a plan resolves to against the shared pool.
SampleVector resolved_sample(const StudyPlan& plan, std::int64_t dataset_size);

PortfolioEvaluation evaluate_portfolio(const PortfolioConfig& cfg);

// evaluate_portfolio(cfg).utility; throws on infeasible allocations.
double expected_portfolio_utility(const PortfolioConfig& cfg);

struct GridCandidate {
  double alpha = 0.05;
  double fraction = 1.0;
};

struct GridPoint {
  std::vector<std::size_t> index;          // per-plan candidate indices
  std::vector<GridCandidate> candidates;
  bool feasible = false;
  double utility = 0.0;  // meaningful only when feasible
};

struct GridSearchResult {
  std::vector<std::size_t> best_index;
  PortfolioConfig best_config;
  double best_utility = 0.0;
  std::vector<GridPoint> surface;  // every evaluated point, in grid order
};

// Exhaustive cartesian search over per-plan candidate lists. A candidate sets
// the plan's alpha and control-pool fraction (treatment arm unchanged).
// Infeasible points are skipped but recorded; ties resolve to the
// lexicographically smallest index vector. Throws if every point is
// infeasible or any candidate list is empty.
GridSearchResult grid_search(const PortfolioConfig& cfg,
                             const std::vector<std::vector<GridCandidate>>& grid);

}  // namespace reuserisk
