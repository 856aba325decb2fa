#include "reuserisk/portfolio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "reuserisk/dist.hpp"
#include "reuserisk/rng.hpp"

namespace reuserisk {

namespace {

bool null_holds(NullKind kind, double theta) {
  return kind == NullKind::point_zero_two_sided ? theta == 0.0 : theta <= 0.0;
}

// pr(reject | true effect theta) for the plan's test at the resolved sample.
double rejection_probability(const StudyPlan& plan, const SampleVector& n,
                             double theta) {
  TestSpec spec = plan.test;
  spec.two_sided = plan.null_kind == NullKind::point_zero_two_sided;
  spec.delta = theta;
  return power(spec, n);
}

double error_probability(const StudyPlan& plan, const SampleVector& n,
                         double theta) {
  const double p_reject = rejection_probability(plan, n, theta);
  return null_holds(plan.null_kind, theta) ? p_reject : 1.0 - p_reject;
}

// Prior-averaged per-plan error probabilities; the portfolio error count is
// then a Poisson-binomial over these marginal rates when plans use disjoint
// data.
std::vector<double> marginal_error_rates(const PortfolioConfig& cfg) {
  std::vector<double> rates;
  rates.reserve(cfg.plans.size());
  for (const auto& plan : cfg.plans) {
    const SampleVector n = resolved_sample(plan, cfg.dataset_size);
    double acc = 0.0;
    for (const auto& [theta, prob] : plan.prior.points) {
      acc += prob * error_probability(plan, n, theta);
    }
    rates.push_back(std::min(1.0, std::max(0.0, acc)));
  }
  return rates;
}

double analytic_utility(const PortfolioConfig& cfg) {
  if (cfg.plans.empty()) return 0.0;
  if (cfg.utility.kind() == UtilityKind::qaly_decision) {
    double total = 0.0;
    for (const auto& plan : cfg.plans) {
      const SampleVector n = resolved_sample(plan, cfg.dataset_size);
      for (const auto& [theta, prob] : plan.prior.points) {
        const double p_reject = rejection_probability(plan, n, theta);
        total += prob * (p_reject * qaly_utility(theta, Decision::reject) +
                         (1.0 - p_reject) *
                             qaly_utility(theta, Decision::fail_to_reject));
      }
    }
    return total;
  }
  const std::vector<double> rates = marginal_error_rates(cfg);
  const ErrorCountDistribution count_dist(bernoulli_sum_pmf(rates));
  return expected_utility(count_dist, cfg.utility);
}

void check_feasible(const PortfolioConfig& cfg) {
  std::int64_t total_control = 0;
  for (const auto& plan : cfg.plans) {
    const SampleVector n = resolved_sample(plan, cfg.dataset_size);
    if (n.n1 > cfg.dataset_size) {
      throw std::domain_error(
          "portfolio: control arm of " + std::to_string(n.n1) +
          " exceeds the dataset size " + std::to_string(cfg.dataset_size));
    }
    total_control += n.n1;
  }
  if (cfg.mode == DependenceMode::monte_carlo &&
      cfg.mc.allocation == AllocationStrategy::disjoint_partition &&
      total_control > cfg.dataset_size) {
    throw std::domain_error(
        "portfolio: disjoint allocation needs total control draws <= " +
        std::to_string(cfg.dataset_size) + ", got " +
        std::to_string(total_control));
  }
}

double sample_theta(const EffectPrior& prior, Rng& rng) {
  if (prior.points.size() == 1) return prior.points[0].first;
  const double u = rng.uniform01();
  double acc = 0.0;
  for (const auto& [theta, prob] : prior.points) {
    acc += prob;
    if (u <= acc) return theta;
  }
  return prior.points.back().first;
}

PortfolioEvaluation monte_carlo_utility(const PortfolioConfig& cfg) {
  if (cfg.plans.empty()) return {0.0, 0.0};
  if (cfg.mc.replications < 1) {
    throw std::domain_error("portfolio: replications must be >= 1");
  }
  const std::size_t n_plans = cfg.plans.size();
  std::vector<SampleVector> samples;
  std::vector<std::int64_t> control_sizes;
  std::vector<double> z_crit(n_plans), t_crit(n_plans);
  samples.reserve(n_plans);
  control_sizes.reserve(n_plans);
  for (std::size_t i = 0; i < n_plans; ++i) {
    const auto& plan = cfg.plans[i];
    const SampleVector n = resolved_sample(plan, cfg.dataset_size);
    samples.push_back(n);
    control_sizes.push_back(n.n1);
    const bool two_sided = plan.null_kind == NullKind::point_zero_two_sided;
    const double tail = two_sided ? 0.5 * plan.test.alpha : plan.test.alpha;
    if (plan.test.kind == TestKind::z_known_variance) {
      z_crit[i] = normal_quantile(1.0 - tail);
    } else {
      t_crit[i] =
          student_t_quantile(1.0 - tail, static_cast<double>(n.n1 + n.n2 - 2));
    }
  }

  double sum_u = 0.0;
  double sum_u2 = 0.0;
  std::vector<double> pool(static_cast<std::size_t>(cfg.dataset_size));
  std::vector<double> arm;
  std::vector<bool> rejected(n_plans);
  std::vector<double> thetas(n_plans);
  for (std::int64_t rep = 0; rep < cfg.mc.replications; ++rep) {
    const std::uint64_t rep_seed =
        derive_stream(cfg.mc.seed, static_cast<std::uint64_t>(rep));
    Rng pool_rng(derive_stream(rep_seed, 0));
    Rng plan_rng(derive_stream(rep_seed, 1));
    const std::uint64_t alloc_seed = derive_stream(rep_seed, 2);
    for (double& x : pool) x = pool_rng.normal();  // unit latents
    const Allocation alloc =
        allocate(cfg.dataset_size, control_sizes, cfg.mc.allocation, alloc_seed);
    for (std::size_t i = 0; i < n_plans; ++i) {
      const auto& plan = cfg.plans[i];
      const SampleVector n = samples[i];
      const double theta = sample_theta(plan.prior, plan_rng);
      thetas[i] = theta;
      double mean_c = 0.0;
      double ss_c = 0.0;
      for (std::int64_t idx : alloc.draws[i]) {
        mean_c += pool[static_cast<std::size_t>(idx)];
      }
      mean_c *= plan.test.sigma / static_cast<double>(n.n1);
      arm.resize(static_cast<std::size_t>(n.n2));
      double mean_t = 0.0;
      for (double& x : arm) {
        x = theta + plan.test.sigma * plan_rng.normal();
        mean_t += x;
      }
      mean_t /= static_cast<double>(n.n2);
      double stat;
      if (plan.test.kind == TestKind::z_known_variance) {
        const double se =
            plan.test.sigma * std::sqrt(1.0 / static_cast<double>(n.n1) +
                                        1.0 / static_cast<double>(n.n2));
        stat = (mean_t - mean_c) / se;
        rejected[i] = plan.null_kind == NullKind::point_zero_two_sided
                          ? std::fabs(stat) > z_crit[i]
                          : stat > z_crit[i];
      } else {
        for (std::int64_t idx : alloc.draws[i]) {
          const double v = plan.test.sigma * pool[static_cast<std::size_t>(idx)];
          ss_c += (v - mean_c) * (v - mean_c);
        }
        double ss_t = 0.0;
        for (double x : arm) ss_t += (x - mean_t) * (x - mean_t);
        const double df = static_cast<double>(n.n1 + n.n2 - 2);
        const double pooled = (ss_c + ss_t) / df;
        const double se =
            std::sqrt(pooled * (1.0 / static_cast<double>(n.n1) +
                                1.0 / static_cast<double>(n.n2)));
        stat = se > 0.0 ? (mean_t - mean_c) / se : 0.0;
        rejected[i] = plan.null_kind == NullKind::point_zero_two_sided
                          ? std::fabs(stat) > t_crit[i]
                          : stat > t_crit[i];
      }
    }
    double u;
    if (cfg.utility.kind() == UtilityKind::qaly_decision) {
      u = 0.0;
      for (std::size_t i = 0; i < n_plans; ++i) {
        u += qaly_utility(thetas[i], rejected[i] ? Decision::reject
                                                 : Decision::fail_to_reject);
      }
    } else {
      std::int64_t errors = 0;
      for (std::size_t i = 0; i < n_plans; ++i) {
        const bool is_error = null_holds(cfg.plans[i].null_kind, thetas[i])
                                  ? rejected[i]
                                  : !rejected[i];
        errors += is_error ? 1 : 0;
      }
      u = cfg.utility(errors);
    }
    sum_u += u;
    sum_u2 += u * u;
  }
  const auto reps = static_cast<double>(cfg.mc.replications);
  const double mean = sum_u / reps;
  const double var = std::max(0.0, sum_u2 / reps - mean * mean);
  return {mean, std::sqrt(var / reps)};
}

}  // namespace

double qaly_utility(double theta, Decision decision) {
  if (decision == Decision::reject) return theta;
  return std::min(-theta, 0.0);
}

void EffectPrior::validate() const {
  if (points.empty()) {
    throw std::domain_error("EffectPrior: needs at least one support point");
  }
  double total = 0.0;
  for (const auto& [theta, prob] : points) {
    if (!(prob >= 0.0 && prob <= 1.0)) {
      throw std::domain_error("EffectPrior: probability outside [0,1]");
    }
    if (!std::isfinite(theta)) {
      throw std::domain_error("EffectPrior: effect must be finite");
    }
    total += prob;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    throw std::domain_error("EffectPrior: probabilities sum to " +
                            std::to_string(total) + ", expected 1");
  }
}

SampleVector resolved_sample(const StudyPlan& plan, std::int64_t dataset_size) {
  if (const auto* fixed = std::get_if<SampleVector>(&plan.sample)) {
    return *fixed;
  }
  const auto& frac = std::get<FractionSample>(plan.sample);
  if (!(frac.fraction > 0.0 && frac.fraction <= 1.0)) {
    throw std::domain_error("StudyPlan: data fraction must lie in (0, 1]");
  }
  const auto n1 = static_cast<std::int64_t>(
      std::llround(frac.fraction * static_cast<double>(dataset_size)));
  return SampleVector{n1, frac.treatment_arm};
}

PortfolioEvaluation evaluate_portfolio(const PortfolioConfig& cfg) {
  for (const auto& plan : cfg.plans) plan.prior.validate();
  check_feasible(cfg);
  if (cfg.mode == DependenceMode::analytic_independent) {
    return {analytic_utility(cfg), 0.0};
  }
  return monte_carlo_utility(cfg);
}

double expected_portfolio_utility(const PortfolioConfig& cfg) {
  return evaluate_portfolio(cfg).utility;
}

GridSearchResult grid_search(
    const PortfolioConfig& cfg,
    const std::vector<std::vector<GridCandidate>>& grid) {
  if (grid.size() != cfg.plans.size()) {
    throw std::invalid_argument(
        "grid_search: one candidate list per plan is required");
  }
  for (const auto& candidates : grid) {
    if (candidates.empty()) {
      throw std::invalid_argument("grid_search: empty candidate list");
    }
  }
  GridSearchResult result;
  if (cfg.plans.empty()) {
    result.best_config = cfg;
    result.best_utility = expected_portfolio_utility(cfg);
    return result;
  }

  auto apply = [&](const std::vector<std::size_t>& index) {
    PortfolioConfig point = cfg;
    for (std::size_t p = 0; p < point.plans.size(); ++p) {
      const GridCandidate& cand = grid[p][index[p]];
      auto& plan = point.plans[p];
      plan.test.alpha = cand.alpha;
      const std::int64_t treatment =
          resolved_sample(plan, cfg.dataset_size).n2;
      plan.sample = FractionSample{cand.fraction, treatment};
    }
    return point;
  };

  std::vector<std::size_t> index(cfg.plans.size(), 0);
  bool have_best = false;
  while (true) {
    GridPoint point;
    point.index = index;
    for (std::size_t p = 0; p < index.size(); ++p) {
      point.candidates.push_back(grid[p][index[p]]);
    }
    const PortfolioConfig candidate_cfg = apply(index);
    try {
      point.utility = expected_portfolio_utility(candidate_cfg);
      point.feasible = true;
    } catch (const std::domain_error&) {
      point.feasible = false;
    }
    if (point.feasible &&
        (!have_best || point.utility > result.best_utility)) {
      // Strict improvement only: ties keep the lexicographically first index.
      have_best = true;
      result.best_index = index;
      result.best_config = candidate_cfg;
      result.best_utility = point.utility;
    }
    result.surface.push_back(std::move(point));
    // Odometer increment over the cartesian grid, last plan fastest.
    std::size_t pos = index.size();
    while (pos > 0) {
      --pos;
      if (++index[pos] < grid[pos].size()) break;
      index[pos] = 0;
      if (pos == 0) {
        if (!have_best) {
          throw std::domain_error("grid_search: every grid point is infeasible");
        }
        return result;
      }
    }
  }
}

}  // namespace reuserisk
