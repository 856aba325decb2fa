#include "reuserisk/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "reuserisk/format.hpp"
#include "reuserisk/power.hpp"
#include "reuserisk/subsampling.hpp"

namespace reuserisk {

namespace {

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;  // sample variance, ddof 1
};

MeanVar mean_var(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / (n - 1.0)};
}

double pooled_t_statistic(std::span<const double> treatment,
                          std::span<const double> control) {
  const MeanVar t = mean_var(treatment);
  const MeanVar c = mean_var(control);
  const double nt = static_cast<double>(treatment.size());
  const double nc = static_cast<double>(control.size());
  const double pooled =
      ((nt - 1.0) * t.var + (nc - 1.0) * c.var) / (nt + nc - 2.0);
  const double se = std::sqrt(pooled * (1.0 / nt + 1.0 / nc));
  if (se == 0.0) return 0.0;
  return (t.mean - c.mean) / se;
}

// Accumulates everything a SimulationReport needs; single fixed reduction
// order so reports are bit-identical across runs.
class ReportAccumulator {
 public:
  ReportAccumulator(std::int64_t m, std::int64_t replications)
      : m_(m),
        reps_(replications),
        histogram_(static_cast<std::size_t>(m) + 1, 0),
        rejections_(static_cast<std::size_t>(m), 0),
        stat_sum_(static_cast<std::size_t>(m), 0.0),
        stat_sumsq_(static_cast<std::size_t>(m), 0.0),
        cross_(static_cast<std::size_t>(m),
               std::vector<double>(static_cast<std::size_t>(m), 0.0)) {}

  void add(std::span<const double> stats, const std::vector<bool>& rejected) {
    std::int64_t count = 0;
    for (std::size_t i = 0; i < rejected.size(); ++i) {
      if (rejected[i]) {
        ++count;
        ++rejections_[i];
      }
    }
    ++histogram_[static_cast<std::size_t>(count)];
    for (std::size_t i = 0; i < stats.size(); ++i) {
      stat_sum_[i] += stats[i];
      stat_sumsq_[i] += stats[i] * stats[i];
      for (std::size_t j = i + 1; j < stats.size(); ++j) {
        cross_[i][j] += stats[i] * stats[j];
      }
    }
    if (m_ == 2) {
      const int earlier = rejected[0] ? 1 : 0;
      const int later = rejected[1] ? 1 : 0;
      ++contingency_[later][earlier];
    }
  }

  SimulationReport finish(std::uint64_t master_seed) const {
    const auto reps = static_cast<double>(reps_);
    std::vector<double> pmf(histogram_.size());
    for (std::size_t i = 0; i < histogram_.size(); ++i) {
      pmf[i] = static_cast<double>(histogram_[i]) / reps;
    }
    SimulationReport report{
        ErrorCountDistribution(DiscretePmf(0, std::move(pmf))), {}, {}, {},
        {}, {}, 0, 0};
    report.error_count_n = histogram_;
    report.per_test_rejection_freq.reserve(rejections_.size());
    for (std::int64_t r : rejections_) {
      report.per_test_rejection_freq.push_back(static_cast<double>(r) / reps);
    }
    const auto m = static_cast<std::size_t>(m_);
    report.pairwise_stat_correlation.assign(m, std::vector<double>(m, 1.0));
    std::vector<double> sd(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double mean = stat_sum_[i] / reps;
      sd[i] = std::sqrt(std::max(0.0, stat_sumsq_[i] / reps - mean * mean));
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        double corr = 0.0;
        if (sd[i] > 0.0 && sd[j] > 0.0) {
          const double cov = cross_[i][j] / reps -
                             (stat_sum_[i] / reps) * (stat_sum_[j] / reps);
          corr = cov / (sd[i] * sd[j]);
        }
        report.pairwise_stat_correlation[i][j] = corr;
        report.pairwise_stat_correlation[j][i] = corr;
      }
    }
    report.stop_loss = stop_loss_curve(report.empirical_error_pmf);
    if (m_ == 2) report.contingency = contingency_;
    report.rep_count = reps_;
    report.master_seed = master_seed;
    return report;
  }

 private:
  std::int64_t m_;
  std::int64_t reps_;
  std::vector<std::int64_t> histogram_;
  std::vector<std::int64_t> rejections_;
  std::vector<double> stat_sum_;
  std::vector<double> stat_sumsq_;
  std::vector<std::vector<double>> cross_;
  std::array<std::array<std::int64_t, 2>, 2> contingency_{{{0, 0}, {0, 0}}};
};

void fill_normal(std::vector<double>& out, std::size_t n, double mean,
                 Rng& rng) {
  out.resize(n);
  for (double& x : out) x = mean + rng.normal();
}

}  // namespace

SimulationReport run_shared_control(const SharedControlDesign& design) {
  if (design.replications < 1) {
    throw std::domain_error("run_shared_control: replications must be >= 1");
  }
  if (design.m < 1) {
    throw std::domain_error("run_shared_control: m must be >= 1");
  }
  if (design.n_arm < 2 || design.n_control < 2) {
    throw std::domain_error("run_shared_control: arm sizes must be >= 2");
  }
  if (!(design.alpha > 0.0 && design.alpha < 1.0)) {
    throw std::domain_error("run_shared_control: alpha must lie in (0,1)");
  }
  std::int64_t control_per_test = design.n_control;
  if (design.control_mode == ControlMode::disjoint_split) {
    control_per_test = design.n_control / design.m;
    if (control_per_test < 2) {
      throw std::domain_error(
          "run_shared_control: disjoint split leaves fewer than 2 control "
          "units per test");
    }
  } else if (design.control_mode == ControlMode::independent_subsample) {
    control_per_test = design.subsample_k;
    if (control_per_test < 2 || control_per_test > design.n_control) {
      throw std::domain_error(
          "run_shared_control: subsample_k must lie in [2, n_control]");
    }
  }
  const double df = static_cast<double>(design.n_arm + control_per_test - 2);
  const double t_crit = student_t_quantile(1.0 - 0.5 * design.alpha, df);

  ReportAccumulator acc(design.m, design.replications);
  std::vector<double> pool;
  std::vector<double> treatment;
  std::vector<double> control;
  std::vector<double> stats(static_cast<std::size_t>(design.m));
  std::vector<bool> rejected(static_cast<std::size_t>(design.m));
  const std::vector<std::int64_t> split_sizes(
      static_cast<std::size_t>(design.m), control_per_test);

  for (std::int64_t rep = 0; rep < design.replications; ++rep) {
    const std::uint64_t rep_seed =
        derive_stream(design.master_seed, static_cast<std::uint64_t>(rep));
    Rng pool_rng(derive_stream(rep_seed, 0));
    Rng treat_rng(derive_stream(rep_seed, 1));
    const std::uint64_t alloc_seed = derive_stream(rep_seed, 2);

    fill_normal(pool, static_cast<std::size_t>(design.n_control), 0.0, pool_rng);

    Allocation alloc;
    if (design.control_mode == ControlMode::disjoint_split) {
      alloc = allocate(design.n_control, split_sizes,
                       AllocationStrategy::disjoint_partition, alloc_seed);
    } else if (design.control_mode == ControlMode::independent_subsample) {
      alloc = allocate(design.n_control, split_sizes,
                       AllocationStrategy::independent_uniform, alloc_seed);
    }

    for (std::int64_t test = 0; test < design.m; ++test) {
      fill_normal(treatment, static_cast<std::size_t>(design.n_arm),
                  design.effect, treat_rng);
      double stat;
      if (design.control_mode == ControlMode::reuse_full) {
        stat = pooled_t_statistic(treatment, pool);
      } else {
        const auto& idx = alloc.draws[static_cast<std::size_t>(test)];
        control.resize(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
          control[i] = pool[static_cast<std::size_t>(idx[i])];
        }
        stat = pooled_t_statistic(treatment, control);
      }
      stats[static_cast<std::size_t>(test)] = stat;
      rejected[static_cast<std::size_t>(test)] = std::fabs(stat) > t_crit;
    }
    acc.add(stats, rejected);
  }
  return acc.finish(design.master_seed);
}

LogRankResult logrank_statistic(std::span<const Subject> group_a,
                                std::span<const Subject> group_b,
                                double truncation) {
  if (group_a.empty() || group_b.empty()) {
    throw std::domain_error("logrank_statistic: groups must be nonempty");
  }
  struct Entry {
    double time;
    bool event;
    bool in_a;
  };
  std::vector<Entry> entries;
  entries.reserve(group_a.size() + group_b.size());
  auto push = [&](const Subject& s, bool in_a) {
    if (s.time < 0.0) {
      throw std::domain_error("logrank_statistic: negative survival time");
    }
    if (s.time > truncation) {
      entries.push_back({truncation, false, in_a});  // administrative censoring
    } else {
      entries.push_back({s.time, s.event, in_a});
    }
  };
  for (const Subject& s : group_a) push(s, true);
  for (const Subject& s : group_b) push(s, false);
  std::sort(entries.begin(), entries.end(),
            [](const Entry& x, const Entry& y) { return x.time < y.time; });

  double at_risk_a = static_cast<double>(group_a.size());
  double at_risk_b = static_cast<double>(group_b.size());
  double observed_minus_expected = 0.0;
  double variance = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    const double t = entries[i].time;
    double deaths_a = 0.0;
    double deaths_b = 0.0;
    double removed_a = 0.0;
    double removed_b = 0.0;
    for (; i < entries.size() && entries[i].time == t; ++i) {
      if (entries[i].in_a) {
        removed_a += 1.0;
        if (entries[i].event) deaths_a += 1.0;
      } else {
        removed_b += 1.0;
        if (entries[i].event) deaths_b += 1.0;
      }
    }
    const double deaths = deaths_a + deaths_b;
    const double at_risk = at_risk_a + at_risk_b;
    if (deaths > 0.0 && at_risk > 1.0) {
      observed_minus_expected += deaths_a - deaths * at_risk_a / at_risk;
      variance += deaths * (at_risk_a / at_risk) * (at_risk_b / at_risk) *
                  (at_risk - deaths) / (at_risk - 1.0);
    }
    at_risk_a -= removed_a;
    at_risk_b -= removed_b;
  }
  if (variance <= 0.0) return {0.0, false};
  return {observed_minus_expected / std::sqrt(variance), true};
}

double weibull_quantile(double shape, double scale, double p) {
  if (!(shape > 0.0 && scale > 0.0)) {
    throw std::domain_error("weibull_quantile: shape and scale must be positive");
  }
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::domain_error("weibull_quantile: p must lie in [0,1)");
  }
  return scale * std::pow(-std::log1p(-p), 1.0 / shape);
}

double weibull_sample(double shape, double scale, Rng& rng) {
  return weibull_quantile(shape, scale, rng.uniform01());
}

SimulationReport run_survival_reuse(const SurvivalReuseDesign& design) {
  if (design.replications < 1) {
    throw std::domain_error("run_survival_reuse: replications must be >= 1");
  }
  if (design.n_per_group < 2) {
    throw std::domain_error("run_survival_reuse: need >= 2 subjects per group");
  }
  if (!(design.weibull_shape > 0.0 && design.weibull_scale > 0.0)) {
    throw std::domain_error("run_survival_reuse: Weibull parameters must be positive");
  }
  if (!(design.alpha > 0.0 && design.alpha < 1.0)) {
    throw std::domain_error("run_survival_reuse: alpha must lie in (0,1)");
  }
  const auto m = static_cast<std::int64_t>(design.truncation_times.size());
  if (m == 0) {
    throw std::domain_error("run_survival_reuse: no truncation times given");
  }
  for (std::size_t i = 0; i < design.truncation_times.size(); ++i) {
    if (!(design.truncation_times[i] > 0.0)) {
      throw std::domain_error("run_survival_reuse: truncation times must be positive");
    }
    if (i > 0 && !(design.truncation_times[i] >= design.truncation_times[i - 1])) {
      throw std::domain_error("run_survival_reuse: truncation times must be nondecreasing");
    }
  }
  std::int64_t fold_size = design.n_per_group;
  if (design.mode == SurvivalMode::gatekeep_split) {
    fold_size = design.n_per_group / m;
    if (fold_size < 2) {
      throw std::domain_error(
          "run_survival_reuse: gatekeeping split leaves fewer than 2 subjects "
          "per group");
    }
  }
  const double z_crit = normal_quantile(1.0 - 0.5 * design.alpha);

  ReportAccumulator acc(m, design.replications);
  std::vector<Subject> cohort_a(static_cast<std::size_t>(design.n_per_group));
  std::vector<Subject> cohort_b(static_cast<std::size_t>(design.n_per_group));
  std::vector<Subject> fold_a;
  std::vector<Subject> fold_b;
  std::vector<double> stats(static_cast<std::size_t>(m));
  std::vector<bool> rejected(static_cast<std::size_t>(m));
  const std::vector<std::int64_t> fold_sizes(static_cast<std::size_t>(m),
                                             fold_size);

  for (std::int64_t rep = 0; rep < design.replications; ++rep) {
    const std::uint64_t rep_seed =
        derive_stream(design.master_seed, static_cast<std::uint64_t>(rep));
    Rng draw_rng(derive_stream(rep_seed, 0));
    for (auto& s : cohort_a) {
      s = {weibull_sample(design.weibull_shape, design.weibull_scale, draw_rng),
           true};
    }
    for (auto& s : cohort_b) {
      s = {weibull_sample(design.weibull_shape, design.weibull_scale, draw_rng),
           true};
    }
    Allocation split_a;
    Allocation split_b;
    if (design.mode == SurvivalMode::gatekeep_split) {
      split_a = allocate(design.n_per_group, fold_sizes,
                         AllocationStrategy::disjoint_partition,
                         derive_stream(rep_seed, 1));
      split_b = allocate(design.n_per_group, fold_sizes,
                         AllocationStrategy::disjoint_partition,
                         derive_stream(rep_seed, 2));
    }
    for (std::int64_t test = 0; test < m; ++test) {
      const double truncation =
          design.truncation_times[static_cast<std::size_t>(test)];
      LogRankResult result;
      if (design.mode == SurvivalMode::reuse_same_cohort) {
        result = logrank_statistic(cohort_a, cohort_b, truncation);
      } else {
        const auto& ia = split_a.draws[static_cast<std::size_t>(test)];
        const auto& ib = split_b.draws[static_cast<std::size_t>(test)];
        fold_a.resize(ia.size());
        fold_b.resize(ib.size());
        for (std::size_t i = 0; i < ia.size(); ++i) {
          fold_a[i] = cohort_a[static_cast<std::size_t>(ia[i])];
        }
        for (std::size_t i = 0; i < ib.size(); ++i) {
          fold_b[i] = cohort_b[static_cast<std::size_t>(ib[i])];
        }
        result = logrank_statistic(fold_a, fold_b, truncation);
      }
      stats[static_cast<std::size_t>(test)] = result.valid ? result.z : 0.0;
      rejected[static_cast<std::size_t>(test)] =
          result.valid && std::fabs(result.z) > z_crit;
    }
    acc.add(stats, rejected);
  }
  return acc.finish(design.master_seed);
}

void write_report(std::ostream& out, const SimulationReport& report) {
  out << "replications: " << report.rep_count << '\n';
  out << "seed: " << report.master_seed << '\n';
  out << "tests: " << report.per_test_rejection_freq.size() << '\n';
  out << '\n';
  out << "[error_pmf]\n";
  out << "count,n,frequency\n";
  const auto& pmf = report.empirical_error_pmf.pmf();
  for (std::size_t i = 0; i < report.error_count_n.size(); ++i) {
    out << i << ',' << report.error_count_n[i] << ','
        << format_double(pmf.probabilities()[i]) << '\n';
  }
  out << '\n';
  out << "[per_test_rejection]\n";
  out << "test,frequency\n";
  for (std::size_t i = 0; i < report.per_test_rejection_freq.size(); ++i) {
    out << i << ',' << format_double(report.per_test_rejection_freq[i]) << '\n';
  }
  out << '\n';
  out << "[stat_correlation]\n";
  for (const auto& row : report.pairwise_stat_correlation) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  out << '\n';
  out << "[stop_loss]\n";
  out << "L,premium\n";
  for (std::size_t L = 0; L < report.stop_loss.premiums.size(); ++L) {
    out << L << ',' << format_double(report.stop_loss.premiums[L]) << '\n';
  }
  if (report.contingency) {
    const auto& c = *report.contingency;
    out << '\n';
    out << "[contingency]\n";
    out << ",not_r_first,r_first\n";
    out << "not_r_last," << c[0][0] << ',' << c[0][1] << '\n';
    out << "r_last," << c[1][0] << ',' << c[1][1] << '\n';
  }
}

}  // namespace reuserisk
