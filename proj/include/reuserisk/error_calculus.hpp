#pragma once

// Calculus of dependent error-count distributions for a portfolio of tests:
// the exact two-event distribution, stop-loss premiums and the stop-loss
// order, multiplicity metrics (PCER/FWER/FDR under the global null), expected
// utility over error counts, and the shared-control covariance formula.

#include <cstdint>
#include <vector>

#include "reuserisk/dist.hpp"

namespace reuserisk {

// Two error events described by their marginals and pr(E2 | E1). Construction
// enforces that the implied 2x2 joint table has no negative cell.
struct DependentEventPair {
  DependentEventPair(double p1, double p2, double p2_given_1);

  double p1;
  double p2;
  double p2_given_1;
};

// Distribution of the number of errors across a portfolio of m studies;
// support is exactly {0, ..., m}.
class ErrorCountDistribution {
 public:
  explicit ErrorCountDistribution(DiscretePmf pmf);

  const DiscretePmf& pmf() const { return pmf_; }
  std::int64_t study_count() const { return pmf_.support_max(); }
  double mean() const { return pmf_.mean(); }

 private:
  DiscretePmf pmf_;
};

// Premiums rho(L) = E[(X - L)+] for integer retentions L = 0..m.
struct StopLossCurve {
  std::vector<double> premiums;
};

enum class UtilityKind {
  linear_error_count,     // u(c) = -c
  quadratic_error_count,  // u(c) = -c^2
  qaly_decision,          // parameter-dependent; evaluated by the portfolio module
  tabulated,              // u(c) = table[c]
};

class UtilityFunction {
 public:
  static UtilityFunction linear() {
    return UtilityFunction(UtilityKind::linear_error_count, {});
  }
  static UtilityFunction quadratic() {
    return UtilityFunction(UtilityKind::quadratic_error_count, {});
  }
  static UtilityFunction qaly() {
    return UtilityFunction(UtilityKind::qaly_decision, {});
  }
  static UtilityFunction tabulated(std::vector<double> values) {
    return UtilityFunction(UtilityKind::tabulated, std::move(values));
  }

  UtilityKind kind() const { return kind_; }
  const std::vector<double>& table() const { return table_; }

  // Utility of an error count; throws for the qaly kind and for tabulated
  // utilities missing the requested point.
  double operator()(std::int64_t count) const;

 private:
  UtilityFunction(UtilityKind kind, std::vector<double> table)
      : kind_(kind), table_(std::move(table)) {}

  UtilityKind kind_;
  std::vector<double> table_;
};

enum class StopLossOrder { a_smaller, b_smaller, equal, incomparable };

// Exact error-count distribution of two dependent level events.
ErrorCountDistribution two_event_distribution(const DependentEventPair& pair);

// E[(X - L)+] for 0 <= L <= m; equals the mean at L = 0.
double stop_loss_premium(const ErrorCountDistribution& dist, std::int64_t L);

StopLossCurve stop_loss_curve(const ErrorCountDistribution& dist);

// Pointwise comparison at an absolute tolerance of 1e-12; curves of unequal
// length are padded with zeros.
StopLossOrder stop_loss_compare(const StopLossCurve& a, const StopLossCurve& b);

// Per-comparison error rate mean(X)/m. Throws for m = 0.
double pcer(const ErrorCountDistribution& dist);

// Family-wise error rate pr(X >= 1).
double fwer(const ErrorCountDistribution& dist);

// False discovery rate under the global null; equals fwer there.
double fdr_global_null(const ErrorCountDistribution& dist);

// Sum over the support of u(c) pr(X = c).
double expected_utility(const ErrorCountDistribution& dist,
                        const UtilityFunction& u);

// Pearson correlation (= covariance) k/(2n) of the two two-sample z-statistics
// when both treatment arms of size n are compared against size-n subsets of a
// 2n-unit control pool sharing k units.
double shared_control_correlation(std::int64_t n, std::int64_t k);

}  // namespace reuserisk
