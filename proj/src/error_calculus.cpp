#include "reuserisk/error_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace reuserisk {

namespace {
constexpr double kCellTolerance = 1e-12;
constexpr double kCompareTolerance = 1e-12;
}  // namespace

DependentEventPair::DependentEventPair(double p1_in, double p2_in,
                                       double p2_given_1_in)
    : p1(p1_in), p2(p2_in), p2_given_1(p2_given_1_in) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(p1) || !in_unit(p2) || !in_unit(p2_given_1)) {
    throw std::domain_error(
        "DependentEventPair: p1, p2 and p2_given_1 must lie in [0,1]");
  }
  const double p_e2_not_e1 = p2 - p1 * p2_given_1;
  if (p_e2_not_e1 < -kCellTolerance) {
    throw std::domain_error(
        "DependentEventPair: joint cell pr(E2 and not E1) = " +
        std::to_string(p_e2_not_e1) +
        " is negative; requires p1*p2_given_1 <= p2");
  }
  const double p_neither = 1.0 - p1 - p2 + p1 * p2_given_1;
  if (p_neither < -kCellTolerance) {
    throw std::domain_error(
        "DependentEventPair: joint cell pr(neither event) = " +
        std::to_string(p_neither) +
        " is negative; requires p2 - p1*p2_given_1 <= 1 - p1");
  }
}

ErrorCountDistribution::ErrorCountDistribution(DiscretePmf pmf)
    : pmf_(std::move(pmf)) {
  if (pmf_.support_min() != 0) {
    throw std::invalid_argument(
        "ErrorCountDistribution: support must start at 0");
  }
}

double UtilityFunction::operator()(std::int64_t count) const {
  switch (kind_) {
    case UtilityKind::linear_error_count:
      return -static_cast<double>(count);
    case UtilityKind::quadratic_error_count:
      return -static_cast<double>(count) * static_cast<double>(count);
    case UtilityKind::tabulated:
      if (count < 0 || static_cast<std::size_t>(count) >= table_.size()) {
        throw std::domain_error("UtilityFunction: tabulated utility has no value for count " +
                                std::to_string(count));
      }
      return table_[static_cast<std::size_t>(count)];
    case UtilityKind::qaly_decision:
      throw std::domain_error(
          "UtilityFunction: qaly utility depends on the effect parameter; "
          "evaluate it through the portfolio module");
  }
  throw std::logic_error("UtilityFunction: unknown kind");
}

ErrorCountDistribution two_event_distribution(const DependentEventPair& pair) {
  const double pr2 = pair.p1 * pair.p2_given_1;
  const double pr1 = pair.p2 + pair.p1 * (1.0 - 2.0 * pair.p2_given_1);
  const double pr0 = 1.0 - pair.p2 - pair.p1 * (1.0 - pair.p2_given_1);
  return ErrorCountDistribution(DiscretePmf(0, {pr0, pr1, pr2}));
}

double stop_loss_premium(const ErrorCountDistribution& dist, std::int64_t L) {
  if (L < 0 || L > dist.study_count()) {
    throw std::domain_error("stop_loss_premium: retention outside [0, m]");
  }
  const auto& pmf = dist.pmf();
  double acc = 0.0;
  for (std::int64_t x = L + 1; x <= pmf.support_max(); ++x) {
    acc += static_cast<double>(x - L) * pmf.prob(x);
  }
  return acc;
}

StopLossCurve stop_loss_curve(const ErrorCountDistribution& dist) {
  StopLossCurve curve;
  curve.premiums.reserve(static_cast<std::size_t>(dist.study_count()) + 1);
  for (std::int64_t L = 0; L <= dist.study_count(); ++L) {
    curve.premiums.push_back(stop_loss_premium(dist, L));
  }
  return curve;
}

StopLossOrder stop_loss_compare(const StopLossCurve& a,
                                const StopLossCurve& b) {
  const std::size_t len = std::max(a.premiums.size(), b.premiums.size());
  bool a_le = true;
  bool b_le = true;
  bool a_strict = false;
  bool b_strict = false;
  for (std::size_t i = 0; i < len; ++i) {
    const double pa = i < a.premiums.size() ? a.premiums[i] : 0.0;
    const double pb = i < b.premiums.size() ? b.premiums[i] : 0.0;
    if (pa > pb + kCompareTolerance) {
      a_le = false;
      b_strict = true;
    } else if (pb > pa + kCompareTolerance) {
      b_le = false;
      a_strict = true;
    }
  }
  if (a_le && b_le) return StopLossOrder::equal;
  if (a_le && a_strict) return StopLossOrder::a_smaller;
  if (b_le && b_strict) return StopLossOrder::b_smaller;
  return StopLossOrder::incomparable;
}

double pcer(const ErrorCountDistribution& dist) {
  if (dist.study_count() == 0) {
    throw std::domain_error("pcer: undefined for an empty portfolio");
  }
  return dist.mean() / static_cast<double>(dist.study_count());
}

double fwer(const ErrorCountDistribution& dist) {
  return 1.0 - dist.pmf().prob(0);
}

double fdr_global_null(const ErrorCountDistribution& dist) {
  return fwer(dist);
}

double expected_utility(const ErrorCountDistribution& dist,
                        const UtilityFunction& u) {
  const auto& pmf = dist.pmf();
  double acc = 0.0;
  for (std::int64_t c = 0; c <= pmf.support_max(); ++c) {
    acc += u(c) * pmf.prob(c);
  }
  return acc;
}

double shared_control_correlation(std::int64_t n, std::int64_t k) {
  if (n <= 0) {
    throw std::domain_error("shared_control_correlation: n must be positive");
  }
  if (k < 0 || k > n) {
    throw std::domain_error(
        "shared_control_correlation: overlap k must lie in [0, n]");
  }
  return static_cast<double>(k) / (2.0 * static_cast<double>(n));
}

}  // namespace reuserisk
