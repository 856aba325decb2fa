#include "reuserisk/power.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "reuserisk/dist.hpp"

namespace reuserisk {

namespace {

// Continued fraction for the regularized incomplete beta (modified Lentz).
double incbeta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-15;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double mult = d * c;
    h *= mult;
    if (std::fabs(mult - 1.0) < eps) break;
  }
  return h;
}

// Regularized incomplete beta I_x(a, b).
double incbeta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * incbeta_cf(a, b, x) / a;
  }
  return 1.0 - std::exp(log_front) * incbeta_cf(b, a, 1.0 - x) / b;
}

// Adaptive Simpson on [a, b].
double adaptive_simpson_step(double (*f)(double, const void*), const void* ctx,
                             double a, double m, double b, double fa,
                             double fm, double fb, double whole, double eps,
                             int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm, ctx);
  const double frm = f(rm, ctx);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * eps) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, ctx, a, lm, m, fa, flm, fm, left, 0.5 * eps,
                               depth - 1) +
         adaptive_simpson_step(f, ctx, m, rm, b, fm, frm, fb, right, 0.5 * eps,
                               depth - 1);
}

double adaptive_simpson(double (*f)(double, const void*), const void* ctx,
                        double a, double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a, ctx);
  const double fm = f(m, ctx);
  const double fb = f(b, ctx);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, ctx, a, m, b, fa, fm, fb, whole, eps, 48);
}

struct NctContext {
  double t;
  double df;
  double ncp;
  double log_norm;  // log of the density normalizer for s = sqrt(V/df)
};

// Integrand Phi(t*s - ncp) * g(s), where g is the density of sqrt(chi2_df/df).
double nct_integrand(double s, const void* raw) {
  const auto* ctx = static_cast<const NctContext*>(raw);
  if (s <= 0.0) {
    // s^(df-1) vanishes for df > 1; for df == 1 the density is finite at zero.
    if (ctx->df > 1.0) return 0.0;
    return normal_cdf(-ctx->ncp) * std::exp(ctx->log_norm);
  }
  const double log_density = ctx->log_norm + (ctx->df - 1.0) * std::log(s) -
                             0.5 * ctx->df * s * s;
  return normal_cdf(ctx->t * s - ctx->ncp) * std::exp(log_density);
}

void check_spec(const TestSpec& spec) {
  if (!(spec.alpha > 0.0 && spec.alpha < 1.0)) {
    throw std::domain_error("TestSpec: alpha must lie in (0,1)");
  }
  if (!(spec.sigma > 0.0)) {
    throw std::domain_error("TestSpec: sigma must be positive");
  }
  if (!std::isfinite(spec.delta)) {
    throw std::domain_error("TestSpec: delta must be finite");
  }
}

void check_sample(const TestSpec& spec, const SampleVector& n) {
  const std::int64_t min_arm = spec.kind == TestKind::t_pooled ? 2 : 1;
  if (n.n1 < min_arm || n.n2 < min_arm) {
    throw std::domain_error("SampleVector: arms too small for the test kind");
  }
}

}  // namespace

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("student_t_cdf: df must be positive");
  const double x = df / (df + t * t);
  const double half_tail = 0.5 * incbeta(0.5 * df, 0.5, x);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_quantile(double p, double df) {
  if (!(df > 0.0)) {
    throw std::domain_error("student_t_quantile: df must be positive");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("student_t_quantile: p must lie in (0,1)");
  }
  if (p == 0.5) return 0.0;
  // Bracket then bisect; the cdf is strictly increasing.
  double lo = -1.0;
  double hi = 1.0;
  while (student_t_cdf(lo, df) > p) lo *= 2.0;
  while (student_t_cdf(hi, df) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (student_t_cdf(mid, df) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double noncentral_t_cdf(double t, double df, double noncentrality) {
  if (!(df > 0.0)) {
    throw std::domain_error("noncentral_t_cdf: df must be positive");
  }
  NctContext ctx;
  ctx.t = t;
  ctx.df = df;
  ctx.ncp = noncentrality;
  ctx.log_norm = std::log(2.0) + 0.5 * df * std::log(0.5 * df) -
                 std::lgamma(0.5 * df);
  const double sd = 1.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - 12.0 * sd);
  const double hi = 1.0 + 12.0 * sd;
  const double p = adaptive_simpson(&nct_integrand, &ctx, lo, hi, 1e-13);
  return std::clamp(p, 0.0, 1.0);
}

double type2_error(const TestSpec& spec, const SampleVector& n) {
  check_spec(spec);
  check_sample(spec, n);
  const double se =
      spec.sigma * std::sqrt(1.0 / static_cast<double>(n.n1) +
                             1.0 / static_cast<double>(n.n2));
  const double shift = spec.delta / se;
  double beta;
  if (spec.kind == TestKind::z_known_variance) {
    if (spec.two_sided) {
      const double zc = normal_quantile(1.0 - 0.5 * spec.alpha);
      beta = normal_cdf(zc - shift) - normal_cdf(-zc - shift);
    } else {
      const double zc = normal_quantile(1.0 - spec.alpha);
      beta = normal_cdf(zc - shift);
    }
  } else {
    const double df = static_cast<double>(n.n1 + n.n2 - 2);
    if (spec.two_sided) {
      const double tc = student_t_quantile(1.0 - 0.5 * spec.alpha, df);
      beta = noncentral_t_cdf(tc, df, shift) - noncentral_t_cdf(-tc, df, shift);
    } else {
      const double tc = student_t_quantile(1.0 - spec.alpha, df);
      beta = noncentral_t_cdf(tc, df, shift);
    }
  }
  return std::clamp(beta, 0.0, 1.0);
}

double power(const TestSpec& spec, const SampleVector& n) {
  return 1.0 - type2_error(spec, n);
}

SampleVector required_sample_size(const TestSpec& spec, double target_power,
                                  double allocation_ratio) {
  check_spec(spec);
  if (!(allocation_ratio > 0.0)) {
    throw std::domain_error("required_sample_size: allocation ratio must be positive");
  }
  if (!(target_power < 1.0)) {
    throw std::domain_error("required_sample_size: target power >= 1 is unreachable");
  }
  if (!(target_power > spec.alpha)) {
    throw std::domain_error(
        "required_sample_size: target power must exceed the level alpha");
  }
  const std::int64_t min_arm = spec.kind == TestKind::t_pooled ? 2 : 1;
  auto sample_for = [&](std::int64_t n1) {
    const auto n2 = static_cast<std::int64_t>(
        std::ceil(allocation_ratio * static_cast<double>(n1)));
    return SampleVector{n1, std::max(min_arm, n2)};
  };
  std::int64_t hi = min_arm;
  constexpr std::int64_t hard_cap = std::int64_t{1} << 40;
  while (power(spec, sample_for(hi)) < target_power) {
    if (hi > hard_cap) {
      throw std::domain_error("required_sample_size: target power unreachable");
    }
    hi *= 2;
  }
  if (hi == min_arm) return sample_for(hi);
  std::int64_t lo = hi / 2;  // visited by the doubling loop, power below target
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (power(spec, sample_for(mid)) >= target_power) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return sample_for(hi);
}

double portfolio_expected_type2(std::span<const TestSpec> specs,
                                std::span<const SampleVector> ns) {
  if (specs.size() != ns.size()) {
    throw std::invalid_argument(
        "portfolio_expected_type2: specs and samples differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    total += type2_error(specs[i], ns[i]);
  }
  return total;
}

}  // namespace reuserisk
