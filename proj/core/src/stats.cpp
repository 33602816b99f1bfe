#include "tadkit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadkit/errors.hpp"

namespace tadkit::stats {

double mean(const std::vector<double>& x) {
  if (x.empty()) throw ContractError("mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x, int ddof) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (n <= ddof) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(n - ddof);
}

double stddev(const std::vector<double>& x, int ddof) { return std::sqrt(variance(x, ddof)); }

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ContractError("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw ContractError("quantile level outside [0,1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> x, double q) {
  std::sort(x.begin(), x.end());
  return quantile_sorted(x, q);
}

double digamma(double x) {
  if (!(x > 0.0)) throw NumericError("digamma requires x > 0");
  double result = 0.0;
  while (x < 6.0) {  // push into the asymptotic regime
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  return result;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw NumericError("trigamma requires x > 0");
  double result = 0.0;
  while (x < 6.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += inv * (1.0 + 0.5 * inv + inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0)));
  return result;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw NumericError("incomplete beta requires a,b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw NumericError("t-test requires df > 0");
  if (!std::isfinite(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

GammaFit fit_gamma(const std::vector<double>& x) {
  if (x.size() < 2) throw ContractError("gamma fit needs at least 2 samples");
  double mean_x = 0.0, mean_log = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) throw NumericError("gamma fit requires strictly positive samples");
    mean_x += v;
    mean_log += std::log(v);
  }
  const auto n = static_cast<double>(x.size());
  mean_x /= n;
  mean_log /= n;

  double shape = mean_x * mean_x / std::max(variance(x), 1e-300);
  shape = std::clamp(shape, 1e-6, 1e6);
  // One Newton step on the profile score: meanlog - ln(mean) + ln(k) - psi(k).
  const double score = mean_log - std::log(mean_x) + std::log(shape) - digamma(shape);
  const double curvature = 1.0 / shape - trigamma(shape);
  if (curvature < 0.0) {  // the profile is concave; guard division anyway
    const double stepped = shape - score / curvature;
    if (stepped > 0.0 && std::isfinite(stepped)) shape = stepped;
  }

  GammaFit fit;
  fit.shape = shape;
  fit.scale = mean_x / shape;
  fit.log_lik = n * ((shape - 1.0) * mean_log - shape - std::lgamma(shape) -
                     shape * std::log(fit.scale));
  return fit;
}

double exponential_aic(const std::vector<double>& x) {
  const double theta = mean(x);
  if (!(theta > 0.0)) throw NumericError("exponential AIC needs positive mean");
  const auto n = static_cast<double>(x.size());
  return 2.0 + 2.0 * n * (std::log(theta) + 1.0);
}

double gamma_aic(const GammaFit& fit) { return 4.0 - 2.0 * fit.log_lik; }

PairedComparison paired_compare(const std::vector<double>& other,
                                const std::vector<double>& baseline) {
  if (other.size() != baseline.size()) throw ContractError("paired samples differ in length");
  if (other.size() < 2) throw ContractError("paired comparison needs at least 2 pairs");
  PairedComparison r;
  r.n = static_cast<int>(other.size());
  std::vector<double> diff(other.size());
  for (size_t i = 0; i < other.size(); ++i) diff[i] = other[i] - baseline[i];
  r.mean_other = mean(other);
  r.mean_baseline = mean(baseline);
  r.delta = mean(diff);
  r.delta_pct = r.mean_baseline == 0.0 ? 0.0 : 100.0 * r.delta / std::fabs(r.mean_baseline);
  const double sd = stddev(diff);
  if (sd == 0.0) {
    r.t_stat = 0.0;
    r.p_value = r.delta == 0.0 ? 1.0 : 0.0;  // identical or a constant offset
    r.cohens_d = 0.0;
    if (r.delta != 0.0) r.t_stat = std::copysign(HUGE_VAL, r.delta);
    return r;
  }
  r.t_stat = r.delta / (sd / std::sqrt(static_cast<double>(r.n)));
  r.p_value = student_t_two_sided_p(r.t_stat, static_cast<double>(r.n - 1));
  r.cohens_d = r.delta / sd;
  return r;
}

std::vector<double> bh_fdr(const std::vector<double>& pvalues) {
  const size_t m = pvalues.size();
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> adjusted(m, 0.0);
  double running_min = 1.0;
  for (size_t i = m; i-- > 0;) {  // walk from the largest p downwards
    const double scaled = pvalues[order[i]] * static_cast<double>(m) / static_cast<double>(i + 1);
    running_min = std::min(running_min, scaled);
    adjusted[order[i]] = running_min;
  }
  return adjusted;
}

}  // namespace tadkit::stats
