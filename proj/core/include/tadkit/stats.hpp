#pragma once

#include <vector>

namespace tadkit::stats {

double mean(const std::vector<double>& x);
// ddof=1 sample variance; returns 0 for n <= ddof.
double variance(const std::vector<double>& x, int ddof = 1);
double stddev(const std::vector<double>& x, int ddof = 1);

// Linear-interpolation empirical quantile (R type 7) on an unsorted sample.
// q outside [0,1] or empty sample is a ContractError.
double quantile(std::vector<double> x, double q);
// Same, but for repeated queries against one already-sorted sample.
double quantile_sorted(const std::vector<double>& sorted, double q);

double digamma(double x);
double trigamma(double x);

// Regularized incomplete beta I_x(a,b) via continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for a Student-t statistic.
double student_t_two_sided_p(double t, double df);

struct GammaFit {
  double shape = 0.0;
  double scale = 0.0;
  double log_lik = 0.0;
};

// Moment-matched shape/scale refined by one Newton step on the shape
// profile likelihood. Inputs must be strictly positive.
GammaFit fit_gamma(const std::vector<double>& x);

// AIC of the exponential MLE fit: 2 + 2n(ln(theta) + 1), theta = mean.
double exponential_aic(const std::vector<double>& x);
double gamma_aic(const GammaFit& fit);

struct PairedComparison {
  int n = 0;                 // shared sample count
  double mean_other = 0.0;
  double mean_baseline = 0.0;
  double delta = 0.0;        // mean(other - baseline)
  double delta_pct = 0.0;    // 100 * delta / |mean_baseline|
  double t_stat = 0.0;
  double p_value = 0.0;      // two-sided paired t-test
  double cohens_d = 0.0;     // mean(diff) / sd(diff)
};

// Paired comparison of two equally-long per-seed samples.
PairedComparison paired_compare(const std::vector<double>& other,
                                const std::vector<double>& baseline);

// Benjamini-Hochberg adjusted p-values, same order as the input.
std::vector<double> bh_fdr(const std::vector<double>& pvalues);

}  // namespace tadkit::stats
