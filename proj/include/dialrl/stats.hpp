#pragma once

#include <cstdint>
#include <vector>

// Small self-contained statistics kit: Welch two-sample t-test, Pearson
// correlation with significance, ordinary least squares, exact binomial test.

namespace dialrl::stats {

double mean(const std::vector<double>& xs);
double sample_variance(const std::vector<double>& xs);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

/// Welch's unequal-variance two-sample t-test. Conventions for degenerate
/// inputs: both samples zero-variance with equal means -> p = 1; with unequal
/// means -> p = 0.
TTestResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b);

struct PearsonResult {
    double r = 0.0;
    double p = 1.0;
};

/// Pearson correlation with a two-sided p-value under the null of zero
/// correlation (t transform, n-2 degrees of freedom). Requires length >= 3
/// and nonzero variance on both sides.
PearsonResult pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope*x + intercept. Zero x-variance is
/// rejected with std::invalid_argument.
LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys);

/// Exact two-sided binomial test: probability under Binomial(n, p) of an
/// outcome at most as likely as `k`.
double binomial_two_sided_p(std::uint64_t k, std::uint64_t n, double p);

}  // namespace dialrl::stats
