#pragma once

// Statistical testing for multi-seed comparisons: paired two-tailed t-tests
// and normal-approximation 95% confidence intervals (half-width 1.96*s/sqrt(n)).

#include <cstddef>
#include <vector>

#include "dsopt/errors.hpp"

namespace dsopt {

struct StatResult {
  double mean = 0.0;    // of the paired differences (or the sample)
  double stddev = 0.0;  // sample standard deviation (n-1)
  std::size_t n = 0;
  double ci95_half = 0.0;  // 1.96 * stddev / sqrt(n)
  double t_stat = 0.0;
  double p_two_tailed = 1.0;
  std::size_t df = 0;
};

// Mean / std / CI of one sample, no test.
StatResult summarize(const std::vector<double>& xs);

// Paired t-test on a - b; throws on n < 2 or identical differences.
StatResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Two-tailed p-value of Student's t with `df` degrees of freedom, via the
// regularized incomplete beta function.
double student_t_two_tailed_p(double t, std::size_t df);

// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

}  // namespace dsopt
