#pragma once

#include <span>

namespace dynkt::stats {

/// Area under the ROC curve by the Mann-Whitney rank sum with average ranks
/// for tied scores: P(score+ > score-) + 0.5 P(tie). Labels are 0/1 and both
/// classes must be present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Frequency of the majority class.
double baseline_accuracy(std::span<const int> labels);

/// Fraction of examples where (score >= threshold) equals the label.
double accuracy(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
};

/// Welch's unequal-variance two-sample t-test, two-sided.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Regularised incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace dynkt::stats
