#pragma once

#include <span>
#include <string>

namespace ganaug::metrics {

struct RepeatSummary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n-1 denominator)
    int n = 0;
};

/// Mean and sample std of repeated scores; needs at least two values.
RepeatSummary aggregate_repeats(std::span<const double> scores);

/// Table cell text "M.M (S.SS)", e.g. "88.9 (0.51)".
std::string format_mean_std(double mean, double std);
std::string format_mean_std(const RepeatSummary& s);

enum class TTestKind { welch, student };

struct StatResult {
    double t_statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    bool significant = false;  // p_value < alpha
};

inline constexpr double kSignificanceLevel = 0.05;

/// Two-sample, two-tailed t-test of a against b (unpaired).
StatResult t_test_two_tailed(std::span<const double> a, std::span<const double> b, TTestKind kind = TTestKind::welch,
                             double alpha = kSignificanceLevel);

/// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
double t_two_tailed_p(double t, double dof);

}  // namespace ganaug::metrics
