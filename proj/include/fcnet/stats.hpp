#pragma once

#include <span>

namespace fcnet {

// Regularized incomplete beta I_x(a, b) via the modified Lentz continued
// fraction; accurate to about 1e-14 on the unit interval.
double regularized_incomplete_beta(double x, double a, double b);

// Two-sided Student t CDF tail: P(|T_df| >= |t|).
double students_t_two_sided_p(double t, double df);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // two-sided
};

// Welch's unequal-variance t-test with Welch-Satterthwaite df. Both samples
// need >= 2 points. Degenerate case of two zero-variance samples: p = 1 when
// the means agree, p = 0 otherwise.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

}  // namespace fcnet
