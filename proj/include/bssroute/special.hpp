#pragma once

// Special functions used by the distribution fits and the chi-square test.

namespace bssroute::special {

// Standard normal CDF.
double normal_cdf(double z);

// Phi(b) - Phi(a) for a <= b, evaluated on the side of the distribution
// that avoids cancellation.
double normal_interval(double a, double b);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double gamma_p(double a, double x);

// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

double digamma(double x);
double trigamma(double x);

}  // namespace bssroute::special
