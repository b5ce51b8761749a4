#pragma once

namespace mpcr {

// Standard normal distribution function.
double normal_cdf(double x);

// Inverse standard normal CDF, absolute error well below 1e-9.
double normal_quantile(double p);

// Regularized incomplete beta function I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);

// Central Student t distribution function.
double student_t_cdf(double x, double dof);

// Inverse central t CDF; |F(q) - p| converges to ~1e-14.
double t_quantile(double dof, double p);

// Noncentral t distribution function P(T <= x) for noncentrality lambda.
// Absolute accuracy ~1e-12 over |x| <= 50, |lambda| <= 40, dof <= 1e4.
double noncentral_t_cdf(double x, double dof, double lambda);

}  // namespace mpcr
