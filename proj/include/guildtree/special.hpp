#pragma once

namespace guildtree {

double normal_cdf(double x);
/// log Phi(x), accurate deep into the lower tail.
double log_normal_cdf(double x);
double normal_quantile(double p);
double normal_log_density(double x, double mean, double variance);
/// Upper tail P(X > x) of a chi-square variable with `df` degrees of freedom.
double chi_square_sf(double x, double df);
double poisson_log_pmf(long y, double log_rate);

}  // namespace guildtree
