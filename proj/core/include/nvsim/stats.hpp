#pragma once

#include <cstdint>
#include <span>

// Scalar statistics kernels shared by the analysis module and the tests.

namespace nvsim::stats {

// Regularized lower incomplete gamma P(a, x); series for x < a+1,
// continued fraction otherwise. Relative accuracy ~1e-14 on a in [0.5, 200].
double gamma_p(double a, double x);

// Q(a, x) = 1 - P(a, x)
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with dof degrees of freedom
double chi2_sf(double x, double dof);

// Poisson pmf exp(k log lambda - lambda - log k!)
double poisson_pmf(std::uint64_t k, double lambda);

double mean(std::span<const double> xs);

// population standard deviation (divides by n); straggle quantities use this
double stddev(std::span<const double> xs);

} // namespace nvsim::stats
