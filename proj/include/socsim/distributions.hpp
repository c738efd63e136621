#pragma once

// Distribution functions needed by the inferential statistics. Accuracy:
// incomplete beta and the t/F functions to ~1e-12 absolute; the studentized
// range CDF to ~1e-6 absolute (quadrature), its quantile to ~1e-6.

namespace socsim {

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double normal_cdf(double z);

/// P(T <= t) for Student's t with `df` degrees of freedom.
double t_cdf(double t, double df);
/// Inverse of t_cdf; p in (0, 1).
double t_quantile(double p, double df);

/// P(F <= f) for the F distribution with (d1, d2) degrees of freedom.
double f_cdf(double f, double d1, double d2);
/// Upper tail P(F > f), computed without cancellation.
double f_sf(double f, double d1, double d2);

/// P(Q <= q) for the studentized range of k means with `df` error degrees of
/// freedom. df >= 1e5 is treated as infinite.
double ptukey(double q, int k, double df);
/// Inverse of ptukey; p in (0, 1).
double qtukey(double p, int k, double df);

}  // namespace socsim
