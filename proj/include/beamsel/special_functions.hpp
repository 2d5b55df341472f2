#pragma once

namespace beamsel {

/// Generalized Marcum Q-function Q_nu(a, b) for real order nu > 0.
///
/// Evaluated as the Poisson(a^2/2)-weighted mixture of regularized upper
/// incomplete gamma functions Q(nu + k, b^2/2). Summation starts at the
/// Poisson mode and walks outward in both directions with log-domain weights,
/// so large non-centrality does not underflow the leading weight.
double marcum_q(double order, double a, double b);

/// Complement 1 - Q_nu(a, b), summed directly from the lower incomplete gamma
/// terms so that small values keep their relative accuracy.
double marcum_q_complement(double order, double a, double b);

/// CDF of the non-central chi-square with `dof` degrees of freedom and
/// non-centrality `noncentrality` (sum of squared means). x may be +inf.
double noncentral_chi2_cdf(double x, double dof, double noncentrality);

/// Upper tail 1 - F(x); equals marcum_q(dof/2, sqrt(lambda), sqrt(x)).
double noncentral_chi2_sf(double x, double dof, double noncentrality);

}  // namespace beamsel
