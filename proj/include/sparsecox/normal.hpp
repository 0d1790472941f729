#pragma once

namespace sparsecox {

double normal_cdf(double x);

/// Inverse standard normal CDF for p in (0, 1), accurate to ~1e-15.
double normal_quantile(double p);

}  // namespace sparsecox
