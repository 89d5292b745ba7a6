#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace critdim {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // root mean square
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs two distinct x.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated quantile, p in [0, 1]. Empty input gives NaN.
double quantile(std::vector<double> values, double p);
inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

}  // namespace critdim
