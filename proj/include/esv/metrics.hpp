#pragma once

#include <vector>

#include "esv/error.hpp"

namespace esv {

/// Mean absolute deviation between estimate and reference, scaled by the
/// mean absolute reference attribution. Undefined when the reference is all
/// zero.
double relative_error(const std::vector<double>& reference, const std::vector<double>& estimate);

/// Slope of the least-absolute-deviation line estimate ~ slope * reference +
/// intercept, solved by iteratively reweighted least squares (tolerance
/// 1e-10, weights clamped at 1e-12, ordinary least squares start). Undefined
/// when the reference is constant.
double lad_slope(const std::vector<double>& reference, const std::vector<double>& estimate);

/// Pearson correlation. Undefined when either side has zero variance.
double pearson_r(const std::vector<double>& reference, const std::vector<double>& estimate);

}  // namespace esv
