#include "esv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esv {
namespace {

void check_pair(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw ValidationError("metric inputs differ in length (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw ValidationError("metric inputs are empty");
  for (double v : a)
    if (!std::isfinite(v)) throw ValidationError("metric input contains a non-finite value");
  for (double v : b)
    if (!std::isfinite(v)) throw ValidationError("metric input contains a non-finite value");
}

}  // namespace

double relative_error(const std::vector<double>& reference,
                      const std::vector<double>& estimate) {
  check_pair(reference, estimate);
  const size_t n = reference.size();
  double scale = 0.0;
  for (double v : reference) scale += std::abs(v);
  scale /= static_cast<double>(n);
  if (scale == 0.0)
    throw UndefinedMetricError("relative error undefined for an all-zero reference");
  double err = 0.0;
  for (size_t i = 0; i < n; ++i) err += std::abs(estimate[i] - reference[i]);
  return err / static_cast<double>(n) / scale;
}

double lad_slope(const std::vector<double>& reference, const std::vector<double>& estimate) {
  check_pair(reference, estimate);
  const size_t n = reference.size();
  if (n < 2) throw UndefinedMetricError("LAD slope needs at least two points");
  double mean_x = 0.0, mean_y = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_x += reference[i];
    mean_y += estimate[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (reference[i] - mean_x) * (reference[i] - mean_x);
    sxy += (reference[i] - mean_x) * (estimate[i] - mean_y);
  }
  if (sxx == 0.0)
    throw UndefinedMetricError("LAD slope undefined for a constant reference");

  // Reweighted least squares with a shrinking residual smoother: weights are
  // 1/sqrt(r^2 + eps^2), eps decays by stages from the initial residual scale
  // down to 1e-14 of it, and each stage iterates until slope and intercept
  // both move less than 1e-10. Starting smooth keeps the iterate from locking
  // onto the first pair of points it happens to pass through; the eps floor is
  // the deterministic tie-break when the optimum is a flat segment.
  double slope = sxy / sxx;
  double intercept = mean_y - slope * mean_x;
  double res_scale = 0.0;
  for (size_t i = 0; i < n; ++i)
    res_scale = std::max(res_scale, std::abs(estimate[i] - slope * reference[i] - intercept));
  res_scale = std::max(res_scale, 1.0);
  const double tol = 1e-10;
  for (double eps = res_scale; eps >= res_scale * 1e-14; eps /= 10.0) {
    for (int it = 0; it < 200; ++it) {
      double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
      for (size_t i = 0; i < n; ++i) {
        double r = estimate[i] - slope * reference[i] - intercept;
        double w = 1.0 / std::sqrt(r * r + eps * eps);
        sw += w;
        swx += w * reference[i];
        swy += w * estimate[i];
        swxx += w * reference[i] * reference[i];
        swxy += w * reference[i] * estimate[i];
      }
      double denom = sw * swxx - swx * swx;
      if (denom == 0.0) break;
      double next_slope = (sw * swxy - swx * swy) / denom;
      double next_intercept = (swy - next_slope * swx) / sw;
      double moved =
          std::max(std::abs(next_slope - slope), std::abs(next_intercept - intercept));
      slope = next_slope;
      intercept = next_intercept;
      if (moved < tol) break;
    }
  }
  return slope;
}

double pearson_r(const std::vector<double>& reference, const std::vector<double>& estimate) {
  check_pair(reference, estimate);
  const size_t n = reference.size();
  if (n < 2) throw UndefinedMetricError("Pearson correlation needs at least two points");
  double mean_x = 0.0, mean_y = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mean_x += reference[i];
    mean_y += estimate[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = reference[i] - mean_x;
    double dy = estimate[i] - mean_y;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw UndefinedMetricError("Pearson correlation undefined for a constant input");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace esv
