#include "esv/quality.hpp"

#include <algorithm>
#include <cmath>

#include "esv/metrics.hpp"

namespace esv {

double sampled_fraction_per_iteration(int n, int m) {
  if (n < 1 || n > 62) throw ValidationError("sampled fraction defined for 1..62 elements");
  if (m < 1) throw ValidationError("sample budget m must be >= 1");
  double visited = static_cast<double>(n);
  for (int s = 2; s <= n; ++s)
    visited += std::min(static_cast<double>(m), binomial(n, s));
  double total = std::pow(2.0, n) - 1.0;
  return visited / total;
}

QualityReport batch_quality(const SubsequenceScorer& model,
                            const std::vector<FeatureSequence>& inputs, int class_index,
                            const std::vector<int>& m_grid,
                            const std::vector<int>& iterations_grid,
                            const std::vector<uint64_t>& seeds,
                            std::optional<double> min_evidential, int exhaustive_limit) {
  if (inputs.empty()) throw ValidationError("quality sweep needs at least one input");
  if (m_grid.empty() || iterations_grid.empty() || seeds.empty())
    throw ValidationError("quality sweep needs nonempty m, iteration, and seed grids");
  if (class_index < 0 || class_index >= model.num_classes())
    throw ValidationError("class index out of range");

  QualityReport report;
  report.inputs_total = static_cast<int>(inputs.size());

  struct ExactRef {
    const FeatureSequence* x;
    std::vector<double> phi;
  };
  std::vector<ExactRef> refs;
  for (const auto& x : inputs) {
    AttributionResult exact = exact_esv(model, x, {class_index}, exhaustive_limit);
    if (min_evidential && exact.evidential[0] < *min_evidential) continue;
    ExactRef ref;
    ref.x = &x;
    ref.phi.resize(x.size());
    for (int i = 0; i < x.size(); ++i) ref.phi[i] = exact.phi_at(i, 0);
    refs.push_back(std::move(ref));
  }
  report.inputs_evaluated = static_cast<int>(refs.size());
  if (refs.empty()) return report;

  for (int m : m_grid) {
    for (int iterations : iterations_grid) {
      QualityCell cell;
      cell.m = m;
      cell.iterations = iterations;
      double sum_err = 0.0, sum_slope = 0.0, sum_r = 0.0, sum_frac = 0.0;
      for (const auto& ref : refs) {
        sum_frac += sampled_fraction_per_iteration(ref.x->size(), m);
        for (uint64_t seed : seeds) {
          ApproxConfig cfg;
          cfg.m = m;
          cfg.iterations = iterations;
          cfg.seed = seed;
          AttributionResult est = approx_esv(model, *ref.x, {class_index}, cfg);
          std::vector<double> phi_hat(ref.x->size());
          for (int i = 0; i < ref.x->size(); ++i) phi_hat[i] = est.phi_at(i, 0);
          try {
            double err = relative_error(ref.phi, phi_hat);
            double slope = lad_slope(ref.phi, phi_hat);
            double r = pearson_r(ref.phi, phi_hat);
            sum_err += err;
            sum_slope += slope;
            sum_r += r;
            ++cell.runs_used;
          } catch (const UndefinedMetricError&) {
            ++cell.runs_skipped;
          }
        }
      }
      if (cell.runs_used > 0) {
        cell.mean_relative_error = sum_err / cell.runs_used;
        cell.mean_lad_slope = sum_slope / cell.runs_used;
        cell.mean_pearson_r = sum_r / cell.runs_used;
      } else {
        cell.mean_relative_error = std::nan("");
        cell.mean_lad_slope = std::nan("");
        cell.mean_pearson_r = std::nan("");
      }
      cell.sampled_fraction = sum_frac / static_cast<double>(refs.size());
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace esv
