#pragma once

#include <optional>

#include "esv/engine.hpp"

namespace esv {

/// Fraction of all nonempty subsequences one sampling iteration can visit:
/// every single-element subsequence plus up to m per deeper scale.
double sampled_fraction_per_iteration(int n, int m);

struct QualityCell {
  int m = 0;
  int iterations = 0;
  double mean_relative_error = 0.0;
  double mean_lad_slope = 0.0;
  double mean_pearson_r = 0.0;
  double sampled_fraction = 0.0;  // mean over evaluated inputs
  int runs_used = 0;              // (input, seed) pairs that produced metrics
  int runs_skipped = 0;           // undefined-metric gaps, reported not fatal
};

struct QualityReport {
  int inputs_total = 0;
  int inputs_evaluated = 0;       // after the evidential filter
  std::vector<QualityCell> cells; // m-major, iterations-minor order
};

/// Grid sweep of sampling quality: exact attributions once per input, then
/// one sampled run per (m, iterations, seed), with per-run metrics averaged
/// into each cell. Inputs whose exact evidential score for the class falls
/// below `min_evidential` (when given) are dropped up front. Undefined
/// metrics on individual runs become gaps, never failures.
QualityReport batch_quality(const SubsequenceScorer& model,
                            const std::vector<FeatureSequence>& inputs, int class_index,
                            const std::vector<int>& m_grid,
                            const std::vector<int>& iterations_grid,
                            const std::vector<uint64_t>& seeds,
                            std::optional<double> min_evidential,
                            int exhaustive_limit = kDefaultExhaustiveLimit);

}  // namespace esv
