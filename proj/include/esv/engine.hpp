#pragma once

#include <random>

#include "esv/multiscale.hpp"

namespace esv {

enum class AttributionMode { exact, approx };

/// Per-element, per-class attributions plus the provenance needed to
/// reproduce or compare runs.
struct AttributionResult {
  AttributionMode mode = AttributionMode::exact;
  int n = 0;
  std::vector<int> classes;     // requested class indices, ascending
  std::vector<double> phi;      // n x classes.size(), row-major
  ClassScores evidential;       // f_c(X) - f_c(empty), one per requested class
  int m = 0;
  int iterations = 0;
  uint64_t seed = 0;
  bool strict_alg1 = false;
  uint64_t model_calls = 0;

  double phi_at(int element, int class_slot) const {
    return phi[static_cast<size_t>(element) * classes.size() + class_slot];
  }
  int slot_of(int class_index) const;
};

struct ApproxConfig {
  int m = 0;
  int iterations = 0;
  uint64_t seed = 0;  // required; there is no entropy fallback
  bool strict_alg1 = false;
};

/// Exhaustive attribution from the per-scale expectation form. Every
/// subsequence is scored once (through the recurrence for multi-scale
/// models), per-scale means are combined per element, and the efficiency
/// identity holds up to accumulation error.
AttributionResult exact_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                            std::vector<int> classes,
                            int exhaustive_limit = kDefaultExhaustiveLimit);

/// Sampled attribution: pools of subsequences are grown scale by scale from
/// the complete set of single-element subsequences, per-scale containing and
/// excluding sums persist across iterations, and the final estimate combines
/// them exactly like the exhaustive path. A saturating m with one iteration
/// reproduces exact_esv up to accumulation order.
AttributionResult approx_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                             std::vector<int> classes, const ApproxConfig& cfg);

/// Sampling state for one scale: the surviving subsequences in canonical
/// order plus the generator that will draw the next scale.
struct SamplePool {
  int scale = 0;
  int m = 0;
  std::vector<SubsequenceIndex> members;
  std::mt19937_64 rng;
};

/// Pool over all single-element subsequences; the fixed starting point of
/// every sampled run.
SamplePool initial_pool(const FeatureSequence& x, int m, uint64_t seed);

/// Next-scale pool: every one-element extension of every member, deduplicated
/// and canonically ordered, then min(m, candidate count) kept by a seeded
/// draw without replacement. When m covers the whole candidate set it is
/// kept verbatim.
SamplePool grow_candidates(const SamplePool& pool, const FeatureSequence& x);

/// Per-element difference phi[gt] - phi[pt] between two attribution runs
/// whose provenance (mode, n, sampling settings) must match.
std::vector<double> contrastive_esv(const AttributionResult& gt_run,
                                    const AttributionResult& pt_run, int gt, int pt);

enum class ElementRole { supporting, distracting };

/// Sign split of one class column: phi > 0 supports the class, phi <= 0
/// (exact zero included) distracts from it.
std::vector<ElementRole> classify_elements(const AttributionResult& r, int class_index);

}  // namespace esv
