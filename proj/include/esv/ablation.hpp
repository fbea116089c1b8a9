#pragma once

#include <optional>

#include "esv/engine.hpp"

namespace esv {

enum class AblationOrder {
  esv_descending,  // highest attribution removed first
  esv_ascending,   // lowest attribution removed first
  center_out,      // middle position, then alternating right/left
  edges_in,        // first position, last position, second, second-to-last...
  uniform,         // keep survivors maximally spread out
  random_order,    // seeded shuffle
};

std::optional<AblationOrder> ablation_order_from_name(const std::string& name);
const char* ablation_order_name(AblationOrder order);

struct AblationStep {
  int elements_remaining = 0;
  double class_score = 0.0;
  bool correct = false;  // argmax over classes equals the supplied label
};

struct AblationCurve {
  AblationOrder order;
  std::vector<int> removal_order;   // full permutation of 0..n-1
  std::vector<AblationStep> points; // n entries: full sequence down to one element
};

/// Removal permutation for one policy. Attribution-ranked policies read the
/// given result (ties keep the lower element index first); positional
/// policies ignore it; random shuffles with the seed.
std::vector<int> removal_permutation(AblationOrder order, int n, const AttributionResult* esv,
                                     int class_index, uint64_t seed);

/// Applies the first n-1 removals of the policy's permutation, re-scoring
/// the surviving subsequence after each one.
AblationCurve ablate_by_rank(const SubsequenceScorer& model, const FeatureSequence& x,
                             AblationOrder order, const AttributionResult* esv,
                             int class_index, int label, uint64_t seed = 0);

}  // namespace esv
