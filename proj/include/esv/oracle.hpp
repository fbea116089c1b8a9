#pragma once

#include "esv/combinatorics.hpp"
#include "esv/scorer.hpp"

namespace esv {

/// f_c(Xp + element) - f_c(Xp) for one class; `sub` must not already contain
/// the element.
double marginal_contribution(const SubsequenceScorer& model, const FeatureSequence& x,
                             int element, const SubsequenceIndex& sub, int class_index);

/// Definition-level attribution: for every element, sum the coalition-
/// weighted marginal contributions over every subsequence that excludes it.
/// Exponential on purpose; this is the ground truth the fast paths are
/// tested against, sharing nothing with them beyond the model interface.
std::vector<double> brute_force_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                                    int class_index,
                                    int exhaustive_limit = kDefaultExhaustiveLimit);

}  // namespace esv
