#include "esv/scorer.hpp"

#include <cmath>

namespace esv {

ClassScores evaluate(const SubsequenceScorer& model, const FeatureSequence& x,
                     const SubsequenceIndex& sub) {
  if (sub.universe() != x.size())
    throw ValidationError("subsequence universe does not match the feature sequence");
  if (x.dim() != model.feature_dim())
    throw ValidationError("feature dimension does not match the model");
  if (sub.is_empty()) return model.empty_prior();
  ClassScores s = model.score(x, sub);
  for (double v : s)
    if (!std::isfinite(v)) throw ValidationError("model produced a non-finite score");
  return s;
}

}  // namespace esv
