#include "esv/oracle.hpp"

#include <bit>

namespace esv {

double marginal_contribution(const SubsequenceScorer& model, const FeatureSequence& x,
                             int element, const SubsequenceIndex& sub, int class_index) {
  if (element < 0 || element >= x.size())
    throw ValidationError("element index out of range");
  if (sub.contains(element))
    throw ValidationError("marginal contribution needs a subsequence excluding the element");
  if (class_index < 0 || class_index >= model.num_classes())
    throw ValidationError("class index out of range");
  ClassScores with = evaluate(model, x, sub.with(element));
  ClassScores without = evaluate(model, x, sub);
  return with[class_index] - without[class_index];
}

std::vector<double> brute_force_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                                    int class_index, int exhaustive_limit) {
  const int n = x.size();
  if (class_index < 0 || class_index >= model.num_classes())
    throw ValidationError("class index out of range");
  if (n > exhaustive_limit || n > 62)
    throw CapacityError("brute force over " + std::to_string(n) +
                        " elements exceeds the exhaustive limit of " +
                        std::to_string(exhaustive_limit));

  // Memoize one score per subsequence; every marginal pair reads from here.
  const uint64_t total = uint64_t{1} << n;
  std::vector<double> score(total);
  for (uint64_t mask = 0; mask < total; ++mask)
    score[mask] = evaluate(model, x, SubsequenceIndex::from_mask(n, mask))[class_index];

  std::vector<double> phi(n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (uint64_t mask = 0; mask < total; ++mask) {
      if ((mask >> i) & 1) continue;
      double w = shapley_weight(n, std::popcount(mask));
      phi[i] += w * (score[mask | (uint64_t{1} << i)] - score[mask]);
    }
  }
  return phi;
}

}  // namespace esv
