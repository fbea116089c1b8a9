#pragma once

#include "esv/combinatorics.hpp"
#include "esv/models.hpp"

namespace esv {

/// Aggregate over a family of fixed-scale models f^1..f^nmax: the score of a
/// subsequence is the expectation, over a uniformly drawn scale s and a
/// uniformly drawn size-s sub-subsequence, of the fixed-scale score. Each f^s
/// is an MLP over the s selected feature rows concatenated in order.
class MultiScaleModel final : public SubsequenceScorer {
 public:
  MultiScaleModel(int classes, int dim, std::vector<Mlp> scales, ClassScores prior,
                  bool normalize = false);

  int num_classes() const override { return classes_; }
  int feature_dim() const override { return dim_; }
  const ClassScores& empty_prior() const override { return prior_; }
  bool accepts_variable_length() const override { return false; }
  /// Definition-level score; cost grows with 2^|sub|. Use the recurrent
  /// evaluation for whole-sequence work.
  ClassScores score(const FeatureSequence& x, const SubsequenceIndex& sub) const override;

  int max_scale() const noexcept { return static_cast<int>(scales_.size()); }
  /// Runs f^s on a subsequence of exactly s elements.
  ClassScores score_scale(int s, const FeatureSequence& x, const SubsequenceIndex& sub) const;

 private:
  int classes_, dim_;
  std::vector<Mlp> scales_;
  ClassScores prior_;
  bool normalize_;
};

/// Dense score table over every subsequence of an n-element sequence,
/// indexed by position bitmask; slot 0 holds the empty prior.
class SubsequenceScoreTable {
 public:
  SubsequenceScoreTable(int n, int classes);

  int n() const noexcept { return n_; }
  int num_classes() const noexcept { return classes_; }
  std::span<double> at_mask(uint64_t mask) {
    return {scores_.data() + mask * classes_, static_cast<size_t>(classes_)};
  }
  std::span<const double> at_mask(uint64_t mask) const {
    return {scores_.data() + mask * classes_, static_cast<size_t>(classes_)};
  }
  std::span<const double> at(const SubsequenceIndex& sub) const { return at_mask(sub.mask64()); }

 private:
  int n_, classes_;
  std::vector<double> scores_;
};

/// Expectation form evaluated literally: enumerate every sub-subsequence at
/// every admissible scale. Exponential in |sub|; it exists as the slow
/// independent reference for the recurrence.
ClassScores multiscale_direct(const MultiScaleModel& model, const FeatureSequence& x,
                              const SubsequenceIndex& sub);

/// Bottom-up evaluation over all 2^n - 1 nonempty subsequences: seed with
/// the scale-1 scores, then combine each subsequence's own fixed-scale score
/// (while one exists) with the mean over its one-element-removed children.
/// Each fixed-scale model runs at most once per subsequence.
SubsequenceScoreTable multiscale_recurrent(const MultiScaleModel& model,
                                           const FeatureSequence& x,
                                           int exhaustive_limit = kDefaultExhaustiveLimit);

}  // namespace esv
