#pragma once

#include "esv/scorer.hpp"

namespace esv {

/// One-hidden-layer perceptron with a ReLU nonlinearity, weights row-major.
struct Mlp {
  int in = 0;
  int hidden = 0;
  int out = 0;
  std::vector<double> w1;  // hidden x in
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // out x hidden
  std::vector<double> b2;  // out

  void validate(const std::string& where) const;
  void forward(const double* x, double* y) const;
};

/// Maps raw scores to a distribution; used when a model declares the
/// normalize flag.
void softmax_inplace(ClassScores& s);

/// f(Xp) = prior + sum over selected elements of W x_i. Attributions for this
/// model have a closed form (the per-element class scores), which makes it
/// the sharpest oracle fixture.
class LinearAdditiveModel final : public SubsequenceScorer {
 public:
  LinearAdditiveModel(int classes, int dim, std::vector<double> weight, ClassScores prior,
                      bool normalize = false);

  int num_classes() const override { return classes_; }
  int feature_dim() const override { return dim_; }
  const ClassScores& empty_prior() const override { return prior_; }
  bool accepts_variable_length() const override { return true; }
  ClassScores score(const FeatureSequence& x, const SubsequenceIndex& sub) const override;

  /// Exact per-element attribution target: phi[i][c] = (W x_i)_c.
  std::vector<double> element_scores(const FeatureSequence& x) const;

 private:
  int classes_, dim_;
  std::vector<double> weight_;  // classes x dim
  ClassScores prior_;
  bool normalize_;
};

/// Mean-pools the selected feature rows and scores the pooled vector with an
/// MLP; invariant to how many and which positions were selected beyond the
/// pooled value itself.
class MeanPoolMlpModel final : public SubsequenceScorer {
 public:
  MeanPoolMlpModel(int classes, int dim, Mlp mlp, ClassScores prior, bool normalize = false);

  int num_classes() const override { return classes_; }
  int feature_dim() const override { return dim_; }
  const ClassScores& empty_prior() const override { return prior_; }
  bool accepts_variable_length() const override { return true; }
  ClassScores score(const FeatureSequence& x, const SubsequenceIndex& sub) const override;

 private:
  int classes_, dim_;
  Mlp mlp_;
  ClassScores prior_;
  bool normalize_;
};

/// Sums a pair MLP over ordered element pairs plus a unary MLP per element,
/// so the score is order-aware through pair concatenation.
class PairwiseRelationalModel final : public SubsequenceScorer {
 public:
  PairwiseRelationalModel(int classes, int dim, Mlp unary, Mlp pair, ClassScores prior,
                          bool normalize = false);

  int num_classes() const override { return classes_; }
  int feature_dim() const override { return dim_; }
  const ClassScores& empty_prior() const override { return prior_; }
  bool accepts_variable_length() const override { return true; }
  ClassScores score(const FeatureSequence& x, const SubsequenceIndex& sub) const override;

 private:
  int classes_, dim_;
  Mlp unary_, pair_;
  ClassScores prior_;
  bool normalize_;
};

}  // namespace esv
