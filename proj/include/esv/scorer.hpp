#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <vector>

#include "esv/sequence.hpp"

namespace esv {

/// Raw per-class scores for one subsequence.
using ClassScores = std::vector<double>;

/// A model that scores order-preserving subsequences of a feature sequence.
/// Implementations are immutable after construction except for the shared
/// call counter, so one instance may be scored from many threads.
class SubsequenceScorer {
 public:
  virtual ~SubsequenceScorer() = default;

  virtual int num_classes() const = 0;
  virtual int feature_dim() const = 0;
  /// Declared belief for the empty subsequence; never produced by a model
  /// forward pass.
  virtual const ClassScores& empty_prior() const = 0;
  /// True when the model consumes any nonempty subsequence directly. False
  /// marks the fixed-scale family behind the multi-scale aggregate.
  virtual bool accepts_variable_length() const = 0;
  /// Scores a nonempty subsequence. Implementations bump the call counter
  /// once per underlying model invocation.
  virtual ClassScores score(const FeatureSequence& x, const SubsequenceIndex& sub) const = 0;

  uint64_t model_calls() const noexcept { return calls_->load(std::memory_order_relaxed); }
  void reset_model_calls() const noexcept { calls_->store(0, std::memory_order_relaxed); }

 protected:
  SubsequenceScorer() : calls_(std::make_shared<std::atomic<uint64_t>>(0)) {}
  void count_call() const noexcept { calls_->fetch_add(1, std::memory_order_relaxed); }
  void share_counter_with(const SubsequenceScorer& parent) { calls_ = parent.calls_; }

 private:
  std::shared_ptr<std::atomic<uint64_t>> calls_;
};

/// Single entry point for scoring: empty subsequences resolve to the declared
/// prior without touching the model, everything else runs a forward pass.
/// Scores are checked finite before they are returned.
ClassScores evaluate(const SubsequenceScorer& model, const FeatureSequence& x,
                     const SubsequenceIndex& sub);

}  // namespace esv
