#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "esv/error.hpp"

namespace esv {

/// Immutable n x D feature matrix, one row per sequence element. Row order is
/// the temporal order of the source sequence; element indices are 0-based.
class FeatureSequence {
 public:
  FeatureSequence(int n, int dim, std::vector<double> data,
                  std::vector<double> timestamps = {});

  int size() const noexcept { return n_; }
  int dim() const noexcept { return dim_; }
  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<size_t>(i) * dim_, static_cast<size_t>(dim_)};
  }
  std::span<const double> data() const noexcept { return data_; }
  bool has_timestamps() const noexcept { return !timestamps_.empty(); }
  std::span<const double> timestamps() const noexcept { return timestamps_; }

 private:
  int n_ = 0;
  int dim_ = 0;
  std::vector<double> data_;
  std::vector<double> timestamps_;
};

/// Order-preserving subsequence of an n-element sequence, stored as a bitset
/// over original positions. One 64-bit word covers n <= 64; longer sequences
/// spill into further words. Selected positions are always recoverable in
/// strictly increasing order.
class SubsequenceIndex {
 public:
  SubsequenceIndex() = default;

  static SubsequenceIndex empty(int universe);
  static SubsequenceIndex full(int universe);
  static SubsequenceIndex of(int universe, std::span<const int> positions);
  static SubsequenceIndex of(int universe, std::initializer_list<int> positions);
  /// n <= 64 fast path; bit i of `mask` selects position i.
  static SubsequenceIndex from_mask(int universe, uint64_t mask);

  int universe() const noexcept { return universe_; }
  int size() const noexcept;
  bool is_empty() const noexcept { return size() == 0; }
  bool contains(int pos) const;
  SubsequenceIndex with(int pos) const;
  SubsequenceIndex without(int pos) const;
  std::vector<int> positions() const;
  uint64_t mask64() const;

  bool operator==(const SubsequenceIndex& o) const noexcept {
    return universe_ == o.universe_ && words_ == o.words_;
  }
  /// Lexicographic order over the increasing position lists, so {0,3} sorts
  /// before {1,2} and a proper prefix sorts before its extensions.
  bool operator<(const SubsequenceIndex& o) const;

  size_t hash() const noexcept;

 private:
  explicit SubsequenceIndex(int universe);
  void check_pos(int pos) const;

  int universe_ = 0;
  std::vector<uint64_t> words_;
};

struct SubsequenceIndexHash {
  size_t operator()(const SubsequenceIndex& s) const noexcept { return s.hash(); }
};

}  // namespace esv
