#include "esv/sequence.hpp"

#include <bit>
#include <cmath>

namespace esv {

FeatureSequence::FeatureSequence(int n, int dim, std::vector<double> data,
                                 std::vector<double> timestamps)
    : n_(n), dim_(dim), data_(std::move(data)), timestamps_(std::move(timestamps)) {
  if (n_ < 1) throw ValidationError("feature sequence needs at least one element");
  if (dim_ < 1) throw ValidationError("feature dimension must be positive");
  if (data_.size() != static_cast<size_t>(n_) * dim_)
    throw ValidationError("feature data length does not match n*D");
  for (double v : data_)
    if (!std::isfinite(v)) throw ValidationError("feature data contains a non-finite value");
  if (!timestamps_.empty() && timestamps_.size() != static_cast<size_t>(n_))
    throw ValidationError("timestamp count does not match n");
}

SubsequenceIndex::SubsequenceIndex(int universe) : universe_(universe) {
  if (universe < 1) throw ValidationError("subsequence universe must be positive");
  words_.assign((static_cast<size_t>(universe) + 63) / 64, 0);
}

SubsequenceIndex SubsequenceIndex::empty(int universe) { return SubsequenceIndex(universe); }

SubsequenceIndex SubsequenceIndex::full(int universe) {
  SubsequenceIndex s(universe);
  for (int i = 0; i < universe; ++i) s.words_[i / 64] |= uint64_t{1} << (i % 64);
  return s;
}

SubsequenceIndex SubsequenceIndex::of(int universe, std::span<const int> positions) {
  SubsequenceIndex s(universe);
  for (int p : positions) {
    s.check_pos(p);
    s.words_[p / 64] |= uint64_t{1} << (p % 64);
  }
  return s;
}

SubsequenceIndex SubsequenceIndex::of(int universe, std::initializer_list<int> positions) {
  return of(universe, std::span<const int>(positions.begin(), positions.size()));
}

SubsequenceIndex SubsequenceIndex::from_mask(int universe, uint64_t mask) {
  if (universe > 64) throw ValidationError("mask constructor limited to 64 positions");
  SubsequenceIndex s(universe);
  if (universe < 64 && (mask >> universe) != 0)
    throw ValidationError("mask selects positions outside the universe");
  s.words_[0] = mask;
  return s;
}

void SubsequenceIndex::check_pos(int pos) const {
  if (pos < 0 || pos >= universe_)
    throw ValidationError("subsequence position out of range");
}

int SubsequenceIndex::size() const noexcept {
  int c = 0;
  for (uint64_t w : words_) c += std::popcount(w);
  return c;
}

bool SubsequenceIndex::contains(int pos) const {
  check_pos(pos);
  return (words_[pos / 64] >> (pos % 64)) & 1;
}

SubsequenceIndex SubsequenceIndex::with(int pos) const {
  check_pos(pos);
  SubsequenceIndex s = *this;
  s.words_[pos / 64] |= uint64_t{1} << (pos % 64);
  return s;
}

SubsequenceIndex SubsequenceIndex::without(int pos) const {
  check_pos(pos);
  SubsequenceIndex s = *this;
  s.words_[pos / 64] &= ~(uint64_t{1} << (pos % 64));
  return s;
}

std::vector<int> SubsequenceIndex::positions() const {
  std::vector<int> out;
  out.reserve(size());
  for (size_t w = 0; w < words_.size(); ++w) {
    uint64_t bits = words_[w];
    while (bits) {
      int b = std::countr_zero(bits);
      out.push_back(static_cast<int>(w * 64 + b));
      bits &= bits - 1;
    }
  }
  return out;
}

uint64_t SubsequenceIndex::mask64() const {
  if (universe_ > 64) throw ValidationError("mask64 limited to 64 positions");
  return words_.empty() ? 0 : words_[0];
}

bool SubsequenceIndex::operator<(const SubsequenceIndex& o) const {
  if (universe_ != o.universe_)
    throw ValidationError("cannot order subsequences from different universes");
  // First differing bit d: bits below d agree, so whichever side still has
  // positions >= d decides. Both nonempty there: the owner of d sorts first;
  // one empty there: it is a proper prefix and sorts first.
  for (size_t w = 0; w < words_.size(); ++w) {
    uint64_t diff = words_[w] ^ o.words_[w];
    if (!diff) continue;
    uint64_t low = diff & (~diff + 1);
    uint64_t mine = words_[w] & ~(low - 1);
    uint64_t theirs = o.words_[w] & ~(low - 1);
    for (size_t v = w + 1; v < words_.size(); ++v) {
      mine |= words_[v];
      theirs |= o.words_[v];
    }
    if (mine == 0) return true;
    if (theirs == 0) return false;
    return (words_[w] & low) != 0;
  }
  return false;
}

size_t SubsequenceIndex::hash() const noexcept {
  uint64_t h = 1469598103934665603ull ^ static_cast<uint64_t>(universe_);
  for (uint64_t w : words_) {
    h ^= w;
    h *= 1099511628211ull;
  }
  return static_cast<size_t>(h);
}

}  // namespace esv
