#pragma once

#include <functional>
#include <optional>

#include "esv/sequence.hpp"

namespace esv {

inline constexpr int kMaxWeightElements = 64;
inline constexpr int kDefaultExhaustiveLimit = 16;

/// Binomial coefficient as a double (exact for every value used below).
double binomial(int n, int k);

/// Coalition weight (n-s-1)! s! / n! for a subsequence of size s drawn from
/// n elements, computed as an incremental product of ratios so no factorial
/// is ever materialized. Valid for 1 <= n <= 64, 0 <= s < n.
double shapley_weight(int n, int s);

/// Streams every size-s subsequence of an n-element sequence in lexicographic
/// order of the increasing position lists, e.g. (n=3, s=2) yields {0,1},
/// {0,2}, {1,2}. When `excluding` is set, subsequences touching that position
/// are skipped. The visitor may return false to stop early.
void enumerate_subsequences(int n, int s, std::optional<int> excluding,
                            const std::function<bool(const SubsequenceIndex&)>& visit);

}  // namespace esv
