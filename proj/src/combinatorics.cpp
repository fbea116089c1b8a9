#include "esv/combinatorics.hpp"

#include <numeric>

namespace esv {

double binomial(int n, int k) {
  if (n < 0 || k < 0) throw ValidationError("binomial arguments out of range");
  if (k > n) return 0.0;
  if (k > n - k) k = n - k;
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

double shapley_weight(int n, int s) {
  if (n < 1) throw ValidationError("shapley_weight needs at least one element");
  if (n > kMaxWeightElements)
    throw CapacityError("shapley_weight supports at most 64 elements");
  if (s < 0 || s >= n) throw ValidationError("subsequence size must be in [0, n)");
  // (n-s-1)! s! / n! == 1 / (n * C(n-1, s)); build C(n-1, s) from ratios.
  double w = 1.0 / n;
  for (int j = 1; j <= s; ++j) w = w * j / (n - 1 - s + j);
  return w;
}

void enumerate_subsequences(int n, int s, std::optional<int> excluding,
                            const std::function<bool(const SubsequenceIndex&)>& visit) {
  if (n < 1) throw ValidationError("enumeration needs at least one element");
  if (excluding && (*excluding < 0 || *excluding >= n))
    throw ValidationError("excluded position out of range");
  int avail = excluding ? n - 1 : n;
  if (s < 0 || s > avail) throw ValidationError("subsequence size out of range");

  // Positions available for selection, ascending, with the exclusion removed.
  std::vector<int> slots;
  slots.reserve(avail);
  for (int i = 0; i < n; ++i)
    if (!excluding || i != *excluding) slots.push_back(i);

  if (s == 0) {
    visit(SubsequenceIndex::empty(n));
    return;
  }

  std::vector<int> pick(s);
  std::iota(pick.begin(), pick.end(), 0);
  std::vector<int> positions(s);
  for (;;) {
    for (int j = 0; j < s; ++j) positions[j] = slots[pick[j]];
    if (!visit(SubsequenceIndex::of(n, positions))) return;
    int j = s - 1;
    while (j >= 0 && pick[j] == avail - s + j) --j;
    if (j < 0) return;
    ++pick[j];
    for (int k = j + 1; k < s; ++k) pick[k] = pick[k - 1] + 1;
  }
}

}  // namespace esv
