#include "esv/ablation.hpp"

#include <algorithm>
#include <limits>

#include "esv/random.hpp"

namespace esv {
namespace {

std::vector<int> ranked_by_phi(const AttributionResult& esv, int class_index, bool descending) {
  int slot = esv.slot_of(class_index);
  std::vector<int> order(esv.n);
  for (int i = 0; i < esv.n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    double pa = esv.phi_at(a, slot), pb = esv.phi_at(b, slot);
    return descending ? pa > pb : pa < pb;
  });
  return order;
}

std::vector<int> center_out_order(int n) {
  std::vector<int> order;
  order.reserve(n);
  int mid = (n - 1) / 2;
  order.push_back(mid);
  for (int step = 1; static_cast<int>(order.size()) < n; ++step) {
    if (mid + step < n) order.push_back(mid + step);
    if (static_cast<int>(order.size()) < n && mid - step >= 0) order.push_back(mid - step);
  }
  return order;
}

std::vector<int> edges_in_order(int n) {
  std::vector<int> order;
  order.reserve(n);
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    order.push_back(lo++);
    order.push_back(hi--);
  }
  if (lo == hi) order.push_back(lo);
  return order;
}

/// Greedy spread: at every step drop the survivor whose removal maximizes
/// the smallest gap between consecutive surviving positions (one survivor
/// left counts as an infinite gap), ties to the lowest index. From a fully
/// contiguous sequence the early steps all tie, so removal starts at the
/// front until gaps open up.
std::vector<int> uniform_order(int n) {
  std::vector<int> survivors(n);
  for (int i = 0; i < n; ++i) survivors[i] = i;
  std::vector<int> order;
  order.reserve(n);
  while (survivors.size() > 1) {
    double best_gap = -1.0;
    size_t best_idx = 0;
    for (size_t cand = 0; cand < survivors.size(); ++cand) {
      double min_gap = std::numeric_limits<double>::infinity();
      int prev = -1;
      for (size_t j = 0; j < survivors.size(); ++j) {
        if (j == cand) continue;
        if (prev >= 0) min_gap = std::min(min_gap, double(survivors[j] - prev));
        prev = survivors[j];
      }
      if (min_gap > best_gap) {
        best_gap = min_gap;
        best_idx = cand;
      }
    }
    order.push_back(survivors[best_idx]);
    survivors.erase(survivors.begin() + best_idx);
  }
  order.push_back(survivors[0]);
  return order;
}

std::vector<int> random_order(int n, uint64_t seed) {
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  deterministic_shuffle(order, rng);
  return order;
}

}  // namespace

std::optional<AblationOrder> ablation_order_from_name(const std::string& name) {
  if (name == "esv-descending") return AblationOrder::esv_descending;
  if (name == "esv-ascending") return AblationOrder::esv_ascending;
  if (name == "center-out") return AblationOrder::center_out;
  if (name == "edges-in") return AblationOrder::edges_in;
  if (name == "uniform") return AblationOrder::uniform;
  if (name == "random") return AblationOrder::random_order;
  return std::nullopt;
}

const char* ablation_order_name(AblationOrder order) {
  switch (order) {
    case AblationOrder::esv_descending: return "esv-descending";
    case AblationOrder::esv_ascending: return "esv-ascending";
    case AblationOrder::center_out: return "center-out";
    case AblationOrder::edges_in: return "edges-in";
    case AblationOrder::uniform: return "uniform";
    case AblationOrder::random_order: return "random";
  }
  return "?";
}

std::vector<int> removal_permutation(AblationOrder order, int n, const AttributionResult* esv,
                                     int class_index, uint64_t seed) {
  if (n < 1) throw ValidationError("ablation needs at least one element");
  switch (order) {
    case AblationOrder::esv_descending:
    case AblationOrder::esv_ascending: {
      if (!esv) throw ValidationError("attribution-ranked ablation needs a result");
      if (esv->n != n) throw ValidationError("attribution result does not match the sequence");
      return ranked_by_phi(*esv, class_index, order == AblationOrder::esv_descending);
    }
    case AblationOrder::center_out: return center_out_order(n);
    case AblationOrder::edges_in: return edges_in_order(n);
    case AblationOrder::uniform: return uniform_order(n);
    case AblationOrder::random_order: return random_order(n, seed);
  }
  throw ValidationError("unknown ablation order");
}

AblationCurve ablate_by_rank(const SubsequenceScorer& model, const FeatureSequence& x,
                             AblationOrder order, const AttributionResult* esv,
                             int class_index, int label, uint64_t seed) {
  if (class_index < 0 || class_index >= model.num_classes())
    throw ValidationError("class index out of range");
  if (label < 0 || label >= model.num_classes())
    throw ValidationError("label out of range");
  const int n = x.size();

  AblationCurve curve;
  curve.order = order;
  curve.removal_order = removal_permutation(order, n, esv, class_index, seed);

  SubsequenceIndex alive = SubsequenceIndex::full(n);
  curve.points.reserve(n);
  for (int step = 0; step < n; ++step) {
    if (step > 0) alive = alive.without(curve.removal_order[step - 1]);
    ClassScores f = evaluate(model, x, alive);
    int argmax = 0;
    for (int c = 1; c < model.num_classes(); ++c)
      if (f[c] > f[argmax]) argmax = c;
    curve.points.push_back({n - step, f[class_index], argmax == label});
  }
  return curve;
}

}  // namespace esv
