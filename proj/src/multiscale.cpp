#include "esv/multiscale.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "esv/parallel.hpp"

namespace esv {

MultiScaleModel::MultiScaleModel(int classes, int dim, std::vector<Mlp> scales,
                                 ClassScores prior, bool normalize)
    : classes_(classes), dim_(dim), scales_(std::move(scales)), prior_(std::move(prior)),
      normalize_(normalize) {
  if (classes_ < 1 || dim_ < 1) throw ValidationError("model dimensions must be positive");
  if (scales_.empty()) throw ValidationError("multi-scale model needs at least scale 1");
  if (static_cast<int>(prior_.size()) != classes_)
    throw ValidationError("empty prior length does not match the class count");
  for (size_t s = 0; s < scales_.size(); ++s) {
    std::string where = "scale" + std::to_string(s + 1);
    scales_[s].validate(where);
    if (scales_[s].in != static_cast<int>(s + 1) * dim_)
      throw ValidationError(where + ": input width must be s*feature_dim");
    if (scales_[s].out != classes_)
      throw ValidationError(where + ": output width must match classes");
  }
}

ClassScores MultiScaleModel::score_scale(int s, const FeatureSequence& x,
                                         const SubsequenceIndex& sub) const {
  if (s < 1 || s > max_scale())
    throw ValidationError("no fixed-scale model for scale " + std::to_string(s));
  if (sub.size() != s)
    throw ValidationError("fixed-scale model fed a subsequence of the wrong length");
  count_call();
  thread_local std::vector<double> concat;
  concat.resize(static_cast<size_t>(s) * dim_);
  double* dst = concat.data();
  for (int i : sub.positions()) {
    std::copy_n(x.row(i).data(), dim_, dst);
    dst += dim_;
  }
  ClassScores out(classes_);
  scales_[s - 1].forward(concat.data(), out.data());
  if (normalize_) softmax_inplace(out);
  return out;
}

ClassScores MultiScaleModel::score(const FeatureSequence& x,
                                   const SubsequenceIndex& sub) const {
  return multiscale_direct(*this, x, sub);
}

ClassScores multiscale_direct(const MultiScaleModel& model, const FeatureSequence& x,
                              const SubsequenceIndex& sub) {
  int size = sub.size();
  if (size < 1) throw ValidationError("direct evaluation needs a nonempty subsequence");
  int classes = model.num_classes();
  int top = std::min(size, model.max_scale());
  auto picked = sub.positions();
  ClassScores out(classes, 0.0);
  for (int s = 1; s <= top; ++s) {
    ClassScores scale_mean(classes, 0.0);
    double count = 0.0;
    enumerate_subsequences(size, s, std::nullopt, [&](const SubsequenceIndex& inner) {
      std::vector<int> mapped;
      mapped.reserve(s);
      for (int j : inner.positions()) mapped.push_back(picked[j]);
      ClassScores f = model.score_scale(s, x, SubsequenceIndex::of(sub.universe(), mapped));
      for (int c = 0; c < classes; ++c) scale_mean[c] += f[c];
      count += 1.0;
      return true;
    });
    for (int c = 0; c < classes; ++c) out[c] += scale_mean[c] / count;
  }
  for (int c = 0; c < classes; ++c) out[c] /= static_cast<double>(top);
  return out;
}

SubsequenceScoreTable::SubsequenceScoreTable(int n, int classes)
    : n_(n), classes_(classes),
      scores_((size_t{1} << n) * static_cast<size_t>(classes), 0.0) {
  if (n < 1 || n > 62) throw CapacityError("score table limited to 62 elements");
}

SubsequenceScoreTable multiscale_recurrent(const MultiScaleModel& model,
                                           const FeatureSequence& x, int exhaustive_limit) {
  int n = x.size();
  if (n > exhaustive_limit)
    throw CapacityError("recurrent evaluation over " + std::to_string(n) +
                        " elements exceeds the exhaustive limit of " +
                        std::to_string(exhaustive_limit));
  int classes = model.num_classes();
  int nmax = model.max_scale();
  SubsequenceScoreTable table(n, classes);
  std::copy_n(model.empty_prior().data(), classes, table.at_mask(0).data());

  // Masks grouped by population count so every child is final before its
  // parents combine it.
  std::vector<std::vector<uint64_t>> by_size(n + 1);
  for (uint64_t mask = 1; mask < (uint64_t{1} << n); ++mask)
    by_size[std::popcount(mask)].push_back(mask);

  for (int s = 1; s <= n; ++s) {
    const auto& masks = by_size[s];
    parallel_for(0, masks.size(), [&](size_t idx) {
      uint64_t mask = masks[idx];
      auto slot = table.at_mask(mask);
      if (s == 1) {
        ClassScores f = model.score_scale(1, x, SubsequenceIndex::from_mask(n, mask));
        std::copy_n(f.data(), classes, slot.data());
        return;
      }
      ClassScores child_mean(classes, 0.0);
      uint64_t bits = mask;
      while (bits) {
        uint64_t low = bits & (~bits + 1);
        auto child = table.at_mask(mask ^ low);
        for (int c = 0; c < classes; ++c) child_mean[c] += child[c];
        bits ^= low;
      }
      for (int c = 0; c < classes; ++c) child_mean[c] /= static_cast<double>(s);
      if (s <= nmax) {
        ClassScores f = model.score_scale(s, x, SubsequenceIndex::from_mask(n, mask));
        for (int c = 0; c < classes; ++c)
          slot[c] = (f[c] + (s - 1) * child_mean[c]) / static_cast<double>(s);
      } else {
        // Scales past the deepest fixed-scale model reduce to the plain mean
        // over children; no leading factor.
        std::copy_n(child_mean.data(), classes, slot.data());
      }
    });
  }
  return table;
}

}  // namespace esv
