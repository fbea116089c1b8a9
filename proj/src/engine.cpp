#include "esv/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "esv/parallel.hpp"
#include "esv/random.hpp"

namespace esv {
namespace {

/// Kahan-compensated running sum; the per-scale means fold thousands of
/// near-cancelling terms, so plain accumulation would eat the 1e-9 budget.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

/// (element, scale, class)-indexed grid of compensated sums plus counts.
struct ScaleAccumulators {
  int n = 0, classes = 0;
  std::vector<KahanSum> sums;       // n * (n + 1) * classes
  std::vector<uint64_t> counts;     // n * (n + 1)

  ScaleAccumulators(int n_, int classes_)
      : n(n_), classes(classes_),
        sums(static_cast<size_t>(n_) * (n_ + 1) * classes_),
        counts(static_cast<size_t>(n_) * (n_ + 1), 0) {}

  KahanSum* row(int element, int scale) {
    return sums.data() + (static_cast<size_t>(element) * (n + 1) + scale) * classes;
  }
  const KahanSum* row(int element, int scale) const {
    return sums.data() + (static_cast<size_t>(element) * (n + 1) + scale) * classes;
  }
  uint64_t& count(int element, int scale) {
    return counts[static_cast<size_t>(element) * (n + 1) + scale];
  }
  uint64_t count(int element, int scale) const {
    return counts[static_cast<size_t>(element) * (n + 1) + scale];
  }
  void add(int element, int scale, std::span<const double> f) {
    KahanSum* r = row(element, scale);
    for (int c = 0; c < classes; ++c) r[c].add(f[c]);
    ++count(element, scale);
  }
};

std::vector<int> checked_classes(std::vector<int> classes, int total) {
  if (classes.empty()) throw ValidationError("at least one class index is required");
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  for (int c : classes)
    if (c < 0 || c >= total)
      throw ValidationError("class index " + std::to_string(c) + " out of range (model has " +
                            std::to_string(total) + " classes)");
  return classes;
}

void check_model_input(const SubsequenceScorer& model, const FeatureSequence& x) {
  if (x.dim() != model.feature_dim())
    throw ValidationError("feature dimension " + std::to_string(x.dim()) +
                          " does not match the model (" +
                          std::to_string(model.feature_dim()) + ")");
}

/// Folds per-scale containing/excluding means into attributions for the
/// requested classes. Scales whose containing or excluding side saw no
/// subsequence contribute nothing; with exhaustive or saturating pools every
/// side is populated.
AttributionResult combine_scale_means(const ScaleAccumulators& in, const ScaleAccumulators& ex,
                                      const ClassScores& prior,
                                      const std::vector<int>& classes) {
  int n = in.n;
  AttributionResult r;
  r.n = n;
  r.classes = classes;
  r.phi.assign(static_cast<size_t>(n) * classes.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (size_t slot = 0; slot < classes.size(); ++slot) {
      int c = classes[slot];
      KahanSum total;
      for (int s = 1; s <= n; ++s) {
        if (in.count(i, s) == 0) continue;
        double contain = in.row(i, s)[c].sum / static_cast<double>(in.count(i, s));
        double exclude;
        if (s == 1) {
          exclude = prior[c];
        } else {
          if (ex.count(i, s - 1) == 0) continue;
          exclude = ex.row(i, s - 1)[c].sum / static_cast<double>(ex.count(i, s - 1));
        }
        total.add(contain - exclude);
      }
      r.phi[static_cast<size_t>(i) * classes.size() + slot] = total.sum / n;
    }
  }
  return r;
}

}  // namespace

int AttributionResult::slot_of(int class_index) const {
  for (size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == class_index) return static_cast<int>(i);
  throw ValidationError("class " + std::to_string(class_index) + " not present in this result");
}

AttributionResult exact_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                            std::vector<int> classes, int exhaustive_limit) {
  check_model_input(model, x);
  classes = checked_classes(std::move(classes), model.num_classes());
  const int n = x.size();
  if (exhaustive_limit < 1 || exhaustive_limit > 62)
    throw ValidationError("exhaustive limit must be in [1, 62]");
  if (n > exhaustive_limit)
    throw CapacityError("exact attribution over " + std::to_string(n) +
                        " elements exceeds the exhaustive limit of " +
                        std::to_string(exhaustive_limit));
  const int all_classes = model.num_classes();
  const uint64_t calls_before = model.model_calls();
  const ClassScores& prior = model.empty_prior();

  SubsequenceScoreTable table = [&] {
    if (const auto* ms = dynamic_cast<const MultiScaleModel*>(&model))
      return multiscale_recurrent(*ms, x, exhaustive_limit);
    SubsequenceScoreTable t(n, all_classes);
    std::copy_n(prior.data(), all_classes, t.at_mask(0).data());
    const uint64_t total = uint64_t{1} << n;
    parallel_for(1, total, [&](size_t mask) {
      ClassScores f = model.score(x, SubsequenceIndex::from_mask(n, mask));
      std::copy_n(f.data(), all_classes, t.at_mask(mask).data());
    });
    return t;
  }();

  for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask)
    for (int c = 0; c < all_classes; ++c)
      if (!std::isfinite(table.at_mask(mask)[c]))
        throw ValidationError("model produced a non-finite score");

  ScaleAccumulators in(n, all_classes), ex(n, all_classes);
  for (uint64_t mask = 1; mask < (uint64_t{1} << n); ++mask) {
    int s = std::popcount(mask);
    auto f = table.at_mask(mask);
    for (int i = 0; i < n; ++i) {
      if ((mask >> i) & 1)
        in.add(i, s, f);
      else
        ex.add(i, s, f);
    }
  }

  AttributionResult r = combine_scale_means(in, ex, prior, classes);
  r.mode = AttributionMode::exact;
  r.evidential.resize(classes.size());
  auto full = table.at_mask((uint64_t{1} << n) - 1);
  for (size_t slot = 0; slot < classes.size(); ++slot)
    r.evidential[slot] = full[classes[slot]] - prior[classes[slot]];
  r.model_calls = model.model_calls() - calls_before;
  return r;
}

SamplePool initial_pool(const FeatureSequence& x, int m, uint64_t seed) {
  if (m < 1) throw ValidationError("sample budget m must be >= 1");
  SamplePool pool;
  pool.scale = 1;
  pool.m = m;
  pool.rng.seed(seed);
  pool.members.reserve(x.size());
  for (int i = 0; i < x.size(); ++i)
    pool.members.push_back(SubsequenceIndex::of(x.size(), {i}));
  return pool;
}

SamplePool grow_candidates(const SamplePool& pool, const FeatureSequence& x) {
  const int n = x.size();
  if (pool.members.empty()) throw ValidationError("cannot grow an empty pool");
  for (const auto& s : pool.members)
    if (s.universe() != n)
      throw ValidationError("pool members do not belong to this sequence");
  if (pool.scale >= n) throw ValidationError("pool already holds full-length subsequences");

  std::vector<SubsequenceIndex> cands;
  cands.reserve(pool.members.size() * static_cast<size_t>(n - pool.scale));
  for (const auto& member : pool.members)
    for (int e = 0; e < n; ++e)
      if (!member.contains(e)) cands.push_back(member.with(e));
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  SamplePool next;
  next.scale = pool.scale + 1;
  next.m = pool.m;
  next.rng = pool.rng;
  const size_t keep = std::min<size_t>(pool.m, cands.size());
  if (keep == cands.size()) {
    next.members = std::move(cands);
  } else {
    std::vector<size_t> chosen = sample_without_replacement(cands.size(), keep, next.rng);
    std::sort(chosen.begin(), chosen.end());
    next.members.reserve(keep);
    for (size_t idx : chosen) next.members.push_back(cands[idx]);
  }
  return next;
}

AttributionResult approx_esv(const SubsequenceScorer& model, const FeatureSequence& x,
                             std::vector<int> classes, const ApproxConfig& cfg) {
  check_model_input(model, x);
  classes = checked_classes(std::move(classes), model.num_classes());
  if (cfg.m < 1) throw ValidationError("sample budget m must be >= 1");
  if (cfg.iterations < 1) throw ValidationError("iterations must be >= 1");

  const int n = x.size();
  const int all_classes = model.num_classes();
  const ClassScores& prior = model.empty_prior();
  const auto* ms = dynamic_cast<const MultiScaleModel*>(&model);
  const int nmax = ms ? ms->max_scale() : 0;
  const uint64_t calls_before = model.model_calls();

  // Subsequences whose own forward pass already ran this run; only the
  // direct-evaluation path (variable-length models) reuses scores, which
  // keeps the call count within budget across iterations. Touched from the
  // serial sections only.
  std::unordered_map<SubsequenceIndex, ClassScores, SubsequenceIndexHash> cache;
  auto check_finite = [](const ClassScores& f) {
    for (double v : f)
      if (!std::isfinite(v)) throw ValidationError("model produced a non-finite score");
  };
  // Scores pool members directly (the variable-length variant), running the
  // uncached forward passes in parallel and folding them into the cache
  // serially afterwards.
  auto direct_scores = [&](const std::vector<SubsequenceIndex>& members,
                           std::vector<ClassScores>& out) {
    std::vector<size_t> misses;
    for (size_t j = 0; j < members.size(); ++j) {
      auto it = cache.find(members[j]);
      if (it != cache.end())
        out[j] = it->second;
      else
        misses.push_back(j);
    }
    std::vector<ClassScores> fresh(misses.size());
    parallel_for(0, misses.size(), [&](size_t k) {
      fresh[k] = model.score(x, members[misses[k]]);
    });
    for (size_t k = 0; k < misses.size(); ++k) {
      check_finite(fresh[k]);
      out[misses[k]] = fresh[k];
      cache.emplace(members[misses[k]], std::move(fresh[k]));
    }
  };

  SamplePool pool = initial_pool(x, cfg.m, cfg.seed);
  const std::vector<SubsequenceIndex> singles = pool.members;

  // Scale-1 scores never change; evaluate them once up front.
  std::vector<ClassScores> singles_f(singles.size());
  if (ms) {
    parallel_for(0, singles.size(), [&](size_t j) {
      singles_f[j] = ms->score_scale(1, x, singles[j]);
    });
    for (const auto& f : singles_f) check_finite(f);
  } else {
    direct_scores(singles, singles_f);
  }

  ScaleAccumulators in(n, all_classes), ex(n, all_classes);
  auto accumulate = [&](const SubsequenceIndex& sub, int s, const ClassScores& f) {
    for (int i = 0; i < n; ++i) {
      if (sub.contains(i))
        in.add(i, s, f);
      else
        ex.add(i, s, f);
    }
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    pool.scale = 1;
    pool.members = singles;
    std::vector<ClassScores> pool_f = singles_f;
    for (size_t j = 0; j < pool.members.size(); ++j)
      accumulate(pool.members[j], 1, pool_f[j]);

    for (int s = 2; s <= n; ++s) {
      SamplePool parents = std::move(pool);
      pool = grow_candidates(parents, x);
      std::vector<ClassScores> next_f(pool.members.size());
      std::vector<char> orphan(pool.members.size(), 0);

      if (!ms) {
        // Direct-evaluation variant: each sampled subsequence is scored by
        // the model itself; no parent combination is involved.
        direct_scores(pool.members, next_f);
      } else {
        parallel_for(0, pool.members.size(), [&](size_t j) {
          const SubsequenceIndex& child = pool.members[j];
          // Z_j-normalized mean over the sampled parents of this child.
          ClassScores parent_mean(all_classes, 0.0);
          int z = 0;
          for (int p : child.positions()) {
            SubsequenceIndex cand = child.without(p);
            auto it = std::lower_bound(parents.members.begin(), parents.members.end(), cand);
            if (it == parents.members.end() || !(*it == cand)) continue;
            const ClassScores& fp = pool_f[it - parents.members.begin()];
            for (int c = 0; c < all_classes; ++c) parent_mean[c] += fp[c];
            ++z;
          }
          if (z == 0) {
            // Unreachable when pools grow by one-element extension; kept as
            // a guard so a hand-built pool cannot divide by zero.
            orphan[j] = 1;
            next_f[j] = ClassScores(all_classes, 0.0);
            return;
          }
          for (int c = 0; c < all_classes; ++c) parent_mean[c] /= z;

          if (s <= nmax) {
            ClassScores f = ms->score_scale(s, x, child);
            for (int c = 0; c < all_classes; ++c)
              f[c] = (f[c] + (s - 1) * parent_mean[c]) / static_cast<double>(s);
            next_f[j] = std::move(f);
          } else {
            if (cfg.strict_alg1)
              for (int c = 0; c < all_classes; ++c)
                parent_mean[c] *= static_cast<double>(s - 1) / s;
            next_f[j] = std::move(parent_mean);
          }
        });
        for (size_t j = 0; j < pool.members.size(); ++j)
          if (!orphan[j]) check_finite(next_f[j]);
      }

      // Serial reduction in canonical member order keeps runs bit-identical
      // for any thread count.
      for (size_t j = 0; j < pool.members.size(); ++j) {
        if (orphan[j]) continue;
        accumulate(pool.members[j], s, next_f[j]);
      }
      pool_f = std::move(next_f);
    }
  }

  AttributionResult r = combine_scale_means(in, ex, prior, classes);
  r.mode = AttributionMode::approx;
  r.m = cfg.m;
  r.iterations = cfg.iterations;
  r.seed = cfg.seed;
  r.strict_alg1 = cfg.strict_alg1;
  // The top scale always holds the full sequence, so its running mean is the
  // evidential estimate (exact once m saturates).
  r.evidential.resize(classes.size());
  for (size_t slot = 0; slot < classes.size(); ++slot) {
    int c = classes[slot];
    double full_mean = in.row(0, n)[c].sum / static_cast<double>(in.count(0, n));
    r.evidential[slot] = full_mean - prior[c];
  }
  r.model_calls = model.model_calls() - calls_before;
  for (double v : r.phi)
    if (!std::isfinite(v)) throw ValidationError("attribution produced a non-finite value");
  return r;
}

std::vector<double> contrastive_esv(const AttributionResult& gt_run,
                                    const AttributionResult& pt_run, int gt, int pt) {
  if (gt_run.n != pt_run.n || gt_run.mode != pt_run.mode ||
      gt_run.m != pt_run.m || gt_run.iterations != pt_run.iterations ||
      gt_run.seed != pt_run.seed || gt_run.strict_alg1 != pt_run.strict_alg1)
    throw ValidationError("contrastive attribution needs runs with matching provenance");
  int gs = gt_run.slot_of(gt);
  int ps = pt_run.slot_of(pt);
  std::vector<double> delta(gt_run.n);
  for (int i = 0; i < gt_run.n; ++i) delta[i] = gt_run.phi_at(i, gs) - pt_run.phi_at(i, ps);
  return delta;
}

std::vector<ElementRole> classify_elements(const AttributionResult& r, int class_index) {
  int slot = r.slot_of(class_index);
  std::vector<ElementRole> roles(r.n);
  for (int i = 0; i < r.n; ++i)
    roles[i] = r.phi_at(i, slot) > 0.0 ? ElementRole::supporting : ElementRole::distracting;
  return roles;
}

}  // namespace esv
