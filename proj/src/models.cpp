#include "esv/models.hpp"

#include <algorithm>
#include <cmath>

#include "esv/kernels.hpp"

namespace esv {
namespace {

void check_prior(const ClassScores& prior, int classes) {
  if (static_cast<int>(prior.size()) != classes)
    throw ValidationError("empty prior length does not match the class count");
  for (double v : prior)
    if (!std::isfinite(v)) throw ValidationError("empty prior contains a non-finite value");
}

thread_local std::vector<double> tls_scratch;

}  // namespace

void Mlp::validate(const std::string& where) const {
  if (in < 1 || hidden < 1 || out < 1)
    throw ValidationError(where + ": layer sizes must be positive");
  auto need = [&](const std::vector<double>& v, size_t n, const char* name) {
    if (v.size() != n) throw ValidationError(where + "." + name + ": unexpected length");
    for (double x : v)
      if (!std::isfinite(x))
        throw ValidationError(where + "." + name + ": non-finite parameter");
  };
  need(w1, static_cast<size_t>(hidden) * in, "hidden.weight");
  need(b1, static_cast<size_t>(hidden), "hidden.bias");
  need(w2, static_cast<size_t>(out) * hidden, "output.weight");
  need(b2, static_cast<size_t>(out), "output.bias");
}

void Mlp::forward(const double* x, double* y) const {
  thread_local std::vector<double> h;
  h.resize(hidden);
  kern::gemv(w1.data(), hidden, in, x, b1.data(), h.data());
  kern::relu(h.data(), hidden);
  kern::gemv(w2.data(), out, hidden, h.data(), b2.data(), y);
}

void softmax_inplace(ClassScores& s) {
  double mx = *std::max_element(s.begin(), s.end());
  double sum = 0.0;
  for (double& v : s) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : s) v /= sum;
}

LinearAdditiveModel::LinearAdditiveModel(int classes, int dim, std::vector<double> weight,
                                         ClassScores prior, bool normalize)
    : classes_(classes), dim_(dim), weight_(std::move(weight)), prior_(std::move(prior)),
      normalize_(normalize) {
  if (classes_ < 1 || dim_ < 1) throw ValidationError("model dimensions must be positive");
  if (weight_.size() != static_cast<size_t>(classes_) * dim_)
    throw ValidationError("element.weight: unexpected length");
  check_prior(prior_, classes_);
}

ClassScores LinearAdditiveModel::score(const FeatureSequence& x,
                                       const SubsequenceIndex& sub) const {
  count_call();
  ClassScores out = prior_;
  for (int i : sub.positions())
    for (int c = 0; c < classes_; ++c)
      out[c] += kern::dot(weight_.data() + static_cast<size_t>(c) * dim_, x.row(i).data(),
                          dim_);
  if (normalize_) softmax_inplace(out);
  return out;
}

std::vector<double> LinearAdditiveModel::element_scores(const FeatureSequence& x) const {
  std::vector<double> u(static_cast<size_t>(x.size()) * classes_);
  for (int i = 0; i < x.size(); ++i)
    for (int c = 0; c < classes_; ++c)
      u[static_cast<size_t>(i) * classes_ + c] =
          kern::dot(weight_.data() + static_cast<size_t>(c) * dim_, x.row(i).data(), dim_);
  return u;
}

MeanPoolMlpModel::MeanPoolMlpModel(int classes, int dim, Mlp mlp, ClassScores prior,
                                   bool normalize)
    : classes_(classes), dim_(dim), mlp_(std::move(mlp)), prior_(std::move(prior)),
      normalize_(normalize) {
  if (classes_ < 1 || dim_ < 1) throw ValidationError("model dimensions must be positive");
  mlp_.validate("mlp");
  if (mlp_.in != dim_ || mlp_.out != classes_)
    throw ValidationError("mlp shapes do not match feature_dim/classes");
  check_prior(prior_, classes_);
}

ClassScores MeanPoolMlpModel::score(const FeatureSequence& x,
                                    const SubsequenceIndex& sub) const {
  count_call();
  tls_scratch.assign(dim_, 0.0);
  auto picked = sub.positions();
  for (int i : picked) kern::axpy(1.0, x.row(i).data(), tls_scratch.data(), dim_);
  kern::scal(1.0 / static_cast<double>(picked.size()), tls_scratch.data(), dim_);
  ClassScores out(classes_);
  mlp_.forward(tls_scratch.data(), out.data());
  if (normalize_) softmax_inplace(out);
  return out;
}

PairwiseRelationalModel::PairwiseRelationalModel(int classes, int dim, Mlp unary, Mlp pair,
                                                 ClassScores prior, bool normalize)
    : classes_(classes), dim_(dim), unary_(std::move(unary)), pair_(std::move(pair)),
      prior_(std::move(prior)), normalize_(normalize) {
  if (classes_ < 1 || dim_ < 1) throw ValidationError("model dimensions must be positive");
  unary_.validate("unary");
  pair_.validate("pair");
  if (unary_.in != dim_ || unary_.out != classes_)
    throw ValidationError("unary shapes do not match feature_dim/classes");
  if (pair_.in != 2 * dim_ || pair_.out != classes_)
    throw ValidationError("pair shapes do not match feature_dim/classes");
  check_prior(prior_, classes_);
}

ClassScores PairwiseRelationalModel::score(const FeatureSequence& x,
                                           const SubsequenceIndex& sub) const {
  count_call();
  ClassScores out = prior_;
  ClassScores term(classes_);
  auto picked = sub.positions();
  for (int i : picked) {
    unary_.forward(x.row(i).data(), term.data());
    for (int c = 0; c < classes_; ++c) out[c] += term[c];
  }
  tls_scratch.resize(static_cast<size_t>(2) * dim_);
  for (size_t a = 0; a < picked.size(); ++a) {
    for (size_t b = a + 1; b < picked.size(); ++b) {
      std::copy_n(x.row(picked[a]).data(), dim_, tls_scratch.data());
      std::copy_n(x.row(picked[b]).data(), dim_, tls_scratch.data() + dim_);
      pair_.forward(tls_scratch.data(), term.data());
      for (int c = 0; c < classes_; ++c) out[c] += term[c];
    }
  }
  if (normalize_) softmax_inplace(out);
  return out;
}

}  // namespace esv
