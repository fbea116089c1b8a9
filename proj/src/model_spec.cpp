#include "esv/model_spec.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "esv/io.hpp"
#include "esv/models.hpp"
#include "esv/multiscale.hpp"

namespace esv {

using nlohmann::json;

const char* const kKindLinearAdditive = "linear-additive";
const char* const kKindMeanPoolMlp = "mean-pool-mlp";
const char* const kKindPerScaleMlp = "per-scale-mlp";
const char* const kKindPairwiseRelational = "pairwise-relational";

const ParameterArray* ModelSpec::find(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError("model spec field " + field + ": " + why);
}

int require_int(const json& j, const std::string& field, int min_value) {
  if (!j.contains(field)) fail(field, "missing");
  const json& v = j.at(field);
  if (!v.is_number_integer()) fail(field, "expected an integer");
  int x = v.get<int>();
  if (x < min_value) fail(field, "must be >= " + std::to_string(min_value));
  return x;
}

std::vector<double> require_real_array(const json& v, const std::string& field) {
  if (!v.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) fail(field, "expected an array of numbers");
    double x = e.get<double>();
    if (!std::isfinite(x)) fail(field, "contains a non-finite value");
    out.push_back(x);
  }
  return out;
}

/// Pulls one named array and checks its declared and actual shape.
const ParameterArray& expect_param(const ModelSpec& spec, const std::string& name,
                                   std::vector<int> shape) {
  const ParameterArray* p = spec.find(name);
  if (!p) fail("parameters." + name, "missing");
  if (p->shape != shape) {
    std::string want, got;
    for (int d : shape) want += (want.empty() ? "" : "x") + std::to_string(d);
    for (int d : p->shape) got += (got.empty() ? "" : "x") + std::to_string(d);
    fail("parameters." + name, "expected shape " + want + ", got " + got);
  }
  return *p;
}

int infer_hidden(const ModelSpec& spec, const std::string& block) {
  const ParameterArray* p = spec.find(block + ".hidden.weight");
  if (!p) fail("parameters." + block + ".hidden.weight", "missing");
  if (p->shape.size() != 2 || p->shape[0] < 1)
    fail("parameters." + block + ".hidden.weight", "expected a 2-d shape");
  return p->shape[0];
}

Mlp expect_mlp(const ModelSpec& spec, const std::string& block, int in, int out) {
  int hidden = infer_hidden(spec, block);
  Mlp mlp;
  mlp.in = in;
  mlp.hidden = hidden;
  mlp.out = out;
  mlp.w1 = expect_param(spec, block + ".hidden.weight", {hidden, in}).data;
  mlp.b1 = expect_param(spec, block + ".hidden.bias", {hidden}).data;
  mlp.w2 = expect_param(spec, block + ".output.weight", {out, hidden}).data;
  mlp.b2 = expect_param(spec, block + ".output.bias", {out}).data;
  return mlp;
}

void check_no_strays(const ModelSpec& spec, const std::set<std::string>& expected) {
  for (const auto& p : spec.parameters)
    if (!expected.count(p.name)) fail("parameters." + p.name, "not used by kind " + spec.kind);
}

std::set<std::string> mlp_names(const std::string& block) {
  return {block + ".hidden.weight", block + ".hidden.bias", block + ".output.weight",
          block + ".output.bias"};
}

}  // namespace

ModelSpec load_model_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("model file " + path + " is not valid JSON: " + e.what());
  }

  if (!j.contains("format") || !j.at("format").is_string())
    fail("format", "missing");
  if (j.at("format").get<std::string>() != kModelFormat)
    fail("format", "expected " + std::string(kModelFormat));

  ModelSpec spec;
  if (!j.contains("kind") || !j.at("kind").is_string()) fail("kind", "missing");
  spec.kind = j.at("kind").get<std::string>();
  spec.classes = require_int(j, "classes", 1);
  spec.feature_dim = require_int(j, "feature_dim", 1);
  if (spec.kind == kKindPerScaleMlp) {
    spec.n_max = require_int(j, "n_max", 1);
  } else if (j.contains("n_max")) {
    fail("n_max", "only valid for kind " + std::string(kKindPerScaleMlp));
  }
  if (j.contains("normalize")) {
    if (!j.at("normalize").is_boolean()) fail("normalize", "expected a boolean");
    spec.normalize = j.at("normalize").get<bool>();
  }

  if (!j.contains("empty_prior") || !j.at("empty_prior").is_object())
    fail("empty_prior", "missing");
  const json& prior = j.at("empty_prior");
  if (!prior.contains("scores")) fail("empty_prior.scores", "missing");
  spec.empty_prior = require_real_array(prior.at("scores"), "empty_prior.scores");
  if (prior.contains("distribution")) {
    if (!prior.at("distribution").is_boolean())
      fail("empty_prior.distribution", "expected a boolean");
    spec.prior_is_distribution = prior.at("distribution").get<bool>();
  }

  if (!j.contains("parameters") || !j.at("parameters").is_array())
    fail("parameters", "missing");
  for (size_t i = 0; i < j.at("parameters").size(); ++i) {
    const json& pj = j.at("parameters").at(i);
    std::string where = "parameters[" + std::to_string(i) + "]";
    if (!pj.is_object() || !pj.contains("name") || !pj.at("name").is_string())
      fail(where + ".name", "missing");
    ParameterArray p;
    p.name = pj.at("name").get<std::string>();
    if (!pj.contains("shape") || !pj.at("shape").is_array()) fail(where + ".shape", "missing");
    for (const auto& d : pj.at("shape")) {
      if (!d.is_number_integer() || d.get<int>() < 1)
        fail(where + ".shape", "dimensions must be positive integers");
      p.shape.push_back(d.get<int>());
    }
    if (!pj.contains("data")) fail(where + ".data", "missing");
    p.data = require_real_array(pj.at("data"), where + ".data");
    size_t want = 1;
    for (int d : p.shape) want *= static_cast<size_t>(d);
    if (p.data.size() != want) fail(where + ".data", "length does not match shape");
    if (spec.find(p.name)) fail(where + ".name", "duplicate parameter " + p.name);
    spec.parameters.push_back(std::move(p));
  }
  return spec;
}

void save_model_spec(const ModelSpec& spec, const std::string& path) {
  json j;
  j["format"] = kModelFormat;
  j["kind"] = spec.kind;
  j["classes"] = spec.classes;
  j["feature_dim"] = spec.feature_dim;
  if (spec.kind == kKindPerScaleMlp) j["n_max"] = spec.n_max;
  if (spec.normalize) j["normalize"] = true;
  j["empty_prior"] = {{"scores", spec.empty_prior}, {"distribution", spec.prior_is_distribution}};
  json params = json::array();
  for (const auto& p : spec.parameters)
    params.push_back({{"name", p.name}, {"shape", p.shape}, {"data", p.data}});
  j["parameters"] = std::move(params);
  atomic_write_text(path, j.dump(2) + "\n");
}

std::unique_ptr<SubsequenceScorer> build_scorer(const ModelSpec& spec) {
  if (spec.classes < 1) fail("classes", "must be >= 1");
  if (spec.feature_dim < 1) fail("feature_dim", "must be >= 1");
  if (static_cast<int>(spec.empty_prior.size()) != spec.classes)
    fail("empty_prior.scores", "length must equal classes");
  if (spec.prior_is_distribution) {
    double sum = 0.0;
    for (double v : spec.empty_prior) {
      if (v < 0.0) fail("empty_prior.scores", "distribution entries must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      fail("empty_prior.scores", "distribution must sum to 1 within 1e-9");
  }

  if (spec.kind != kKindPerScaleMlp && spec.n_max != 0)
    fail("n_max", "only valid for kind " + std::string(kKindPerScaleMlp));

  const int C = spec.classes;
  const int D = spec.feature_dim;
  if (spec.kind == kKindLinearAdditive) {
    check_no_strays(spec, {"element.weight"});
    auto w = expect_param(spec, "element.weight", {C, D}).data;
    return std::make_unique<LinearAdditiveModel>(C, D, std::move(w), spec.empty_prior,
                                                 spec.normalize);
  }
  if (spec.kind == kKindMeanPoolMlp) {
    check_no_strays(spec, mlp_names("mlp"));
    return std::make_unique<MeanPoolMlpModel>(C, D, expect_mlp(spec, "mlp", D, C),
                                              spec.empty_prior, spec.normalize);
  }
  if (spec.kind == kKindPairwiseRelational) {
    std::set<std::string> names = mlp_names("unary");
    names.merge(mlp_names("pair"));
    check_no_strays(spec, names);
    return std::make_unique<PairwiseRelationalModel>(C, D, expect_mlp(spec, "unary", D, C),
                                                     expect_mlp(spec, "pair", 2 * D, C),
                                                     spec.empty_prior, spec.normalize);
  }
  if (spec.kind == kKindPerScaleMlp) {
    if (spec.n_max < 1) fail("n_max", "must be >= 1");
    std::set<std::string> names;
    std::vector<Mlp> scales;
    scales.reserve(spec.n_max);
    for (int s = 1; s <= spec.n_max; ++s) {
      std::string block = "scale" + std::to_string(s);
      names.merge(mlp_names(block));
      scales.push_back(expect_mlp(spec, block, s * D, C));
    }
    check_no_strays(spec, names);
    return std::make_unique<MultiScaleModel>(C, D, std::move(scales), spec.empty_prior,
                                             spec.normalize);
  }
  fail("kind", "unknown kind " + spec.kind);
}

}  // namespace esv
