// Command line front end: attribution, class contrast, ranked ablation, and
// sampling-quality sweeps over feature files and model specs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "esv/ablation.hpp"
#include "esv/engine.hpp"
#include "esv/error.hpp"
#include "esv/io.hpp"
#include "esv/model_spec.hpp"
#include "esv/quality.hpp"

namespace {

using Clock = std::chrono::steady_clock;

struct OutputOpts {
  bool quiet = false;
  bool json = false;
};

long long parse_integer(const std::string& token, const std::string& what) {
  if (token.empty()) throw esv::ValidationError(what + " is empty");
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(token.c_str(), &end, 10);
  if (errno != 0 || end != token.c_str() + token.size())
    throw esv::ValidationError(what + " is not an integer: '" + token + "'");
  return v;
}

std::vector<std::string> split_commas(const std::string& list) {
  std::vector<std::string> out;
  std::string current;
  for (char c : list) {
    if (c == ',') {
      out.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  out.push_back(current);
  return out;
}

std::vector<int> parse_classes(const std::string& list, int num_classes) {
  std::vector<int> classes;
  if (list == "all") {
    classes.resize(num_classes);
    for (int c = 0; c < num_classes; ++c) classes[c] = c;
    return classes;
  }
  for (const auto& token : split_commas(list))
    classes.push_back(static_cast<int>(parse_integer(token, "--classes entry")));
  return classes;
}

std::vector<int> parse_int_grid(const std::string& list, const std::string& what) {
  std::vector<int> out;
  for (const auto& token : split_commas(list))
    out.push_back(static_cast<int>(parse_integer(token, what + " entry")));
  return out;
}

std::vector<uint64_t> parse_seed_grid(const std::string& list) {
  std::vector<uint64_t> out;
  for (const auto& token : split_commas(list)) {
    long long v = parse_integer(token, "--seeds entry");
    if (v < 0) throw esv::ValidationError("--seeds entry must be >= 0");
    out.push_back(static_cast<uint64_t>(v));
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

/// Attribution flags shared by attribute, contrast, and ablate.
struct RunFlags {
  std::string features;
  std::string model;
  std::string mode = "exact";
  int m = 256;
  int iterations = 4;
  long long seed = 0;
  int nmax = esv::kDefaultExhaustiveLimit;
  bool strict_alg1 = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--features", flags.features, "Feature file (text or ESVF binary)")
      ->required();
  cmd->add_option("--model", flags.model, "Model spec (esv-model/1 JSON)")->required();
  cmd->add_option("--mode", flags.mode, "Attribution mode: exact or approx")
      ->check(CLI::IsMember({"exact", "approx"}));
  cmd->add_option("--m", flags.m, "Sample budget per scale (approx mode)");
  cmd->add_option("--iterations", flags.iterations, "Sampling iterations (approx mode)");
  cmd->add_option("--seed", flags.seed, "Random seed (approx mode, random ablation order)");
  cmd->add_option("--nmax", flags.nmax,
                  "Exhaustive enumeration limit for exact mode (default 16)");
  cmd->add_flag("--strict-alg1", flags.strict_alg1,
                "Apply the (s-1)/s factor above the deepest scale in approx mode");
}

esv::AttributionResult run_attribution(const esv::SubsequenceScorer& model,
                                       const esv::FeatureSequence& x,
                                       const std::vector<int>& classes, const RunFlags& flags) {
  if (flags.mode == "exact") return esv::exact_esv(model, x, classes, flags.nmax);
  esv::ApproxConfig cfg;
  cfg.m = flags.m;
  cfg.iterations = flags.iterations;
  if (flags.seed < 0) throw esv::ValidationError("--seed must be >= 0");
  cfg.seed = static_cast<uint64_t>(flags.seed);
  cfg.strict_alg1 = flags.strict_alg1;
  return esv::approx_esv(model, x, classes, cfg);
}

void append_run_flags(esv::RunManifest& manifest, const RunFlags& flags,
                      const std::vector<int>& classes) {
  manifest.flags.emplace_back("--features", flags.features);
  manifest.flags.emplace_back("--model", flags.model);
  manifest.flags.emplace_back("--classes", join_ints(classes));
  manifest.flags.emplace_back("--mode", flags.mode);
  if (flags.mode == "approx") {
    manifest.flags.emplace_back("--m", std::to_string(flags.m));
    manifest.flags.emplace_back("--iterations", std::to_string(flags.iterations));
    manifest.flags.emplace_back("--seed", std::to_string(flags.seed));
    manifest.flags.emplace_back("--strict-alg1", flags.strict_alg1 ? "true" : "false");
  } else {
    manifest.flags.emplace_back("--nmax", std::to_string(flags.nmax));
  }
}

void finish(const OutputOpts& opts, const std::string& command, const std::string& output,
            uint64_t model_calls, double wall_ms) {
  if (opts.quiet) return;
  if (opts.json) {
    std::printf("{\"status\":\"ok\",\"command\":\"%s\",\"output\":\"%s\","
                "\"model_calls\":%llu,\"wall_time_ms\":%s}\n",
                command.c_str(), output.c_str(),
                static_cast<unsigned long long>(model_calls),
                esv::format_double(wall_ms).c_str());
  } else {
    std::printf("%s: wrote %s (model calls %llu, %.1f ms)\n", command.c_str(), output.c_str(),
                static_cast<unsigned long long>(model_calls), wall_ms);
  }
}

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

int cmd_attribute(const RunFlags& flags, const std::string& classes_arg,
                  const std::string& output, const OutputOpts& opts) {
  auto start = Clock::now();
  auto model = esv::load_model(flags.model);
  auto x = esv::read_features(flags.features);
  auto classes = parse_classes(classes_arg, model->num_classes());
  auto result = run_attribution(*model, x, classes, flags);
  esv::write_result(output, result);

  esv::RunManifest manifest;
  manifest.command = "attribute";
  append_run_flags(manifest, flags, result.classes);
  manifest.flags.emplace_back("--output", output);
  manifest.model_digest = esv::file_digest(flags.model);
  manifest.features_digest = esv::file_digest(flags.features);
  manifest.model_calls = result.model_calls;
  manifest.wall_time_ms = elapsed_ms(start);
  esv::write_manifest(output + ".manifest.json", manifest);

  finish(opts, "attribute", output, result.model_calls, manifest.wall_time_ms);
  return 0;
}

int cmd_contrast(const RunFlags& flags, int gt, int pt, const std::string& output,
                 const OutputOpts& opts) {
  auto start = Clock::now();
  auto model = esv::load_model(flags.model);
  auto x = esv::read_features(flags.features);
  std::vector<int> classes = {gt, pt};
  auto result = run_attribution(*model, x, classes, flags);

  esv::ContrastBlock contrast;
  contrast.gt = gt;
  contrast.pt = pt;
  contrast.delta = esv::contrastive_esv(result, result, gt, pt);
  esv::write_result(output, result, &contrast);

  esv::RunManifest manifest;
  manifest.command = "contrast";
  append_run_flags(manifest, flags, result.classes);
  manifest.flags.emplace_back("--gt", std::to_string(gt));
  manifest.flags.emplace_back("--pt", std::to_string(pt));
  manifest.flags.emplace_back("--output", output);
  manifest.model_digest = esv::file_digest(flags.model);
  manifest.features_digest = esv::file_digest(flags.features);
  manifest.model_calls = result.model_calls;
  manifest.wall_time_ms = elapsed_ms(start);
  esv::write_manifest(output + ".manifest.json", manifest);

  finish(opts, "contrast", output, result.model_calls, manifest.wall_time_ms);
  return 0;
}

int cmd_ablate(const RunFlags& flags, const std::string& order_name, int class_index, int label,
               const std::string& output, const OutputOpts& opts) {
  auto start = Clock::now();
  auto order = esv::ablation_order_from_name(order_name);
  if (!order) throw esv::ValidationError("unknown ablation order '" + order_name + "'");
  auto model = esv::load_model(flags.model);
  auto x = esv::read_features(flags.features);
  if (flags.seed < 0) throw esv::ValidationError("--seed must be >= 0");

  std::unique_ptr<esv::AttributionResult> esv_run;
  if (*order == esv::AblationOrder::esv_descending ||
      *order == esv::AblationOrder::esv_ascending) {
    esv_run = std::make_unique<esv::AttributionResult>(
        run_attribution(*model, x, {class_index}, flags));
  }
  auto curve = esv::ablate_by_rank(*model, x, *order, esv_run.get(), class_index, label,
                                   static_cast<uint64_t>(flags.seed));

  std::string table;
  table += "# esv-ablation/1\n";
  table += "# order=" + std::string(esv::ablation_order_name(*order)) +
           " class=" + std::to_string(class_index) + " label=" + std::to_string(label) + "\n";
  table += "# removal_order=" + join_ints(curve.removal_order) + "\n";
  table += "elements_remaining\tclass_score\tcorrect\n";
  for (const auto& point : curve.points) {
    table += std::to_string(point.elements_remaining) + "\t" +
             esv::format_double(point.class_score) + "\t" + (point.correct ? "1" : "0") + "\n";
  }
  esv::atomic_write_text(output, table);

  esv::RunManifest manifest;
  manifest.command = "ablate";
  append_run_flags(manifest, flags, {class_index});
  manifest.flags.emplace_back("--order", esv::ablation_order_name(*order));
  manifest.flags.emplace_back("--class", std::to_string(class_index));
  manifest.flags.emplace_back("--label", std::to_string(label));
  manifest.flags.emplace_back("--seed", std::to_string(flags.seed));
  manifest.flags.emplace_back("--output", output);
  manifest.model_digest = esv::file_digest(flags.model);
  manifest.features_digest = esv::file_digest(flags.features);
  manifest.model_calls = model->model_calls();
  manifest.wall_time_ms = elapsed_ms(start);
  esv::write_manifest(output + ".manifest.json", manifest);

  finish(opts, "ablate", output, manifest.model_calls, manifest.wall_time_ms);
  return 0;
}

int cmd_eval_approx(const std::string& features_dir, const std::string& model_path,
                    int class_index, const std::string& m_grid_arg,
                    const std::string& iterations_grid_arg, const std::string& seeds_arg,
                    double min_evidential, bool has_min_evidential, int nmax,
                    const std::string& output, const OutputOpts& opts) {
  auto start = Clock::now();
  auto model = esv::load_model(model_path);

  std::vector<std::string> paths;
  {
    std::error_code ec;
    std::filesystem::directory_iterator it(features_dir, ec);
    if (ec)
      throw esv::IoError("cannot read feature directory " + features_dir + ": " + ec.message());
    for (const auto& entry : it)
      if (entry.is_regular_file()) paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw esv::ValidationError("feature directory " + features_dir + " holds no files");

  std::vector<esv::FeatureSequence> inputs;
  inputs.reserve(paths.size());
  for (const auto& path : paths) inputs.push_back(esv::read_features(path));

  auto m_grid = parse_int_grid(m_grid_arg, "--m-grid");
  auto iterations_grid = parse_int_grid(iterations_grid_arg, "--iterations-grid");
  auto seeds = parse_seed_grid(seeds_arg);
  std::optional<double> filter;
  if (has_min_evidential) filter = min_evidential;

  auto report =
      esv::batch_quality(*model, inputs, class_index, m_grid, iterations_grid, seeds, filter, nmax);

  std::string table;
  table += "# esv-quality/1\n";
  table += "# inputs_total=" + std::to_string(report.inputs_total) +
           " inputs_evaluated=" + std::to_string(report.inputs_evaluated) + "\n";
  table += "m\titerations\tsampled_pct\trelative_error\tlad_slope\tpearson_r\truns_used\truns_"
           "skipped\n";
  for (const auto& cell : report.cells) {
    table += std::to_string(cell.m) + "\t" + std::to_string(cell.iterations) + "\t" +
             esv::format_double(100.0 * cell.sampled_fraction) + "\t" +
             esv::format_double(cell.mean_relative_error) + "\t" +
             esv::format_double(cell.mean_lad_slope) + "\t" +
             esv::format_double(cell.mean_pearson_r) + "\t" + std::to_string(cell.runs_used) +
             "\t" + std::to_string(cell.runs_skipped) + "\n";
  }
  esv::atomic_write_text(output, table);

  esv::RunManifest manifest;
  manifest.command = "eval-approx";
  manifest.flags.emplace_back("--features-dir", features_dir);
  manifest.flags.emplace_back("--model", model_path);
  manifest.flags.emplace_back("--class", std::to_string(class_index));
  manifest.flags.emplace_back("--m-grid", m_grid_arg);
  manifest.flags.emplace_back("--iterations-grid", iterations_grid_arg);
  manifest.flags.emplace_back("--seeds", seeds_arg);
  if (has_min_evidential)
    manifest.flags.emplace_back("--min-evidential", esv::format_double(min_evidential));
  manifest.flags.emplace_back("--nmax", std::to_string(nmax));
  manifest.flags.emplace_back("--output", output);
  manifest.model_digest = esv::file_digest(model_path);
  std::string combined;
  for (const auto& path : paths)
    combined += std::filesystem::path(path).filename().string() + ":" + esv::file_digest(path) +
                "\n";
  manifest.features_digest = esv::content_digest(combined);
  manifest.model_calls = model->model_calls();
  manifest.wall_time_ms = elapsed_ms(start);
  esv::write_manifest(output + ".manifest.json", manifest);

  finish(opts, "eval-approx", output, manifest.model_calls, manifest.wall_time_ms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-element attribution toolkit for sequence models"};
  app.require_subcommand(1);

  OutputOpts opts;
  app.add_flag("--quiet", opts.quiet, "Suppress the status line");
  app.add_flag("--json", opts.json, "Emit the status line as JSON");

  RunFlags attribute_flags;
  std::string attribute_classes = "all";
  std::string attribute_output;
  auto* attribute = app.add_subcommand("attribute", "Compute per-element attributions");
  add_run_flags(attribute, attribute_flags);
  attribute->add_option("--classes", attribute_classes,
                        "Comma-separated class indices, or 'all'");
  attribute->add_option("--output", attribute_output, "Result file path")->required();

  RunFlags contrast_flags;
  int contrast_gt = 0, contrast_pt = 0;
  std::string contrast_output;
  auto* contrast = app.add_subcommand("contrast", "Contrast attributions between two classes");
  add_run_flags(contrast, contrast_flags);
  contrast->add_option("--gt", contrast_gt, "Class whose evidence is kept")->required();
  contrast->add_option("--pt", contrast_pt, "Class being contrasted away")->required();
  contrast->add_option("--output", contrast_output, "Result file path")->required();

  RunFlags ablate_flags;
  std::string ablate_order;
  int ablate_class = 0, ablate_label = 0;
  std::string ablate_output;
  auto* ablate = app.add_subcommand("ablate", "Remove elements in rank order and re-score");
  add_run_flags(ablate, ablate_flags);
  ablate->add_option("--order", ablate_order,
                     "esv-descending, esv-ascending, center-out, edges-in, uniform, or random")
      ->required();
  ablate->add_option("--class", ablate_class, "Class column to report");
  ablate->add_option("--label", ablate_label, "Label used for the argmax-correct flag")
      ->required();
  ablate->add_option("--output", ablate_output, "Curve table path")->required();

  std::string eval_dir, eval_model, eval_m_grid, eval_iterations_grid, eval_seeds, eval_output;
  int eval_class = 0;
  int eval_nmax = esv::kDefaultExhaustiveLimit;
  double eval_min_evidential = 0.0;
  auto* eval = app.add_subcommand("eval-approx", "Sweep sampling quality against exact runs");
  eval->add_option("--features-dir", eval_dir, "Directory of feature files")->required();
  eval->add_option("--model", eval_model, "Model spec (esv-model/1 JSON)")->required();
  eval->add_option("--class", eval_class, "Class index the metrics are computed on");
  eval->add_option("--m-grid", eval_m_grid, "Comma-separated sample budgets")->required();
  eval->add_option("--iterations-grid", eval_iterations_grid, "Comma-separated iteration counts")
      ->required();
  eval->add_option("--seeds", eval_seeds, "Comma-separated seeds")->required();
  auto* min_ev_opt =
      eval->add_option("--min-evidential", eval_min_evidential,
                       "Drop inputs whose exact evidential score is below this");
  eval->add_option("--nmax", eval_nmax, "Exhaustive enumeration limit for the exact reference");
  eval->add_option("--output", eval_output, "Quality table path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: validation: %s\n", e.what());
    return static_cast<int>(esv::ErrorClass::validation);
  }

  try {
    if (app.got_subcommand(attribute))
      return cmd_attribute(attribute_flags, attribute_classes, attribute_output, opts);
    if (app.got_subcommand(contrast))
      return cmd_contrast(contrast_flags, contrast_gt, contrast_pt, contrast_output, opts);
    if (app.got_subcommand(ablate))
      return cmd_ablate(ablate_flags, ablate_order, ablate_class, ablate_label, ablate_output,
                        opts);
    if (app.got_subcommand(eval))
      return cmd_eval_approx(eval_dir, eval_model, eval_class, eval_m_grid, eval_iterations_grid,
                             eval_seeds, eval_min_evidential, min_ev_opt->count() > 0, eval_nmax,
                             eval_output, opts);
  } catch (const esv::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", esv::error_class_name(e.error_class()), e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 1;
  }
  return 0;
}
