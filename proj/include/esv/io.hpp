#pragma once

#include <string>
#include <utility>

#include "esv/engine.hpp"

namespace esv {

inline constexpr const char* kResultFormat = "esv-result/1";
inline constexpr const char* kManifestFormat = "esv-manifest/1";
inline constexpr uint32_t kBinaryFeatureVersion = 1;  // "ESVF" magic

/// Writes content to a sibling temp file and renames it into place, so the
/// destination either keeps its old bytes or receives the complete new ones.
void atomic_write_text(const std::string& path, const std::string& content);

/// Feature files: a text form with an "n D [t1..tn]" header line followed by
/// n whitespace-delimited rows of D values ('#' lines are comments), and a
/// little-endian binary form starting with the magic "ESVF". Readers sniff
/// the magic, so either form can be passed wherever features are expected.
FeatureSequence read_features(const std::string& path);
void write_features_text(const std::string& path, const FeatureSequence& x);
void write_features_binary(const std::string& path, const FeatureSequence& x);

/// Attribution results round-trip through a JSON document whose numbers are
/// printed with 17 significant digits, enough to reproduce every double bit
/// for bit.
struct ContrastBlock {
  int gt = 0;
  int pt = 0;
  std::vector<double> delta;
};
void write_result(const std::string& path, const AttributionResult& r,
                  const ContrastBlock* contrast = nullptr);
AttributionResult read_result(const std::string& path, ContrastBlock* contrast = nullptr);

/// Run provenance written next to each output.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> flags;  // resolved, in CLI order
  std::string model_digest;
  std::string features_digest;
  uint64_t model_calls = 0;
  double wall_time_ms = 0.0;
};
void write_manifest(const std::string& path, const RunManifest& manifest);

/// SHA-256 of a byte string, lowercase hex.
std::string content_digest(const std::string& bytes);

/// SHA-256 of a file's bytes, lowercase hex.
std::string file_digest(const std::string& path);

/// Shortest decimal-digit count is deliberately not used: every double is
/// printed via this single helper with %.17g.
std::string format_double(double v);

}  // namespace esv
