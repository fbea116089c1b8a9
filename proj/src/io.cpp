#include "esv/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

namespace esv {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& path, const std::string& why) {
  throw ValidationError("malformed input " + path + ": " + why);
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return out.str();
}

double parse_double(const std::string& tok, const std::string& path, const char* what) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) malformed(path, std::string("bad ") + what);
  if (!std::isfinite(v)) malformed(path, std::string(what) + " is not finite");
  return v;
}

void append_le_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_le_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

uint32_t take_le_u32(const std::string& buf, size_t& at, const std::string& path) {
  if (at + 4 > buf.size()) malformed(path, "truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
  at += 4;
  return v;
}

double take_le_f64(const std::string& buf, size_t& at, const std::string& path) {
  if (at + 8 > buf.size()) malformed(path, "truncated");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(buf[at + i])) << (8 * i);
  at += 8;
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

FeatureSequence parse_features_text(const std::string& path, const std::string& content) {
  std::istringstream in(content);
  std::string line;
  std::vector<std::string> tokens;
  auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      size_t start = line.find_first_not_of(" \t\r");
      if (start == std::string::npos || line[start] == '#') continue;
      tokens.clear();
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      return true;
    }
    return false;
  };

  if (!next_data_line()) malformed(path, "missing header line");
  if (tokens.size() < 2) malformed(path, "header needs n and D");
  long n = 0, dim = 0;
  try {
    n = std::stol(tokens[0]);
    dim = std::stol(tokens[1]);
  } catch (...) {
    malformed(path, "header needs integer n and D");
  }
  if (n < 1 || dim < 1) malformed(path, "header needs positive n and D");
  std::vector<double> timestamps;
  if (tokens.size() > 2) {
    if (static_cast<long>(tokens.size()) != 2 + n)
      malformed(path, "header timestamps must list exactly n values");
    for (long i = 0; i < n; ++i)
      timestamps.push_back(parse_double(tokens[2 + i], path, "timestamp"));
  }

  std::vector<double> data;
  data.reserve(static_cast<size_t>(n) * dim);
  for (long r = 0; r < n; ++r) {
    if (!next_data_line()) malformed(path, "expected " + std::to_string(n) + " feature rows");
    if (static_cast<long>(tokens.size()) != dim)
      malformed(path, "row " + std::to_string(r + 1) + " needs " + std::to_string(dim) +
                          " values");
    for (const auto& tok : tokens) data.push_back(parse_double(tok, path, "feature value"));
  }
  if (next_data_line()) malformed(path, "trailing content after the last feature row");
  return FeatureSequence(static_cast<int>(n), static_cast<int>(dim), std::move(data),
                         std::move(timestamps));
}

FeatureSequence parse_features_binary(const std::string& path, const std::string& buf) {
  size_t at = 4;  // past the magic
  uint32_t version = take_le_u32(buf, at, path);
  if (version != kBinaryFeatureVersion)
    malformed(path, "unsupported binary feature version " + std::to_string(version));
  uint32_t n = take_le_u32(buf, at, path);
  uint32_t dim = take_le_u32(buf, at, path);
  if (n < 1 || dim < 1) malformed(path, "header needs positive n and D");
  if (at >= buf.size()) malformed(path, "truncated");
  uint8_t flags = static_cast<uint8_t>(buf[at++]);
  if (flags > 1) malformed(path, "unknown flag bits");
  std::vector<double> timestamps;
  if (flags & 1)
    for (uint32_t i = 0; i < n; ++i) timestamps.push_back(take_le_f64(buf, at, path));
  std::vector<double> data;
  data.reserve(static_cast<size_t>(n) * dim);
  for (size_t i = 0; i < static_cast<size_t>(n) * dim; ++i) {
    double v = take_le_f64(buf, at, path);
    if (!std::isfinite(v)) malformed(path, "feature value is not finite");
    data.push_back(v);
  }
  if (at != buf.size()) malformed(path, "trailing bytes");
  return FeatureSequence(static_cast<int>(n), static_cast<int>(dim), std::move(data),
                         std::move(timestamps));
}

json parse_json_file(const std::string& path) {
  std::string content = read_all(path);
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    malformed(path, std::string("not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

/// format_double output that always parses back as a JSON double. A bare
/// integer token would round-trip through parsers as an integer, which drops
/// the sign of negative zero.
std::string json_number(double v) {
  std::string s = format_double(v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

void atomic_write_text(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path);
  }
}

FeatureSequence read_features(const std::string& path) {
  std::string content = read_all(path);
  if (content.size() >= 4 && content.compare(0, 4, "ESVF") == 0)
    return parse_features_binary(path, content);
  return parse_features_text(path, content);
}

void write_features_text(const std::string& path, const FeatureSequence& x) {
  std::string out;
  out += std::to_string(x.size()) + " " + std::to_string(x.dim());
  if (x.has_timestamps())
    for (double t : x.timestamps()) out += " " + format_double(t);
  out += "\n";
  for (int i = 0; i < x.size(); ++i) {
    auto row = x.row(i);
    for (int d = 0; d < x.dim(); ++d) {
      if (d) out += " ";
      out += format_double(row[d]);
    }
    out += "\n";
  }
  atomic_write_text(path, out);
}

void write_features_binary(const std::string& path, const FeatureSequence& x) {
  std::string out = "ESVF";
  append_le_u32(out, kBinaryFeatureVersion);
  append_le_u32(out, static_cast<uint32_t>(x.size()));
  append_le_u32(out, static_cast<uint32_t>(x.dim()));
  out.push_back(x.has_timestamps() ? 1 : 0);
  if (x.has_timestamps())
    for (double t : x.timestamps()) append_le_f64(out, t);
  for (double v : x.data()) append_le_f64(out, v);
  atomic_write_text(path, out);
}

void write_result(const std::string& path, const AttributionResult& r,
                  const ContrastBlock* contrast) {
  // Hand-rolled emission keeps full control of number formatting and byte
  // layout, which the reproducibility contract depends on.
  std::string out;
  out += "{\n";
  out += "  \"format\": \"" + std::string(kResultFormat) + "\",\n";
  out += "  \"mode\": \"" + std::string(r.mode == AttributionMode::exact ? "exact" : "approx") +
         "\",\n";
  out += "  \"n\": " + std::to_string(r.n) + ",\n";
  out += "  \"classes\": [";
  for (size_t i = 0; i < r.classes.size(); ++i)
    out += (i ? ", " : "") + std::to_string(r.classes[i]);
  out += "],\n";
  if (r.mode == AttributionMode::approx) {
    out += "  \"m\": " + std::to_string(r.m) + ",\n";
    out += "  \"iterations\": " + std::to_string(r.iterations) + ",\n";
    out += "  \"seed\": " + std::to_string(r.seed) + ",\n";
    out += std::string("  \"strict_alg1\": ") + (r.strict_alg1 ? "true" : "false") + ",\n";
  }
  out += "  \"model_calls\": " + std::to_string(r.model_calls) + ",\n";
  out += "  \"evidential\": [";
  for (size_t i = 0; i < r.evidential.size(); ++i)
    out += (i ? ", " : "") + json_number(r.evidential[i]);
  out += "],\n";
  out += "  \"phi\": [\n";
  for (int i = 0; i < r.n; ++i) {
    out += "    [";
    for (size_t c = 0; c < r.classes.size(); ++c)
      out += (c ? ", " : "") + json_number(r.phi[i * r.classes.size() + c]);
    out += i + 1 < r.n ? "],\n" : "]\n";
  }
  out += "  ]";
  if (contrast) {
    out += ",\n  \"contrast\": {\n";
    out += "    \"gt\": " + std::to_string(contrast->gt) + ",\n";
    out += "    \"pt\": " + std::to_string(contrast->pt) + ",\n";
    out += "    \"delta\": [";
    for (size_t i = 0; i < contrast->delta.size(); ++i)
      out += (i ? ", " : "") + json_number(contrast->delta[i]);
    out += "]\n  }";
  }
  out += "\n}\n";
  atomic_write_text(path, out);
}

AttributionResult read_result(const std::string& path, ContrastBlock* contrast) {
  json j = parse_json_file(path);
  if (!j.contains("format") || j.at("format") != kResultFormat)
    malformed(path, "missing or unexpected format field");
  AttributionResult r;
  try {
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "exact")
      r.mode = AttributionMode::exact;
    else if (mode == "approx")
      r.mode = AttributionMode::approx;
    else
      malformed(path, "unknown mode " + mode);
    r.n = j.at("n").get<int>();
    r.classes = j.at("classes").get<std::vector<int>>();
    if (r.mode == AttributionMode::approx) {
      r.m = j.at("m").get<int>();
      r.iterations = j.at("iterations").get<int>();
      r.seed = j.at("seed").get<uint64_t>();
      r.strict_alg1 = j.at("strict_alg1").get<bool>();
    }
    r.model_calls = j.at("model_calls").get<uint64_t>();
    r.evidential = j.at("evidential").get<std::vector<double>>();
    const json& phi = j.at("phi");
    if (!phi.is_array() || phi.size() != static_cast<size_t>(r.n))
      malformed(path, "phi must have n rows");
    for (const auto& row : phi) {
      if (!row.is_array() || row.size() != r.classes.size())
        malformed(path, "phi rows must match the class list");
      for (const auto& v : row) r.phi.push_back(v.get<double>());
    }
    if (contrast) {
      if (j.contains("contrast")) {
        contrast->gt = j.at("contrast").at("gt").get<int>();
        contrast->pt = j.at("contrast").at("pt").get<int>();
        contrast->delta = j.at("contrast").at("delta").get<std::vector<double>>();
      } else {
        contrast->delta.clear();
      }
    }
  } catch (const json::exception& e) {
    malformed(path, std::string("unexpected document shape: ") + e.what());
  }
  if (r.n < 1 || r.classes.empty() || r.evidential.size() != r.classes.size())
    malformed(path, "inconsistent result dimensions");
  return r;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  std::string out;
  out += "{\n";
  out += "  \"format\": \"" + std::string(kManifestFormat) + "\",\n";
  out += "  \"command\": \"" + manifest.command + "\",\n";
  out += "  \"flags\": {\n";
  for (size_t i = 0; i < manifest.flags.size(); ++i) {
    out += "    \"" + manifest.flags[i].first + "\": \"" + manifest.flags[i].second + "\"";
    out += i + 1 < manifest.flags.size() ? ",\n" : "\n";
  }
  out += "  },\n";
  if (!manifest.model_digest.empty())
    out += "  \"model_digest\": \"sha256:" + manifest.model_digest + "\",\n";
  if (!manifest.features_digest.empty())
    out += "  \"features_digest\": \"sha256:" + manifest.features_digest + "\",\n";
  out += "  \"model_calls\": " + std::to_string(manifest.model_calls) + ",\n";
  out += "  \"wall_time_ms\": " + json_number(manifest.wall_time_ms) + "\n";
  out += "}\n";
  atomic_write_text(path, out);
}

std::string content_digest(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw IoError("digest context allocation failed");
  bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("digest computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string file_digest(const std::string& path) { return content_digest(read_all(path)); }

}  // namespace esv
