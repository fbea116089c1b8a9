#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "esv/io.hpp"
#include "esv/model_spec.hpp"
#include "support/builders.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = ESV_CLI_PATH;
const std::string kFixtures = ESV_FIXTURE_DIR;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("esv_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = kCli + " " + args;
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("attribute exact reproduces the two element hand fixture") {
  TempDir dir;
  auto out = dir.file("pair.json");
  int code = run("--quiet attribute --features " + kFixtures + "/pair_minimal.features.txt" +
                 " --model " + kFixtures + "/pair_minimal.model.json" +
                 " --mode exact --classes all --output " + out);
  REQUIRE(code == 0);

  auto r = esv::read_result(out);
  CHECK(r.n == 2);
  CHECK(r.classes == std::vector<int>{0});
  CHECK(r.phi_at(0, 0) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(r.phi_at(1, 0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.evidential[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Manifest sits next to the output and records content digests.
  auto manifest = slurp(out + ".manifest.json");
  CHECK(manifest.find("\"command\": \"attribute\"") != std::string::npos);
  CHECK(manifest.find("sha256:") != std::string::npos);
  CHECK(manifest.find("--mode") != std::string::npos);
}

TEST_CASE("attribute with classes all emits one column per class") {
  TempDir dir;
  std::mt19937_64 rng(404);
  auto spec = esvtest::linear_spec(rng, 3, 2);
  auto model_path = dir.file("model.json");
  esv::save_model_spec(spec, model_path);
  auto x = esvtest::random_features(rng, 4, 2);
  auto features_path = dir.file("input.features.txt");
  esv::write_features_text(features_path, x);

  auto out = dir.file("all.json");
  REQUIRE(run("--quiet attribute --features " + features_path + " --model " + model_path +
              " --mode exact --classes all --output " + out) == 0);
  auto r = esv::read_result(out);
  CHECK(r.classes == std::vector<int>{0, 1, 2});
  CHECK(r.phi.size() == 12);

  auto subset = dir.file("subset.json");
  REQUIRE(run("--quiet attribute --features " + features_path + " --model " + model_path +
              " --mode exact --classes 2,0 --output " + subset) == 0);
  auto rs = esv::read_result(subset);
  CHECK(rs.classes == std::vector<int>{0, 2});
}

TEST_CASE("approx reruns with one seed are byte identical") {
  TempDir dir;
  std::mt19937_64 rng(405);
  auto spec = esvtest::per_scale_spec(rng, 2, 1, 3, 4);
  auto model_path = dir.file("model.json");
  esv::save_model_spec(spec, model_path);
  auto x = esvtest::random_features(rng, 9, 1);
  auto features_path = dir.file("input.features.txt");
  esv::write_features_text(features_path, x);

  auto out1 = dir.file("run1.json");
  auto out2 = dir.file("run2.json");
  std::string flags = " --mode approx --m 8 --iterations 3 --seed 123 --classes all ";
  REQUIRE(run("--quiet attribute --features " + features_path + " --model " + model_path +
              flags + "--output " + out1) == 0);
  REQUIRE(run("--quiet attribute --features " + features_path + " --model " + model_path +
              flags + "--output " + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));

  auto out3 = dir.file("run3.json");
  REQUIRE(run("--quiet attribute --features " + features_path + " --model " + model_path +
              " --mode approx --m 8 --iterations 3 --seed 124 --classes all --output " + out3) ==
          0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("contrast emits the delta of the two class columns") {
  TempDir dir;
  std::mt19937_64 rng(406);
  auto spec = esvtest::linear_spec(rng, 2, 2);
  auto model_path = dir.file("model.json");
  esv::save_model_spec(spec, model_path);
  auto x = esvtest::random_features(rng, 5, 2);
  auto features_path = dir.file("input.features.txt");
  esv::write_features_text(features_path, x);

  auto out = dir.file("contrast.json");
  REQUIRE(run("--quiet contrast --features " + features_path + " --model " + model_path +
              " --mode exact --gt 1 --pt 0 --output " + out) == 0);
  esv::ContrastBlock contrast;
  auto r = esv::read_result(out, &contrast);
  CHECK(contrast.gt == 1);
  CHECK(contrast.pt == 0);
  REQUIRE(contrast.delta.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(contrast.delta[i] ==
          doctest::Approx(r.phi_at(i, r.slot_of(1)) - r.phi_at(i, r.slot_of(0))).epsilon(1e-12));

  // Same class on both sides collapses to zeros.
  auto zero_out = dir.file("zero.json");
  REQUIRE(run("--quiet contrast --features " + features_path + " --model " + model_path +
              " --mode exact --gt 1 --pt 1 --output " + zero_out) == 0);
  esv::ContrastBlock zeros;
  esv::read_result(zero_out, &zeros);
  for (double d : zeros.delta) CHECK(d == 0.0);
}

TEST_CASE("ablate walks the negative fixture upward") {
  TempDir dir;
  auto out = dir.file("curve.tsv");
  REQUIRE(run("--quiet ablate --features " + kFixtures + "/ablate_negative.features.txt" +
              " --model " + kFixtures + "/ablate_negative.model.json" +
              " --mode exact --order esv-descending --class 0 --label 0 --output " + out) == 0);
  auto lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 8);  // 3 comments + header + 4 rows
  CHECK(lines[0] == "# esv-ablation/1");
  CHECK(lines[3] == "elements_remaining\tclass_score\tcorrect");

  auto row = [&](int i) {
    std::istringstream in(lines[4 + i]);
    int remaining;
    double score;
    int correct;
    in >> remaining >> score >> correct;
    REQUIRE(!in.fail());
    return std::tuple<int, double, int>(remaining, score, correct);
  };
  auto [rem0, score0, correct0] = row(0);
  CHECK(rem0 == 4);
  CHECK(score0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(correct0 == 1);
  auto [rem1, score1, correct1] = row(1);
  CHECK(rem1 == 3);
  // Highest attribution is the least negative element (-0.1); dropping it
  // still raises the score.
  CHECK(score1 == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(score1 > score0);
  (void)correct1;
}

TEST_CASE("random ablation order is reproducible for a fixed seed") {
  TempDir dir;
  auto out1 = dir.file("c1.tsv");
  auto out2 = dir.file("c2.tsv");
  std::string base = "--quiet ablate --features " + kFixtures +
                     "/ablate_negative.features.txt --model " + kFixtures +
                     "/ablate_negative.model.json --order random --class 0 --label 0 --seed 9 "
                     "--output ";
  REQUIRE(run(base + out1) == 0);
  REQUIRE(run(base + out2) == 0);
  CHECK(slurp(out1) == slurp(out2));
}

TEST_CASE("eval-approx writes the quality grid") {
  TempDir dir;
  std::mt19937_64 rng(407);
  auto spec = esvtest::per_scale_spec(rng, 1, 1, 2, 3);
  auto model_path = dir.file("model.json");
  esv::save_model_spec(spec, model_path);

  auto features_dir = dir.path / "features";
  fs::create_directories(features_dir);
  for (int i = 0; i < 2; ++i) {
    auto x = esvtest::random_features(rng, 6, 1);
    esv::write_features_text((features_dir / ("f" + std::to_string(i) + ".txt")).string(), x);
  }

  auto out = dir.file("grid.tsv");
  REQUIRE(run("--quiet eval-approx --features-dir " + features_dir.string() + " --model " +
              model_path + " --class 0 --m-grid 4,20 --iterations-grid 1 --seeds 1,2 --output " +
              out) == 0);
  auto lines = lines_of(slurp(out));
  REQUIRE(lines.size() == 5);  // 2 comments + header + 2 cells
  CHECK(lines[0] == "# esv-quality/1");
  CHECK(lines[1] == "# inputs_total=2 inputs_evaluated=2");

  std::istringstream saturated(lines[4]);
  int m, iterations;
  double pct, err, slope, r;
  int used, skipped;
  saturated >> m >> iterations >> pct >> err >> slope >> r >> used >> skipped;
  REQUIRE(!saturated.fail());
  CHECK(m == 20);
  CHECK(pct == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(err < 1e-9);
  CHECK(slope == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(used == 4);
  CHECK(skipped == 0);
}

TEST_CASE("error taxonomy maps to exit codes") {
  TempDir dir;
  auto out = dir.file("never.json");

  // Missing feature file: io error, exit 5.
  CHECK(run("--quiet attribute --features " + dir.file("missing.txt") + " --model " + kFixtures +
            "/pair_minimal.model.json --output " + out + " 2>/dev/null") == 5);

  // Malformed feature file: validation error, exit 2.
  auto bad = dir.file("bad.features.txt");
  std::ofstream(bad) << "not a header\n";
  CHECK(run("--quiet attribute --features " + bad + " --model " + kFixtures +
            "/pair_minimal.model.json --output " + out + " 2>/dev/null") == 2);

  // Exact mode beyond the exhaustive limit: capacity error, exit 3.
  auto wide = dir.file("wide.features.txt");
  {
    std::ofstream f(wide);
    f << "18 1\n";
    for (int i = 0; i < 18; ++i) f << "0.1\n";
  }
  CHECK(run("--quiet attribute --features " + wide + " --model " + kFixtures +
            "/ablate_negative.model.json --mode exact --output " + out + " 2>/dev/null") == 3);

  // Unknown flags: CLI validation, exit 2.
  CHECK(run("--quiet attribute --bogus 2>/dev/null") == 2);

  // Nothing was written on any failure.
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("error lines name the error class on stderr") {
  TempDir dir;
  auto log = dir.file("stderr.txt");
  run("--quiet attribute --features " + dir.file("missing.txt") + " --model " + kFixtures +
      "/pair_minimal.model.json --output " + dir.file("out.json") + " 2>" + log);
  auto text = slurp(log);
  CHECK(text.rfind("error: io: ", 0) == 0);
  CHECK(lines_of(text).size() == 1);
}

TEST_CASE("status line modes") {
  TempDir dir;
  auto out = dir.file("pair.json");
  auto log = dir.file("stdout.txt");
  std::string base = "attribute --features " + kFixtures + "/pair_minimal.features.txt --model " +
                     kFixtures + "/pair_minimal.model.json --mode exact --output " + out;

  REQUIRE(run("--json " + base + " >" + log) == 0);
  auto text = slurp(log);
  CHECK(text.find("\"status\":\"ok\"") != std::string::npos);
  CHECK(text.find("\"model_calls\":3") != std::string::npos);

  REQUIRE(run("--quiet " + base + " >" + log) == 0);
  CHECK(slurp(log).empty());
}
