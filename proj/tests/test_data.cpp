#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "qtl/data.hpp"
#include "qtl/metrics.hpp"

using namespace qtl;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("data");

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("pgm round trip preserves bytes") {
  TempDir dir("qtl_pgm_rt");
  std::vector<float> img(128 * 128);
  Rng rng(1);
  for (auto& v : img) v = static_cast<float>(rng.uniform());
  const std::string path = (dir.path / "x.pgm").string();
  write_pgm(path, img, 128, 128);
  const RawImage back = read_pgm(path);
  CHECK(back.width == 128);
  CHECK(back.height == 128);
  for (size_t i = 0; i < img.size(); ++i)
    CHECK(back.pixels[i] == static_cast<float>(std::lround(std::min(std::max(img[i], 0.0f), 1.0f) * 255.0f)));
}

TEST_CASE("preprocess: identity resize, constants, and mean preservation") {
  RawImage same;
  same.width = same.height = 128;
  same.pixels.assign(128 * 128, 0.0f);
  Rng rng(2);
  for (auto& v : same.pixels) v = static_cast<float>(rng.uniform(0.0, 255.0));
  const std::vector<float> out = preprocess(same);
  for (size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == doctest::Approx(same.pixels[i] / 255.0f).epsilon(1e-7));

  RawImage constant;
  constant.width = constant.height = 77;
  constant.pixels.assign(77 * 77, 150.0f);
  for (float v : preprocess(constant)) CHECK(v == doctest::Approx(150.0f / 255.0f).epsilon(1e-7));

  RawImage big;
  big.width = big.height = 256;
  big.pixels.assign(256 * 256, 42.0f);
  double mean = 0;
  for (float v : preprocess(big)) mean += v;
  mean /= (128.0 * 128.0);
  CHECK(mean == doctest::Approx(42.0 / 255.0).epsilon(1e-6));
}

TEST_CASE("preprocess converts RGB via luminance and is idempotent") {
  RawImage rgb;
  rgb.width = 2;
  rgb.height = 1;
  rgb.channels = 3;
  rgb.pixels = {255, 0, 0, 0, 255, 0};
  const std::vector<float> gray = preprocess(rgb);
  // both output pixels interpolate between the two inputs; corners are exact
  CHECK(gray.front() == doctest::Approx(0.299).epsilon(1e-6));
  CHECK(gray.back() == doctest::Approx(0.587).epsilon(1e-6));

  RawImage once;
  once.width = once.height = 50;
  once.pixels.assign(50 * 50, 0.0f);
  Rng rng(3);
  for (auto& v : once.pixels) v = static_cast<float>(rng.uniform(0.0, 255.0));
  const std::vector<float> first = preprocess(once);
  RawImage again;
  again.width = again.height = 128;
  again.pixels.resize(first.size());
  for (size_t i = 0; i < first.size(); ++i) again.pixels[i] = first[i] * 255.0f;
  const std::vector<float> second = preprocess(again);
  for (size_t i = 0; i < first.size(); ++i) CHECK(std::abs(first[i] - second[i]) <= 1e-6);

  RawImage zero;
  zero.width = 0;
  zero.height = 4;
  CHECK_THROWS_AS(preprocess(zero), DataError);
}

TEST_CASE("manifest loading: empty, valid, duplicates, and errors") {
  TempDir dir("qtl_manifest");
  write_pgm((dir.path / "a.pgm").string(), std::vector<float>(64 * 64, 0.5f), 64, 64);

  auto write_manifest = [&](const std::string& body) {
    std::ofstream out(dir.path / "manifest.csv", std::ios::binary);
    out << "path,patient_id,label\n" << body;
  };

  write_manifest("");
  CHECK(load_dataset((dir.path / "manifest.csv").string()).empty());

  write_manifest("a.pgm,3,1\n");
  Dataset one = load_dataset((dir.path / "manifest.csv").string());
  REQUIRE(one.size() == 1);
  CHECK(one.samples[0].patient_id == 3);
  CHECK(one.samples[0].label == 1);
  CHECK(one.samples[0].pixels.size() == 128 * 128);
  for (float v : one.samples[0].pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }

  write_manifest("a.pgm,3,1\na.pgm,4,0\n");
  CHECK(load_dataset((dir.path / "manifest.csv").string()).size() == 2);

  write_manifest("missing.pgm,3,1\n");
  CHECK_THROWS_WITH_AS(load_dataset((dir.path / "manifest.csv").string()),
                       doctest::Contains("row 2"), DataError);

  write_manifest("a.pgm,3,7\n");
  CHECK_THROWS_WITH_AS(load_dataset((dir.path / "manifest.csv").string()),
                       doctest::Contains("label"), DataError);

  std::ofstream(dir.path / "bad.pgm") << "P2\n2 2\n255\n0 0 0 0\n";
  write_manifest("bad.pgm,3,1\n");
  CHECK_THROWS_AS(load_dataset((dir.path / "manifest.csv").string()), DataError);

  std::ofstream(dir.path / "trunc.pgm", std::ios::binary) << "P5\n64 64\n255\nxx";
  write_manifest("trunc.pgm,3,1\n");
  CHECK_THROWS_WITH_AS(load_dataset((dir.path / "manifest.csv").string()),
                       doctest::Contains("truncated"), DataError);
}

TEST_CASE("split: fraction arithmetic, degenerate input, determinism") {
  std::vector<int> ids;
  for (int p = 1; p <= 12; ++p)
    for (int i = 0; i < 3; ++i) ids.push_back(p);  // patients 1..12

  const SplitAssignment s = split_by_patient(ids, 5);
  std::set<int> test_patients;
  for (int idx : s.test) test_patients.insert(ids[idx]);
  CHECK(test_patients.size() == 3);  // floor(0.3 * 10)
  CHECK_FALSE(test_patients.count(1));
  CHECK_FALSE(test_patients.count(2));
  CHECK(s.train.size() + s.test.size() == ids.size());

  CHECK_THROWS_AS(split_by_patient({1, 1, 2, 2}, 0), ConfigError);
  CHECK_THROWS_AS(split_by_patient({}, 0), ConfigError);

  const SplitAssignment again = split_by_patient(ids, 5);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  int distinct = 0;
  for (uint64_t seed = 10; seed < 20; ++seed)
    if (split_by_patient(ids, seed).test != s.test) ++distinct;
  CHECK(distinct > 0);
}

TEST_CASE("split keeps every seed leakage-free with IDs 1 and 2 in train") {
  Rng rng(77);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<int> ids;
    const int n_patients = 5 + static_cast<int>(rng.below(10));
    for (int p = 1; p <= n_patients; ++p)
      for (uint64_t i = 0; i <= rng.below(4); ++i) ids.push_back(p);
    const SplitAssignment s = split_by_patient(ids, seed);
    std::set<int> train_p, test_p;
    for (int idx : s.train) train_p.insert(ids[idx]);
    for (int idx : s.test) test_p.insert(ids[idx]);
    for (int p : test_p) CHECK_FALSE(train_p.count(p));
    CHECK_FALSE(test_p.count(1));
    CHECK_FALSE(test_p.count(2));
  }
}

TEST_CASE("synth without signal is class-indistinguishable; with signal trivially separable") {
  // signal 0: a pixel-mean threshold classifier has AUC near 1/2
  const Dataset none = synth_generate(25, 20, 3, 0.0);
  REQUIRE(none.size() == 500);
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& s : none.samples) {
    double m = 0;
    for (float v : s.pixels) m += v;
    scores.push_back(m / s.pixels.size());
    labels.push_back(s.label);
  }
  CHECK(auc(scores, labels) == doctest::Approx(0.5).epsilon(0.1));

  // signal 0.8: the five-line threshold oracle clears 95 percent accuracy
  const Dataset strong = synth_generate(12, 12, 4, 0.8);
  std::vector<double> means(strong.size());
  double sum0 = 0, sum1 = 0;
  int n0 = 0, n1 = 0;
  for (size_t i = 0; i < strong.size(); ++i) {
    double m = 0;
    for (float v : strong.samples[i].pixels) m += v;
    means[i] = m / strong.samples[i].pixels.size();
    (strong.samples[i].label ? sum1 : sum0) += means[i];
    (strong.samples[i].label ? n1 : n0)++;
  }
  const double threshold = 0.5 * (sum0 / n0 + sum1 / n1);
  int correct = 0;
  for (size_t i = 0; i < strong.size(); ++i)
    correct += (means[i] >= threshold ? 1 : 0) == strong.samples[i].label;
  CHECK(static_cast<double>(correct) / strong.size() >= 0.95);
}

TEST_CASE("synth is byte-identical per seed and matches its own manifest on disk") {
  TempDir dir("qtl_synth");
  const Dataset mem = synth_generate(6, 2, 9, 0.5);
  const Dataset disk = synth_generate(6, 2, 9, 0.5, dir.path.string());
  const Dataset reloaded = load_dataset((dir.path / "manifest.csv").string());
  REQUIRE(mem.size() == disk.size());
  REQUIRE(mem.size() == reloaded.size());
  for (size_t i = 0; i < mem.size(); ++i) {
    CHECK(mem.samples[i].pixels == disk.samples[i].pixels);
    CHECK(mem.samples[i].pixels == reloaded.samples[i].pixels);
    CHECK(mem.samples[i].label == reloaded.samples[i].label);
    CHECK(mem.samples[i].patient_id == reloaded.samples[i].patient_id);
  }

  CHECK(synth_generate(6, 2, 10, 0.5).samples[0].pixels != mem.samples[0].pixels);
  CHECK_THROWS_AS(synth_generate(3, 2, 0, 0.5), ConfigError);

  // patients 1 and 2 carry the two classes
  std::set<int> class_of_1, class_of_2;
  for (const auto& s : mem.samples) {
    if (s.patient_id == 1) class_of_1.insert(s.label);
    if (s.patient_id == 2) class_of_2.insert(s.label);
  }
  CHECK(class_of_1 == std::set<int>{0});
  CHECK(class_of_2 == std::set<int>{1});
}

TEST_SUITE_END();
