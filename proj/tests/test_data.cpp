#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "tdann/data.hpp"
#include "tdann/errors.hpp"

using namespace tdann;
namespace fs = std::filesystem;

namespace {

ShiftSpec moons_spec(std::size_t n, std::uint64_t seed, double rot = 0.0) {
  ShiftSpec spec;
  spec.generator = ShiftGenerator::two_moons;
  spec.rotation_deg = rot;
  spec.noise_sigma = 0.1;
  spec.n_source = n;
  spec.n_target = n;
  spec.n_val = n / 2;
  spec.seed = seed;
  return spec;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("generate_shifted basic properties") {
  SUBCASE("same seed twice is bit-identical") {
    ShiftedData a = generate_shifted(moons_spec(100, 42, 30.0));
    ShiftedData b = generate_shifted(moons_spec(100, 42, 30.0));
    CHECK(a.source.x.value() == b.source.x.value());
    CHECK(a.source.y == b.source.y);
    CHECK(a.target.x.value() == b.target.x.value());
    CHECK(a.target_val.x.value() == b.target_val.x.value());
    CHECK(a.target_val.y == b.target_val.y);
  }
  SUBCASE("different seeds differ") {
    ShiftedData a = generate_shifted(moons_spec(100, 1));
    ShiftedData b = generate_shifted(moons_spec(100, 2));
    CHECK(a.source.x.value() != b.source.x.value());
  }
  SUBCASE("class balance within 5% of half for n >= 500") {
    ShiftedData d = generate_shifted(moons_spec(500, 7));
    std::size_t ones = 0;
    for (int y : d.source.y) ones += static_cast<std::size_t>(y);
    CHECK(std::abs(static_cast<double>(ones) / 500.0 - 0.5) <= 0.05);
  }
  SUBCASE("labels preserved through the rigid transform") {
    // with zero noise an example's label is a function of its pre-transform
    // position; rotating back must land class-0 points on the upper moon
    ShiftSpec spec = moons_spec(40, 3, 90.0);
    spec.noise_sigma = 0.0;
    ShiftedData d = generate_shifted(spec);
    for (std::size_t i = 0; i < d.target_val.size(); ++i) {
      const double x = d.target_val.x.at(i, 0), y = d.target_val.x.at(i, 1);
      // undo the 90 degree rotation: (x, y) -> (y, -x)
      const double oy = -x;
      (void)y;
      if (d.target_val.y[i] == 0) CHECK(oy >= -1e-9);  // upper moon has sin(t) >= 0
    }
  }
  SUBCASE("gaussian pair centers") {
    ShiftSpec spec;
    spec.generator = ShiftGenerator::gaussian_pair;
    spec.noise_sigma = 0.0;
    spec.n_source = 10;
    spec.seed = 5;
    ShiftedData d = generate_shifted(spec);
    for (std::size_t i = 0; i < d.source.size(); ++i) {
      CHECK(d.source.x.at(i, 0) == (d.source.y[i] == 0 ? -1.0 : 1.0));
    }
  }
}

TEST_CASE("IDX fixture parses to expected shapes and values") {
  // byte-for-byte fixture: 4 images of 2x3 pixels, and 4 labels
  const unsigned char images[] = {
      0x00, 0x00, 0x08, 0x03,              // magic for images
      0x00, 0x00, 0x00, 0x04,              // count 4
      0x00, 0x00, 0x00, 0x02,              // rows 2
      0x00, 0x00, 0x00, 0x03,              // cols 3
      0,    51,   102,  153,  204, 255,    // image 0
      255,  204,  153,  102,  51,  0,      // image 1
      0,    0,    0,    0,    0,   0,      // image 2
      255,  255,  255,  255,  255, 255,    // image 3
  };
  const unsigned char labels[] = {
      0x00, 0x00, 0x08, 0x01,  // magic for labels
      0x00, 0x00, 0x00, 0x04,  // count 4
      7,    2,    0,    9,
  };
  const auto img_path = temp_file("tdann_idx_images");
  const auto lab_path = temp_file("tdann_idx_labels");
  {
    std::ofstream f(img_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(images), sizeof(images));
  }
  {
    std::ofstream f(lab_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(labels), sizeof(labels));
  }

  LabeledSet set = load_idx(img_path.string(), lab_path.string());
  CHECK(set.size() == 4);
  CHECK(set.dim() == 6);
  CHECK(set.y == std::vector<int>{7, 2, 0, 9});
  CHECK(set.x.at(0, 0) == 0.0);
  CHECK(set.x.at(0, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-15));
  CHECK(set.x.at(3, 5) == 1.0);
  for (double v : set.x.value()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  SUBCASE("unlabeled overload") {
    UnlabeledSet u = load_idx(img_path.string());
    CHECK(u.size() == 4);
    CHECK(u.dim() == 6);
  }
  SUBCASE("bad magic names the offset") {
    CHECK_THROWS_WITH_AS(load_idx_images(lab_path.string()), doctest::Contains("byte 0"),
                         FormatError);
  }
  SUBCASE("truncated payload reports the byte offset") {
    const auto trunc_path = temp_file("tdann_idx_trunc");
    std::ofstream f(trunc_path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(images), sizeof(images) - 10);
    f.close();
    CHECK_THROWS_AS(load_idx_images(trunc_path.string()), FormatError);
    fs::remove(trunc_path);
  }
  fs::remove(img_path);
  fs::remove(lab_path);
}

TEST_CASE("subsample_labels") {
  ShiftedData d = generate_shifted(moons_spec(100, 11));
  SUBCASE("fraction one is the identity up to order") {
    LabeledSet s = subsample_labels(d.source, 1.0, 5);
    CHECK(s.size() == 100);
    std::multiset<double> a(d.source.x.value().begin(), d.source.x.value().end());
    std::multiset<double> b(s.x.value().begin(), s.x.value().end());
    CHECK(a == b);
  }
  SUBCASE("fraction 0.8 keeps 80 of 100") {
    CHECK(subsample_labels(d.source, 0.8, 5).size() == 80);
  }
  SUBCASE("stratified within one of proportional") {
    LabeledSet s = subsample_labels(d.source, 0.37, 5);
    std::map<int, int> full, sub;
    for (int y : d.source.y) full[y] += 1;
    for (int y : s.y) sub[y] += 1;
    for (const auto& [cls, count] : full) {
      const double expected = 0.37 * count;
      CHECK(std::abs(sub[cls] - expected) <= 1.0);
    }
  }
  SUBCASE("no duplicates") {
    LabeledSet s = subsample_labels(d.source, 0.5, 9);
    std::multiset<std::pair<double, double>> rows;
    for (std::size_t i = 0; i < s.size(); ++i) rows.insert({s.x.at(i, 0), s.x.at(i, 1)});
    std::multiset<std::pair<double, double>> source_rows;
    for (std::size_t i = 0; i < d.source.size(); ++i)
      source_rows.insert({d.source.x.at(i, 0), d.source.x.at(i, 1)});
    for (const auto& r : rows) CHECK(source_rows.count(r) >= rows.count(r));
  }
  SUBCASE("contract errors") {
    CHECK_THROWS_AS(subsample_labels(d.source, 0.0, 1), ContractError);
    CHECK_THROWS_AS(subsample_labels(d.source, 1.5, 1), ContractError);
    CHECK_THROWS_AS(subsample_labels(d.source, 0.001, 1), ContractError);  // floor -> 0
  }
}

TEST_CASE("split") {
  ShiftedData d = generate_shifted(moons_spec(100, 13));
  SUBCASE("paper ratios give 70/10/20 for n=100") {
    SplitSets s = split(d.source, {0.7, 0.1, 0.2}, 3);
    CHECK(s.train.size() == 70);
    CHECK(s.dev.size() == 10);
    CHECK(s.test.size() == 20);
  }
  SUBCASE("union is the original multiset") {
    SplitSets s = split(d.source, {0.7, 0.1, 0.2}, 3);
    std::multiset<double> original(d.source.x.value().begin(), d.source.x.value().end());
    std::multiset<double> merged;
    for (const LabeledSet* part : {&s.train, &s.dev, &s.test}) {
      merged.insert(part->x.value().begin(), part->x.value().end());
    }
    CHECK(original == merged);
  }
  SUBCASE("deterministic per seed") {
    SplitSets a = split(d.source, {0.7, 0.1, 0.2}, 3);
    SplitSets b = split(d.source, {0.7, 0.1, 0.2}, 3);
    CHECK(a.train.x.value() == b.train.x.value());
    CHECK(a.test.y == b.test.y);
  }
  SUBCASE("ratios must sum to one") {
    CHECK_THROWS_AS(split(d.source, {0.7, 0.1, 0.1}, 3), ContractError);
  }
}

TEST_CASE("CSV interchange round-trips exactly") {
  ShiftedData d = generate_shifted(moons_spec(30, 17, 15.0));
  const auto labeled_path = temp_file("tdann_labeled.csv");
  const auto unlabeled_path = temp_file("tdann_unlabeled.csv");

  write_csv(labeled_path.string(), d.source);
  LabeledSet back = read_labeled_csv(labeled_path.string());
  CHECK(back.size() == d.source.size());
  CHECK(back.y == d.source.y);
  CHECK(back.x.value() == d.source.x.value());  // value-identical, not approximate

  write_csv(unlabeled_path.string(), d.target);
  UnlabeledSet uback = read_unlabeled_csv(unlabeled_path.string());
  CHECK(uback.x.value() == d.target.x.value());

  SUBCASE("header is the documented interchange header") {
    std::ifstream in(labeled_path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "f0,f1,label");
  }
  SUBCASE("labeled reader rejects unlabeled files") {
    CHECK_THROWS_AS(read_labeled_csv(unlabeled_path.string()), FormatError);
  }
  fs::remove(labeled_path);
  fs::remove(unlabeled_path);
}

TEST_CASE("corrupt_images inverts and stays in range") {
  Tensor x = Tensor::from({2, 3}, {0.0, 0.25, 0.5, 0.75, 1.0, 0.1});
  SUBCASE("pure inversion at zero noise") {
    Tensor c = corrupt_images(x, 0.0, 1);
    CHECK(c.value() == std::vector<double>{1.0, 0.75, 0.5, 0.25, 0.0, 0.9});
  }
  SUBCASE("noisy output clamped to [0,1] and deterministic") {
    Tensor a = corrupt_images(x, 0.5, 7);
    Tensor b = corrupt_images(x, 0.5, 7);
    CHECK(a.value() == b.value());
    for (double v : a.value()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("derive_seed separates salts and bases") {
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
  CHECK(derive_seed(1, 1) == derive_seed(1, 1));
}
