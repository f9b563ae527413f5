#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tdann/errors.hpp"
#include "tdann/harness.hpp"

using namespace tdann;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.data.generator = ShiftGenerator::two_moons;
  cfg.data.rotation_deg = 30.0;
  cfg.data.noise_sigma = 0.1;
  cfg.data.n_source = 60;
  cfg.data.n_target = 60;
  cfg.data.n_val = 40;
  cfg.data.seed = 3;
  cfg.methods = {"source_only"};
  cfg.fractions = {1.0};
  cfg.seeds = {1};
  cfg.net.input_dim = 2;
  cfg.net.feature_dim = 6;
  cfg.net.label_hidden = {};
  cfg.net.domain_hidden = {6};
  cfg.net.num_classes = 2;
  cfg.train.lr = 0.1;
  cfg.train.momentum = 0.9;
  cfg.train.batch_size = 16;
  cfg.train.steps_per_cycle = 60;
  cfg.train.c_unlabeled_star = 0.002;
  cfg.out_dir = out_dir;
  return cfg;
}

RunResult mk(const std::string& method, double fraction, std::uint64_t seed, double acc) {
  RunResult r;
  r.method = method;
  r.fraction = fraction;
  r.seed = seed;
  r.acc_target_test = acc;
  return r;
}

}  // namespace

TEST_CASE("run_experiment produces keyed results and is idempotent") {
  TempDir dir("tdann_harness_test");
  ExperimentConfig cfg = tiny_config(dir.path.string());

  SUBCASE("single method, fraction, seed gives exactly one result") {
    auto results = run_experiment(cfg);
    REQUIRE(results.size() == 1);
    CHECK(results[0].status == "ok");
    CHECK(results[0].method == "source_only");
    CHECK(results[0].acc_target_test >= 0.0);
    CHECK(results[0].acc_target_test <= 1.0);
    CHECK(fs::exists(results[0].trace_path));
    CHECK(nlohmann::json::parse(std::ifstream(results[0].trace_path)).contains("cycles"));
  }

  SUBCASE("rerun recomputes nothing and appends nothing") {
    auto first = run_experiment(cfg);
    const auto csv_path = dir.path / "results.csv";
    std::uintmax_t size_after_first = fs::file_size(csv_path);
    auto mtime = fs::last_write_time(csv_path);

    auto second = run_experiment(cfg);
    CHECK(second.size() == first.size());
    CHECK(fs::file_size(csv_path) == size_after_first);
    CHECK(fs::last_write_time(csv_path) == mtime);
    CHECK(second[0].wall_time_sec == first[0].wall_time_sec);  // loaded, not re-run
  }

  SUBCASE("grid multiplies out") {
    cfg.methods = {"source_only", "dann"};
    cfg.fractions = {1.0, 0.8};
    cfg.seeds = {1, 2};
    auto results = run_experiment(cfg);
    CHECK(results.size() == 8);
    auto rows = read_results_csv((dir.path / "results.csv").string());
    CHECK(rows.size() == 8);
  }

  SUBCASE("a failing run is recorded and the rest continue") {
    cfg.methods = {"target_only", "source_only"};
    cfg.data.n_val = 0;  // target_only has nothing to train on
    auto results = run_experiment(cfg);
    REQUIRE(results.size() == 2);
    CHECK(results[0].status.rfind("failed:", 0) == 0);
    // source_only needs a labeled target test set to report accuracy
    CHECK(results[1].status.rfind("failed:", 0) == 0);
  }
}

TEST_CASE("results CSV round-trip and exact header") {
  TempDir dir("tdann_harness_csv");
  ExperimentConfig cfg = tiny_config(dir.path.string());
  run_experiment(cfg);
  std::ifstream in(dir.path / "results.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "method,fraction,seed,acc_target_test,acc_source_dev,dhat,wall_time_sec");
  auto rows = read_results_csv((dir.path / "results.csv").string());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "source_only");
  CHECK(rows[0].fraction == 1.0);
}

TEST_CASE("compare") {
  SUBCASE("identical accuracies give zero improvement") {
    std::vector<RunResult> rows = {mk("dann", 1.0, 1, 0.8), mk("transdann", 1.0, 1, 0.8)};
    Comparison c = compare(rows);
    CHECK(c.max_improvement_pct == doctest::Approx(0.0));
    CHECK(c.missing_pairs.empty());
  }
  SUBCASE("five percent improvement") {
    std::vector<RunResult> rows = {mk("dann", 0.8, 1, 0.80), mk("transdann", 0.8, 1, 0.84)};
    Comparison c = compare(rows);
    CHECK(c.max_improvement_pct == doctest::Approx(5.0));
  }
  SUBCASE("max over fractions, mean over seeds") {
    std::vector<RunResult> rows = {
        mk("dann", 1.0, 1, 0.90), mk("transdann", 1.0, 1, 0.90),
        mk("dann", 0.5, 1, 0.70), mk("dann", 0.5, 2, 0.80),
        mk("transdann", 0.5, 1, 0.80), mk("transdann", 0.5, 2, 0.85),
    };
    Comparison c = compare(rows);
    // means at 0.5: dann 0.75, transdann 0.825 -> +10%
    CHECK(c.max_improvement_pct == doctest::Approx(10.0));
  }
  SUBCASE("missing pairs listed and excluded") {
    std::vector<RunResult> rows = {mk("dann", 1.0, 1, 0.9), mk("dann", 0.5, 2, 0.7),
                                   mk("transdann", 1.0, 1, 0.9)};
    Comparison c = compare(rows);
    REQUIRE(c.missing_pairs.size() == 1);
    CHECK(c.missing_pairs[0].find("seed=2") != std::string::npos);
    CHECK(c.missing_pairs[0].find("transdann") != std::string::npos);
  }
  SUBCASE("output is invariant to row order") {
    std::vector<RunResult> rows = {
        mk("dann", 1.0, 1, 0.9),      mk("transdann", 1.0, 1, 0.92),
        mk("dann", 0.5, 1, 0.7),      mk("transdann", 0.5, 1, 0.8),
        mk("source_only", 1.0, 1, 0.6),
    };
    Comparison a = compare(rows);
    std::reverse(rows.begin(), rows.end());
    Comparison b = compare(rows);
    CHECK(a.table == b.table);
    CHECK(a.csv == b.csv);
    CHECK(a.max_improvement_pct == b.max_improvement_pct);
  }
}

TEST_CASE("plot series") {
  std::vector<RunResult> rows;
  for (double f : {1.0, 0.95, 0.9, 0.85, 0.8}) {
    for (std::uint64_t s : {1ULL, 2ULL}) {
      rows.push_back(mk("dann", f, s, 0.7 + 0.1 * f + 0.01 * double(s)));
      rows.push_back(mk("transdann", f, s, 0.75 + 0.1 * f + 0.01 * double(s)));
    }
  }

  SUBCASE("csv has one row per fraction and mean/sd per method") {
    const std::string csv = plot_series_csv(rows, "acc_target_test");
    std::istringstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "fraction,dann_mean,dann_sd,transdann_mean,transdann_sd");
    std::size_t data_rows = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++data_rows;
    CHECK(data_rows == 5);
  }

  SUBCASE("constant metric gives a flat series") {
    std::vector<RunResult> flat = {mk("dann", 1.0, 1, 0.5), mk("dann", 0.8, 1, 0.5)};
    const std::string csv = plot_series_csv(flat, "acc_target_test");
    CHECK(csv.find("0.5,0") != std::string::npos);
  }

  SUBCASE("unknown metric is a usage error") {
    CHECK_THROWS_AS(plot_series_csv(rows, "nope"), ContractError);
  }

  SUBCASE("svg is well-formed markup") {
    const std::string svg = plot_series_svg(rows, "acc_target_test");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    // tag balance: every opened tag is closed or self-closed
    std::size_t open_tags = 0, close_tags = 0, self_closed = 0;
    for (std::size_t i = 0; i + 1 < svg.size(); ++i) {
      if (svg[i] == '<' && svg[i + 1] == '/') ++close_tags;
      else if (svg[i] == '<' && svg[i + 1] != '?') ++open_tags;
      if (svg[i] == '/' && svg[i + 1] == '>') ++self_closed;
    }
    CHECK(open_tags == close_tags + self_closed);
  }
}

TEST_CASE("experiment config json round-trip and env override") {
  TempDir dir("tdann_cfg_test");
  ExperimentConfig cfg = tiny_config((dir.path / "out").string());
  const auto cfg_path = dir.path / "cfg.json";
  {
    std::ofstream out(cfg_path);
    out << cfg.to_json();
  }
  ExperimentConfig loaded = ExperimentConfig::from_json_file(cfg_path.string());
  CHECK(loaded.data.n_source == cfg.data.n_source);
  CHECK(loaded.methods == cfg.methods);
  CHECK(loaded.fractions == cfg.fractions);
  CHECK(loaded.net.feature_dim == cfg.net.feature_dim);
  CHECK(loaded.train.steps_per_cycle == cfg.train.steps_per_cycle);
  CHECK(loaded.out_dir == cfg.out_dir);

  setenv("TDANN_OUT_DIR", (dir.path / "elsewhere").string().c_str(), 1);
  ExperimentConfig overridden = ExperimentConfig::from_json_file(cfg_path.string());
  CHECK(overridden.out_dir == (dir.path / "elsewhere").string());
  unsetenv("TDANN_OUT_DIR");

  SUBCASE("bad method rejected") {
    std::ofstream out(cfg_path);
    out << R"({"methods": ["nope"], "data": {"n_source": 10}})";
    out.close();
    CHECK_THROWS_AS(ExperimentConfig::from_json_file(cfg_path.string()), ContractError);
  }
}

// The thesis-shaped benchmark: the transdann-over-dann improvement should
// concentrate at low label-supply fractions (at full supply both methods
// have enough labels and the gap closes).
TEST_CASE("improvement concentrates at low label fractions") {
  TempDir dir("tdann_harness_shape");
  ExperimentConfig cfg;
  cfg.data.generator = ShiftGenerator::two_moons;
  cfg.data.rotation_deg = 35.0;
  cfg.data.noise_sigma = 0.1;
  cfg.data.n_source = 200;
  cfg.data.n_target = 200;
  cfg.data.n_val = 800;
  cfg.data.seed = 1000;
  cfg.methods = {"dann", "transdann"};
  cfg.fractions = {1.0, 0.1};
  cfg.seeds = {1, 2, 3};
  cfg.net.input_dim = 2;
  cfg.net.feature_dim = 15;
  cfg.net.label_hidden = {};
  cfg.net.domain_hidden = {16};
  cfg.train.lr = 0.1;
  cfg.train.momentum = 0.9;
  cfg.train.batch_size = 64;
  cfg.train.steps_per_cycle = 300;
  cfg.train.lambda_adapt_max = 1.0;
  cfg.train.c_unlabeled_star = 4.0;
  cfg.out_dir = dir.path.string();

  auto results = run_experiment(cfg);
  REQUIRE(results.size() == 12);
  auto mean_acc = [&](const std::string& method, double fraction) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : results) {
      if (r.status == "ok" && r.method == method && r.fraction == fraction) {
        s += r.acc_target_test;
        ++n;
      }
    }
    REQUIRE(n == 3);
    return s / n;
  };
  const double gap_full = mean_acc("transdann", 1.0) - mean_acc("dann", 1.0);
  const double gap_scarce = mean_acc("transdann", 0.1) - mean_acc("dann", 0.1);
  CHECK(gap_scarce > gap_full);
  CHECK(gap_scarce > 0.0);
  CHECK(compare(results).max_improvement_pct > 0.0);
}

TEST_CASE("dataset hash keys on content") {
  ShiftSpec spec;
  spec.n_source = 20;
  spec.n_target = 20;
  spec.n_val = 10;
  spec.seed = 1;
  ShiftedData a = generate_shifted(spec);
  spec.seed = 2;
  ShiftedData b = generate_shifted(spec);
  CHECK(dataset_hash(a.source, a.target, a.target_val) ==
        dataset_hash(a.source, a.target, a.target_val));
  CHECK(dataset_hash(a.source, a.target, a.target_val) !=
        dataset_hash(b.source, b.target, b.target_val));
}
