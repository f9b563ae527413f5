#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "tdann/data.hpp"
#include "tdann/errors.hpp"
#include "tdann/losses.hpp"
#include "tdann/train.hpp"

using namespace tdann;

namespace {

NetSpec bench_spec() {
  NetSpec spec;
  spec.input_dim = 2;
  spec.feature_dim = 8;
  spec.label_hidden = {};
  spec.domain_hidden = {8};
  spec.num_classes = 2;
  return spec;
}

TrainConfig quick_config(std::uint64_t seed, std::size_t steps = 300) {
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.momentum = 0.9;
  cfg.batch_size = 16;
  cfg.steps_per_cycle = steps;
  cfg.lambda_adapt_max = 1.0;
  cfg.c_label_star = 1.0;
  cfg.c_unlabeled_star = 0.008;  // few cycles: 1e-3 doubling to the cap
  cfg.seed = seed;
  return cfg;
}

DomainData moons_data(std::uint64_t seed, std::size_t n = 64, double rot = 25.0) {
  ShiftSpec spec;
  spec.generator = ShiftGenerator::two_moons;
  spec.rotation_deg = rot;
  spec.noise_sigma = 0.1;
  spec.n_source = n;
  spec.n_target = n;
  spec.n_val = n / 2;
  spec.seed = seed;
  ShiftedData gen = generate_shifted(spec);
  DomainData data;
  data.source_train = std::move(gen.source);
  data.target_train = std::move(gen.target);
  data.target_val = std::move(gen.target_val);
  return data;
}

}  // namespace

TEST_CASE("lambda_schedule") {
  CHECK(lambda_schedule(0.0, 1.0) == 0.0);
  CHECK(lambda_schedule(1.0, 1.0) == doctest::Approx(0.9999092042625951).epsilon(1e-9));
  CHECK(lambda_schedule(0.5, 2.0) == doctest::Approx(2.0 * (2.0 / (1.0 + std::exp(-5.0)) - 1.0)));
  double previous = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = lambda_schedule(i / 100.0, 1.0);
    CHECK(v >= previous);
    previous = v;
  }
  CHECK_THROWS_AS(lambda_schedule(1.5, 1.0), ContractError);
}

TEST_CASE("evaluate") {
  NetSpec spec = bench_spec();
  ModelParams p = init_params(spec, 1);
  SUBCASE("hand-counted accuracy") {
    // force the label head to predict class 1 iff the first input is > 0:
    // zero everything, then wire feature 0 straight through
    for (Tensor t : p.all())
      for (double& v : t.value()) v = 0.0;
    p.theta_f[0].value()[0] = 5.0;                 // x0 -> feature 0 (tanh)
    p.theta_y[0].value()[1] = 5.0;                 // feature 0 -> logit of class 1
    LabeledSet set;
    set.x = Tensor::from({4, 2}, {1.0, 0.0, -1.0, 0.0, 2.0, 0.0, -2.0, 0.0});
    set.y = {1, 0, 1, 1};
    CHECK(evaluate(p, set) == doctest::Approx(0.75));
    set.y = {1, 0, 1, 0};  // every prediction right
    CHECK(evaluate(p, set) == 1.0);
  }
  SUBCASE("constant predictor on a balanced set scores half") {
    for (Tensor t : p.all())
      for (double& v : t.value()) v = 0.0;
    LabeledSet set;
    set.x = Tensor::from({4, 2}, {1.0, 0.0, -1.0, 0.0, 2.0, 0.0, -2.0, 0.0});
    set.y = {0, 1, 0, 1};
    CHECK(evaluate(p, set) == doctest::Approx(0.5));  // ties resolve to class 0
  }
  SUBCASE("empty set rejected") {
    CHECK_THROWS_AS(evaluate(p, LabeledSet{}), ContractError);
  }
}

TEST_CASE("sgd and streams") {
  SUBCASE("lr zero leaves parameters unchanged") {
    NetSpec spec = bench_spec();
    ModelParams p = init_params(spec, 3);
    ModelParams snapshot = p.clone();
    SgdMomentum opt(p.all(), 0.0, 0.9);
    for (Tensor t : p.all())
      for (double& g : t.grad()) g = 1.0;
    opt.step();
    auto a = p.all(), b = snapshot.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
  }
  SUBCASE("index stream covers each epoch exactly once") {
    IndexStream s(5, 9);
    std::vector<int> seen(5, 0);
    for (int i = 0; i < 10; ++i) seen[s.next()] += 1;
    CHECK(seen == std::vector<int>{2, 2, 2, 2, 2});
  }
}

TEST_CASE("train_dann basics") {
  const NetSpec spec = bench_spec();
  DomainData data = moons_data(5);

  SUBCASE("zero steps returns the initial parameters") {
    TrainConfig cfg = quick_config(7, 0);
    auto [params, trace] = train_dann(data, spec, cfg);
    ModelParams fresh = init_params(spec, 7);
    auto a = params.all(), b = fresh.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
  }

  SUBCASE("empty dataset rejected") {
    TrainConfig cfg = quick_config(7);
    DomainData empty;
    empty.target_train = data.target_train;
    CHECK_THROWS_AS(train_dann(empty, spec, cfg), ContractError);
  }

  SUBCASE("parameters stay finite and trace is recorded") {
    TrainConfig cfg = quick_config(8, 200);
    auto [params, trace] = train_dann(data, spec, cfg);
    CHECK(params.all_finite());
    REQUIRE(trace.cycles.size() == 1);
    CHECK(trace.cycles[0].cycle == 0);
    CHECK(trace.cycles[0].acc_val >= 0.0);  // target_val present
  }
}

// With lambda_adapt_max = 0 the whole domain branch is zero-weighted, so
// the trajectory must be bit-identical to plain supervised training of
// G_y(G_f(x)) driven by the same seeded batch streams.
TEST_CASE("train_dann with lambda zero equals plain supervised training") {
  const NetSpec spec = bench_spec();
  DomainData data = moons_data(6);
  TrainConfig cfg = quick_config(11, 150);
  cfg.lambda_adapt_max = 0.0;
  auto [params, trace] = train_dann(data, spec, cfg);

  // independent supervised loop, replicating the documented stream seeding
  ModelParams ref = init_params(spec, cfg.seed);
  IndexStream source_stream(data.source_train.size(), derive_seed(cfg.seed, 1));
  SgdMomentum opt(ref.all(), cfg.lr, cfg.momentum);
  const std::size_t bs = cfg.batch_size / 2;
  for (std::size_t step = 0; step < cfg.steps_per_cycle; ++step) {
    const auto idx = source_stream.take(bs);
    Tensor xb = gather_rows(data.source_train.x, idx);
    std::vector<int> yb(bs);
    for (std::size_t i = 0; i < bs; ++i) yb[i] = data.source_train.y[idx[i]];
    Tape tape;
    Tensor loss = cross_entropy(tape, forward_label(tape, ref, forward_features(tape, ref, xb)), yb);
    tape.backward(loss);
    opt.step();
    opt.zero_grad();
  }

  for (std::size_t i = 0; i < params.theta_f.size(); ++i)
    CHECK(params.theta_f[i].value() == ref.theta_f[i].value());
  for (std::size_t i = 0; i < params.theta_y.size(); ++i)
    CHECK(params.theta_y[i].value() == ref.theta_y[i].value());
  // theta_d never receives a nonzero gradient
  ModelParams fresh = init_params(spec, cfg.seed);
  for (std::size_t i = 0; i < params.theta_d.size(); ++i)
    CHECK(params.theta_d[i].value() == fresh.theta_d[i].value());
}

TEST_CASE("train_dann separates a linearly separable source") {
  NetSpec spec = bench_spec();
  ShiftSpec gen;
  gen.generator = ShiftGenerator::gaussian_pair;
  gen.noise_sigma = 0.25;
  gen.n_source = 120;
  gen.n_target = 120;
  gen.seed = 99;
  ShiftedData d = generate_shifted(gen);  // no shift: target == source distribution
  DomainData data;
  data.source_train = d.source;
  data.target_train = d.target;
  TrainConfig cfg = quick_config(4, 1200);
  auto [params, trace] = train_dann(data, spec, cfg);
  CHECK(evaluate(params, data.source_train) >= 0.99);
}

TEST_CASE("train_transdann schedule, gate and reproducibility") {
  const NetSpec spec = bench_spec();
  DomainData data = moons_data(21, 48);

  SUBCASE("C_u star zero degenerates to the cold-start model") {
    TrainConfig cfg = quick_config(31, 120);
    cfg.c_unlabeled_star = 0.0;
    auto [td_params, td_trace] = train_transdann(data, spec, cfg);
    CHECK(td_trace.cycles.size() == 1);  // cold start only
    auto [dann_params, dann_trace] = train_dann(data, spec, cfg);
    auto a = td_params.all(), b = dann_params.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
  }

  SUBCASE("C_u trace doubles from 1e-3 and caps at C_u star") {
    TrainConfig cfg = quick_config(32, 60);
    cfg.c_unlabeled_star = 0.005;
    auto [params, trace] = train_transdann(data, spec, cfg);
    REQUIRE(trace.cycles.size() == 5);  // cold + 1e-3, 2e-3, 4e-3, 5e-3
    CHECK(trace.cycles[0].c_u == 0.0);
    CHECK(trace.cycles[1].c_u == doctest::Approx(1e-3));
    CHECK(trace.cycles[2].c_u == doctest::Approx(2e-3));
    CHECK(trace.cycles[3].c_u == doctest::Approx(4e-3));
    CHECK(trace.cycles[4].c_u == doctest::Approx(5e-3));
  }

  SUBCASE("C_u star below the floor still runs exactly one cycle") {
    TrainConfig cfg = quick_config(33, 60);
    cfg.c_unlabeled_star = 5e-4;
    auto [params, trace] = train_transdann(data, spec, cfg);
    REQUIRE(trace.cycles.size() == 2);
    CHECK(trace.cycles[1].c_u == doctest::Approx(5e-4));
  }

  SUBCASE("reproducible end to end") {
    TrainConfig cfg = quick_config(34, 80);
    auto [pa, ta] = train_transdann(data, spec, cfg);
    auto [pb, tb] = train_transdann(data, spec, cfg);
    CHECK(ta.to_json() == tb.to_json());
    auto a = pa.all(), b = pb.all();
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value() == b[i].value());
  }

  SUBCASE("validation gate returns the better model") {
    TrainConfig cfg = quick_config(35, 120);
    auto [params, trace] = train_transdann(data, spec, cfg);
    ModelParams cold = [&]() {
      TrainConfig c2 = cfg;
      c2.c_unlabeled_star = 0.0;
      return train_transdann(data, spec, c2).first;
    }();
    const double acc_gate = evaluate(params, data.target_val);
    const double acc_cold = evaluate(cold, data.target_val);
    CHECK(acc_gate >= acc_cold);
    CHECK(trace.gate_skipped == false);
  }

  SUBCASE("gate skipped without a validation set") {
    TrainConfig cfg = quick_config(36, 60);
    DomainData no_val = data;
    no_val.target_val = LabeledSet{};
    auto [params, trace] = train_transdann(no_val, spec, cfg);
    CHECK(trace.gate_skipped);
    CHECK(trace.chose_cold == false);
  }

  SUBCASE("early stop ends cycling once labels settle") {
    TrainConfig cfg = quick_config(37, 60);
    cfg.c_unlabeled_star = 1.0;  // would be 11 cycles without the stop
    cfg.early_stop = true;
    auto [params, trace] = train_transdann(data, spec, cfg);
    CHECK(trace.cycles.size() <= 12);
    // the settled cycle is not retrained or recorded, so every recorded
    // cycle after the first assignment moved at least one label
    for (std::size_t i = 2; i < trace.cycles.size(); ++i) {
      CHECK(trace.cycles[i].labels_changed > 0);
    }
  }
}

// Convergence tendency: the interim-label change count should settle as
// cycles proceed. Reported (WARN), not asserted: the property is a
// tendency, not a guarantee.
TEST_CASE("interim-label changes are nonincreasing late in training on most seeds") {
  const NetSpec spec = bench_spec();
  int settled = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DomainData data = moons_data(100 + seed, 96, 35.0);
    TrainConfig cfg = quick_config(seed, 250);
    cfg.c_unlabeled_star = 1.0;
    auto [params, trace] = train_transdann(data, spec, cfg);
    const auto& cycles = trace.cycles;
    REQUIRE(cycles.size() >= 4);
    const std::size_t n = cycles.size();
    const bool nonincreasing = cycles[n - 3].labels_changed >= cycles[n - 2].labels_changed &&
                               cycles[n - 2].labels_changed >= cycles[n - 1].labels_changed;
    if (nonincreasing) ++settled;
  }
  WARN_MESSAGE(settled >= 4, "label changes settled in only ", settled, "/5 seeds");
  CHECK(settled >= 0);  // reported above; never a failure
}

TEST_CASE("cycle trace serializes with stable field names") {
  const NetSpec spec = bench_spec();
  DomainData data = moons_data(41, 32);
  TrainConfig cfg = quick_config(42, 50);
  auto [params, trace] = train_transdann(data, spec, cfg);
  const auto j = nlohmann::json::parse(trace.to_json());
  REQUIRE(j.contains("cycles"));
  REQUIRE(j["cycles"].is_array());
  REQUIRE(j["cycles"].size() >= 2);
  for (const char* key : {"cycle", "c_u", "labels_changed", "loss_task_src", "loss_task_tgt",
                          "loss_domain", "acc_src_dev", "acc_val"}) {
    CHECK(j["cycles"][0].contains(key));
  }
  CHECK(j.contains("gate_skipped"));
  CHECK(j.contains("chose_cold"));
}
