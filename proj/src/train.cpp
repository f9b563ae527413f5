#include "tdann/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tdann/assign.hpp"
#include "tdann/errors.hpp"

namespace tdann {

void TrainConfig::validate() const {
  if (!(std::isfinite(lr) && lr >= 0.0)) throw ContractError("TrainConfig: lr must be finite and >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("TrainConfig: momentum must be in [0,1)");
  if (batch_size < 2) throw ContractError("TrainConfig: batch_size must be at least 2");
  if (!(std::isfinite(lambda_adapt_max) && lambda_adapt_max >= 0.0))
    throw ContractError("TrainConfig: lambda_adapt_max must be finite and >= 0");
  if (!(std::isfinite(c_label_star) && c_label_star >= 0.0))
    throw ContractError("TrainConfig: c_label_star must be finite and >= 0");
  if (!(std::isfinite(c_unlabeled_star) && c_unlabeled_star >= 0.0))
    throw ContractError("TrainConfig: c_unlabeled_star must be finite and >= 0");
}

double lambda_schedule(double progress, double lambda_adapt_max) {
  if (!(progress >= 0.0 && progress <= 1.0))
    throw ContractError("lambda_schedule: progress must be in [0,1]");
  return lambda_adapt_max * (2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0);
}

double evaluate(const ModelParams& params, const LabeledSet& set) {
  if (set.size() == 0) throw ContractError("evaluate: empty set");
  Tensor probs = predict_probs(params, set.x);
  const std::size_t n = probs.rows(), k = probs.cols();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (probs.value()[i * k + c] > probs.value()[i * k + best]) best = c;
    }
    if (static_cast<int>(best) == set.y[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

SgdMomentum::SgdMomentum(std::vector<Tensor> params, double lr, double momentum)
    : params_(std::move(params)), lr_(lr), momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (const Tensor& p : params_) velocity_.emplace_back(p.size(), 0.0);
}

void SgdMomentum::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& v = velocity_[i];
    auto& val = params_[i].value();
    const auto& g = params_[i].grad();
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j];
      val[j] -= lr_ * v[j];
    }
  }
}

void SgdMomentum::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

IndexStream::IndexStream(std::size_t n, std::uint64_t seed) : rng_(seed) {
  if (n == 0) throw ContractError("IndexStream: empty index range");
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0);
  reshuffle();
}

void IndexStream::reshuffle() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  pos_ = 0;
}

std::size_t IndexStream::next() {
  if (pos_ == order_.size()) reshuffle();
  return order_[pos_++];
}

std::vector<std::size_t> IndexStream::take(std::size_t count) {
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(next());
  return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  const std::size_t d = x.cols();
  std::vector<double> values(idx.size() * d);
  const auto& src = x.value();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(idx[i] * d),
              src.begin() + static_cast<std::ptrdiff_t>((idx[i] + 1) * d),
              values.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return Tensor::from({idx.size(), d}, std::move(values));
}

std::string CycleTrace::to_json() const {
  nlohmann::json j;
  j["gate_skipped"] = gate_skipped;
  j["chose_cold"] = chose_cold;
  j["cycles"] = nlohmann::json::array();
  for (const CycleRecord& r : cycles) {
    j["cycles"].push_back({{"cycle", r.cycle},
                           {"c_u", r.c_u},
                           {"labels_changed", r.labels_changed},
                           {"loss_task_src", r.loss_task_src},
                           {"loss_task_tgt", r.loss_task_tgt},
                           {"loss_domain", r.loss_domain},
                           {"acc_src_dev", r.acc_src_dev},
                           {"acc_val", r.acc_val}});
  }
  return j.dump(2);
}

void CycleTrace::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << to_json() << "\n";
  if (!out) throw IoError("failed writing " + path);
}

namespace {

struct PhaseStats {
  double task_src = 0.0;
  double task_tgt = 0.0;
  double domain = 0.0;
};

/// One training phase of steps_per_cycle SGD steps on half-source,
/// half-target batches. A null `interim` trains the DANN objective; with
/// labels it trains the TransDANN objective at the given C_u. Momentum
/// buffers are created fresh, matching the warm-start reading of Alg. 1.
PhaseStats run_phase(ModelParams& params, const LabeledSet& source, const Tensor& target_x,
                     const std::vector<int>* interim, const NetSpec& spec, const TrainConfig& cfg,
                     double c_u, bool ramp, std::uint64_t phase_salt) {
  (void)spec;
  IndexStream source_stream(source.size(), derive_seed(cfg.seed, 2 * phase_salt + 1));
  IndexStream target_stream(target_x.rows(), derive_seed(cfg.seed, 2 * phase_salt + 2));
  SgdMomentum opt(params.all(), cfg.lr, cfg.momentum);
  const std::size_t bs_source = cfg.batch_size / 2;
  const std::size_t bs_target = cfg.batch_size - bs_source;

  PhaseStats stats;
  const std::size_t steps = cfg.steps_per_cycle;
  for (std::size_t step = 0; step < steps; ++step) {
    const double progress = steps > 1 ? static_cast<double>(step) / static_cast<double>(steps - 1) : 1.0;
    const double lambda =
        ramp && cfg.lambda_ramp ? lambda_schedule(progress, cfg.lambda_adapt_max) : cfg.lambda_adapt_max;

    const auto src_idx = source_stream.take(bs_source);
    const auto tgt_idx = target_stream.take(bs_target);
    Tensor xb_source = gather_rows(source.x, src_idx);
    Tensor xb_target = gather_rows(target_x, tgt_idx);
    std::vector<int> yb_source(bs_source);
    for (std::size_t i = 0; i < bs_source; ++i) yb_source[i] = source.y[src_idx[i]];

    Tape tape;
    LossWeights w;
    w.lambda_adapt = lambda;
    w.c_label = cfg.c_label_star;
    w.c_unlabeled = c_u;

    LossBreakdown loss;
    if (interim != nullptr) {
      std::vector<int> yb_target(bs_target);
      for (std::size_t i = 0; i < bs_target; ++i) yb_target[i] = (*interim)[tgt_idx[i]];
      loss = transdann_loss(tape, params, xb_source, yb_source, xb_target, yb_target, w);
      stats.task_tgt += loss.task_target;
    } else {
      loss = dann_loss(tape, params, xb_source, yb_source, xb_target, w);
    }
    stats.task_src += loss.task_source;
    stats.domain += loss.domain_source + loss.domain_target;

    tape.backward(loss.objective);
    opt.step();
    opt.zero_grad();
  }
  if (steps > 0) {
    stats.task_src /= static_cast<double>(steps);
    stats.task_tgt /= static_cast<double>(steps);
    stats.domain /= static_cast<double>(steps);
  }
  return stats;
}

CycleRecord make_record(std::size_t cycle, double c_u, std::size_t changed, const PhaseStats& stats,
                        const ModelParams& params, const DomainData& data) {
  CycleRecord r;
  r.cycle = cycle;
  r.c_u = c_u;
  r.labels_changed = changed;
  r.loss_task_src = stats.task_src;
  r.loss_task_tgt = stats.task_tgt;
  r.loss_domain = stats.domain;
  if (data.source_dev.size() > 0) r.acc_src_dev = evaluate(params, data.source_dev);
  if (data.target_val.size() > 0) r.acc_val = evaluate(params, data.target_val);
  return r;
}

ScoreMatrix target_scores(const ModelParams& params, const Tensor& target_x) {
  Tensor probs = predict_probs(params, target_x);
  ScoreMatrix scores;
  scores.num_examples = probs.rows();
  scores.num_classes = probs.cols();
  scores.p = probs.value();
  return scores;
}

std::vector<int> argmax_labels(const ScoreMatrix& scores) {
  std::vector<int> labels(scores.num_examples, 0);
  for (std::size_t j = 0; j < scores.num_examples; ++j) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.num_classes; ++c) {
      if (scores.at(j, c) > scores.at(j, best)) best = c;
    }
    labels[j] = static_cast<int>(best);
  }
  return labels;
}

void check_inputs(const DomainData& data, const NetSpec& spec, const TrainConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (data.source_train.size() == 0) throw ContractError("train: empty labeled source set");
  if (data.target_train.size() == 0) throw ContractError("train: empty unlabeled target set");
  if (data.source_train.dim() != spec.input_dim || data.target_train.dim() != spec.input_dim)
    throw DimensionError("train: data width does not match NetSpec input_dim");
}

}  // namespace

std::pair<ModelParams, CycleTrace> train_dann(const DomainData& data, const NetSpec& spec,
                                              const TrainConfig& cfg) {
  check_inputs(data, spec, cfg);
  ModelParams params = init_params(spec, cfg.seed);
  PhaseStats stats = run_phase(params, data.source_train, data.target_train.x, nullptr, spec, cfg,
                               0.0, /*ramp=*/true, /*phase_salt=*/0);
  CycleTrace trace;
  trace.cycles.push_back(make_record(0, 0.0, 0, stats, params, data));
  return {std::move(params), std::move(trace)};
}

std::pair<ModelParams, CycleTrace> train_transdann(const DomainData& data, const NetSpec& spec,
                                                   const TrainConfig& cfg) {
  check_inputs(data, spec, cfg);

  // Cold start (Alg. 1 steps 2-5): C_l = C_l*, C_u = 0, vanilla DANN. The
  // zero-weighted target term uses placeholder labels; it contributes an
  // exact zero to the objective and to every gradient.
  ModelParams params = init_params(spec, cfg.seed);
  CycleTrace trace;
  {
    const std::vector<int> placeholder(data.target_train.size(), 0);
    PhaseStats stats = run_phase(params, data.source_train, data.target_train.x, &placeholder, spec,
                                 cfg, 0.0, /*ramp=*/true, /*phase_salt=*/0);
    stats.task_tgt = 0.0;
    trace.cycles.push_back(make_record(0, 0.0, 0, stats, params, data));
  }
  ModelParams cold = params.clone();

  if (cfg.c_unlabeled_star > 0.0) {
    const ClassBudget budget =
        estimate_class_budget(data.source_train.y, spec.num_classes, data.target_train.size());
    double c_u = std::min(1e-3, cfg.c_unlabeled_star);
    std::vector<int> previous;
    for (std::size_t cycle = 1;; ++cycle) {
      const ScoreMatrix scores = target_scores(params, data.target_train.x);
      const std::vector<int> interim = assign_interim_labels(scores, budget);
      const std::vector<int> baseline = previous.empty() ? argmax_labels(scores) : previous;
      std::size_t changed = 0;
      for (std::size_t j = 0; j < interim.size(); ++j) {
        if (interim[j] != baseline[j]) ++changed;
      }
      if (cfg.early_stop && !previous.empty() && changed == 0) break;

      PhaseStats stats = run_phase(params, data.source_train, data.target_train.x, &interim, spec,
                                   cfg, c_u, /*ramp=*/false, /*phase_salt=*/cycle);
      trace.cycles.push_back(make_record(cycle, c_u, changed, stats, params, data));
      previous = interim;

      if (c_u >= cfg.c_unlabeled_star) break;  // the cycle at C_u = C_u* just ran
      c_u = std::min(2.0 * c_u, cfg.c_unlabeled_star);
    }
  }

  // Validation gate (Alg. 1 steps 13-14): keep whichever of the cold-start
  // and final models scores higher on the target validation set.
  if (data.target_val.size() > 0) {
    const double acc_cold = evaluate(cold, data.target_val);
    const double acc_hat = evaluate(params, data.target_val);
    if (acc_cold > acc_hat) {
      trace.chose_cold = true;
      return {std::move(cold), std::move(trace)};
    }
  } else {
    trace.gate_skipped = true;
  }
  return {std::move(params), std::move(trace)};
}

}  // namespace tdann
