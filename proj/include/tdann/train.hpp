#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tdann/data.hpp"
#include "tdann/losses.hpp"
#include "tdann/nets.hpp"

namespace tdann {

struct TrainConfig {
  double lr = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t steps_per_cycle = 2000;
  double lambda_adapt_max = 1.0;  // lambda*
  double c_label_star = 1.0;      // C_l*
  double c_unlabeled_star = 1.0;  // C_u*
  std::uint64_t seed = 0;
  bool lambda_ramp = true;
  bool early_stop = false;  // stop cycling once interim labels stop changing

  void validate() const;
};

struct CycleRecord {
  std::size_t cycle = 0;
  double c_u = 0.0;
  std::size_t labels_changed = 0;
  double loss_task_src = 0.0;
  double loss_task_tgt = 0.0;
  double loss_domain = 0.0;
  double acc_src_dev = -1.0;  // -1 when no source dev set was supplied
  double acc_val = -1.0;      // -1 when no target validation set was supplied
};

struct CycleTrace {
  std::vector<CycleRecord> cycles;
  bool gate_skipped = false;
  bool chose_cold = false;

  std::string to_json() const;
  void save_json(const std::string& path) const;
};

/// Training inputs: labeled source, optional held-out source (for
/// meta-parameter observation), unlabeled target, optional labeled target
/// validation set for the final gate.
struct DomainData {
  LabeledSet source_train;
  LabeledSet source_dev;
  UnlabeledSet target_train;
  LabeledSet target_val;
};

/// lambda(p) = lambda_max * (2 / (1 + exp(-10 p)) - 1); monotone, 0 at p=0.
double lambda_schedule(double progress, double lambda_adapt_max);

/// Fraction of argmax-correct predictions, ties to the lowest class index.
double evaluate(const ModelParams& params, const LabeledSet& set);

/// Saddle-point training of the DANN objective with SGD+momentum on
/// half-source/half-target batches.
std::pair<ModelParams, CycleTrace> train_dann(const DomainData& data, const NetSpec& spec,
                                              const TrainConfig& cfg);

/// Alternating TransDANN training: DANN cold start, then interim-label
/// cycles with C_u doubling from 1e-3 up to C_u*, then the validation gate
/// against the cold-start model when target_val is nonempty.
std::pair<ModelParams, CycleTrace> train_transdann(const DomainData& data, const NetSpec& spec,
                                                   const TrainConfig& cfg);

/// SGD with momentum: v <- momentum * v + grad; p <- p - lr * v.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Tensor> params, double lr, double momentum);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> velocity_;
  double lr_;
  double momentum_;
};

/// Endless stream of example indices, reshuffled each epoch.
class IndexStream {
 public:
  IndexStream(std::size_t n, std::uint64_t seed);
  std::size_t next();
  std::vector<std::size_t> take(std::size_t count);

 private:
  void reshuffle();
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::mt19937_64 rng_;
};

/// Rows of a set gathered into a batch tensor (no gradient).
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);

}  // namespace tdann
