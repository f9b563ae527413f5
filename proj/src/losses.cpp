#include "tdann/losses.hpp"

#include <cmath>

#include "tdann/errors.hpp"

namespace tdann {

namespace {
constexpr double kProbFloor = 1e-12;
constexpr double kProbCeil = 1.0 - 1e-12;
}  // namespace

void LossWeights::validate() const {
  if (!(std::isfinite(lambda_adapt) && lambda_adapt >= 0.0))
    throw ContractError("LossWeights: lambda_adapt must be finite and >= 0");
  if (!(std::isfinite(c_label) && c_label >= 0.0))
    throw ContractError("LossWeights: c_label must be finite and >= 0");
  if (!(std::isfinite(c_unlabeled) && c_unlabeled >= 0.0))
    throw ContractError("LossWeights: c_unlabeled must be finite and >= 0");
}

Tensor cross_entropy(Tape& tape, const Tensor& probs, const std::vector<int>& labels) {
  const std::size_t batch = probs.rows(), k = probs.cols();
  if (labels.size() != batch) {
    throw ContractError("cross_entropy: " + std::to_string(labels.size()) + " labels for a batch of " +
                        std::to_string(batch));
  }
  if (batch == 0) throw ContractError("cross_entropy: empty batch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw ContractError("cross_entropy: label " + std::to_string(y) + " out of range [0," +
                          std::to_string(k) + ")");
    }
  }
  const auto& pv = probs.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    double p = pv[i * k + static_cast<std::size_t>(labels[i])];
    p = std::min(std::max(p, kProbFloor), kProbCeil);
    acc += -std::log(p);
  }
  Tensor out = Tensor::from({1}, {acc / static_cast<double>(batch)}, probs.requires_grad());
  if (out.requires_grad()) {
    tape.record(out, [probs, out, labels, batch, k]() {
      Tensor tp = probs;
      auto& gp = tp.grad();
      const auto& pv2 = probs.value();
      const double g = out.grad()[0];
      for (std::size_t i = 0; i < batch; ++i) {
        const std::size_t idx = i * k + static_cast<std::size_t>(labels[i]);
        const double p = pv2[idx];
        if (p > kProbFloor && p < kProbCeil) {
          gp[idx] += g * (-1.0 / (p * static_cast<double>(batch)));
        }
      }
    });
  }
  return out;
}

namespace {

/// Shared composition for Eq.-style objectives. The target task term is
/// included only when interim labels are supplied; c_label scaling is
/// skipped at exactly 1 so the DANN and TransDANN(C_l=1, C_u=0) objectives
/// are bit-identical.
LossBreakdown compose(Tape& tape, const ModelParams& params, const Tensor& x_source,
                      const std::vector<int>& y_source, const Tensor& x_target,
                      const std::vector<int>* y_target, const LossWeights& w) {
  if (x_source.rows() == 0 || x_target.rows() == 0)
    throw ContractError("loss: source and target batches must be nonempty");
  if (y_source.size() != x_source.rows())
    throw ContractError("loss: source labels do not cover the batch");
  w.validate();

  Tensor f_source = forward_features(tape, params, x_source);
  Tensor f_target = forward_features(tape, params, x_target);

  LossBreakdown result;
  Tensor task_source = cross_entropy(tape, forward_label(tape, params, f_source), y_source);
  result.task_source = task_source.item();

  Tensor task_part = w.c_label == 1.0 ? task_source : scale(tape, task_source, w.c_label);
  if (y_target != nullptr) {
    if (y_target->size() != x_target.rows())
      throw ContractError("transdann_loss: every target example needs an interim label");
    Tensor task_target = cross_entropy(tape, forward_label(tape, params, f_target), *y_target);
    result.task_target = task_target.item();
    task_part = add(tape, task_part, scale(tape, task_target, w.c_unlabeled));
  }

  const std::vector<int> d_source(x_source.rows(), 0);
  const std::vector<int> d_target(x_target.rows(), 1);
  Tensor dom_source = cross_entropy(tape, forward_domain(tape, params, f_source, 1.0), d_source);
  Tensor dom_target = cross_entropy(tape, forward_domain(tape, params, f_target, 1.0), d_target);
  result.domain_source = dom_source.item();
  result.domain_target = dom_target.item();

  Tensor dom = add(tape, dom_source, dom_target);
  result.objective = add(tape, task_part, scale(tape, dom, w.lambda_adapt));
  return result;
}

}  // namespace

LossBreakdown dann_loss(Tape& tape, const ModelParams& params, const Tensor& x_source,
                        const std::vector<int>& y_source, const Tensor& x_target,
                        const LossWeights& w) {
  LossWeights dw = w;
  dw.c_label = 1.0;
  dw.c_unlabeled = 0.0;
  return compose(tape, params, x_source, y_source, x_target, nullptr, dw);
}

LossBreakdown transdann_loss(Tape& tape, const ModelParams& params, const Tensor& x_source,
                             const std::vector<int>& y_source, const Tensor& x_target,
                             const std::vector<int>& y_target_interim, const LossWeights& w) {
  return compose(tape, params, x_source, y_source, x_target, &y_target_interim, w);
}

}  // namespace tdann
