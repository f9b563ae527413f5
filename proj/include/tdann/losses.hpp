#pragma once

#include <vector>

#include "tdann/nets.hpp"
#include "tdann/tensor.hpp"

namespace tdann {

struct LossWeights {
  double lambda_adapt = 0.0;  // adaptation weight lambda
  double c_label = 1.0;       // C_l
  double c_unlabeled = 0.0;   // C_u

  void validate() const;
};

/// Mean over the batch of -log(p of the true class). Probabilities are
/// clamped to [1e-12, 1 - 1e-12] before the log.
Tensor cross_entropy(Tape& tape, const Tensor& probs, const std::vector<int>& labels);

/// A composed adversarial objective plus its reported components. The
/// objective carries the domain terms through the gradient reversal, so
/// plain gradient descent on it realizes the saddle point; the published
/// loss values are reconstructed from the components.
struct LossBreakdown {
  Tensor objective;
  double task_source = 0.0;
  double task_target = 0.0;
  double domain_source = 0.0;
  double domain_target = 0.0;

  double dann_value(double lambda_adapt) const {
    return task_source - lambda_adapt * (domain_source + domain_target);
  }
  double transdann_value(const LossWeights& w) const {
    return w.c_label * task_source + w.c_unlabeled * task_target -
           w.lambda_adapt * (domain_source + domain_target);
  }
};

/// Adversarial objective over a labeled source batch and an unlabeled
/// target batch: task CE plus lambda-weighted domain CEs (source d=0,
/// target d=1) behind the reversal.
LossBreakdown dann_loss(Tape& tape, const ModelParams& params, const Tensor& x_source,
                        const std::vector<int>& y_source, const Tensor& x_target,
                        const LossWeights& w);

/// Same with the target batch carrying interim labels: C_l * source task CE
/// + C_u * target task CE on the interim labels, plus the domain terms.
LossBreakdown transdann_loss(Tape& tape, const ModelParams& params, const Tensor& x_source,
                             const std::vector<int>& y_source, const Tensor& x_target,
                             const std::vector<int>& y_target_interim, const LossWeights& w);

}  // namespace tdann
