#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tdann/ops.hpp"
#include "tdann/tensor.hpp"

namespace tdann {

/// Architecture of the three networks. The feature map G_f is a single
/// tanh layer input_dim -> feature_dim; G_y and G_d are MLPs with tanh
/// hidden layers and a softmax head.
struct NetSpec {
  std::size_t input_dim = 0;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> label_hidden;
  std::vector<std::size_t> domain_hidden = {1024, 1024};
  std::size_t num_classes = 2;

  void validate() const;
};

/// The three parameter bundles. Each is a flat [W0, b0, W1, b1, ...] list.
/// theta_f is shared by the label path and the domain path: both forwards
/// read the same tensors, not copies.
struct ModelParams {
  std::vector<Tensor> theta_f;
  std::vector<Tensor> theta_y;
  std::vector<Tensor> theta_d;

  std::vector<Tensor> all() const;
  ModelParams clone() const;
  void zero_grad();
  bool all_finite() const;
};

/// Weights and biases drawn i.i.d. uniform[-0.1, 0.1], deterministic per seed.
ModelParams init_params(const NetSpec& spec, std::uint64_t seed);

/// f = G_f(x), shape [batch x feature_dim].
Tensor forward_features(Tape& tape, const ModelParams& params, const Tensor& x);

/// Class probabilities G_y(f), rows sum to 1.
Tensor forward_label(Tape& tape, const ModelParams& params, const Tensor& f);

/// Domain probabilities G_d(grl(f, lambda_adapt)), shape [batch x 2].
/// Forward output is independent of lambda_adapt.
Tensor forward_domain(Tape& tape, const ModelParams& params, const Tensor& f,
                      double lambda_adapt);

/// Gradient reversal: identity on forward (bit-exact copy); on backward the
/// input gradient accumulates -lambda_adapt times the upstream gradient.
Tensor grl(Tape& tape, const Tensor& f, double lambda_adapt);

/// Inference-only class probabilities for a raw input batch.
Tensor predict_probs(const ModelParams& params, const Tensor& x);

/// Text checkpoint, versioned with the magic header "TDANN1".
void save_checkpoint(const std::string& path, const NetSpec& spec, const ModelParams& params);
std::pair<NetSpec, ModelParams> load_checkpoint(const std::string& path);

}  // namespace tdann
